"""Minimal dimensional-analysis layer for the SI-facing API.

A ``Quantity`` couples a float magnitude to integer exponents of the
four base dimensions used in this package (kg, m, s, A).  Arithmetic
between quantities propagates the exponents; adding or comparing
mismatched dimensions raises ``DimensionError`` immediately, so unit
mistakes surface at construction time instead of as silently wrong
numbers.  The scaled-unit computational core works with bare floats;
only the parameter layer and the CLI touch quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


class DimensionError(TypeError):
    """Operands carry incompatible physical dimensions."""


class DomainError(ValueError):
    """Input is outside the physically meaningful domain."""


class SingularityError(DomainError):
    """Input sits on a pole of the requested formula."""


class ConfigError(ValueError):
    """A run configuration is inconsistent or outside supported limits."""


def _as_frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise DimensionError(f"dimension exponents must be rational, got {x!r}")


@dataclass(frozen=True)
class Dimensions:
    """Exponents of the SI base dimensions kg^a m^b s^c A^d."""

    kg: Fraction = Fraction(0)
    m: Fraction = Fraction(0)
    s: Fraction = Fraction(0)
    A: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "kg", _as_frac(self.kg))
        object.__setattr__(self, "m", _as_frac(self.m))
        object.__setattr__(self, "s", _as_frac(self.s))
        object.__setattr__(self, "A", _as_frac(self.A))

    def __mul__(self, other: "Dimensions") -> "Dimensions":
        return Dimensions(self.kg + other.kg, self.m + other.m,
                          self.s + other.s, self.A + other.A)

    def __truediv__(self, other: "Dimensions") -> "Dimensions":
        return Dimensions(self.kg - other.kg, self.m - other.m,
                          self.s - other.s, self.A - other.A)

    def __pow__(self, n) -> "Dimensions":
        n = Fraction(n)
        return Dimensions(self.kg * n, self.m * n, self.s * n, self.A * n)

    @property
    def dimensionless(self) -> bool:
        return not (self.kg or self.m or self.s or self.A)

    def __str__(self) -> str:
        if self.dimensionless:
            return "1"
        parts = []
        for sym in ("kg", "m", "s", "A"):
            e = getattr(self, sym)
            if e == 1:
                parts.append(sym)
            elif e != 0:
                parts.append(f"{sym}^{e}")
        return " ".join(parts)


DIMENSIONLESS = Dimensions()
MASS = Dimensions(kg=1)
LENGTH = Dimensions(m=1)
TIME = Dimensions(s=1)
CURRENT = Dimensions(A=1)
FREQUENCY = Dimensions(s=-1)
VELOCITY = LENGTH / TIME
MOMENTUM = MASS * VELOCITY
ENERGY = MASS * LENGTH ** 2 / TIME ** 2
POWER = ENERGY / TIME
AREA = LENGTH ** 2
VOLUME = LENGTH ** 3
WAVENUMBER = LENGTH ** -1
# polarizability in SI (C m^2/V) reduces to A^2 s^4 / kg
POLARIZABILITY = Dimensions(kg=-1, s=4, A=2)
MOMENTUM_DIFFUSION = MOMENTUM ** 2 / TIME


Number = Union[int, float]


@dataclass(frozen=True)
class Quantity:
    """A float magnitude tagged with physical dimensions."""

    value: float
    dims: Dimensions = DIMENSIONLESS

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not isinstance(self.dims, Dimensions):
            raise DimensionError(f"dims must be Dimensions, got {self.dims!r}")

    def _require_same(self, other: "Quantity", verb: str) -> None:
        if self.dims != other.dims:
            raise DimensionError(
                f"cannot {verb} [{self.dims}] and [{other.dims}]")

    def __add__(self, other: "Quantity") -> "Quantity":
        if not isinstance(other, Quantity):
            return NotImplemented
        self._require_same(other, "add")
        return Quantity(self.value + other.value, self.dims)

    def __sub__(self, other: "Quantity") -> "Quantity":
        if not isinstance(other, Quantity):
            return NotImplemented
        self._require_same(other, "subtract")
        return Quantity(self.value - other.value, self.dims)

    def __neg__(self) -> "Quantity":
        return Quantity(-self.value, self.dims)

    def __abs__(self) -> "Quantity":
        return Quantity(abs(self.value), self.dims)

    def __mul__(self, other) -> "Quantity":
        if isinstance(other, Quantity):
            return Quantity(self.value * other.value, self.dims * other.dims)
        if isinstance(other, (int, float)):
            return Quantity(self.value * other, self.dims)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Quantity":
        if isinstance(other, Quantity):
            return Quantity(self.value / other.value, self.dims / other.dims)
        if isinstance(other, (int, float)):
            return Quantity(self.value / other, self.dims)
        return NotImplemented

    def __rtruediv__(self, other) -> "Quantity":
        if isinstance(other, (int, float)):
            return Quantity(other / self.value, DIMENSIONLESS / self.dims)
        return NotImplemented

    def __pow__(self, n) -> "Quantity":
        return Quantity(self.value ** float(Fraction(n)), self.dims ** n)

    def sqrt(self) -> "Quantity":
        if self.value < 0.0:
            raise DomainError("sqrt of negative quantity")
        return Quantity(math.sqrt(self.value), self.dims ** Fraction(1, 2))

    def _cmp_value(self, other: "Quantity") -> float:
        if not isinstance(other, Quantity):
            raise DimensionError("can only compare against another Quantity")
        self._require_same(other, "compare")
        return other.value

    def __lt__(self, other):
        return self.value < self._cmp_value(other)

    def __le__(self, other):
        return self.value <= self._cmp_value(other)

    def __gt__(self, other):
        return self.value > self._cmp_value(other)

    def __ge__(self, other):
        return self.value >= self._cmp_value(other)

    def to(self, unit: "Quantity") -> float:
        """Magnitude of this quantity expressed in multiples of `unit`."""
        self._require_same(unit, "convert between")
        return self.value / unit.value

    def require(self, dims: Dimensions, name: str = "quantity") -> "Quantity":
        if self.dims != dims:
            raise DimensionError(
                f"{name} must carry [{dims}], got [{self.dims}]")
        return self

    def __str__(self) -> str:
        return f"{self.value:g} {self.dims}"


def quantity(value: Number, dims: Dimensions) -> Quantity:
    return Quantity(float(value), dims)


# unit quantities for readable construction and conversion
kilogram = Quantity(1.0, MASS)
meter = Quantity(1.0, LENGTH)
second = Quantity(1.0, TIME)
hertz = Quantity(1.0, FREQUENCY)          # also used for angular rates [rad/s]
joule = Quantity(1.0, ENERGY)
watt = Quantity(1.0, POWER)
square_meter = Quantity(1.0, AREA)
cubic_meter = Quantity(1.0, VOLUME)
angstrom = Quantity(1e-10, LENGTH)
square_angstrom = Quantity(1e-20, AREA)
micrometer = Quantity(1e-6, LENGTH)
millimeter = Quantity(1e-3, LENGTH)
nanometer = Quantity(1e-9, LENGTH)
megahertz = Quantity(1e6, FREQUENCY)


def expect(q: Quantity, dims: Dimensions, name: str) -> float:
    """Validate dimensions and unwrap to a float (SI magnitude)."""
    if not isinstance(q, Quantity):
        raise DimensionError(f"{name} must be a Quantity, got {type(q).__name__}")
    q.require(dims, name)
    return q.value


def expect_positive(q: Quantity, dims: Dimensions, name: str) -> float:
    v = expect(q, dims, name)
    if not (v > 0.0) or not math.isfinite(v):
        raise DomainError(f"{name} must be positive and finite, got {v}")
    return v


def expect_nonnegative(q: Quantity, dims: Dimensions, name: str) -> float:
    v = expect(q, dims, name)
    if v < 0.0 or not math.isfinite(v):
        raise DomainError(f"{name} must be non-negative and finite, got {v}")
    return v
