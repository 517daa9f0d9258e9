"""Compiled inner loops of the stochastic integrator.

The ensemble state is kept in structure-of-arrays form and advanced
with Euler-Maruyama steps.  Per step and trajectory the standing-wave
coefficients are evaluated in real arithmetic from the closed-form
memory integral (the same expressions `coefficients.standing_cos_parts`
produces with complex numpy; a unit test pins the two against each
other), the 2x2 diffusion matrix [[0, Dxp], [Dxp, Dpp]] is projected
onto its positive part, and a single scalar noise drives the projected
rank-one direction.

Randomness: each trajectory owns a splitmix64 counter stream seeded
from (seed, global trajectory index), so results are independent of
chunking and thread count.  Two-point noise (+-1) consumes one bit per
step from a per-trajectory 64-bit pool; Gaussian noise uses Box-Muller
on two stream draws.  sin(2x)/cos(2x) are advanced by angle-addition
with a fifth-order small-angle expansion of the per-step rotation and
renormalized every 2048 steps; the phase error stays below 1e-7 over
1e7 steps for the step sizes the configuration layer admits.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64, float64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

POLICY_PROJECT = 0
POLICY_ZERO_P = 1
NOISE_TWO_POINT = 0
NOISE_GAUSSIAN = 1


@njit(uint64(uint64), cache=True, nogil=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(uint64(uint64, uint64), cache=True, nogil=True)
def stream_init(seed, index):
    """Starting counter of trajectory `index` under `seed`."""
    return _mix(seed ^ _mix((index + np.uint64(1)) * _GOLDEN))


@njit(cache=True, nogil=True)
def _stream_next(state):
    state = state + _GOLDEN
    return state, _mix(state)


@njit(float64(uint64), cache=True, nogil=True)
def _to_unit(z):
    # 53-bit mantissa, offset to keep log() finite
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0) + 5.0e-17


@njit(cache=True, nogil=True, fastmath=True)
def advance_ensemble(x, p, cs, sn, rng, pool,
                     n_steps, dt, delta, drive2, pull, omega_r,
                     include_second, a_grad, a_int, force_bias,
                     thr, policy, noise_kind, sample_every,
                     sums, clamp_stats):
    """Advance all trajectories of one chunk by n_steps.

    Arrays x, p (phase space), cs, sn (cos/sin of 2x), rng (stream
    counters) and pool (two-point bit pools) are updated in place.
    `sums` has one row per sample time and columns (sum p, sum p^2,
    sum x mod 2pi); `clamp_stats` accumulates (any-clamp steps,
    material-clamp steps, discarded magnitude).

    The physics loop over trajectories is kept free of calls and of
    data-dependent branches (selects only) so it compiles to SIMD;
    noise generation, renormalization, and sampling run as separate
    passes.
    """
    nt = x.shape[0]
    sdt = np.sqrt(dt)
    two_pi = 2.0 * np.pi
    dd = delta / (1.0 + delta * delta)
    tw_r = 2.0 * omega_r
    sec = 4.0 * omega_r * drive2 if include_second else 0.0
    add_loss = a_grad != 0.0 or a_int != 0.0
    project = policy == POLICY_PROJECT
    n_any = 0.0
    n_mat = 0.0
    mag = 0.0
    xi_buf = np.empty(nt, dtype=np.float64)

    for step in range(n_steps):
        if noise_kind == NOISE_TWO_POINT:
            bit_idx = np.uint64(step & 63)
            if bit_idx == np.uint64(0):
                for i in range(nt):
                    rng[i], z = _stream_next(rng[i])
                    pool[i] = z
            one = np.uint64(1)
            for i in range(nt):
                xi_buf[i] = 1.0 if (pool[i] >> bit_idx) & one else -1.0
        else:
            for i in range(nt):
                rng[i], z1 = _stream_next(rng[i])
                rng[i], z2 = _stream_next(rng[i])
                u1 = _to_unit(z1)
                u2 = _to_unit(z2)
                xi_buf[i] = np.sqrt(-2.0 * np.log(u1)) * np.cos(two_pi * u2)

        for i in range(nt):
            xi = xi_buf[i]
            v = tw_r * p[i]
            s2 = sn[i]
            c2 = cs[i]

            # closed-form response of the cosine mode, real arithmetic;
            # both resolvent factors share one division
            sa = delta + 2.0 * v
            sb = delta - 2.0 * v
            da = 1.0 + sa * sa
            db = 1.0 + sb * sb
            inv = 1.0 / (da * db)
            ra = db * inv
            rb = da * inv
            pa = sa * ra
            pb = sb * rb
            ssum = ra + rb
            im2 = s2 * (ra - rb) - c2 * (pa + pb)       # ia + ib
            gx2 = -s2 * ssum - c2 * (pb - pa)           # ib - ia
            re_gv = (s2 * (ra * ra + rb * rb - 0.5 * ssum)
                     - c2 * (pa * ra - pb * rb))

            force = (force_bias + pull * s2
                     + drive2 * s2 * (0.5 * im2 - dd)
                     + sec * re_gv * c2)
            dpp = -drive2 * s2 * gx2
            dxp = tw_r * drive2 * re_gv * s2
            if add_loss:
                dpp += 0.5 * (a_grad * (1.0 - c2) + a_int * (1.0 + c2))

            # positive part of [[0, dxp], [dxp, dpp]]
            root = np.sqrt(dpp * dpp + 4.0 * dxp * dxp)
            lam_pos = 0.5 * (dpp + root)
            neg = 0.5 * (root - dpp)
            n_any += 1.0 if neg > 0.0 else 0.0
            mag += neg if neg > 0.0 else 0.0
            n_mat += 1.0 if neg > thr else 0.0
            if project:
                # lam_pos = 0 forces dxp = 0, so the guard term only
                # prevents 0/0 and never biases the scale
                ln = dxp * dxp + lam_pos * lam_pos + 1.0e-300
                scale = np.sqrt(2.0 * lam_pos / ln)
                bx = scale * dxp
                bp = scale * lam_pos
            else:
                dpp_pos = dpp if dpp > 0.0 else 0.0
                bx = 0.0
                bp = np.sqrt(2.0 * dpp_pos)

            dx = v * dt + bx * sdt * xi
            p[i] += force * dt + bp * sdt * xi
            x[i] += dx

            # rotate (cs, sn) by 2 dx with a fifth-order expansion
            th = 2.0 * dx
            th2 = th * th
            sd = th * (1.0 - th2 * (1.0 / 6.0) * (1.0 - th2 * 0.05))
            cd = 1.0 - th2 * 0.5 * (1.0 - th2 * (1.0 / 12.0))
            cn = c2 * cd - s2 * sd
            sn[i] = s2 * cd + c2 * sd
            cs[i] = cn

        if (step & 2047) == 2047:
            for i in range(nt):
                inv = 1.0 / np.sqrt(cs[i] * cs[i] + sn[i] * sn[i])
                cs[i] *= inv
                sn[i] *= inv

        if sample_every > 0 and (step + 1) % sample_every == 0:
            row = (step + 1) // sample_every - 1
            sp = 0.0
            sp2 = 0.0
            sx = 0.0
            for i in range(nt):
                sp += p[i]
                sp2 += p[i] * p[i]
                sx += x[i] - two_pi * np.floor(x[i] / two_pi)
            sums[row, 0] += sp
            sums[row, 1] += sp2
            sums[row, 2] += sx

    clamp_stats[0] += n_any
    clamp_stats[1] += n_mat
    clamp_stats[2] += mag


@njit(cache=True, nogil=True)
def local_sde_terms(x, p, delta, drive2, pull, omega_r,
                    include_second, a_grad, a_int, force_bias, thr, policy):
    """One-point drift/noise evaluation with the kernel's arithmetic.

    Returns (force, dpp_raw, dxp, bx, bp, neg); used to pin the
    compiled expressions against the complex-arithmetic reference.
    """
    v = 2.0 * omega_r * p
    s2 = np.sin(2.0 * x)
    c2 = np.cos(2.0 * x)
    dd = delta / (1.0 + delta * delta)
    sa = delta + 2.0 * v
    sb = delta - 2.0 * v
    da = 1.0 + sa * sa
    db = 1.0 + sb * sb
    inv = 1.0 / (da * db)
    ra = db * inv
    rb = da * inv
    pa = sa * ra
    pb = sb * rb
    ssum = ra + rb
    im2 = s2 * (ra - rb) - c2 * (pa + pb)
    gx2 = -s2 * ssum - c2 * (pb - pa)
    re_gv = (s2 * (ra * ra + rb * rb - 0.5 * ssum)
             - c2 * (pa * ra - pb * rb))
    force = force_bias + pull * s2 + drive2 * s2 * (0.5 * im2 - dd)
    if include_second:
        force += 4.0 * omega_r * drive2 * re_gv * c2
    dpp = -drive2 * s2 * gx2
    dxp = 2.0 * omega_r * drive2 * re_gv * s2
    if a_grad != 0.0 or a_int != 0.0:
        dpp += 0.5 * (a_grad * (1.0 - c2) + a_int * (1.0 + c2))
    root = np.sqrt(dpp * dpp + 4.0 * dxp * dxp)
    lam_pos = 0.5 * (dpp + root)
    neg = 0.5 * (root - dpp)
    if policy == POLICY_PROJECT:
        ln = dxp * dxp + lam_pos * lam_pos + 1.0e-300
        scale = np.sqrt(2.0 * lam_pos / ln)
        bx = scale * dxp
        bp = scale * lam_pos
    else:
        dpp_pos = dpp if dpp > 0.0 else 0.0
        bx = 0.0
        bp = np.sqrt(2.0 * dpp_pos)
    return force, dpp, dxp, bx, bp, neg
