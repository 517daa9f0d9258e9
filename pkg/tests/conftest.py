from __future__ import annotations

import pytest

from cavitycool.params import catalogue_by_label, load_catalogue, reference_cavity


@pytest.fixture(scope="session")
def catalogue():
    return load_catalogue()


@pytest.fixture(scope="session")
def by_label(catalogue):
    return catalogue_by_label(catalogue)


@pytest.fixture(scope="session")
def cavity():
    return reference_cavity()
