"""Shared fixtures for the test suite.

Assembled systems are session-scoped because assembly dominates test
runtime; every test treats them as read-only.
"""

import hypothesis
import numpy as np
import pytest

from nonlocal_cvp import (
    DomainSpec,
    assemble,
    build_mesh,
    build_space,
    make_fractional,
    make_peridynamic,
)

np.seterr(all="warn")

hypothesis.settings.register_profile("suite", max_examples=20, deadline=None)
hypothesis.settings.load_profile("suite")

UNIT = DomainSpec(0.0, 1.0)


@pytest.fixture(scope="session")
def frac_kernel():
    return make_fractional(1, 1.0)


@pytest.fixture(scope="session")
def frac_system(frac_kernel):
    mesh = build_mesh(UNIT, 0.125, truncation_radius=4.0)
    return assemble(build_space(mesh), frac_kernel)


@pytest.fixture(scope="session")
def peri_kernel():
    return make_peridynamic(1, 0.5, 1.0)


@pytest.fixture(scope="session")
def peri_system(peri_kernel):
    # compact support: exact collar, no far dof
    mesh = build_mesh(UNIT, 0.125, support_radius=peri_kernel.support_radius)
    return assemble(build_space(mesh), peri_kernel)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
