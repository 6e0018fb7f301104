"""Assembled forms: symmetry, kernels of constants, energy sandwich, exports."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_cvp import (
    DomainSpec,
    NonlocalError,
    assemble,
    assemble_N,
    assemble_trace_DK,
    build_mesh,
    build_space,
    complement_mass,
    export_matrix_text,
    interpolate,
    l2_omega_error,
    make_peridynamic,
    mean_over_omega,
)

UNIT = DomainSpec(0.0, 1.0)


def test_energy_matrix_symmetric(frac_system):
    A = frac_system.A
    assert np.max(np.abs(A - A.T)) <= 1e-12 * np.max(np.abs(A))


def test_constants_in_kernel_of_A(frac_system):
    A = frac_system.A
    ones = np.ones(A.shape[0])
    assert np.linalg.norm(A @ ones) <= 1e-10 * np.max(np.abs(A))


def test_energy_decomposition_exact(frac_system):
    s = frac_system
    # A = P/2 + Q and A = G_L + N with G_L = P/2 + Q_L
    np.testing.assert_allclose(s.A, 0.5 * s.P + s.Q, atol=1e-14 * np.max(np.abs(s.A)))
    gap = s.A - s.G_L - s.N_op
    assert np.max(np.abs(gap)) <= 1e-12 * np.max(np.abs(s.A))


@given(seed=st.integers(min_value=0, max_value=10**6))
def test_energy_sandwich(frac_system, seed):
    """S <= A <= 2 S as quadratic forms, within roundoff."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(frac_system.A.shape[0])
    a = float(v @ frac_system.A @ v)
    s = float(v @ frac_system.S @ v)
    slack = 1e-12 * max(abs(a), abs(s), 1.0)
    assert s <= a + slack
    assert a <= 2.0 * s + slack


def test_mass_matrix_psd_with_domain_measure(frac_system):
    M = frac_system.M
    assert np.max(np.abs(M - M.T)) <= 1e-14 * np.max(np.abs(M))
    ones = np.ones(M.shape[0])
    assert float(ones @ M @ ones) == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(frac_system.mvec, M @ ones, atol=1e-15)
    eigvals = np.linalg.eigvalsh(M)
    assert eigvals[0] >= -1e-14


def test_complement_mass_supported_off_interior(frac_system):
    s = frac_system
    interior = s.space.interior_idx
    assert np.max(np.abs(s.M_tilde[interior, :])) == 0.0
    assert np.max(np.abs(s.M_tilde[:, interior])) == 0.0
    diag = np.diag(s.M_tilde)
    assert np.all(diag[s.space.complement_idx] >= 0.0)


def test_assemble_N_matches_system(frac_system):
    N = assemble_N(frac_system.space, frac_system.kernel)
    np.testing.assert_array_equal(N, frac_system.N_op)


def test_threading_is_bitwise_deterministic(frac_kernel):
    space = build_space(build_mesh(UNIT, 0.25, truncation_radius=2.0))
    one = assemble(space, frac_kernel, threads=1)
    two = assemble(space, frac_kernel, threads=2)
    for name in ("P", "Q", "Q_L", "N_op", "M", "M_tilde"):
        np.testing.assert_array_equal(getattr(one, name), getattr(two, name))


def test_interpolate_and_omega_mean(frac_system):
    space = frac_system.space
    u = interpolate(space, lambda x: 1.0)
    assert mean_over_omega(space, u) == pytest.approx(1.0, rel=1e-12)
    v = interpolate(space, lambda x: x, far_value=0.0)
    assert mean_over_omega(space, v) == pytest.approx(0.5, rel=1e-10)


def test_l2_omega_error_of_interpolant():
    # piecewise-linear interpolation of a smooth function converges like h^2
    space_c = build_space(build_mesh(UNIT, 0.25, truncation_radius=2.0))
    space_f = build_space(build_mesh(UNIT, 0.125, truncation_radius=2.0))
    fn = lambda x: np.sin(3.0 * x)
    err_c = l2_omega_error(space_c, interpolate(space_c, fn), ref=fn)
    err_f = l2_omega_error(space_f, interpolate(space_f, fn), ref=fn)
    assert err_f < err_c
    assert err_c / err_f > 3.0


def test_export_matrix_text_round_trips(tmp_path, frac_system):
    path = tmp_path / "A.txt"
    export_matrix_text(path, frac_system.A)
    n = frac_system.A.shape[0]
    rebuilt = np.zeros_like(frac_system.A)
    for line in path.read_text().splitlines():
        i, j, v = line.split()
        rebuilt[int(i), int(j)] = float(v)
    # 17 significant digits round-trip float64 exactly
    np.testing.assert_array_equal(rebuilt, frac_system.A)
    assert rebuilt.shape == (n, n)


def test_peridynamic_stiffness_respects_horizon(peri_system):
    """Hat pairs separated by more than the horizon never couple."""
    s = peri_system
    horizon = s.kernel.support_radius
    v = s.space.mesh.vertices
    lo = np.concatenate([[v[0]], v[:-1]])
    hi = np.concatenate([v[1:], [v[-1]]])
    n = len(v)
    for i in range(n):
        for j in range(n):
            gap = max(lo[i] - hi[j], lo[j] - hi[i])
            if gap >= horizon - 1e-12:
                assert s.A[i, j] == 0.0


def test_complement_mass_zero_weight(frac_system):
    Z = complement_mass(frac_system.space, lambda xs: np.zeros_like(xs), 0.0)
    assert np.max(np.abs(Z)) == 0.0


def test_trace_matrix_symmetric_psd(frac_system):
    DK = assemble_trace_DK(frac_system.space, 1.0)
    assert np.max(np.abs(DK - DK.T)) <= 1e-12 * np.max(np.abs(DK))
    eigvals = np.linalg.eigvalsh(DK)
    assert eigvals[0] >= -1e-10 * max(1.0, eigvals[-1])


def test_trace_matrix_rejects_bad_alpha(frac_system):
    with pytest.raises(NonlocalError):
        assemble_trace_DK(frac_system.space, 2.0)


def test_trace_matrix_rejects_compact_kernel(peri_system):
    with pytest.raises(NonlocalError):
        assemble_trace_DK(
            peri_system.space, 1.0, kernel=make_peridynamic(1, 0.5, 1.0)
        )