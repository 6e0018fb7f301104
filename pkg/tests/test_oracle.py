"""Independent oracle assemblies and the local-limit reference solutions."""

import numpy as np
import pytest

from nonlocal_cvp import (
    DomainSpec,
    NonlocalError,
    alpha_sweep,
    assemble,
    build_mesh,
    build_space,
    dense_reference,
    local_reference_1d,
    make_fractional,
)

UNIT = DomainSpec(0.0, 1.0)


def _max_rel_dev(fast, ref):
    floor = 1e-13 * np.max(np.abs(ref))
    mask = np.abs(ref) > floor
    if not np.any(mask):
        return 0.0
    denom = np.maximum(np.abs(fast[mask]), np.abs(ref[mask]))
    return float(np.max(np.abs(fast[mask] - ref[mask]) / denom))


def test_fast_assembly_matches_adaptive_oracle():
    """Semi-analytic pair engine against adaptive quadrature, entry by entry."""
    space = build_space(build_mesh(UNIT, 0.25, truncation_radius=2.0))
    k = make_fractional(1, 0.5)
    fast = assemble(space, k)
    ref = dense_reference(space, k)
    for name in ("A", "M", "M_tilde", "N_op"):
        dev = _max_rel_dev(getattr(fast, name), getattr(ref, name))
        assert dev <= 1e-8, f"{name} deviates by {dev}"


def test_dense_reference_budget_gate():
    space = build_space(build_mesh(UNIT, 0.01, truncation_radius=2.0))
    with pytest.raises(NonlocalError) as exc:
        dense_reference(space, make_fractional(1, 1.0))
    assert exc.value.code == "budget-exceeded"


def test_local_reference_closed_form():
    # -u'' = 1 with flux -1/2 at both ends has the mean-zero parabola solution
    u = local_reference_1d(1.0, -0.5, -0.5)
    xs = np.linspace(0.0, 1.0, 17)
    exact = -(xs**2) / 2.0 + xs / 2.0 - 1.0 / 12.0
    vals = np.array([u(float(x)) for x in xs])
    np.testing.assert_allclose(vals, exact, atol=1e-14)


def test_local_reference_rejects_incompatible_data():
    with pytest.raises(NonlocalError) as exc:
        local_reference_1d(1.0, 0.0, 0.0)
    assert exc.value.code == "incompatible-data"


def test_alpha_sweep_short_ladder():
    phi = lambda x: float(np.exp(-4.0 * (x - 0.5) ** 2))
    f = lambda x: 8.0 / np.e
    rows = alpha_sweep(phi, f, alphas=(1.2, 1.5), h0=0.125, truncation_radius=4.0)
    assert [r["alpha"] for r in rows] == [1.2, 1.5]
    assert rows[1]["l2_error"] < rows[0]["l2_error"]
    for row in rows:
        assert set(row) == {
            "alpha",
            "h",
            "R_trunc",
            "l2_error",
            "energy_gap",
            "gauss_green_residual",
        }
        # the mesh tightens as alpha approaches 2
        assert row["h"] == pytest.approx(min(0.125, 2.0 - row["alpha"]))