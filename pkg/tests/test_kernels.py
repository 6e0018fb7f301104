"""Kernel constructors, integral functionals, and weight comparability."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_cvp import (
    NonlocalError,
    class_diagnostics,
    comparability_report,
    embedding_constant,
    levy_mass,
    make_custom,
    make_fractional,
    make_peridynamic,
    make_rescaled,
    make_weight,
    one_wedge_mass,
    radial_moment,
    tail_mass,
    weight_eval,
)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0, 1.5, 1.95])
def test_fractional_levy_mass_is_normalized(alpha):
    """The fractional family is scaled so the full Levy mass equals d."""
    k = make_fractional(1, alpha)
    assert levy_mass(k) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 2.0, -0.3, 2.4])
def test_fractional_rejects_alpha_outside_open_interval(alpha):
    with pytest.raises(NonlocalError) as exc:
        make_fractional(1, alpha)
    assert exc.value.code == "invalid-parameter"


def test_fractional_profile_power_law():
    k = make_fractional(1, 1.5)
    # ratio of values fixes the exponent -d - alpha
    r1, r2 = 0.3, 0.7
    expo = math.log(float(k(r2)) / float(k(r1))) / math.log(r2 / r1)
    assert expo == pytest.approx(-2.5, abs=1e-12)


def test_peridynamic_has_compact_support():
    k = make_peridynamic(1, 0.5, 1.0)
    assert k.support_radius == 0.5
    assert float(k(0.6)) == 0.0
    assert float(k(0.4)) > 0.0
    assert tail_mass(k, 0.5) == 0.0


def test_peridynamic_rejects_bad_horizon():
    with pytest.raises(NonlocalError):
        make_peridynamic(1, 0.0, 1.0)
    with pytest.raises(NonlocalError):
        make_peridynamic(1, -1.0, 1.0)


def test_rescaled_requires_unit_mass_base():
    """The approximation family only accepts bases with Levy mass d."""
    bad = make_peridynamic(1, 1.0, 1.0)
    with pytest.raises(NonlocalError) as exc:
        make_rescaled(bad, 1.5)
    assert exc.value.code == "invalid-parameter"

    good = make_peridynamic(1, 1.0, 1.5)
    assert levy_mass(good) == pytest.approx(1.0, rel=1e-12)
    k = make_rescaled(good, 1.5)
    assert k.support_radius < math.inf


def test_tail_mass_decreases_with_radius():
    k = make_fractional(1, 1.0)
    radii = [0.5, 1.0, 2.0, 4.0]
    vals = [tail_mass(k, r) for r in radii]
    assert all(a > b > 0.0 for a, b in zip(vals, vals[1:]))


def test_embedding_constant_from_wedge_mass():
    k = make_fractional(1, 1.0)
    wedge = one_wedge_mass(k)
    assert wedge == pytest.approx(2.0, rel=1e-12)
    assert embedding_constant(k) == pytest.approx(2.0 * wedge + 2.0, rel=1e-12)


@given(
    lo=st.floats(min_value=0.1, max_value=2.0),
    span1=st.floats(min_value=0.1, max_value=3.0),
    span2=st.floats(min_value=0.1, max_value=3.0),
)
def test_radial_moment_additive_over_intervals(lo, span1, span2):
    k = make_fractional(1, 1.0)
    mid = lo + span1
    hi = mid + span2
    whole = radial_moment(k, 0.0, lo, hi)
    parts = radial_moment(k, 0.0, lo, mid) + radial_moment(k, 0.0, mid, hi)
    assert whole == pytest.approx(parts, rel=1e-10)


def test_radial_moment_detects_divergent_tail():
    k = make_fractional(1, 1.5)
    with pytest.raises(NonlocalError) as exc:
        radial_moment(k, 2.0, 0.0, math.inf)
    assert exc.value.code == "divergence-detected"


def test_weight_star_requires_radius_above_one():
    k = make_fractional(1, 0.5)
    with pytest.raises(NonlocalError):
        make_weight("nu_star", k, radius=1.0)
    w = make_weight("nu_star", k, radius=2.0)
    assert weight_eval(w, np.array([3.0]))[0] > 0.0


def test_weight_tilde_symmetric_on_symmetric_ball():
    k = make_fractional(1, 0.5)
    w = make_weight("nu_tilde", k, ball=(-1.0, 1.0))
    xs = np.array([1.3, 2.0, 5.0])
    left = weight_eval(w, -xs)
    right = weight_eval(w, xs)
    np.testing.assert_allclose(left, right, rtol=1e-10)


def test_weight_rejects_unknown_kind():
    k = make_fractional(1, 0.5)
    with pytest.raises(NonlocalError):
        make_weight("nu_bogus", k)
    with pytest.raises(NonlocalError):
        make_weight("nu_tilde", k)  # missing reference ball


def test_comparability_report_fractional_bands_finite():
    k = make_fractional(1, 0.5)
    samples = np.geomspace(1e-2, 50.0, 24)
    samples = np.concatenate([-samples[::-1], samples])
    rep = comparability_report(k, (0.0, 1.0), 2.0, samples)
    assert rep["status"] == "ok"
    for lo, hi in rep["bands"].values():
        assert 0.0 < lo <= hi < math.inf
    # the star weight is a pure profile of 1 + |x|, so its band collapses
    lo, hi = rep["profile_bands"]["nu_star"]
    assert hi == pytest.approx(lo, rel=1e-10)


def test_comparability_not_applicable_without_unimodality():
    profile = lambda r: math.exp(-min((r - 2.0) ** 2, 500.0))  # bump away from origin
    k = make_custom(1, profile, 0.0, unimodal=False)
    samples = np.array([-2.0, -1.5, 1.5, 2.0])
    rep = comparability_report(k, (0.0, 1.0), 2.0, samples)
    assert rep["status"] == "not-applicable"
    assert "reason" in rep


def test_class_diagnostics_fractional_ratios_blow_up():
    diag = class_diagnostics(make_fractional(1, 1.0), (0.0, 1.0), (0.4, 0.2, 0.1))
    assert diag["q_increasing_to_zero"] is True
    assert diag["q_tilde_increasing_to_zero"] is True
    assert all(a < b for a, b in zip(diag["q"], diag["q"][1:]))
