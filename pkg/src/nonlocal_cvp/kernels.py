"""Radial jump kernels, their integrals, complement weights, and diagnostics.

A kernel is a radial density nu(|h|) on R^d with finite second-moment mass
integral(1 ^ |h|^2) nu(h) dh.  Four families are provided: the fractional
family a_{d,alpha}|h|^{-d-alpha}, compact-horizon (peridynamic-type) constants,
a three-piece rescaling that concentrates mass at the origin as alpha -> 2,
and user-supplied radial profiles.

The workhorse primitive is ``radial_moment``: integrals of r^p * nu(r) over
radial intervals, exact (closed form) whenever the kernel is piecewise a power
law, adaptive quadrature with a singularity-absorbing substitution otherwise.
Everything else (Levy mass, tails, complement weights, class diagnostics) is
built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from ._errors import NonlocalError

__all__ = [
    "KernelSpec",
    "WeightField",
    "make_fractional",
    "make_peridynamic",
    "make_rescaled",
    "make_custom",
    "sphere_area",
    "radial_moment",
    "levy_mass",
    "tail_mass",
    "one_wedge_mass",
    "embedding_constant",
    "make_weight",
    "weight_eval",
    "comparability_report",
    "class_diagnostics",
]


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} (2 in 1D, 2*pi in 2D)."""
    if d == 1:
        return 2.0
    if d == 2:
        return 2.0 * math.pi
    raise NonlocalError("invalid-parameter", f"dimension d={d} not supported (need 1 or 2)")


@dataclass(frozen=True)
class KernelSpec:
    """Radial kernel nu(|h|) with quadrature metadata.

    Attributes
    ----------
    d : spatial dimension (1 or 2; meshes are 1D).
    family : one of {"fractional", "peridynamic", "rescaled", "custom"}.
    profile : vectorized radial profile r -> nu(r) for r > 0.
    singularity_order : beta with nu(r) ~ r^{-d-beta} as r -> 0
        (0 for bounded kernels); required so quadrature can place nodes.
    support_radius : radius beyond which nu vanishes (inf for full support).
    unimodal : whether the profile is (almost) radially decreasing.
    params : family parameters, echoed into reports.
    power_pieces : optional tuple of (lo, hi, coef, exponent) intervals on
        which nu(r) = coef * r**exponent exactly; enables closed-form moments.
    """

    d: int
    family: str
    profile: Callable[[np.ndarray], np.ndarray]
    singularity_order: float
    support_radius: float
    unimodal: bool
    params: dict = field(default_factory=dict)
    power_pieces: tuple | None = None

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.asarray(self.profile(r_arr), dtype=float)
        if self.support_radius != math.inf:
            out = np.where(r_arr <= self.support_radius, out, 0.0)
        if out.ndim == 0 and np.ndim(r) == 0:
            return float(out)
        return out

    def id_string(self) -> str:
        bits = ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.family}(d={self.d},{bits})"


def make_fractional(d: int, alpha: float) -> KernelSpec:
    """Kernel a_{d,alpha}|h|^{-d-alpha} with a_{d,alpha} = d*alpha*(2-alpha)/(2*|S^{d-1}|).

    The constant makes the Levy mass equal d exactly, uniformly in alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise NonlocalError("invalid-parameter", f"alpha={alpha} outside (0,2)")
    if d not in (1, 2):
        raise NonlocalError("invalid-parameter", f"d={d} not in {{1,2}}")
    a = d * alpha * (2.0 - alpha) / (2.0 * sphere_area(d))
    expo = -d - alpha

    def profile(r):
        return a * np.power(r, expo)

    return KernelSpec(
        d=d,
        family="fractional",
        profile=profile,
        singularity_order=alpha,
        support_radius=math.inf,
        unimodal=True,
        params={"alpha": alpha, "a": a},
        power_pieces=((0.0, math.inf, a, expo),),
    )


def make_peridynamic(d: int, horizon: float, strength: float) -> KernelSpec:
    """Constant kernel strength * 1_{|h| <= horizon} (compact support)."""
    if horizon <= 0.0 or strength < 0.0:
        raise NonlocalError(
            "invalid-parameter", f"need horizon > 0 and strength >= 0, got {horizon}, {strength}"
        )
    if d not in (1, 2):
        raise NonlocalError("invalid-parameter", f"d={d} not in {{1,2}}")

    def profile(r):
        return np.where(np.asarray(r) <= horizon, strength, 0.0)

    return KernelSpec(
        d=d,
        family="peridynamic",
        profile=profile,
        singularity_order=0.0,
        support_radius=horizon,
        unimodal=True,
        params={"horizon": horizon, "strength": strength},
        power_pieces=((0.0, horizon, strength, 0.0),),
    )


def make_rescaled(base: KernelSpec, alpha: float) -> KernelSpec:
    """Three-piece rescaling of a normalized base kernel, eps = 2 - alpha.

    nu_eps(h) = eps^{-d-2} nu(h/eps)          for |h| <= eps
              = eps^{-d} |h|^{-2} nu(h/eps)   for eps < |h| <= 1
              = eps^{-d} nu(h/eps)            for |h| > 1

    The base must have Levy mass equal to d (within 1e-8 relative); the
    rescaled kernel then keeps Levy mass d and concentrates at the origin as
    alpha -> 2.
    """
    if not 0.0 < alpha < 2.0:
        raise NonlocalError("invalid-parameter", f"alpha={alpha} outside (0,2)")
    mass = levy_mass(base)
    if abs(mass - base.d) > 1e-8 * base.d:
        raise NonlocalError(
            "invalid-parameter",
            f"base kernel is not normalized: measured Levy mass {mass!r}, need {base.d}",
        )
    eps = 2.0 - alpha
    d = base.d
    c1 = eps ** (-d - 2)
    c2 = eps ** (-d)

    base_profile = base.profile

    def profile(r):
        r_arr = np.asarray(r, dtype=float)
        inner = base_profile(r_arr / eps)
        with np.errstate(divide="ignore"):
            mid = np.power(r_arr, -2.0)
        return np.where(
            r_arr <= eps, c1 * inner, np.where(r_arr <= 1.0, c2 * mid * inner, c2 * inner)
        )

    pieces = None
    if base.power_pieces is not None:
        built = []
        for lo, hi, coef, expo in base.power_pieces:
            blo, bhi = eps * lo, eps * hi
            scaled = coef * eps ** (-expo)
            for seg_lo, seg_hi, cc, ee in (
                (max(blo, 0.0), min(bhi, eps), scaled * c1, expo),
                (max(blo, eps), min(bhi, 1.0), scaled * c2, expo - 2.0),
                (max(blo, 1.0), bhi, scaled * c2, expo),
            ):
                if seg_hi > seg_lo:
                    built.append((seg_lo, seg_hi, cc, ee))
        pieces = tuple(sorted(built))

    support = eps * base.support_radius if base.support_radius != math.inf else math.inf
    return KernelSpec(
        d=d,
        family="rescaled",
        profile=profile,
        singularity_order=base.singularity_order,
        support_radius=support,
        unimodal=base.unimodal,
        params={"alpha": alpha, "eps": eps, "base_family": base.family, "base_params": dict(base.params)},
        power_pieces=pieces,
    )


def make_custom(
    d: int,
    profile: Callable,
    singularity_order: float,
    support_radius: float = math.inf,
    unimodal: bool = False,
    params: dict | None = None,
) -> KernelSpec:
    """Wrap a user radial profile; the singularity exponent hint is mandatory
    so the quadrature can regularize near the origin."""
    if not 0.0 <= singularity_order < 2.0:
        raise NonlocalError(
            "invalid-parameter", f"singularity_order={singularity_order} outside [0,2)"
        )
    if d not in (1, 2):
        raise NonlocalError("invalid-parameter", f"d={d} not in {{1,2}}")

    def vec_profile(r):
        r_arr = np.asarray(r, dtype=float)
        try:
            out = np.asarray(profile(r_arr), dtype=float)
            if out.shape != r_arr.shape:
                raise TypeError
            return out
        except Exception:
            return np.vectorize(profile, otypes=[float])(r_arr)

    return KernelSpec(
        d=d,
        family="custom",
        profile=vec_profile,
        singularity_order=singularity_order,
        support_radius=support_radius,
        unimodal=unimodal,
        params=dict(params or {}),
        power_pieces=None,
    )


def _power_integral(lo: float, hi: float, q: float) -> float:
    """integral_lo^hi r^q dr, stable for nearby endpoints; hi may be inf."""
    if hi <= lo:
        return 0.0
    if hi == math.inf:
        if q >= -1.0:
            raise NonlocalError("divergence-detected", f"integral r^{q} to infinity diverges")
        return -(lo ** (q + 1.0)) / (q + 1.0)
    if lo == 0.0:
        if q <= -1.0:
            raise NonlocalError("divergence-detected", f"integral r^{q} from 0 diverges")
        return hi ** (q + 1.0) / (q + 1.0)
    if q == -1.0:
        return math.log(hi / lo)
    return lo ** (q + 1.0) * math.expm1((q + 1.0) * math.log(hi / lo)) / (q + 1.0)


def _quad(fn, lo, hi, points=None):
    val, err = integrate.quad(
        fn, lo, hi, points=points if hi != math.inf else None, epsabs=1e-13, epsrel=1e-11, limit=400
    )
    if not math.isfinite(val):
        raise NonlocalError("quadrature-failure", f"nonfinite integral on ({lo},{hi})")
    return val


def radial_moment(k: KernelSpec, power: float, lo: float, hi: float) -> float:
    """integral_lo^hi r^power * nu(r) dr (radial line integral, no sphere factor).

    Closed form on power-law pieces; otherwise adaptive quadrature with the
    substitution r = t^{1/q} absorbing the declared origin singularity.
    """
    hi = min(hi, k.support_radius)
    if hi <= lo:
        return 0.0
    if k.power_pieces is not None:
        total = 0.0
        for plo, phi_, coef, expo in k.power_pieces:
            a, b = max(lo, plo), min(hi, phi_)
            if b > a and coef != 0.0:
                total += coef * _power_integral(a, b, expo + power)
        return total
    # numeric fallback for custom profiles
    prof = k.profile
    e0 = power - k.d - k.singularity_order
    total = 0.0
    if lo == 0.0:
        if e0 <= -1.0:
            raise NonlocalError(
                "divergence-detected",
                f"moment r^{power} not integrable at 0 for singularity order {k.singularity_order}",
            )
        split = min(1.0, hi)
        q = e0 + 1.0

        def transformed(t):
            if t <= 0.0:
                return 0.0
            r = t ** (1.0 / q)
            return float(prof(np.asarray(r))) * r**power * (1.0 / q) * t ** (1.0 / q - 1.0)

        total += _quad(transformed, 0.0, split**q)
        lo = split
        if hi <= lo:
            return total

    def integrand(r):
        return float(prof(np.asarray(r))) * r**power

    total += _quad(integrand, lo, hi)
    return total


def levy_mass(k: KernelSpec) -> float:
    """integral_{R^d} (1 ^ |h|^2) nu(h) dh by radial reduction, split at r=1."""
    s = sphere_area(k.d)
    near = radial_moment(k, k.d + 1.0, 0.0, min(1.0, k.support_radius))
    far = radial_moment(k, k.d - 1.0, 1.0, math.inf) if k.support_radius > 1.0 else 0.0
    return s * (near + far)


def tail_mass(k: KernelSpec, R: float) -> float:
    """integral_{|h|>R} nu(h) dh; zero beyond the support radius."""
    if R <= 0.0:
        raise NonlocalError("invalid-parameter", f"R={R} must be positive")
    return sphere_area(k.d) * radial_moment(k, k.d - 1.0, R, math.inf)


def _unit_crossing(k: KernelSpec) -> float:
    """sup{r > 0 : nu(r) >= 1} for a decreasing profile (0 if nu < 1 near 0)."""
    if k.power_pieces is not None:
        crossing = 0.0
        for lo, hi, coef, expo in k.power_pieces:
            if coef <= 0.0:
                break
            if expo == 0.0:
                if coef >= 1.0:
                    crossing = hi
                    continue
                break
            if expo < 0.0:
                r_star = coef ** (-1.0 / expo)
                if r_star >= hi:
                    crossing = hi
                    continue
                if r_star > lo:
                    crossing = r_star
                break
            break
        return min(crossing, k.support_radius)
    # custom profile: bisect assuming a decreasing profile
    lo, hi = 1e-12, max(1.0, min(k.support_radius, 1e12))
    if float(k(lo)) < 1.0:
        return 0.0
    if float(k(hi)) >= 1.0:
        return hi
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if float(k(mid)) >= 1.0:
            lo = mid
        else:
            hi = mid
    return lo


def _one_wedge_radial(k: KernelSpec, power: float, t: float) -> float:
    """integral_0^t r^power * min(1, nu(r)) dr."""
    if t <= 0.0:
        return 0.0
    r1 = _unit_crossing(k)
    head = _power_integral(0.0, min(t, r1), power)
    if t <= r1:
        return head
    if k.power_pieces is not None:
        return head + radial_moment(k, power, r1, t)
    lim = min(t, k.support_radius)
    if lim <= r1:
        return head
    return head + _quad(lambda r: min(1.0, float(k(r))) * r**power, r1, lim)


def one_wedge_mass(k: KernelSpec) -> float:
    """integral_{R^d} (1 ^ nu(h)) dh (finite whenever the tail of nu is integrable)."""
    return sphere_area(k.d) * _one_wedge_radial(k, k.d - 1.0, math.inf)


def one_wedge_tail(k: KernelSpec, s: float) -> float:
    """integral_s^inf (1 ^ nu(r)) dr of the radial profile, s >= 0."""
    if s < 0.0:
        raise NonlocalError("invalid-parameter", "one_wedge_tail needs s >= 0")
    return _one_wedge_radial(k, 0.0, math.inf) - _one_wedge_radial(k, 0.0, s)


def embedding_constant(k: KernelSpec) -> float:
    """C1 = 2*|1^nu|_{L1} + 2, the complement-weight embedding constant."""
    return 2.0 * one_wedge_mass(k) + 2.0


@dataclass(frozen=True)
class WeightField:
    """Complement weight derived from a kernel.

    kind is one of nu_tilde (integral of 1^nu over a reference set B),
    nu_bar (sampled infimum of nu over B), nu_star (nu(R(1+|x|)), R > 1),
    nu_hat (nu((1+|x|)/2)).
    """

    kind: str
    kernel: KernelSpec
    ball: tuple[float, float] | None = None
    radius: float | None = None


def make_weight(
    kind: str,
    kernel: KernelSpec,
    ball: tuple[float, float] | None = None,
    radius: float | None = None,
    domain: tuple[float, float] | None = None,
) -> WeightField:
    if kind in ("nu_tilde", "nu_bar"):
        if ball is None:
            raise NonlocalError("invalid-parameter", f"{kind} needs a reference interval B")
        lo, hi = ball
        if not lo < hi:
            raise NonlocalError("invalid-parameter", f"B=({lo},{hi}) is empty")
        if domain is not None and not (domain[0] <= lo and hi <= domain[1]):
            raise NonlocalError("invalid-parameter", f"B=({lo},{hi}) not inside Omega={domain}")
    elif kind == "nu_star":
        if radius is None or radius <= 1.0:
            raise NonlocalError("invalid-parameter", f"nu_star needs radius R > 1, got {radius}")
    elif kind != "nu_hat":
        raise NonlocalError("invalid-parameter", f"unknown weight kind {kind!r}")
    return WeightField(kind=kind, kernel=kernel, ball=ball, radius=radius)


def _nu_tilde_scalar(k: KernelSpec, ball: tuple[float, float], x: float) -> float:
    lo, hi = ball
    if k.power_pieces is not None:

        def primitive(t):
            return _one_wedge_radial(k, 0.0, t)

        if x <= lo:
            return primitive(hi - x) - primitive(lo - x)
        if x >= hi:
            return primitive(x - lo) - primitive(x - hi)
        return primitive(x - lo) + primitive(hi - x)
    pts = [x] if lo < x < hi else None
    return _quad(lambda y: min(1.0, float(k(abs(x - y)))) if x != y else 1.0, lo, hi, points=pts)


def weight_eval(w: WeightField, x):
    """Evaluate the weight at a point or array of points."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    k = w.kernel
    if w.kind == "nu_tilde":
        vals = np.array([_nu_tilde_scalar(k, w.ball, xi) for xi in xs])
    elif w.kind == "nu_bar":
        grid = np.linspace(w.ball[0], w.ball[1], 64)
        dist = np.abs(xs[:, None] - grid[None, :])
        dist = np.maximum(dist, 1e-300)
        vals = np.min(k(dist), axis=1)
    elif w.kind == "nu_star":
        vals = k(w.radius * (1.0 + np.abs(xs)))
    elif w.kind == "nu_hat":
        vals = k(0.5 * (1.0 + np.abs(xs)))
    else:
        raise NonlocalError("invalid-parameter", f"unknown weight kind {w.kind!r}")
    vals = np.atleast_1d(vals)
    return float(vals[0]) if np.ndim(x) == 0 else vals


def _doubling_check(k: KernelSpec) -> dict:
    """Measured doubling constants of nu(2r)/nu(r) on the dyadic grid r in [1,64]."""
    radii = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    ratios = []
    for r in radii:
        v, v2 = float(k(r)), float(k(2.0 * r))
        if v <= 0.0 or v2 <= 0.0:
            return {"ok": False, "violating_radius": r, "ratios": ratios}
        ratios.append(v2 / v)
        if not 1e-6 <= ratios[-1] <= 1e6:
            return {"ok": False, "violating_radius": r, "ratios": ratios}
    return {"ok": True, "c1": min(ratios), "c2": max(ratios), "ratios": ratios}


def _almost_decreasing_check(k: KernelSpec) -> dict:
    """Worst increase ratio nu(t)/nu(s) over s < t on a log grid (1 means decreasing)."""
    grid = np.logspace(-3, 2, 200)
    vals = np.asarray(k(grid), dtype=float)
    worst, witness = 1.0, None
    running_max = -math.inf
    # scan from the right: running_max holds sup over t > s
    suffix = np.empty_like(vals)
    for i in range(len(vals) - 1, -1, -1):
        running_max = max(running_max, vals[i])
        suffix[i] = running_max
    for i in range(len(vals) - 1):
        if vals[i] > 0.0 and math.isfinite(vals[i]):
            ratio = suffix[i + 1] / vals[i]
            if ratio > worst:
                worst, witness = ratio, grid[i]
    ok = worst <= 1e6 and math.isfinite(worst)
    return {"ok": bool(ok), "worst_increase": float(worst), "witness_radius": witness}


def comparability_report(
    k: KernelSpec, B: tuple[float, float], R: float, samples: Sequence[float]
) -> dict:
    """Pairwise ratio bounds among {nu_tilde, nu_bar, nu_star, 1^nu} on samples.

    Requires a unimodal kernel passing the dyadic doubling check; otherwise
    returns status "not-applicable" with the violating radius.
    """
    report: dict = {
        "doubling": _doubling_check(k),
        "almost_decreasing": _almost_decreasing_check(k),
    }
    if not report["almost_decreasing"]["ok"]:
        report["status"] = "not-applicable"
        report["reason"] = "unimodality check failed"
        return report
    if not report["doubling"]["ok"]:
        report["status"] = "not-applicable"
        report["reason"] = f"doubling check failed at r={report['doubling']['violating_radius']}"
        return report

    xs = np.asarray(sorted(samples), dtype=float)
    w_tilde = weight_eval(make_weight("nu_tilde", k, ball=B), xs)
    w_bar = weight_eval(make_weight("nu_bar", k, ball=B), xs)
    w_star = weight_eval(make_weight("nu_star", k, radius=R), xs)
    with np.errstate(divide="ignore"):
        w_wedge = np.minimum(1.0, np.asarray(k(np.maximum(np.abs(xs), 1e-300)), dtype=float))
    weights = {"nu_tilde": w_tilde, "nu_bar": w_bar, "nu_star": w_star, "one_wedge_nu": w_wedge}

    bands = {}
    names = list(weights)
    for i, na in enumerate(names):
        for nb in names[i + 1 :]:
            ratio = weights[na] / weights[nb]
            bands[f"{na}/{nb}"] = (float(np.min(ratio)), float(np.max(ratio)))
    report["bands"] = bands
    report["samples"] = xs.tolist()
    report["weights"] = {name: vals.tolist() for name, vals in weights.items()}

    if k.family == "fractional":
        alpha = k.params["alpha"]
        target = (1.0 + np.abs(xs)) ** (-k.d - alpha)
        profile_bands = {}
        for name, vals in weights.items():
            ratio = vals / target
            profile_bands[name] = (float(np.min(ratio)), float(np.max(ratio)))
        report["profile_bands"] = profile_bands

    finite = all(
        math.isfinite(lo) and math.isfinite(hi) and lo > 0.0 for lo, hi in bands.values()
    )
    report["status"] = "ok" if finite else "unbounded-ratio"
    return report


def class_diagnostics(k: KernelSpec, domain: tuple[float, float], deltas: Sequence[float]) -> dict:
    """Diagnostic curves q(delta) = delta^{-2} integral_{B_delta} |h|^2 nu and
    q_tilde(delta) = inf over boundary points of the kernel mass seen from the
    shrunk region Omega_delta (1D interval domains)."""
    deltas = list(deltas)
    if any(dl <= 0.0 for dl in deltas):
        raise NonlocalError("invalid-parameter", "deltas must be positive")
    s = sphere_area(k.d)
    a, b = domain
    width = b - a
    q_vals, qt_vals = [], []
    for dl in deltas:
        q_vals.append(s * radial_moment(k, k.d + 1.0, 0.0, dl) / dl**2)
        inner = width - 2.0 * dl
        if inner <= 0.0:
            qt_vals.append(0.0)
        else:
            qt_vals.append(radial_moment(k, 0.0, dl, width - dl))
    order = np.argsort(deltas)[::-1]  # decreasing delta
    q_sorted = [q_vals[i] for i in order]
    qt_sorted = [qt_vals[i] for i in order]
    return {
        "deltas": deltas,
        "q": q_vals,
        "q_tilde": qt_vals,
        "q_increasing_to_zero": all(x < y for x, y in zip(q_sorted, q_sorted[1:])),
        "q_tilde_increasing_to_zero": all(x < y for x, y in zip(qt_sorted, qt_sorted[1:])),
    }
