"""Singular and tail integration for 1D element pairs.

The central object is the pair engine: for two disjoint or touching elements
e1 = [l1, l1+L1] (left) and e2 = [l2, l2+L2] with gap g = l2 - l1 - L1 >= 0,
and two biaffine factors P(x, y) = A0 + A1 u + A2 s, Q likewise (u = distance
of x from the right end of e1, s = distance of y from the left end of e2), it
computes

    engine(P, Q) = double integral over e1 x e2 of P * Q * nu(y - x).

Substituting t = u + s turns this into integral of nu(g + t) * I(t) over
t in [0, L1 + L2] where I(t) is a cubic polynomial on each of three pieces
cut at min(L1, L2) and max(L1, L2).  Touching pairs (g = 0) are integrated
semi-analytically against exact radial moments of the kernel; the factor
algebra guarantees the polynomial coefficients multiplying any divergent
moment vanish identically.  Separated pairs use Gauss-Legendre on a geometric
subdivision of the kernel distance range, which stays accurate uniformly in
the gap (no large-number cancellation).  The oracle strategy replaces both
with adaptive quadrature on a singularity-absorbing substitution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, special

from ._errors import NonlocalError
from .geometry import DomainSpec, Element
from .kernels import KernelSpec, radial_moment

__all__ = [
    "QuadRule",
    "ASSEMBLY_RULE",
    "ORACLE_RULE",
    "pair_engine",
    "same_element_integral",
    "pair_integral",
    "pointwise_L",
    "pointwise_N",
    "far_field_coupling",
    "one_sided_tail",
]

_GEOMETRIC_RATIO = 2.0  # kernel-distance growth per Gauss-Legendre panel


@dataclass(frozen=True)
class QuadRule:
    """Quadrature policy.

    order is the Gauss-Legendre order for separated pairs;
    near_diagonal_strategy chooses how touching pairs are handled
    (semi-analytic-1d = exact radial moments, variable-transform = adaptive
    quadrature after absorbing the singularity); target_rel_tol is the
    requested relative accuracy of adaptive passes.
    """

    order: int = 24
    near_diagonal_strategy: str = "semi-analytic-1d"
    target_rel_tol: float = 1e-9

    def __post_init__(self):
        if self.order < 2:
            raise NonlocalError("invalid-parameter", f"quadrature order {self.order} < 2")
        if self.near_diagonal_strategy not in ("variable-transform", "semi-analytic-1d"):
            raise NonlocalError(
                "invalid-parameter", f"unknown strategy {self.near_diagonal_strategy!r}"
            )
        if not 0.0 < self.target_rel_tol <= 1e-4:
            raise NonlocalError(
                "invalid-parameter", f"target_rel_tol={self.target_rel_tol} outside (0, 1e-4]"
            )


ASSEMBLY_RULE = QuadRule(order=24, near_diagonal_strategy="semi-analytic-1d", target_rel_tol=1e-9)
ORACLE_RULE = QuadRule(order=48, near_diagonal_strategy="variable-transform", target_rel_tol=1e-12)


@lru_cache(maxsize=16)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=32)
def _jacgauss(n: int, b: float):
    """Gauss-Jacobi nodes/weights for weight (1+x)^b on [-1, 1]."""
    return special.roots_jacobi(n, 0.0, b)


def _quiet_quad(fn, lo, hi, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(fn, lo, hi, **kw)


def _pieces(L1: float, L2: float):
    """Pieces (t_lo, t_hi, xi_minus, xi_plus) of the u-range [xi-, xi+] as
    affine functions (c0, c1) of t = u + s."""
    m, M = min(L1, L2), max(L1, L2)
    out = [(0.0, m, (0.0, 0.0), (0.0, 1.0))]
    if M > m:
        if L1 <= L2:
            out.append((m, M, (0.0, 0.0), (L1, 0.0)))
        else:
            out.append((m, M, (-L2, 1.0), (0.0, 1.0)))
    out.append((M, L1 + L2, (-L2, 1.0), (L1, 0.0)))
    return out


def _cubic_coeffs(P, Q, xi):
    """Coefficients in t (ascending, length 4) of the u-antiderivative of
    P*Q evaluated at u = xi(t)."""
    A0, A1, A2 = P
    B0, B1, B2 = Q
    a0 = np.array([A0, A2])  # A0 + A2 t
    b0 = np.array([B0, B2])
    a1 = A1 - A2
    b1 = B1 - B2
    xi_p = np.array(xi)
    out = npoly.polymul(npoly.polymul(a0, b0), xi_p)
    cross = npoly.polyadd(b1 * a0, a1 * b0)
    out = npoly.polyadd(out, 0.5 * npoly.polymul(cross, npoly.polymul(xi_p, xi_p)))
    out = npoly.polyadd(
        out, (a1 * b1 / 3.0) * npoly.polymul(xi_p, npoly.polymul(xi_p, xi_p))
    )
    full = np.zeros(4)
    full[: len(out)] = out
    return full


def _eval_I(P, Q, xm, xp, t):
    """I(t) = integral over u in [xi-(t), xi+(t)] of P*Q, midpoint form."""
    A0, A1, A2 = P
    B0, B1, B2 = Q
    a1 = A1 - A2
    b1 = B1 - B2
    xim = xm[0] + xm[1] * t
    xip = xp[0] + xp[1] * t
    ubar = 0.5 * (xim + xip)
    rho = 0.5 * (xip - xim)
    a_mid = (A0 + A2 * t) + a1 * ubar
    b_mid = (B0 + B2 * t) + b1 * ubar
    return 2.0 * rho * (a_mid * b_mid + rho * rho * (a1 * b1) / 3.0)


def _kernel_breaks(k: KernelSpec):
    breaks = set()
    if k.power_pieces is not None:
        for lo, hi, _, _ in k.power_pieces:
            if lo > 0.0:
                breaks.add(lo)
            if hi != math.inf:
                breaks.add(hi)
    if k.support_radius != math.inf:
        breaks.add(k.support_radius)
    return sorted(breaks)


def _panels(r_lo: float, r_hi: float, k: KernelSpec):
    """Panel endpoints from r_lo to r_hi growing geometrically, refined by
    kernel breakpoints."""
    pts = [r_lo]
    r = r_lo
    while r * _GEOMETRIC_RATIO < r_hi:
        r *= _GEOMETRIC_RATIO
        pts.append(r)
    pts.append(r_hi)
    for brk in _kernel_breaks(k):
        if r_lo < brk < r_hi:
            pts.append(brk)
    return np.unique(np.asarray(pts))


def _transform_quad(k, gap, P, Q, t_lo, t_hi, xm, xp, rel_tol, pair_id):
    """Adaptive quadrature of nu(gap+t) I(t); when the lower limit touches the
    kernel singularity, substitute t = s^(1/q) with q absorbing it (I vanishes
    at least quadratically there by the factor algebra)."""

    def integrand(t):
        return float(k(gap + t)) * _eval_I(P, Q, xm, xp, t)

    pts = [b - gap for b in _kernel_breaks(k) if gap + t_lo < b < gap + t_hi]
    total = 0.0
    lo = t_lo
    if gap == 0.0 and t_lo == 0.0 and k.singularity_order > 0.0:
        q = 2.0 - k.singularity_order  # integrand vanishes at least like t^2 * nu
        split = min(t_hi, min(pts) if pts else t_hi)

        def transformed(s):
            if s <= 0.0:
                return 0.0
            t = s ** (1.0 / q)
            return integrand(t) * (1.0 / q) * s ** (1.0 / q - 1.0)

        val, err = _quiet_quad(
            transformed, 0.0, split**q, epsabs=1e-15, epsrel=rel_tol, limit=300
        )
        if not math.isfinite(val):
            raise NonlocalError("quadrature-failure", f"pair {pair_id}: singular panel diverged")
        total += val
        lo = split
    if t_hi > lo:
        inner = [p for p in pts if lo < p < t_hi]
        val, err = _quiet_quad(
            integrand, lo, t_hi, points=inner or None, epsabs=1e-15, epsrel=rel_tol, limit=300
        )
        if not math.isfinite(val):
            raise NonlocalError("quadrature-failure", f"pair {pair_id}: regular panel diverged")
        total += val
    return total


def pair_engine_batch(
    k: KernelSpec,
    gap: float,
    L1: float,
    L2: float,
    combos,
    rule: QuadRule = ASSEMBLY_RULE,
    pair_id: str = "?",
) -> np.ndarray:
    """Integrals over e1 x e2 of P(x,y) Q(x,y) nu(y-x), one per (P, Q) combo,
    for e1 left of e2, sharing kernel evaluations across combos.

    Each factor triple (A0, A1, A2) encodes A0 + A1*u + A2*s with
    u = (right end of e1) - x and s = y - (left end of e2); gap >= 0 is the
    distance between the elements (0 = touching).
    """
    if L1 <= 0.0 or L2 <= 0.0 or gap < 0.0:
        raise NonlocalError("invalid-parameter", f"pair {pair_id}: need L1, L2 > 0 and gap >= 0")
    out = np.zeros(len(combos))
    if gap >= k.support_radius:
        return out
    for t_lo, t_hi, xm, xp in _pieces(L1, L2):
        if gap + t_lo >= k.support_radius:
            continue
        t_hi_eff = min(t_hi, k.support_radius - gap)
        if rule.near_diagonal_strategy == "variable-transform":
            for c_idx, (P, Q) in enumerate(combos):
                out[c_idx] += _transform_quad(
                    k, gap, P, Q, t_lo, t_hi_eff, xm, xp, rule.target_rel_tol, pair_id
                )
        elif gap == 0.0:
            coeff_rows = np.array(
                [_cubic_coeffs(P, Q, xp) - _cubic_coeffs(P, Q, xm) for P, Q in combos]
            )
            for i in range(4):
                col = coeff_rows[:, i]
                if np.any(col != 0.0):
                    out += col * radial_moment(k, float(i), t_lo, t_hi_eff)
        else:
            panels = _panels(gap + t_lo, gap + t_hi_eff, k)
            nodes, weights = _leggauss(rule.order)
            half = 0.5 * np.diff(panels)
            mid = 0.5 * (panels[:-1] + panels[1:])
            r_all = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
            w_nu = (half[:, None] * weights[None, :]).ravel() * np.asarray(k(r_all))
            t_all = r_all - gap
            for c_idx, (P, Q) in enumerate(combos):
                out[c_idx] += float(np.dot(w_nu, _eval_I(P, Q, xm, xp, t_all)))
    return out


def pair_engine(
    k: KernelSpec,
    gap: float,
    L1: float,
    L2: float,
    P: tuple[float, float, float],
    Q: tuple[float, float, float],
    rule: QuadRule = ASSEMBLY_RULE,
    pair_id: str = "?",
) -> float:
    """Single-combo convenience wrapper around pair_engine_batch."""
    return float(pair_engine_batch(k, gap, L1, L2, [(P, Q)], rule, pair_id)[0])


def same_element_integral(
    k: KernelSpec, L: float, sa: float, sb: float, rule: QuadRule = ASSEMBLY_RULE
) -> float:
    """Integral over e x e of (fa(x)-fa(y))(fb(x)-fb(y)) nu(x-y) for affine
    factors with slopes sa, sb: equals sa*sb * 2 * integral (L-t) t^2 nu(t) dt."""
    if L <= 0.0:
        raise NonlocalError("invalid-parameter", f"element length {L} <= 0")
    hi = min(L, k.support_radius)
    if rule.near_diagonal_strategy == "variable-transform":

        def integrand(t):
            return 2.0 * (L - t) * t * t * float(k(t))

        q = 2.0 - k.singularity_order
        split = min(hi, 1.0)

        def transformed(s):
            if s <= 0.0:
                return 0.0
            t = s ** (1.0 / q)
            return integrand(t) * (1.0 / q) * s ** (1.0 / q - 1.0)

        val, _ = _quiet_quad(
            transformed, 0.0, split**q, epsabs=1e-15, epsrel=rule.target_rel_tol, limit=300
        )
        if hi > split:
            v2, _ = _quiet_quad(
                integrand, split, hi, epsabs=1e-15, epsrel=rule.target_rel_tol, limit=300
            )
            val += v2
        return sa * sb * val
    mu2 = radial_moment(k, 2.0, 0.0, hi)
    mu3 = radial_moment(k, 3.0, 0.0, hi)
    return sa * sb * 2.0 * (L * mu2 - mu3)


def _affine_on(element: Element, f) -> tuple[float, float]:
    """(value at left end, slope) of a function affine on the element."""
    vl = float(f(element.left))
    vr = float(f(element.right))
    return vl, (vr - vl) / element.width


def pair_integral(E1: Element, E2: Element, k: KernelSpec, fa, fb, rule: QuadRule = ASSEMBLY_RULE) -> float:
    """Integral over E1 x E2 of (fa(x)-fa(y))(fb(x)-fb(y)) nu(x-y) dx dy.

    fa, fb must be affine on each element (they are evaluated only at element
    endpoints).  E1 and E2 must be identical, touching, or disjoint.
    """
    same = E1.left == E2.left and E1.right == E2.right
    if same:
        _, sa = _affine_on(E1, fa)
        _, sb = _affine_on(E1, fb)
        return same_element_integral(k, E1.width, sa, sb, rule)
    eL, eR = (E1, E2) if E1.left <= E2.left else (E2, E1)
    gap = eR.left - eL.right
    if gap < 0.0:
        if gap > -1e-12 * max(eL.width, eR.width):
            gap = 0.0
        else:
            raise NonlocalError(
                "invalid-parameter", "pair_integral needs disjoint or identical elements"
            )
    val_aL, s_aL = _affine_on(eL, fa)
    val_aR, s_aR = _affine_on(eR, fa)
    val_bL, s_bL = _affine_on(eL, fb)
    val_bR, s_bR = _affine_on(eR, fb)
    # difference factors f(x) - f(y) in (u, s) coordinates
    P = (val_aL + s_aL * eL.width - val_aR, -s_aL, -s_aR)
    Q = (val_bL + s_bL * eL.width - val_bR, -s_bL, -s_bR)
    pid = f"[{eL.left},{eL.right}]x[{eR.left},{eR.right}]"
    return pair_engine(k, gap, eL.width, eR.width, P, Q, rule, pair_id=pid)


def _piecewise_radial_quad(k: KernelSpec, g, lo: float, hi: float, rel_tol: float) -> float:
    """integral_lo^hi g(r) nu(r) dr for regular g, split at kernel breakpoints,
    with an infinite tail handled directly."""
    hi = min(hi, k.support_radius)
    if hi <= lo:
        return 0.0
    breaks = [b for b in _kernel_breaks(k) if lo < b < hi]
    edges = [lo] + breaks + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = _quiet_quad(
            lambda r: g(r) * float(k(r)), a, b, epsabs=1e-14, epsrel=rel_tol, limit=300
        )
        if not math.isfinite(val):
            raise NonlocalError("quadrature-failure", f"radial panel ({a},{b}) diverged")
        total += val
    return total


def pointwise_L(k: KernelSpec, u, x: float, eps: float, rel_tol: float = 1e-10):
    """(L_eps u(x), estimate of Lu(x)).

    L_eps excludes the ball of radius eps around x; the Lu estimate uses the
    second-difference form, integrable without a principal value:
    Lu(x) = -integral_0^inf (u(x+r) + u(x-r) - 2u(x)) nu(r) dr in 1D.
    """
    if eps <= 0.0:
        raise NonlocalError("invalid-parameter", "eps must be positive for the exclusion method")
    if k.d != 1:
        raise NonlocalError("invalid-parameter", "pointwise_L is implemented for d=1")
    ux = float(u(x))

    def second_diff(r):
        return float(u(x + r)) + float(u(x - r)) - 2.0 * ux

    L_eps = -_piecewise_radial_quad(k, second_diff, eps, math.inf, rel_tol)

    head_hi = min(1.0, k.support_radius)
    if k.power_pieces is not None:
        head_hi = min(head_hi, k.power_pieces[0][1])
    beta = k.singularity_order
    if k.power_pieces is not None and beta > 0.0:
        # nu(r) = c r^(-1-beta) exactly on [0, head_hi]: Gauss-Jacobi with the
        # r^(1-beta) endpoint weight, smooth factor second_diff(r)/r^2 * c
        coef = k.power_pieces[0][2]
        nodes, wts = _jacgauss(48, 1.0 - beta)
        r = 0.5 * head_hi * (nodes + 1.0)
        g = np.array([second_diff(ri) / (ri * ri) for ri in r]) * coef
        head = (0.5 * head_hi) ** (2.0 - beta) * float(np.dot(wts, g))
    else:
        q = 2.0 - beta  # absorbs the r^2-vanishing singular head

        def transformed(s):
            if s <= 0.0:
                return 0.0
            r = s ** (1.0 / q)
            return second_diff(r) * float(k(r)) * (1.0 / q) * s ** (1.0 / q - 1.0)

        head, _ = _quiet_quad(
            transformed, 0.0, head_hi**q, epsabs=1e-14, epsrel=rel_tol, limit=300
        )
    tail = _piecewise_radial_quad(k, second_diff, head_hi, math.inf, rel_tol)
    return L_eps, -(head + tail)


def pointwise_N(k: KernelSpec, u, y: float, domain: DomainSpec, rel_tol: float = 1e-11) -> float:
    """N u(y) = integral_Omega (u(y) - u(x)) nu(y - x) dx for exterior y."""
    a, b = domain.a, domain.b
    if a <= y <= b:
        raise NonlocalError("invalid-parameter", f"y={y} lies in the closure of Omega")
    uy = float(u(y))

    def integrand(x):
        return (uy - float(u(x))) * float(k(abs(y - x)))

    pts = []
    for brk in _kernel_breaks(k):
        for cand in (y - brk, y + brk):
            if a < cand < b:
                pts.append(cand)
    val, _ = _quiet_quad(
        integrand, a, b, points=sorted(pts) or None, epsabs=1e-14, epsrel=rel_tol, limit=300
    )
    if not math.isfinite(val):
        raise NonlocalError("quadrature-failure", f"pointwise_N at y={y} diverged")
    return val


def one_sided_tail(k: KernelSpec, s: float) -> float:
    """integral_s^inf nu(r) dr (half of the d=1 tail mass at radius s)."""
    if s <= 0.0:
        raise NonlocalError("invalid-parameter", f"tail start {s} must be positive")
    return radial_moment(k, 0.0, s, math.inf)


def far_field_coupling(k: KernelSpec, E: Element, phi, R_trunc: float, order: int = 24) -> float:
    """Coupling weight integral_E phi(x) * integral_{|y| > R_trunc} nu(x-y) dy dx
    (far region = complement of the origin-centered ball of radius R_trunc)."""
    if R_trunc <= max(abs(E.left), abs(E.right)):
        raise NonlocalError("invalid-parameter", "R_trunc must exceed the element's reach")
    nodes, weights = _leggauss(order)
    xs = E.midpoint + 0.5 * E.width * nodes
    ws = 0.5 * E.width * weights
    vals = np.array(
        [float(phi(x)) * (one_sided_tail(k, R_trunc - x) + one_sided_tail(k, R_trunc + x)) for x in xs]
    )
    return float(np.dot(ws, vals))
