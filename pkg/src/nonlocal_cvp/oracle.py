"""Independent reference computations for validating the fast paths.

dense_reference rebuilds the assembled matrices through a numerically
independent route: order-doubled quadrature with the variable-transform
near-diagonal strategy, far couplings by direct quadrature to infinity, and
mass matrices re-integrated from the basis definitions instead of closed
forms.  local_reference_1d solves the classical flux problem on (0, 1) in
closed form.  alpha_sweep drives the nonlocal solver toward the local limit
and tabulates the distance.
"""

from __future__ import annotations

import math

import numpy as np

from ._errors import NonlocalError
from .assembly import (
    DiscreteSpace,
    _gl_nodes_with_breaks,
    _weight_kink_radii,
    assemble,
    build_space,
    complement_mass,
    interpolate,
    l2_omega_error,
)
from .geometry import DomainSpec, build_mesh
from .kernels import KernelSpec, make_fractional
from .quadrature import ORACLE_RULE, _quiet_quad
from .solvers import _omega_load, _solve_bordered

__all__ = ["dense_reference", "local_reference_1d", "alpha_sweep"]

_DENSE_DOF_CAP = 64
_QUAD_KW = {"epsabs": 1e-15, "epsrel": 1e-12, "limit": 300}


def _tail_to_infinity(k: KernelSpec):
    """One-sided kernel tail s -> integral_s^inf nu(r) dr by adaptive quad."""
    sup = k.support_radius
    breaks = sorted(r for r in _weight_kink_radii(k) if math.isfinite(r))

    def tail(s: float) -> float:
        if s >= sup:
            return 0.0
        total, lo = 0.0, s
        for b in breaks:
            if lo < b < sup:
                total += _quiet_quad(lambda r: float(k(r)), lo, b, **_QUAD_KW)[0]
                lo = b
        hi = sup if math.isfinite(sup) else np.inf
        total += _quiet_quad(lambda r: float(k(r)), lo, hi, **_QUAD_KW)[0]
        return total

    return tail


def _omega_mass_by_quadrature(space: DiscreteSpace):
    """Omega mass matrix and load-of-one vector, re-integrated per element."""
    n = space.n_dofs
    M = np.zeros((n, n))
    mvec = np.zeros(n)
    for e1, el in enumerate(space.mesh.elements):
        if el.kind != "interior":
            continue
        xs, ws = _gl_nodes_with_breaks(el.left, el.right, 12)
        phi = np.stack([(el.right - xs) / el.width, (xs - el.left) / el.width])
        dofs = (e1, e1 + 1)
        for li in range(2):
            mvec[dofs[li]] += float(np.sum(ws * phi[li]))
            for lj in range(2):
                M[dofs[li], dofs[lj]] += float(np.sum(ws * phi[li] * phi[lj]))
    return M, mvec


def _tilde_mass_by_quadrature(space: DiscreteSpace, k: KernelSpec) -> np.ndarray:
    """Collar mass against nu_tilde with the weight evaluated from its
    definition nu_tilde(y) = integral_Omega (1 ^ nu)(x - y) dx by adaptive
    quad (the wedge keeps the weight finite up to the boundary)."""
    a, b = space.mesh.domain.a, space.mesh.domain.b
    radii = [r for r in _weight_kink_radii(k) if math.isfinite(r)]

    def tilde_one(y: float) -> float:
        pts = sorted({y + s * r for s in (-1.0, 1.0) for r in radii if a < y + s * r < b})
        return _quiet_quad(
            lambda x: min(1.0, float(k(abs(x - y)))), a, b, points=pts or None, **_QUAD_KW
        )[0]

    def tilde(xs):
        return np.array([tilde_one(x) for x in np.atleast_1d(xs)])

    far_diag = 0.0
    if space.far_index is not None:
        v = space.mesh.vertices
        hi = _quiet_quad(tilde_one, v[-1], np.inf, **_QUAD_KW)[0]
        lo = _quiet_quad(tilde_one, -np.inf, v[0], **_QUAD_KW)[0]
        far_diag = hi + lo
    kinks = sorted(
        {c + s * r for c in (a, b) for s in (-1.0, 1.0) for r in _weight_kink_radii(k)}
    )
    return complement_mass(space, tilde, far_diag, ORACLE_RULE.order, kinks)


def dense_reference(space: DiscreteSpace, k: KernelSpec):
    """Reference AssembledSystem via the independent quadrature route.

    Capped at 64 degrees of freedom: the point is trustworthy small matrices,
    not scale.
    """
    if space.n_dofs > _DENSE_DOF_CAP:
        raise NonlocalError(
            "budget-exceeded",
            f"refused: dense reference is capped at {_DENSE_DOF_CAP} dofs, "
            f"got {space.n_dofs}",
        )
    sysm = assemble(space, k, rule=ORACLE_RULE, far_tail=_tail_to_infinity(k))
    M, mvec = _omega_mass_by_quadrature(space)
    sysm.M = M
    sysm.mvec = mvec
    sysm.M_c = complement_mass(space, lambda xs: np.ones_like(xs), 0.0, 12)
    sysm.M_tilde = _tilde_mass_by_quadrature(space, k)
    sysm.meta = dict(sysm.meta, oracle=True)
    return sysm


def local_reference_1d(f, g_left: float, g_right: float):
    """Mean-zero solution of -u'' = f on (0, 1) with u'(0) = -g_left and
    u'(1) = g_right.

    The sign convention satisfies the local flux identity
    integral u'v' = integral f v + g_left v(0) + g_right v(1).  Data must
    balance: integral_0^1 f + g_left + g_right = 0.
    """
    f_fn = (lambda x, c=float(f): c) if np.isscalar(f) else f
    total_f = _quiet_quad(f_fn, 0.0, 1.0, **_QUAD_KW)[0]
    defect = total_f + g_left + g_right
    if abs(defect) > 1e-9:
        raise NonlocalError(
            "incompatible-data",
            f"integral f + g_left + g_right = {defect:.3e} must vanish",
        )
    # -u'' = f integrated twice: u(x) = -g_left x - int_0^x (x-t) f(t) dt + C
    mean_shift = 0.5 * g_left + 0.5 * _quiet_quad(
        lambda t: (1.0 - t) ** 2 * f_fn(t), 0.0, 1.0, **_QUAD_KW
    )[0]

    def u(x: float) -> float:
        bend = _quiet_quad(lambda t: (x - t) * f_fn(t), 0.0, x, **_QUAD_KW)[0] if x > 0.0 else 0.0
        return -g_left * x - bend + mean_shift

    return u


def _derivative(phi, x: float, step: float = 1e-5) -> float:
    return (float(phi(x + step)) - float(phi(x - step))) / (2.0 * step)


def alpha_sweep(
    phi,
    f,
    alphas,
    h0: float = 1.0 / 8.0,
    truncation_radius: float = 4.0,
    threads: int = 1,
):
    """Nonlocal-to-local convergence table on Omega = (0, 1).

    For each alpha: assemble the normalized fractional kernel on a mesh with
    h = min(h0, 2 - alpha), take complement data from the complement-side
    operator applied to the interpolant of phi, solve the mean-zero Neumann
    problem with f/2 (the local limit operator is half the Laplacian), and
    record the L2 distance to the local reference with boundary fluxes from
    phi.  The data pairing goes through the assembled operator because the
    near-interface mass of the continuous data concentrates below resolvable
    distances as alpha approaches 2; the matrix moments carry it exactly.
    Rows hold the fixed CSV columns
    (alpha, h, R_trunc, l2_error, energy_gap, gauss_green_residual).
    """
    dom = DomainSpec(0.0, 1.0)
    dphi0 = _derivative(phi, 0.0)
    dphi1 = _derivative(phi, 1.0)
    u_loc = local_reference_1d(f, -dphi0, dphi1)
    f_fn = (lambda x, c=float(f): c) if np.isscalar(f) else f

    def du_loc(x: float) -> float:
        return dphi0 - _quiet_quad(f_fn, 0.0, x, **_QUAD_KW)[0]

    v_fn = lambda x: math.exp(-2.0 * (x - 0.5) ** 2)
    dv_fn = lambda x: -4.0 * (x - 0.5) * v_fn(x)
    local_pairing = _quiet_quad(lambda x: du_loc(x) * dv_fn(x), 0.0, 1.0, **_QUAD_KW)[0]
    boundary_term = dphi1 - dphi0

    rows = []
    for alpha in alphas:
        k = make_fractional(1, float(alpha))
        h = min(h0, 2.0 - float(alpha))
        mesh = build_mesh(dom, h, truncation_radius=truncation_radius)
        space = build_space(mesh)
        sysm = assemble(space, k, threads=threads)
        phi_h = interpolate(space, phi)
        b_g = sysm.N_op @ phi_h
        rhs = _omega_load(sysm, lambda x: 0.5 * f_fn(x)) + b_g
        u, _, _, _ = _solve_bordered(sysm, rhs)
        l2_err = l2_omega_error(space, u, ref=u_loc)

        vh = interpolate(space, v_fn)
        energy_gap = abs(2.0 * float(u @ sysm.A @ vh) - local_pairing)
        gauss_green_residual = abs(2.0 * float(b_g.sum()) - boundary_term)
        rows.append(
            {
                "alpha": float(alpha),
                "h": h,
                "R_trunc": float(truncation_radius),
                "l2_error": l2_err,
                "energy_gap": energy_gap,
                "gauss_green_residual": gauss_green_residual,
            }
        )
    return rows
