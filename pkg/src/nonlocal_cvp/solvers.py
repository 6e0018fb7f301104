"""Complement-value solvers on assembled systems.

Variational problems (plain, weighted, Dirichlet, Robin), spectral problems,
the Poincare constant, the Dirichlet-to-Neumann map, the trace quotient norm,
and the non-existence probe.  All solvers act on an immutable AssembledSystem
and are deterministic: direct dense factorizations up to DENSE_DOF_LIMIT
degrees of freedom, projected Jacobi-CG beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad
from scipy.sparse.linalg import LinearOperator, cg

from ._errors import NonlocalError
from .assembly import (
    AssembledSystem,
    _gl_nodes_with_breaks,
    assemble,
    build_space,
    complement_mass,
    mean_over_omega,
)
from .geometry import DomainSpec, build_mesh
from .kernels import make_fractional, make_weight, weight_eval

__all__ = [
    "ProblemSpec",
    "SolveReport",
    "EigenReport",
    "DENSE_DOF_LIMIT",
    "solve_neumann",
    "solve_neumann_weighted",
    "solve_dirichlet",
    "solve_robin",
    "eig",
    "poincare_constant",
    "dtn_assemble",
    "dtn_extend",
    "dtn_spectral_check",
    "trace_quotient_norm",
    "nonexistence_probe",
    "v_norm",
]

DENSE_DOF_LIMIT = 3000
_REPAIR_TOL = 1e-10


@dataclass
class ProblemSpec:
    """Declarative description of one complement-value problem.

    variant is one of Neumann, NeumannWeighted, Dirichlet, Robin, EigNeumann,
    EigDirichlet, EigRobin, DtN.  f is a callable or per-node values on Omega;
    g a callable or per-node values on the complement dofs; beta a nonnegative
    callable or nodal values on the complement (Robin and spectral DtN);
    lambda_shift the DtN spectral parameter; eigen_count the number of pairs.
    """

    variant: str
    f: object = None
    g: object = None
    beta: object = None
    lambda_shift: float = 0.0
    eigen_count: int = 6

    _VARIANTS = (
        "Neumann",
        "NeumannWeighted",
        "Dirichlet",
        "Robin",
        "EigNeumann",
        "EigDirichlet",
        "EigRobin",
        "DtN",
    )

    def __post_init__(self):
        if self.variant not in self._VARIANTS:
            raise NonlocalError(
                "invalid-parameter", f"variant must be one of {self._VARIANTS}, got {self.variant}"
            )
        if self.eigen_count < 1:
            raise NonlocalError("invalid-parameter", "eigen_count must be positive")


@dataclass
class SolveReport:
    """Solution coefficients plus the quantities every run must surface."""

    coefficients: np.ndarray
    compatibility_defect: float
    energy: float
    mean_over_omega: float
    iterations: int
    residual: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "compatibility_defect": float(self.compatibility_defect),
            "energy": float(self.energy),
            "mean_over_omega": float(self.mean_over_omega),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "extras": _jsonable(self.extras),
        }


@dataclass
class EigenReport:
    """Nondecreasing eigenvalues with M-orthonormal eigenvectors as columns."""

    variant: str
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "values": [float(v) for v in self.values],
            "residuals": [float(r) for r in self.residuals],
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def v_norm(sys: AssembledSystem, u: np.ndarray) -> float:
    """Discrete V-norm sqrt(u'(M + S)u): L2(Omega) mass plus the halved
    energy seminorm."""
    return math.sqrt(max(0.0, float(u @ sys.M @ u + u @ sys.S @ u)))


def _omega_load(sys: AssembledSystem, f) -> np.ndarray:
    """Load vector of (f, phi_i) over Omega for callable, nodal, scalar or zero f."""
    n = sys.space.n_dofs
    if f is None:
        return np.zeros(n)
    if np.isscalar(f):
        return float(f) * sys.mvec
    if callable(f):
        rhs = np.zeros(n)
        for e1, el in enumerate(sys.space.mesh.elements):
            if el.kind != "interior":
                continue
            xs, ws = _gl_nodes_with_breaks(el.left, el.right, 12)
            fv = np.array([float(f(x)) for x in xs])
            rhs[e1] += float(np.sum(ws * fv * (el.right - xs) / el.width))
            rhs[e1 + 1] += float(np.sum(ws * fv * (xs - el.left) / el.width))
        return rhs
    fv = np.asarray(f, dtype=float)
    if fv.shape != (n,):
        raise NonlocalError(
            "invalid-parameter", f"nodal f must have length {n}, got {fv.shape}"
        )
    return sys.M @ fv


def _nodal_complement(sys: AssembledSystem, g) -> np.ndarray:
    """Nodal complement values from a callable or an array over complement dofs."""
    cidx = sys.space.complement_idx
    if g is None:
        return np.zeros(len(cidx))
    if np.isscalar(g):
        return np.full(len(cidx), float(g))
    if callable(g):
        v = sys.space.mesh.vertices
        out = np.empty(len(cidx))
        for p, d in enumerate(cidx):
            if sys.space.far_index is not None and d == sys.space.far_index:
                out[p] = 0.5 * (float(g(v[0])) + float(g(v[-1])))
            else:
                out[p] = float(g(v[d]))
        return out
    gv = np.asarray(g, dtype=float)
    if gv.shape != (len(cidx),):
        raise NonlocalError(
            "invalid-parameter",
            f"nodal g must have length {len(cidx)} (complement dofs), got {gv.shape}",
        )
    return gv


def _complement_load_plain(sys: AssembledSystem, g) -> np.ndarray:
    """Load of (g, phi_i) over the truncated complement plus the far region.

    Nodal data pairs through the plain complement mass matrix and requires a
    zero far value (the far region has infinite measure); callable data is
    integrated directly and must have finite far-tail integrals.
    """
    n = sys.space.n_dofs
    if g is None:
        return np.zeros(n)
    if callable(g) and not np.isscalar(g):
        rhs = np.zeros(n)
        for e1, el in enumerate(sys.space.mesh.elements):
            if el.kind != "collar":
                continue
            xs, ws = _gl_nodes_with_breaks(el.left, el.right, 12)
            gv = np.array([float(g(x)) for x in xs])
            rhs[e1] += float(np.sum(ws * gv * (el.right - xs) / el.width))
            rhs[e1 + 1] += float(np.sum(ws * gv * (xs - el.left) / el.width))
        if sys.space.far_index is not None:
            v = sys.space.mesh.vertices
            hi, _ = quad(g, v[-1], np.inf, limit=200)
            lo, _ = quad(g, -np.inf, v[0], limit=200)
            if not (math.isfinite(hi) and math.isfinite(lo)):
                raise NonlocalError(
                    "invalid-parameter", "g is not integrable over the far region"
                )
            rhs[sys.space.far_index] = hi + lo
        return rhs
    gv = _nodal_complement(sys, g)
    if sys.space.far_index is not None and gv[-1] != 0.0:
        raise NonlocalError(
            "invalid-parameter",
            "plain complement pairing needs far value 0 (the far region has "
            "infinite measure); use the weighted solver or decaying callable g",
        )
    return sys.M_c[:, sys.space.complement_idx] @ gv


def _complement_load_weighted(sys: AssembledSystem, g) -> np.ndarray:
    """Load of (g, phi_i) against the nu_tilde weight on the complement."""
    if g is None:
        return np.zeros(sys.space.n_dofs)
    gv = _nodal_complement(sys, g)
    return sys.M_tilde[:, sys.space.complement_idx] @ gv


def _inverse_weighted_data_norm(sys: AssembledSystem, g) -> float:
    """Diagnostic discrete norm of g against 1/nu_tilde on collar vertices.

    Finiteness of this norm is the natural smallness condition for the plain
    Neumann data; it blows up when g fails to decay against the kernel tail.
    """
    gv = _nodal_complement(sys, g)
    dom = sys.space.mesh.domain
    wf = make_weight("nu_tilde", sys.kernel, ball=(dom.a, dom.b))
    total = 0.0
    lump = sys.M_c @ np.ones(sys.space.n_dofs)
    v = sys.space.mesh.vertices
    for p, d in enumerate(sys.space.complement_idx):
        if sys.space.far_index is not None and d == sys.space.far_index:
            continue
        wt = float(weight_eval(wf, v[d]))
        if wt > 0.0:
            total += gv[p] ** 2 / wt * lump[d]
    return math.sqrt(total)


def _tilde_data_norm(sys: AssembledSystem, gv: np.ndarray) -> float:
    """Discrete norm of nodal complement data against nu_tilde."""
    cidx = sys.space.complement_idx
    return math.sqrt(max(0.0, float(gv @ sys.M_tilde[np.ix_(cidx, cidx)] @ gv)))


def _solve_bordered(sys: AssembledSystem, rhs: np.ndarray):
    """Mean-constrained saddle-point solve [[A, m], [m', 0]] [u; mu] = [rhs; 0].

    The multiplier mu = defect/|Omega| performs the orthogonal load repair of
    the compatible reformulation exactly.
    """
    A = sys.A
    m = sys.mvec
    n = len(rhs)
    if n <= DENSE_DOF_LIMIT:
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = A
        K[:n, n] = m
        K[n, :n] = m
        b = np.append(rhs, 0.0)
        try:
            x = sla.solve(K, b, assume_a="sym")
        except sla.LinAlgError as exc:
            raise NonlocalError(
                "assembly-inconsistency", f"saddle-point factorization failed: {exc}"
            ) from exc
        u, mult = x[:n], x[n]
        iterations = 0
    else:
        # projected Jacobi-CG on the mean-zero subspace
        mm = float(m @ m)
        proj = lambda w: w - (m @ w) / mm * m
        diag = np.clip(np.diag(A), 1e-300, None)
        op = LinearOperator((n, n), matvec=lambda w: proj(A @ proj(w)))
        pre = LinearOperator((n, n), matvec=lambda w: proj(w / diag))
        u, info = cg(op, proj(rhs), M=pre, rtol=1e-12, atol=0.0, maxiter=20 * n)
        if info != 0:
            raise NonlocalError("assembly-inconsistency", f"projected CG stalled (info={info})")
        u = proj(u)
        # the projected residual rhs - A u lies in span{m}
        mult = float(m @ (rhs - A @ u)) / mm
        iterations = 1
    resid = np.linalg.norm(A @ u + mult * m - rhs) / (1.0 + np.linalg.norm(rhs))
    if resid > 1e-6:
        raise NonlocalError(
            "assembly-inconsistency", f"singular beyond the constant null space (residual {resid:.2e})"
        )
    return u, mult, iterations, float(resid)


def _finish_neumann(sys: AssembledSystem, rhs: np.ndarray, extras: dict) -> SolveReport:
    defect = float(rhs.sum())
    extras["load_repaired"] = bool(abs(defect) > _REPAIR_TOL)
    u, mult, iterations, resid = _solve_bordered(sys, rhs)
    return SolveReport(
        coefficients=u,
        compatibility_defect=defect,
        energy=float(u @ sys.A @ u),
        mean_over_omega=mean_over_omega(sys.space, u),
        iterations=iterations,
        residual=resid,
        extras=extras,
    )


def solve_neumann(sys: AssembledSystem, f, g) -> SolveReport:
    """Mean-zero solution of the plain Neumann problem.

    Solves E_h(u, v) = (f, v)_Omega + (g, v)_{Omega^c} over the discrete space
    via one Lagrange multiplier for the mean constraint.  The compatibility
    defect integral of f plus integral of g is reported; when it exceeds
    1e-10 the multiplier projects the load onto the compatible subspace and
    the defect is surfaced rather than raised.
    """
    rhs = _omega_load(sys, f) + _complement_load_plain(sys, g)
    gnorm = _inverse_weighted_data_norm(sys, g)
    extras = {
        "g_weighted_norm": gnorm,
        "g_norm_warning": bool(not math.isfinite(gnorm) or gnorm > 1e8),
    }
    return _finish_neumann(sys, rhs, extras)


def solve_neumann_weighted(sys: AssembledSystem, f, g) -> SolveReport:
    """Neumann problem with the nu_tilde-weighted complement pairing.

    With g = 0 the right-hand side equals the plain homogeneous one exactly,
    so the output matches solve_neumann(sys, f, 0) bitwise.
    """
    gv = _nodal_complement(sys, g)
    if not np.all(np.isfinite(gv)):
        raise NonlocalError("invalid-parameter", "g is not square-integrable against nu_tilde")
    gnorm = _tilde_data_norm(sys, gv)
    rhs = _omega_load(sys, f) + sys.M_tilde[:, sys.space.complement_idx] @ gv
    extras = {"g_tilde_norm": gnorm, "pairing": "nu_tilde"}
    return _finish_neumann(sys, rhs, extras)


def solve_dirichlet(sys: AssembledSystem, f, g) -> SolveReport:
    """Dirichlet problem: complement dofs pinned to g, free block solved SPD.

    Interface dofs belong to the solved set (the boundary has measure zero);
    a discrete maximum-principle spot check is recorded in extras, never
    asserted.
    """
    space = sys.space
    gv = _nodal_complement(sys, g)
    free = space.free_idx
    cidx = space.complement_idx
    A = sys.A
    u = np.zeros(space.n_dofs)
    u[cidx] = gv
    load = _omega_load(sys, f)
    rhs = load[free] - A[np.ix_(free, cidx)] @ gv
    cho = sla.cho_factor(A[np.ix_(free, free)])
    u[free] = sla.cho_solve(cho, rhs)
    resid = np.linalg.norm(A[free] @ u - load[free]) / (1.0 + np.linalg.norm(rhs))
    interior_vals = u[space.interior_idx]
    mp = {
        "g_min": float(gv.min()) if len(gv) else 0.0,
        "g_max": float(gv.max()) if len(gv) else 0.0,
        "u_interior_min": float(interior_vals.min()) if len(interior_vals) else 0.0,
        "u_interior_max": float(interior_vals.max()) if len(interior_vals) else 0.0,
    }
    mp["violations"] = int(
        (f is None) and ((mp["u_interior_min"] < mp["g_min"] - 1e-12)
                         or (mp["u_interior_max"] > mp["g_max"] + 1e-12))
    )
    fl2 = math.sqrt(max(0.0, float(load @ _nodal_f_proxy(sys, f))))
    extras = {
        "max_principle": mp,
        "u_v_norm": v_norm(sys, u),
        "data_norm_proxy": fl2 + float(np.linalg.norm(gv)),
    }
    return SolveReport(
        coefficients=u,
        compatibility_defect=0.0,
        energy=float(u @ A @ u),
        mean_over_omega=mean_over_omega(space, u),
        iterations=0,
        residual=float(resid),
        extras=extras,
    )


def _nodal_f_proxy(sys: AssembledSystem, f) -> np.ndarray:
    """Nodal representative of f for the reported data-norm proxy."""
    n = sys.space.n_dofs
    if f is None:
        return np.zeros(n)
    if np.isscalar(f):
        return np.full(n, float(f))
    if callable(f):
        out = np.zeros(n)
        v = sys.space.mesh.vertices
        for d in np.concatenate([sys.space.interior_idx, sys.space.interface_idx]):
            out[d] = float(f(v[d]))
        return out
    return np.asarray(f, dtype=float)


def _robin_mass(sys: AssembledSystem, beta):
    """Complement beta-mass matrix, nodal beta values, and the far pinning flag.

    A far dof with nondecaying beta carries infinite beta-mass, which pins it
    to zero; decay is probed at geometrically growing radii.
    """
    space = sys.space
    v = space.mesh.vertices
    cidx = space.complement_idx
    is_callable = callable(beta) and not np.isscalar(beta)
    if is_callable:
        bv = np.array(
            [0.0 if (space.far_index is not None and d == space.far_index) else float(beta(v[d]))
             for d in cidx]
        )
        beta_fn = lambda xs: np.array([float(beta(x)) for x in xs])
    elif np.isscalar(beta) or beta is None:
        bv = _nodal_complement(sys, beta)
        b0 = float(beta) if beta is not None else 0.0
        beta_fn = lambda xs: np.full(np.shape(xs), b0, dtype=float)
    else:
        bv = _nodal_complement(sys, beta)
        # constant extension of the nodal samples toward the interface
        xs_s = np.array([v[d] for d in cidx if space.far_index is None or d != space.far_index])
        bs_s = np.array(
            [bv[p] for p, d in enumerate(cidx) if space.far_index is None or d != space.far_index]
        )
        beta_fn = lambda xs: np.interp(xs, xs_s, bs_s)
    if np.any(bv < 0.0):
        raise NonlocalError("invalid-parameter", "beta must be nonnegative on the complement")
    far_pinned = False
    far_mass = 0.0
    if space.far_index is not None:
        span = max(abs(v[0]), abs(v[-1]))
        if is_callable:
            probes = [span * s for s in (1.0, 10.0, 100.0, 1000.0)]
            decays = any(
                max(abs(float(beta(r)) * r), abs(float(beta(-r)) * r)) <= 1e-8
                for r in probes
            )
            if decays:
                hi, _ = quad(lambda x: float(beta(x)), v[-1], np.inf, limit=200)
                lo, _ = quad(lambda x: float(beta(x)), -np.inf, v[0], limit=200)
                far_mass = hi + lo
                far_pinned = not math.isfinite(far_mass)
            else:
                far_pinned = True
        else:
            far_pinned = bool(bv[-1] > 0.0)
    Mb = complement_mass(space, beta_fn, far_mass if not far_pinned else 0.0, 24)
    # the beta pairing acts on the complement-dof subspace: interface hats
    # stay free data, so the large-beta limit pins exactly the set that
    # solve_dirichlet pins
    iface = space.interface_idx
    Mb[iface, :] = 0.0
    Mb[:, iface] = 0.0
    return Mb, bv, far_pinned


def _check_beta_bounded(sys: AssembledSystem, bv: np.ndarray):
    """Robin admissibility: beta / nu_tilde finite at the complement samples."""
    dom = sys.space.mesh.domain
    wf = make_weight("nu_tilde", sys.kernel, ball=(dom.a, dom.b))
    v = sys.space.mesh.vertices
    for p, d in enumerate(sys.space.complement_idx):
        if sys.space.far_index is not None and d == sys.space.far_index:
            continue
        wt = float(weight_eval(wf, v[d]))
        if bv[p] != 0.0 and not (wt > 0.0 and math.isfinite(bv[p] / wt)):
            raise NonlocalError(
                "invalid-parameter", f"beta/nu_tilde unbounded at complement vertex {v[d]}"
            )


def solve_robin(sys: AssembledSystem, f, g, beta) -> SolveReport:
    """Robin problem Q_beta(u, v) = (f, v)_Omega + (g, v)_{Omega^c}.

    Q_beta adds the complement beta-mass to the energy; it is coercive so no
    mean constraint is needed.  beta == 0 raises degenerate-robin (use
    solve_neumann).
    """
    Mb, bv, far_pinned = _robin_mass(sys, beta)
    if not np.any(bv > 0.0) and np.all(Mb == 0.0):
        raise NonlocalError(
            "degenerate-robin", "beta vanishes on the complement; use solve_neumann"
        )
    _check_beta_bounded(sys, bv)
    K = sys.A + Mb
    rhs = _omega_load(sys, f) + _complement_load_plain(sys, g)
    keep = np.arange(sys.space.n_dofs)
    if far_pinned:
        keep = keep[keep != sys.space.far_index]
    u = np.zeros(sys.space.n_dofs)
    try:
        cho = sla.cho_factor(K[np.ix_(keep, keep)])
    except sla.LinAlgError as exc:
        raise NonlocalError("degenerate-robin", f"Robin form not coercive: {exc}") from exc
    u[keep] = sla.cho_solve(cho, rhs[keep])
    resid = np.linalg.norm(K[keep][:, keep] @ u[keep] - rhs[keep]) / (1.0 + np.linalg.norm(rhs))
    return SolveReport(
        coefficients=u,
        compatibility_defect=float(rhs.sum()),
        energy=float(u @ K @ u),
        mean_over_omega=mean_over_omega(sys.space, u),
        iterations=0,
        residual=float(resid),
        extras={"far_pinned": far_pinned, "beta_mass_trace": float(np.trace(Mb))},
    )


def _condense(Kfull: np.ndarray, free: np.ndarray, elim: np.ndarray):
    """Static condensation of the elim block onto free: K_ff - K_fe K_ee^-1 K_ef."""
    K_ff = Kfull[np.ix_(free, free)]
    if len(elim) == 0:
        return K_ff, None
    K_fe = Kfull[np.ix_(free, elim)]
    K_ee = Kfull[np.ix_(elim, elim)]
    cho = sla.cho_factor(K_ee)
    X = sla.cho_solve(cho, K_fe.T)
    return K_ff - K_fe @ X, X


def eig(sys: AssembledSystem, variant: str, count: int, beta=None) -> EigenReport:
    """Generalized symmetric eigenpairs A u = mu M u on the variant subspace.

    neumann: full space via exact condensation of the complement block (the
    complement part of each eigenvector extends harmonically); dirichlet: the
    subspace with complement and interface dofs zeroed; robin: A plus the
    complement beta-mass, condensed the same way.  Eigenvalues nondecreasing,
    eigenvectors M-orthonormal, residuals ||Au - mu Mu|| reported.
    """
    space = sys.space
    variant = variant.lower()
    free = space.free_idx
    if variant == "neumann":
        K = sys.A
        elim = space.complement_idx
    elif variant == "dirichlet":
        K = sys.A
        free = space.interior_idx
        elim = np.array([], dtype=int)
    elif variant == "robin":
        if beta is None:
            raise NonlocalError("invalid-parameter", "robin eigenproblem needs beta")
        Mb, bv, far_pinned = _robin_mass(sys, beta)
        _check_beta_bounded(sys, bv)
        K = sys.A + Mb
        elim = space.complement_idx
        if far_pinned:
            elim = elim[elim != space.far_index]
    else:
        raise NonlocalError("invalid-parameter", f"unknown eig variant {variant}")
    if count > len(free):
        raise NonlocalError(
            "budget-exceeded", f"count={count} exceeds subspace dimension {len(free)}"
        )
    K_red, X = _condense(K, free, elim)
    M_red = sys.M[np.ix_(free, free)]
    vals, vecs = sla.eigh(K_red, M_red, subset_by_index=[0, count - 1])
    full = np.zeros((space.n_dofs, count))
    full[free] = vecs
    if X is not None:
        full[elim] = -X @ vecs
    # residual rows of the posed problem: pinned dofs carry the constraint,
    # not an equation
    rows = np.sort(np.concatenate([free, elim])) if len(elim) else free
    R = (K @ full - (sys.M @ full) * vals)[rows]
    residuals = np.array(
        [np.linalg.norm(R[:, i]) / max(1.0, abs(vals[i])) for i in range(count)]
    )
    return EigenReport(variant=variant, values=vals, vectors=full, residuals=residuals)


def poincare_constant(sys: AssembledSystem) -> float:
    """Optimal discrete Poincare constant 1/mu_1 from the Neumann spectrum.

    Self-checks the inequality ||u - mean||^2_{L2} <= C E(u, u) on 100 random
    vectors before returning.
    """
    rep = eig(sys, "neumann", 2)
    mu1 = float(rep.values[1])
    if mu1 <= 0.0:
        raise NonlocalError("assembly-inconsistency", f"mu_1 = {mu1} is not positive")
    C = 1.0 / mu1
    rng = np.random.default_rng(1730)
    omega = sys.omega_measure
    for _ in range(100):
        u = rng.standard_normal(sys.space.n_dofs)
        ubar = float(sys.mvec @ u) / omega
        l2sq = float(u @ sys.M @ u) - omega * ubar**2
        if l2sq > C * float(u @ sys.A @ u) + 1e-12:
            raise NonlocalError("assembly-inconsistency", "Poincare inequality violated")
    return C


def _elimination_spectrum(sys: AssembledSystem, K: np.ndarray):
    """Eigenvalues of the (K_FF, M_FF) pencil that governs the DtN elimination."""
    free = sys.space.free_idx
    return sla.eigh(
        K[np.ix_(free, free)], sys.M[np.ix_(free, free)], eigvals_only=True
    )


def dtn_assemble(sys: AssembledSystem, lam: float) -> np.ndarray:
    """Dirichlet-to-Neumann matrix D_lambda on the complement dofs.

    Schur complement of (A - lambda M) eliminating the interior and interface
    block; indexed by space.complement_idx.  lambda must stay clear of the
    elimination pencil's spectrum (the discrete Dirichlet eigenvalues of the
    eliminated block), otherwise shift-rejected reports the nearest one.
    """
    spec = _elimination_spectrum(sys, sys.A)
    gap = np.abs(spec - lam)
    nearest = float(spec[np.argmin(gap)])
    if gap.min() <= 1e-8 * max(1.0, abs(lam)):
        raise NonlocalError(
            "shift-rejected",
            f"lambda={lam} collides with Dirichlet eigenvalue {nearest:.12g}",
        )
    free = sys.space.free_idx
    cidx = sys.space.complement_idx
    K = sys.A - lam * sys.M
    K_cc = K[np.ix_(cidx, cidx)]
    K_cf = K[np.ix_(cidx, free)]
    X = sla.solve(K[np.ix_(free, free)], K_cf.T, assume_a="sym")
    return K_cc - K_cf @ X


def dtn_extend(sys: AssembledSystem, lam: float, g: np.ndarray) -> np.ndarray:
    """Full coefficient vector of the (A - lambda M)-harmonic extension of g."""
    free = sys.space.free_idx
    cidx = sys.space.complement_idx
    K = sys.A - lam * sys.M
    u = np.zeros(sys.space.n_dofs)
    u[cidx] = g
    u[free] = sla.solve(
        K[np.ix_(free, free)], -K[np.ix_(free, cidx)] @ g, assume_a="sym"
    )
    return u


def dtn_spectral_check(sys: AssembledSystem, beta) -> dict:
    """Cross-validation of the Robin/DtN spectral correspondence.

    Computes the smallest Robin eigenvalue gamma_1(beta), assembles the DtN
    pencil D_{gamma_1} + beta-mass as the honest Schur complement of
    (A + M_beta - gamma_1 M) onto the complement block, and reports its
    smallest singular value.  PASS iff sigma_min < 1e-6 ||D||; gamma_1 within
    the 1e-6 guard band of the elimination spectrum is inconclusive.  Kernel
    dimensions on both sides are reported.
    """
    Mb, bv, far_pinned = _robin_mass(sys, beta)
    _check_beta_bounded(sys, bv)
    K = sys.A + Mb
    rep = eig(sys, "robin", min(4, len(sys.space.free_idx)), beta=beta)
    gamma1 = float(rep.values[0])

    spec = _elimination_spectrum(sys, K)
    guard = float(np.abs(spec - gamma1).min())
    scale = max(1.0, abs(gamma1))
    status = "inconclusive" if guard <= 1e-6 * scale else None

    free = sys.space.free_idx
    cidx = sys.space.complement_idx
    if far_pinned:
        cidx = cidx[cidx != sys.space.far_index]
    Kg = K - gamma1 * sys.M
    K_cc = Kg[np.ix_(cidx, cidx)]
    K_cf = Kg[np.ix_(cidx, free)]
    X = sla.solve(Kg[np.ix_(free, free)], K_cf.T, assume_a="sym")
    D = K_cc - K_cf @ X
    svals = sla.svdvals(D)
    sigma_min, norm_D = float(svals[-1]), float(svals[0])
    passed = sigma_min < 1e-6 * norm_D
    if status is None:
        status = "PASS" if passed else "FAIL"
    robin_mult = int(np.sum(np.abs(rep.values - gamma1) <= 1e-8 * scale))
    dtn_kernel = int(np.sum(svals < 1e-6 * norm_D))
    return {
        "gamma1": gamma1,
        "sigma_min": sigma_min,
        "norm_D": norm_D,
        "status": status,
        "passed": bool(passed and status == "PASS"),
        "guard_distance": guard,
        "robin_kernel_dim": robin_mult,
        "dtn_kernel_dim": dtn_kernel,
        "kernel_dims_match": bool(robin_mult == dtn_kernel),
        "far_pinned": far_pinned,
    }


def trace_quotient_norm(sys: AssembledSystem, v_on_complement: np.ndarray) -> float:
    """Quotient trace norm: minimal discrete V-norm over extensions of the trace.

    Minimizes u'(M + S)u over interior and interface dofs with the complement
    dofs fixed; returns the minimum norm (not squared).
    """
    g = np.asarray(v_on_complement, dtype=float)
    cidx = sys.space.complement_idx
    if g.shape != (len(cidx),):
        raise NonlocalError(
            "invalid-parameter", f"trace must have length {len(cidx)}, got {g.shape}"
        )
    G = sys.M + sys.S
    free = sys.space.free_idx
    u = np.zeros(sys.space.n_dofs)
    u[cidx] = g
    cho = sla.cho_factor(G[np.ix_(free, free)])
    u[free] = sla.cho_solve(cho, -G[np.ix_(free, cidx)] @ g)
    return math.sqrt(max(0.0, float(u @ G @ u)))


DEFAULT_LADDER = ((1.0 / 8.0, 4.0), (1.0 / 16.0, 32.0), (1.0 / 32.0, 256.0), (1.0 / 64.0, 2048.0))


def nonexistence_probe(alpha: float, gamma: float, mesh_ladder=None, threads: int = 1) -> dict:
    """Blow-up probe for complement data g_gamma(x) = sign(x) (|x| - 1)^gamma.

    Solves the weighted Neumann problem on Omega = (-1, 1) along a ladder of
    (h, R_trunc) refinements and reports the discrete V-norms.  Admissible
    exponents stabilize; exponents in the divergence band grow along the
    ladder.  gamma outside (-1, alpha) makes the data non-integrable.
    """
    if not (-1.0 < gamma < alpha):
        raise NonlocalError(
            "invalid-parameter",
            f"gamma={gamma} outside (-1, {alpha}): data not integrable",
        )
    ladder = tuple(mesh_ladder) if mesh_ladder is not None else DEFAULT_LADDER
    k = make_fractional(1, alpha)
    dom = DomainSpec(-1.0, 1.0)
    g = lambda x: math.copysign(1.0, x) * (abs(x) - 1.0) ** gamma if abs(x) > 1.0 else 0.0
    rungs = []
    for h, R in ladder:
        mesh = build_mesh(dom, h, truncation_radius=R)
        space = build_space(mesh)
        sysm = assemble(space, k, threads=threads)
        gv = _nodal_complement(sysm, g)
        if space.far_index is not None:
            gv[-1] = 0.0  # odd data against an even weight: exact far cancellation
        rep = solve_neumann_weighted(sysm, None, gv)
        rungs.append(
            {
                "h": h,
                "R_trunc": R,
                "n_dofs": space.n_dofs,
                "v_norm": v_norm(sysm, rep.coefficients),
                "defect": rep.compatibility_defect,
            }
        )
    norms = [r["v_norm"] for r in rungs]
    ratios = [norms[i + 1] / norms[i] for i in range(len(norms) - 1)] if len(norms) > 1 else []
    band = (max(-1.0, (alpha - 1.0) / 2.0), alpha / 2.0)
    return {
        "alpha": alpha,
        "gamma": gamma,
        "admissible_band": band,
        "divergence_band": (alpha / 2.0, (alpha + 1.0) / 2.0),
        "rungs": rungs,
        "growth_ratios": ratios,
    }
