"""Galerkin assembly of nonlocal energy forms on 1D complement-value meshes.

The degrees of freedom are the mesh vertices (piecewise-linear hats) plus,
for fully supported kernels, one lumped constant on the far region beyond the
truncation radius.  The bilinear energy is assembled once per unordered
element pair through the shared radial reduction in `quadrature`, split into

    P : both arguments restricted to Omega x Omega,
    Q : the Omega x Omega^c interaction (counted once, ordered),
    Q_L : the same interaction weighted by the test function on the Omega side,
    N : the interaction weighted by the test function on the complement side,

so that A = P/2 + Q is the full energy Gram matrix, G_L = P/2 + Q_L is the
Gram matrix of the operator pairing, and A = G_L + N holds as a matrix
identity up to quadrature error.  S = (P + Q)/2 satisfies S <= A <= 2S.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._errors import NonlocalError
from .geometry import DomainMesh
from .kernels import KernelSpec, _unit_crossing, make_weight, one_wedge_tail, weight_eval
from .quadrature import (
    ASSEMBLY_RULE,
    QuadRule,
    _kernel_breaks,
    _leggauss,
    one_sided_tail,
    pair_engine_batch,
    same_element_integral,
)

__all__ = [
    "DiscreteSpace",
    "AssembledSystem",
    "build_space",
    "assemble",
    "assemble_N",
    "assemble_trace_DK",
    "complement_mass",
    "interpolate",
    "mean_over_omega",
    "l2_omega_error",
    "export_matrix_text",
]


@dataclass(eq=False)
class DiscreteSpace:
    """Vertex hat dofs plus an optional far-field constant dof.

    The all-ones coefficient vector represents the global constant function.
    complement_idx lists the strictly-exterior vertex dofs followed by the
    far dof when present; interface dofs (hats centered at a or b) belong to
    the free block together with the interior dofs.
    """

    mesh: DomainMesh
    n_dofs: int
    far_index: int | None
    interior_idx: np.ndarray
    interface_idx: np.ndarray
    complement_idx: np.ndarray

    @property
    def free_idx(self) -> np.ndarray:
        """Interior plus interface dofs, the block solved in constrained problems."""
        return np.sort(np.concatenate([self.interior_idx, self.interface_idx]))

    @property
    def coords(self) -> np.ndarray:
        """Vertex coordinates; the far dof (if any) has no coordinate."""
        return self.mesh.vertices


def build_space(mesh: DomainMesh) -> DiscreteSpace:
    a, b = mesh.domain.a, mesh.domain.b
    v = mesh.vertices
    interface = np.nonzero((v == a) | (v == b))[0]
    if len(interface) != 2:
        raise NonlocalError("invalid-domain", "mesh vertices must contain a and b exactly")
    interior = np.nonzero((v > a) & (v < b))[0]
    outside = np.nonzero((v < a) | (v > b))[0]
    far_index = mesh.n_vertices if mesh.far_field else None
    complement = outside if far_index is None else np.append(outside, far_index)
    n_dofs = mesh.n_vertices + (1 if mesh.far_field else 0)
    return DiscreteSpace(
        mesh=mesh,
        n_dofs=n_dofs,
        far_index=far_index,
        interior_idx=interior,
        interface_idx=interface,
        complement_idx=complement,
    )


@dataclass(eq=False)
class AssembledSystem:
    """Energy and mass matrices for one kernel on one discrete space.

    meta records kernel id, quadrature rule, truncation radius and layout so
    that runs are reproducible from the serialized record alone.
    """

    space: DiscreteSpace
    kernel: KernelSpec
    P: np.ndarray
    Q: np.ndarray
    Q_L: np.ndarray
    N_op: np.ndarray
    M: np.ndarray
    M_tilde: np.ndarray
    M_c: np.ndarray
    mvec: np.ndarray
    meta: dict = field(default_factory=dict)

    @cached_property
    def A(self) -> np.ndarray:
        """Full energy Gram matrix, 0.5 * P + Q."""
        return 0.5 * self.P + self.Q

    @cached_property
    def S(self) -> np.ndarray:
        """Halved-interaction comparison form, 0.5 * (P + Q); S <= A <= 2S."""
        return 0.5 * (self.P + self.Q)

    @cached_property
    def G_L(self) -> np.ndarray:
        """Operator-pairing Gram matrix, 0.5 * P + Q_L; A = G_L + N_op."""
        return 0.5 * self.P + self.Q_L

    @property
    def omega_measure(self) -> float:
        return self.space.mesh.domain.measure


def _weight_kink_radii(k: KernelSpec):
    """Radii where min(1, nu) has a kink: the unit crossing plus any kernel
    piece boundaries and the support radius (if finite)."""
    radii = {_unit_crossing(k)}
    radii.update(_kernel_breaks(k))
    if math.isfinite(k.support_radius):
        radii.add(k.support_radius)
    return sorted(r for r in radii if math.isfinite(r) and r > 0.0)


def _element_table(mesh: DomainMesh):
    lefts = np.array([e.left for e in mesh.elements])
    rights = np.array([e.right for e in mesh.elements])
    widths = rights - lefts
    is_interior = np.array([e.kind == "interior" for e in mesh.elements])
    return lefts, rights, widths, is_interior


def _pair_factors(i1: int, w1: float, i2: int, w2: float):
    """Dof list and per-dof factor triples for ordered elements e1 left of e2.

    Triples encode affine functions of (u, s) with u = r1 - x, s = y - l2:
    D = value at x minus value at y, VL = value at x, VR = value at y.
    """
    touching = i2 == i1 + 1
    dofs = [i1, i1 + 1, i2 + 1] if touching else [i1, i1 + 1, i2, i2 + 1]
    loc1 = (0, 1)
    loc2 = (1, 2) if touching else (2, 3)
    D, VL, VR = [], [], []
    for a in dofs:
        val_l = 1.0 if a == i1 + 1 else 0.0
        slope_l = -1.0 / w1 if a == i1 else (1.0 / w1 if a == i1 + 1 else 0.0)
        val_r = 1.0 if a == i2 else 0.0
        slope_r = -1.0 / w2 if a == i2 else (1.0 / w2 if a == i2 + 1 else 0.0)
        D.append((val_l - val_r, -slope_l, -slope_r))
        VL.append((val_l, -slope_l, 0.0))
        VR.append((val_r, 0.0, slope_r))
    return dofs, loc1, loc2, D, VL, VR


def _chunk_worker(args):
    (e_range, lefts, rights, widths, is_interior, k, rule, far_bounds, far_index, far_tail) = args
    sink = {key: ([], [], []) for key in ("P", "Q", "QL", "N")}

    def put(key, i, j, v):
        ii, jj, vv = sink[key]
        ii.append(i)
        jj.append(j)
        vv.append(v)

    n_e = len(widths)
    support = k.support_radius
    for e1 in e_range:
        if is_interior[e1]:
            # same-element Omega x Omega block
            base = same_element_integral(k, widths[e1], 1.0, 1.0, rule)
            s = 1.0 / widths[e1]
            d0, d1 = e1, e1 + 1
            put("P", d0, d0, base * s * s)
            put("P", d1, d1, base * s * s)
            put("P", d0, d1, -base * s * s)
            put("P", d1, d0, -base * s * s)
            if far_bounds is not None:
                _far_block(put, k, lefts[e1], rights[e1], e1, far_bounds, far_index, rule, far_tail)
        for e2 in range(e1 + 1, n_e):
            gap = lefts[e2] - rights[e1]
            if gap < 0.0:
                gap = 0.0
            if gap >= support:
                break  # gaps only grow with e2
            int1, int2 = is_interior[e1], is_interior[e2]
            if not (int1 or int2):
                continue
            dofs, loc1, loc2, D, VL, VR = _pair_factors(e1, widths[e1], e2, widths[e2])
            nd = len(dofs)
            combos, entries = [], []
            if int1 and int2:
                for ai in range(nd):
                    for bi in range(ai, nd):
                        combos.append((D[ai], D[bi]))
                        entries.append([("P", dofs[ai], dofs[bi], 2.0)])
                        if ai != bi:
                            entries[-1].append(("P", dofs[bi], dofs[ai], 2.0))
            else:
                for ai in range(nd):
                    for bi in range(ai, nd):
                        combos.append((D[ai], D[bi]))
                        entries.append([("Q", dofs[ai], dofs[bi], 1.0)])
                        if ai != bi:
                            entries[-1].append(("Q", dofs[bi], dofs[ai], 1.0))
                omega_loc, comp_loc = (loc1, loc2) if int1 else (loc2, loc1)
                omega_left = int1
                for li in omega_loc:
                    V_i = VL[li] if omega_left else VR[li]
                    sgn = 1.0 if omega_left else -1.0
                    for bj in range(nd):
                        combos.append((V_i, D[bj]))
                        entries.append([("QL", dofs[li], dofs[bj], sgn)])
                for li in comp_loc:
                    V_i = VR[li] if omega_left else VL[li]
                    sgn = -1.0 if omega_left else 1.0
                    for bj in range(nd):
                        combos.append((V_i, D[bj]))
                        entries.append([("N", dofs[li], dofs[bj], sgn)])
            vals = pair_engine_batch(
                k, gap, widths[e1], widths[e2], combos, rule, pair_id=f"({e1},{e2})"
            )
            for val, ents in zip(vals, entries):
                for key, i, j, scale in ents:
                    put(key, i, j, scale * val)
    return sink


def _far_block(put, k, left, right, e1, far_bounds, far_index, rule, tail=None):
    """Coupling of one interior element with the lumped far region.

    tail overrides the one-sided tail integral (oracle cross-checks pass a
    direct quadrature-to-infinity version).
    """
    vmin, vmax = far_bounds
    if tail is None:
        tail = lambda s: one_sided_tail(k, s)
    nodes, wts = _leggauss(rule.order)
    half = 0.5 * (right - left)
    xs = 0.5 * (left + right) + half * nodes
    ws = half * wts
    tau = np.array([tail(vmax - x) + tail(x - vmin) for x in xs])
    w = right - left
    phi = np.stack([(right - xs) / w, (xs - left) / w])
    dofs = (e1, e1 + 1)
    for li in range(2):
        load = float(np.sum(ws * phi[li] * tau))
        put("Q", dofs[li], far_index, -load)
        put("Q", far_index, dofs[li], -load)
        put("QL", dofs[li], far_index, -load)
        put("N", far_index, dofs[li], -load)
        for lj in range(2):
            mass = float(np.sum(ws * phi[li] * phi[lj] * tau))
            put("Q", dofs[li], dofs[lj], mass)
            put("QL", dofs[li], dofs[lj], mass)
    bulk = float(np.sum(ws * tau))
    put("Q", far_index, far_index, bulk)
    put("N", far_index, far_index, bulk)


def assemble(
    space: DiscreteSpace,
    kernel: KernelSpec,
    rule: QuadRule = ASSEMBLY_RULE,
    threads: int = 1,
    far_tail=None,
) -> AssembledSystem:
    """Assemble all energy and mass matrices for the kernel on the space.

    Deterministic for fixed inputs regardless of threads: work is chunked by
    leading element index and chunk results are accumulated in chunk order.
    far_tail optionally replaces the closed-form far tail integral (used by
    the dense oracle for an independent numerical path).
    """
    if threads < 1:
        raise NonlocalError("invalid-parameter", f"threads={threads} must be >= 1")
    mesh = space.mesh
    k = kernel
    lefts, rights, widths, is_interior = _element_table(mesh)
    n = space.n_dofs
    far_bounds = (mesh.vertices[0], mesh.vertices[-1]) if mesh.far_field else None

    n_e = len(widths)
    chunk_size = max(1, n_e // max(threads * 4, 8))
    ranges = [range(s, min(s + chunk_size, n_e)) for s in range(0, n_e, chunk_size)]
    jobs = [
        (r, lefts, rights, widths, is_interior, k, rule, far_bounds, space.far_index, far_tail)
        for r in ranges
    ]
    if threads == 1:
        results = [_chunk_worker(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_chunk_worker, jobs))

    mats = {key: np.zeros((n, n)) for key in ("P", "Q", "QL", "N")}
    for sink in results:
        for key, (ii, jj, vv) in sink.items():
            if ii:
                np.add.at(mats[key], (np.array(ii), np.array(jj)), np.array(vv))

    M = np.zeros((n, n))
    mvec = np.zeros(n)
    for e1 in np.nonzero(is_interior)[0]:
        w = widths[e1]
        d0, d1 = e1, e1 + 1
        M[d0, d0] += w / 3.0
        M[d1, d1] += w / 3.0
        M[d0, d1] += w / 6.0
        M[d1, d0] += w / 6.0
        mvec[d0] += w / 2.0
        mvec[d1] += w / 2.0

    a, b = mesh.domain.a, mesh.domain.b
    wf = make_weight("nu_tilde", k, ball=(a, b))
    kink_radii = _weight_kink_radii(k)
    tilde_breaks = sorted({c + s * r for c in (a, b) for s in (-1.0, 1.0) for r in kink_radii})
    far_tilde = 0.0
    if mesh.far_field:
        vmin, vmax = far_bounds
        tail_breaks = {vmax - r for r in kink_radii} | {vmin + r for r in kink_radii}
        ys, ws = _gl_nodes_with_breaks(a, b, 32, tail_breaks)
        tails = [one_wedge_tail(k, vmax - y) + one_wedge_tail(k, y - vmin) for y in ys]
        far_tilde = float(np.dot(ws, tails))
    M_tilde = complement_mass(
        space, lambda xs: weight_eval(wf, xs), far_tilde, rule.order, tilde_breaks
    )
    M_c = complement_mass(space, lambda xs: np.ones_like(xs), 0.0, 2)

    meta = {
        "kernel": k.id_string(),
        "rule": {
            "order": rule.order,
            "near_diagonal_strategy": rule.near_diagonal_strategy,
            "target_rel_tol": rule.target_rel_tol,
        },
        "truncation_radius": mesh.truncation_radius,
        "far_field": mesh.far_field,
        "n_dofs": n,
        "h": mesh.h,
        "threads": threads,
    }
    return AssembledSystem(
        space=space,
        kernel=k,
        P=mats["P"],
        Q=mats["Q"],
        Q_L=mats["QL"],
        N_op=mats["N"],
        M=M,
        M_tilde=M_tilde,
        M_c=M_c,
        mvec=mvec,
        meta=meta,
    )


def assemble_N(
    space: DiscreteSpace, kernel: KernelSpec, rule: QuadRule = ASSEMBLY_RULE
) -> np.ndarray:
    """Gram matrix of the complement-side operator pairing (rows are test dofs
    weighted on Omega^c, columns arbitrary trial dofs)."""
    return assemble(space, kernel, rule).N_op


def _gl_nodes_with_breaks(lo: float, hi: float, order: int, breakpoints=()):
    """Gauss-Legendre nodes and weights on [lo, hi] split at interior breakpoints
    (weights with curvature jumps integrate at full order on each smooth piece)."""
    edges = [lo] + sorted(p for p in breakpoints if lo < p < hi) + [hi]
    nodes, wts = _leggauss(max(order, 2))
    xs, ws = [], []
    for p_lo, p_hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (p_hi - p_lo)
        xs.append(0.5 * (p_lo + p_hi) + half * nodes)
        ws.append(half * wts)
    return np.concatenate(xs), np.concatenate(ws)


def complement_mass(
    space: DiscreteSpace, weight_fn, far_mass: float = 0.0, order: int = 24, breakpoints=()
):
    """Matrix of integral_{Omega^c} w(x) phi_i phi_j dx for a weight function.

    Collar elements are integrated by Gauss-Legendre of the given order, split
    at any given breakpoints of the weight; the far dof receives far_mass on
    the diagonal (the integral of w over the far region, 0 when the weight or
    the mesh has no far part).
    """
    mesh = space.mesh
    n = space.n_dofs
    out = np.zeros((n, n))
    for e1, el in enumerate(mesh.elements):
        if el.kind != "collar":
            continue
        xs, ws = _gl_nodes_with_breaks(el.left, el.right, order, breakpoints)
        wv = np.asarray(weight_fn(xs), dtype=float)
        phi = np.stack([(el.right - xs) / el.width, (xs - el.left) / el.width])
        dofs = (e1, e1 + 1)
        for li in range(2):
            for lj in range(2):
                out[dofs[li], dofs[lj]] += float(np.sum(ws * wv * phi[li] * phi[lj]))
    if space.far_index is not None and far_mass != 0.0:
        out[space.far_index, space.far_index] = far_mass
    return out


def _weight_tail_right(c: float, alpha: float) -> float:
    """integral_c^inf (1 + |x|)^(-1-alpha) dx."""
    if c >= 0.0:
        return (1.0 + c) ** (-alpha) / alpha
    return (2.0 - (1.0 - c) ** (-alpha)) / alpha


def assemble_trace_DK(
    space: DiscreteSpace,
    alpha: float,
    kernel: KernelSpec | None = None,
    order: int = 10,
) -> np.ndarray:
    """Gram matrix of the explicit complement trace norm on complement dofs.

    The norm squares a weighted L2 part with weight (1 + |x|)^(-1-alpha) and
    a seminorm with kernel (|x - y| + dist(x) + dist(y))^(-1-alpha), both over
    the truncated complement plus the analytic far tails.  Trace functions
    vanish at the boundary from outside (interface hats are not trace dofs).
    Returned in the ordering of space.complement_idx.
    """
    if kernel is not None and kernel.family != "fractional":
        raise NonlocalError(
            "unsupported-family",
            f"trace norm is defined for fractional kernels, got {kernel.family}",
        )
    if not (0.0 < alpha < 2.0):
        raise NonlocalError("invalid-parameter", f"alpha={alpha} must be in (0, 2)")
    mesh = space.mesh
    a, b = mesh.domain.a, mesh.domain.b
    cidx = space.complement_idx
    pos = {int(d): i for i, d in enumerate(cidx)}
    nc = len(cidx)
    T = np.zeros((nc, nc))
    far_pos = pos.get(space.far_index) if space.far_index is not None else None
    vmin, vmax = mesh.vertices[0], mesh.vertices[-1]

    nodes, wts = _leggauss(order)
    collar = [(e1, el) for e1, el in enumerate(mesh.elements) if el.kind == "collar"]

    def basis(el, e1, xs):
        """Rows: trace dofs of the element with their hat values at xs."""
        rows = []
        for d, phi in ((e1, (el.right - xs) / el.width), (e1 + 1, (xs - el.left) / el.width)):
            if d in pos:
                rows.append((pos[d], phi))
        return rows

    # weighted L2 part on the collar and the far tails
    for e1, el in collar:
        half = 0.5 * el.width
        xs = el.midpoint + half * nodes
        ws = half * wts * (1.0 + np.abs(xs)) ** (-1.0 - alpha)
        rows = basis(el, e1, xs)
        for i, phi_i in rows:
            for j, phi_j in rows:
                T[i, j] += float(np.sum(ws * phi_i * phi_j))
    if far_pos is not None:
        T[far_pos, far_pos] += _weight_tail_right(vmax, alpha) + _weight_tail_right(-vmin, alpha)

    # seminorm: collar x collar
    dist = lambda xs: np.minimum(np.abs(xs - a), np.abs(xs - b))
    for ia, (e1, el1) in enumerate(collar):
        h1 = 0.5 * el1.width
        xs = el1.midpoint + h1 * nodes
        wx = h1 * wts
        dx = dist(xs)
        rows_x = basis(el1, e1, xs)
        for e2, el2 in collar[ia:]:
            h2 = 0.5 * el2.width
            ys = el2.midpoint + h2 * nodes
            wy = h2 * wts
            dy = dist(ys)
            omega = (np.abs(xs[:, None] - ys[None, :]) + dx[:, None] + dy[None, :]) ** (
                -1.0 - alpha
            )
            rows_y = basis(el2, e2, ys)
            fac = 1.0 if el1 is el2 else 2.0
            row_int = omega @ wy
            col_int = wx @ omega
            for i, phi_i in rows_x:
                for j, phi_j in rows_x:
                    T[i, j] += fac * float(np.sum(wx * phi_i * phi_j * row_int))
            for i, phi_i in rows_y:
                for j, phi_j in rows_y:
                    T[i, j] += fac * float(np.sum(wy * phi_i * phi_j * col_int))
            cross = (wx[:, None] * omega) * wy[None, :]
            for i, phi_i in rows_x:
                for j, phi_j in rows_y:
                    v = fac * float(phi_i @ cross @ phi_j)
                    T[i, j] -= v
                    T[j, i] -= v

    # seminorm: collar x far (both orders), far x far vanishes for constants
    if far_pos is not None:
        for e1, el in collar:
            half = 0.5 * el.width
            xs = el.midpoint + half * nodes
            ws = half * wts
            dx = dist(xs)
            tails = (2.0 * vmax - xs - b + dx) ** (-alpha) / (2.0 * alpha) + (
                xs + dx + a - 2.0 * vmin
            ) ** (-alpha) / (2.0 * alpha)
            rows = basis(el, e1, xs)
            for i, phi_i in rows:
                load = 2.0 * float(np.sum(ws * phi_i * tails))
                for j, phi_j in rows:
                    T[i, j] += 2.0 * float(np.sum(ws * phi_i * phi_j * tails))
                T[i, far_pos] -= load
                T[far_pos, i] -= load
            T[far_pos, far_pos] += 2.0 * float(np.sum(ws * tails))
    return T


def interpolate(space: DiscreteSpace, fn, far_value: float | None = None) -> np.ndarray:
    """Nodal interpolation onto the space; the far dof takes far_value or the
    average of fn at the two outermost vertices."""
    v = space.mesh.vertices
    out = np.zeros(space.n_dofs)
    out[: len(v)] = [float(fn(x)) for x in v]
    if space.far_index is not None:
        if far_value is None:
            far_value = 0.5 * (float(fn(v[0])) + float(fn(v[-1])))
        out[space.far_index] = far_value
    return out


def mean_over_omega(space: DiscreteSpace, coeffs: np.ndarray) -> float:
    """Mean of the discrete function over Omega (exact for hats)."""
    lefts, rights, widths, is_interior = _element_table(space.mesh)
    total = 0.0
    for e1 in np.nonzero(is_interior)[0]:
        total += 0.5 * widths[e1] * (coeffs[e1] + coeffs[e1 + 1])
    return total / space.mesh.domain.measure


def l2_omega_error(space: DiscreteSpace, coeffs: np.ndarray, ref=None, order: int = 8) -> float:
    """L2(Omega) norm of the discrete function minus an optional reference."""
    nodes, wts = _leggauss(order)
    total = 0.0
    for e1, el in enumerate(space.mesh.elements):
        if el.kind != "interior":
            continue
        half = 0.5 * el.width
        xs = el.midpoint + half * nodes
        uh = coeffs[e1] * (el.right - xs) / el.width + coeffs[e1 + 1] * (xs - el.left) / el.width
        if ref is not None:
            uh = uh - np.array([float(ref(x)) for x in xs])
        total += half * float(np.sum(wts * uh**2))
    return math.sqrt(total)


def export_matrix_text(path, mat: np.ndarray) -> None:
    """Write nonzero entries as 'row col value' with 17 significant digits."""
    mat = np.asarray(mat)
    with open(path, "w") as fh:
        for i, j in zip(*np.nonzero(mat)):
            fh.write(f"{i} {j} {mat[i, j]:.17g}\n")
