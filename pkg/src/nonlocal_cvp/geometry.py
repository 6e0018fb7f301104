"""Interval domains, shrunk regions, collars, and 1D meshes.

The mesh covers Omega = (a, b) with uniform interior elements and the
truncated complement (a - R, a) u (b, b + R) with a collar of elements graded
toward the boundary (smallest next to a and b, growing geometrically outward).
Everything beyond the truncation radius is lumped into a single far-field
degree of freedom carrying the exact kernel tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._errors import NonlocalError

__all__ = [
    "DomainSpec",
    "Element",
    "DomainMesh",
    "shrink",
    "collar",
    "build_mesh",
    "boundary_distance",
]

GRADING_RATIO = 0.7  # collar widths shrink by this factor toward the boundary
MIN_WIDTH_FRACTION = 1.0 / 32.0  # finest collar element relative to interior h


@dataclass(frozen=True)
class DomainSpec:
    """Bounded open interval (a, b)."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise NonlocalError("invalid-domain", f"need finite a < b, got ({self.a},{self.b})")

    @property
    def measure(self) -> float:
        return self.b - self.a

    @property
    def diameter(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Element:
    """Mesh cell [left, right] tagged interior (inside Omega) or collar."""

    left: float
    right: float
    kind: str  # "interior" or "collar"

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.left + self.right)


def shrink(domain: DomainSpec, delta: float):
    """Omega_delta = {x in Omega : dist(x, boundary) > delta}; (None, True) if empty."""
    if delta < 0.0:
        raise NonlocalError("invalid-parameter", f"delta={delta} must be nonnegative")
    lo, hi = domain.a + delta, domain.b - delta
    if lo >= hi:
        return None, True
    return DomainSpec(lo, hi), False


def collar(domain: DomainSpec, delta: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """The complement collar of width delta: (a-delta, a) and (b, b+delta)."""
    if delta <= 0.0:
        raise NonlocalError("invalid-parameter", f"delta={delta} must be positive")
    return (domain.a - delta, domain.a), (domain.b, domain.b + delta)


def boundary_distance(domain: DomainSpec, x) -> np.ndarray | float:
    """Distance to the topological boundary {a, b}."""
    xs = np.asarray(x, dtype=float)
    out = np.minimum(np.abs(xs - domain.a), np.abs(xs - domain.b))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DomainMesh:
    """Piecewise-linear mesh over Omega and its truncated complement.

    vertices are strictly increasing; elements partition
    (a - R_trunc, b + R_trunc); far_field marks whether an extra lumped
    degree of freedom represents {|dist| > R_trunc}.
    """

    domain: DomainSpec
    vertices: np.ndarray
    elements: tuple[Element, ...]
    h: float
    truncation_radius: float
    far_field: bool
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def boundary_distance(self) -> np.ndarray:
        """Per-vertex distance to partial-Omega = {a, b}."""
        return np.minimum(
            np.abs(self.vertices - self.domain.a), np.abs(self.vertices - self.domain.b)
        )

    def interior_elements(self):
        return [e for e in self.elements if e.kind == "interior"]

    def collar_elements(self):
        return [e for e in self.elements if e.kind == "collar"]


def _graded_offsets(h: float, R: float) -> np.ndarray:
    """Offsets 0 = t0 < t1 < ... < tm = R from the boundary outward with
    geometrically growing widths (ratio 1/GRADING_RATIO), the first one at
    most h * MIN_WIDTH_FRACTION after rescaling the column to end at R."""
    w0 = h * MIN_WIDTH_FRACTION
    q = 1.0 / GRADING_RATIO
    if R <= w0:
        return np.array([0.0, R])
    # smallest m with w0 (q^m - 1)/(q - 1) >= R, then rescale widths to sum R
    m = max(1, math.ceil(math.log1p(R * (q - 1.0) / w0) / math.log(q)))
    widths = w0 * q ** np.arange(m)
    widths *= R / widths.sum()
    return np.concatenate([[0.0], np.cumsum(widths)])


def build_mesh(
    domain: DomainSpec,
    h: float,
    truncation_radius: float | None = None,
    support_radius: float = math.inf,
) -> DomainMesh:
    """Mesh Omega uniformly at width ~h and grade the collar toward the boundary.

    For a compactly supported kernel pass its support radius: the collar then
    covers exactly the interaction range with uniform elements and no
    far-field dof is created (the kernel tail is identically zero there).
    """
    if h <= 0.0:
        raise NonlocalError("invalid-parameter", f"h={h} must be positive")
    a, b = domain.a, domain.b
    n = max(1, round(domain.measure / h))
    interior_nodes = np.linspace(a, b, n + 1)

    if support_radius != math.inf:
        # compact support: the collar is exactly the horizon, R_trunc is ignored
        R = support_radius
        m = max(1, math.ceil(R / h))
        left_nodes = a - np.linspace(R, 0.0, m + 1)
        right_nodes = b + np.linspace(0.0, R, m + 1)
        far = False
    else:
        if truncation_radius is None:
            raise NonlocalError(
                "invalid-parameter", "truncation_radius required for a fully supported kernel"
            )
        R = truncation_radius
        if R <= domain.diameter:
            raise NonlocalError(
                "invalid-parameter",
                f"truncation_radius={R} must exceed diam(Omega)={domain.diameter}",
            )
        offsets = _graded_offsets(h, R)
        left_nodes = a - offsets[::-1]
        right_nodes = b + offsets
        far = True

    vertices = np.unique(np.concatenate([left_nodes, interior_nodes, right_nodes]))
    elements = []
    tol = 1e-12 * max(1.0, abs(a), abs(b), R)
    for lo, hi in zip(vertices[:-1], vertices[1:]):
        mid = 0.5 * (lo + hi)
        kind = "interior" if a - tol < mid < b + tol else "collar"
        elements.append(Element(float(lo), float(hi), kind))

    return DomainMesh(
        domain=domain,
        vertices=vertices,
        elements=tuple(elements),
        h=domain.measure / n,
        truncation_radius=R,
        far_field=far,
        meta={"n_interior": n, "requested_h": h},
    )
