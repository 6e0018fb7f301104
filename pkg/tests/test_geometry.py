"""Domain specs, graded collar meshes, and distance helpers."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_cvp import (
    DomainSpec,
    NonlocalError,
    boundary_distance,
    build_mesh,
    build_space,
    collar,
    shrink,
)

UNIT = DomainSpec(0.0, 1.0)


def test_domain_rejects_degenerate_interval():
    with pytest.raises(NonlocalError):
        DomainSpec(1.0, 1.0)
    with pytest.raises(NonlocalError):
        DomainSpec(2.0, 0.0)


def test_shrink_and_collar():
    inner, empty = shrink(UNIT, 0.25)
    assert not empty
    assert (inner.a, inner.b) == (0.25, 0.75)
    assert shrink(UNIT, 0.6) == (None, True)
    left, right = collar(UNIT, 0.25)
    assert left == (-0.25, 0.0)
    assert right == (1.0, 1.25)


def test_boundary_distance_signs_and_zeros():
    assert boundary_distance(UNIT, 0.0) == 0.0
    assert boundary_distance(UNIT, 1.0) == 0.0
    assert boundary_distance(UNIT, 0.5) == pytest.approx(0.5)
    assert boundary_distance(UNIT, -0.3) == pytest.approx(0.3)
    assert boundary_distance(UNIT, 1.7) == pytest.approx(0.7)


def test_build_mesh_truncation_covers_collar_exactly():
    mesh = build_mesh(UNIT, 0.125, truncation_radius=4.0)
    v = mesh.vertices
    assert v[0] == pytest.approx(-4.0)
    assert v[-1] == pytest.approx(5.0)
    assert np.all(np.diff(v) > 0.0)
    assert mesh.far_field is True
    assert sorted({e.kind for e in mesh.elements}) == ["collar", "interior"]


def test_build_mesh_collar_widths_grade_outward():
    """Collar elements grow geometrically away from the boundary."""
    mesh = build_mesh(UNIT, 0.125, truncation_radius=4.0)
    v = mesh.vertices
    left = np.diff(v[v <= 0.0])[::-1]  # widths walking outward from x = 0
    assert np.all(np.diff(left) >= -1e-15)
    assert left[0] < 0.125  # finest layer hugs the interface


def test_build_mesh_support_radius_branch_has_no_far_dof():
    mesh = build_mesh(UNIT, 0.125, support_radius=0.5)
    v = mesh.vertices
    assert v[0] == pytest.approx(-0.5)
    assert v[-1] == pytest.approx(1.5)
    assert mesh.far_field is False


def test_build_mesh_rejects_small_truncation():
    # the truncation radius must exceed the domain diameter
    with pytest.raises(NonlocalError):
        build_mesh(UNIT, 0.125, truncation_radius=0.5)


def test_build_mesh_rejects_bad_h():
    with pytest.raises(NonlocalError):
        build_mesh(UNIT, 0.0, truncation_radius=4.0)
    with pytest.raises(NonlocalError):
        build_mesh(UNIT, -0.1, truncation_radius=4.0)


@given(
    h=st.floats(min_value=0.05, max_value=0.5),
    r=st.floats(min_value=1.5, max_value=10.0),
)
def test_build_mesh_vertices_sorted_unique(h, r):
    mesh = build_mesh(UNIT, h, truncation_radius=r)
    v = mesh.vertices
    assert np.all(np.diff(v) > 0.0)


def test_space_partitions_dofs():
    mesh = build_mesh(UNIT, 0.125, truncation_radius=4.0)
    space = build_space(mesh)
    idx = np.concatenate(
        [space.interior_idx, space.interface_idx, space.complement_idx]
    )
    assert sorted(idx.tolist()) == list(range(space.n_dofs))
    assert len(space.interface_idx) == 2
    assert space.far_index is not None
    assert space.far_index in space.complement_idx
    free = space.free_idx
    assert set(space.interface_idx).issubset(set(free))


def test_space_without_far_dof():
    mesh = build_mesh(UNIT, 0.125, support_radius=0.5)
    space = build_space(mesh)
    assert space.far_index is None
    assert space.n_dofs == len(mesh.vertices)
