import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncstokes.mesh import UniformMesh, build_uniform_mesh, macro_partition


def test_single_element_mesh():
    mesh = build_uniform_mesh(1)
    assert mesh.num_elements == 1
    assert mesh.num_interior_vertices == 0
    assert mesh.num_edges == 4
    assert mesh.boundary_edges.all()


def test_four_by_four_counts():
    mesh = build_uniform_mesh(4)
    assert mesh.num_elements == 16
    assert len(mesh.interior_vertex_ids) == 9
    assert mesh.num_edges == 40
    assert len(mesh.macro_elements) == 4
    # velocity x reduced pressure dimension 2 N_v^i + N_Q - 2
    assert 2 * 9 + 16 - 2 == 32


@pytest.mark.parametrize("bad", [0, -3])
def test_rejects_empty_mesh(bad):
    with pytest.raises(ValueError):
        build_uniform_mesh(bad)


def test_rejects_non_integer():
    with pytest.raises(TypeError):
        UniformMesh(2.5)


def test_arrays_are_read_only():
    mesh = build_uniform_mesh(3)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 1.0


def test_numbering_conventions():
    mesh = build_uniform_mesh(3)
    e = mesh.element_id(1, 2)
    assert e == 7
    np.testing.assert_array_equal(mesh.element_ij[e], [1, 2])
    ll, lr, ur, ul = mesh.element_vertices[e]
    np.testing.assert_allclose(mesh.vertices[ll], [1 / 3, 2 / 3])
    np.testing.assert_allclose(mesh.vertices[ur], [2 / 3, 1.0])
    assert lr == ll + 1 and ul == ll + 4
    bottom, right, top, left = mesh.element_edges[e]
    np.testing.assert_allclose(mesh.edge_midpoints[bottom], [0.5, 2 / 3])
    np.testing.assert_allclose(mesh.edge_midpoints[right], [2 / 3, 5 / 6])
    np.testing.assert_allclose(mesh.edge_midpoints[top], [0.5, 1.0])
    np.testing.assert_allclose(mesh.edge_midpoints[left], [1 / 3, 5 / 6])
    assert mesh.boundary_edges[top] and not mesh.boundary_edges[bottom]


def test_edge_neighbours():
    mesh = build_uniform_mesh(3)
    right = mesh.element_edges[mesh.element_id(0, 0), 1]
    np.testing.assert_array_equal(mesh.edge_elements[right], [0, 1])
    top = mesh.element_edges[mesh.element_id(0, 0), 2]
    np.testing.assert_array_equal(mesh.edge_elements[top], [0, 3])


def test_single_macro_for_n2():
    (macro,) = build_uniform_mesh(2).macro_elements
    assert macro.index == (1, 1)
    assert sorted(macro.children) == [0, 1, 2, 3]


def test_macro_indices_for_n4():
    macros = build_uniform_mesh(4).macro_elements
    assert {m.index for m in macros} == {(1, 1), (3, 1), (1, 3), (3, 3)}
    children = np.concatenate([m.children for m in macros])
    np.testing.assert_array_equal(np.sort(children), np.arange(16))


def test_macro_partition_rejects_odd_n():
    with pytest.raises(ValueError, match="even"):
        macro_partition(build_uniform_mesh(3))


@given(st.integers(1, 24))
def test_entity_counts(n):
    mesh = build_uniform_mesh(n)
    assert len(mesh.interior_vertex_ids) == (n - 1) ** 2
    assert len(mesh.interior_edge_ids) == 2 * n * (n - 1)
    assert mesh.boundary_edges.sum() == 4 * n
    # every interior edge is shared by exactly two elements
    assert (mesh.edge_elements[mesh.interior_edge_ids] >= 0).all()
    counts = np.bincount(mesh.element_edges.ravel(), minlength=mesh.num_edges)
    np.testing.assert_array_equal(counts, np.where(mesh.boundary_edges, 1, 2))


@given(st.integers(1, 16), st.floats(0, 1), st.floats(0, 1))
def test_locate_round_trip(n, x, y):
    mesh = build_uniform_mesh(n)
    e = mesh.locate(x, y)
    xh, yh = mesh.to_reference(e, x, y)
    assert -1 - 1e-12 <= xh <= 1 + 1e-12 and -1 - 1e-12 <= yh <= 1 + 1e-12
    xb, yb = mesh.to_physical(e, xh, yh)
    assert abs(xb - x) < 1e-14 and abs(yb - y) < 1e-14
