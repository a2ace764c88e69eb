import numpy as np
import pytest

from lagstab.exceptions import InvalidArgument
from lagstab.mesh import (BOTTOM, LEFT, RIGHT, TOP, build_unit_square_mesh, extract_trace_mesh,
                          write_mesh)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_counts(n):
    m = build_unit_square_mesh(n)
    assert m.nodes.shape == ((n + 1) ** 2, 2)
    assert m.triangles.shape == (2 * n * n, 3)
    assert len(m.boundary_edges) == 4 * n
    # Euler: V - E + F = 1 for a disc
    assert len(m.nodes) - len(m.edges) + len(m.triangles) == 1
    assert len(m.interior_faces) == len(m.edges) - 4 * n


def test_areas_positive_and_sum_to_one():
    m = build_unit_square_mesh(6)
    assert np.all(m.areas > 0)
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(m.areas, 1 / 72)


def test_diagonal_runs_lower_left_to_upper_right():
    m = build_unit_square_mesh(1)
    assert sorted(map(tuple, m.interior_faces.tolist())) == [(0, 3)]


def test_boundary_normals_point_outward():
    m = build_unit_square_mesh(4)
    mid = 0.5 * (m.nodes[m.boundary_edges[:, 0]] + m.nodes[m.boundary_edges[:, 1]])
    # moving along the normal leaves the square
    out = mid + 1e-3 * m.boundary_normals
    assert np.all(np.any((out < 0) | (out > 1), axis=1))
    expected = {BOTTOM: (0, -1), TOP: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0)}
    for tag, nrm in zip(m.boundary_tags, m.boundary_normals):
        assert tuple(nrm) == expected[tag]


def test_boundary_edges_have_domain_on_left():
    m = build_unit_square_mesh(3)
    d = m.nodes[m.boundary_edges[:, 1]] - m.nodes[m.boundary_edges[:, 0]]
    # outward normal is the tangent rotated clockwise
    rot = np.column_stack([d[:, 1], -d[:, 0]])
    assert np.allclose(rot / np.linalg.norm(rot, axis=1)[:, None], m.boundary_normals)


def test_face_tris_share_the_face():
    m = build_unit_square_mesh(3)
    for (a, b), (t1, t2) in zip(m.interior_faces, m.face_tris):
        assert {a, b} <= set(m.triangles[t1]) and {a, b} <= set(m.triangles[t2])
        assert t1 != t2


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_bad_n(bad):
    with pytest.raises(InvalidArgument):
        build_unit_square_mesh(bad)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_trace_mesh(r):
    m = build_unit_square_mesh(4)
    t = extract_trace_mesh(m, (BOTTOM, TOP), r)
    assert t.n_segments == 2 * 4 * r
    assert np.allclose(t.h_seg, 0.25 / r)
    assert np.allclose(t.h_parent, 0.25)
    assert t.h_seg.sum() == pytest.approx(2.0)
    # interior nodes exclude the component endpoints
    assert len(t.interior_nodes) == 2 * (4 * r - 1)
    assert np.all(np.diff(t.arc[t.seg_component == 0, 0]) > 0)


def test_trace_locate_roundtrip():
    m = build_unit_square_mesh(3)
    t = extract_trace_mesh(m, (BOTTOM,), 2)
    seg, loc = t.locate(np.array([t.seg_edge[0]]), np.array([0.75]))
    assert t.seg_sub[seg[0]] == 1 and loc[0] == pytest.approx(0.5)


def test_trace_rejects_unknown_side():
    with pytest.raises(InvalidArgument):
        extract_trace_mesh(build_unit_square_mesh(2), ("north",))
    with pytest.raises(InvalidArgument):
        extract_trace_mesh(build_unit_square_mesh(2), (BOTTOM,), 0)


def test_write_mesh(tmp_path):
    m = build_unit_square_mesh(2)
    p = tmp_path / "m.txt"
    write_mesh(m, p)
    lines = p.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 9
    assert sum(l.startswith("t ") for l in lines) == 8
    assert sum(l.startswith("e ") for l in lines) == 8
