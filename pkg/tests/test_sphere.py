import cmath
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hurwitz.sphere import (
    INF,
    Mobius,
    TriangulationError,
    delaunay_sphere,
    dual_graph,
    from_sphere,
    generator_paths,
    refine,
    to_sphere,
)


def empty_circumcircles(t):
    """Brute force: every other vertex lies on the origin side of each face plane."""
    V = t.vertices
    for a, b, c in t.triangles:
        for j in range(len(V)):
            if j in (a, b, c):
                continue
            if np.linalg.det(np.array([V[b] - V[a], V[c] - V[a], V[j] - V[a]])) > 1e-12:
                return False
    return True


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_chart_roundtrip(z):
    w = from_sphere(to_sphere(z))
    assert abs(w - z) <= 1e-9 * max(1, abs(z) ** 2)


def test_infinity_is_south_pole():
    assert np.allclose(to_sphere(INF), [0, 0, -1])
    assert from_sphere([0, 0, -1]) == INF
    assert np.allclose(to_sphere(0), [0, 0, 1])


def test_three_points_gets_augmented():
    t = delaunay_sphere([INF, 0, 1])
    assert len(t.vertices) >= 4 and sum(t.auxiliary) == len(t.vertices) - 3
    assert t.euler_characteristic() == 2
    assert t.is_delaunay() and empty_circumcircles(t)


def test_tetrahedron():
    V = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    t = delaunay_sphere([from_sphere(v) for v in V], augment=False)
    assert len(t.triangles) == 4 and t.euler_characteristic() == 2
    assert empty_circumcircles(t)


def test_random_point_sets():
    rng = random.Random(9)
    for _ in range(100):
        n = rng.randint(4, 25)
        pts = [complex(rng.gauss(0, 2), rng.gauss(0, 2)) for _ in range(n)]
        if rng.random() < 0.3:
            pts[0] = INF
        t = delaunay_sphere(pts)
        assert empty_circumcircles(t)
        assert t.euler_characteristic() == 2
        assert len(t.triangles) == 2 * len(t.vertices) - 4


def test_collinear_points_need_augmenting():
    pts = [0, 1, 2, 3]  # on one circle through infinity
    with pytest.raises(TriangulationError):
        delaunay_sphere(pts, augment=False)
    assert delaunay_sphere(pts).euler_characteristic() == 2


def test_refine_leaves_good_triangulations():
    t = delaunay_sphere([INF, 0, 1, 1j, -1, -1j])
    assert refine(t) is t


def test_refine_sliver():
    pts = [INF, 0, 1, 2, 1 + 1e-4j, -1 + 0.5j]
    t = delaunay_sphere(pts)
    ratio = max(t.circumradii() / t.shortest_sides())
    assert ratio > 5000
    r = refine(t, ratio=1000)
    assert len(r.vertices) > len(t.vertices)
    assert empty_circumcircles(r)
    assert max(r.circumradii() / r.shortest_sides()) <= 1000


def test_mobius_three_points():
    m = Mobius.three_points(1j, 2, INF)
    assert abs(m(1j)) < 1e-14 and abs(m(2) - 1) < 1e-14 and m(INF) == INF
    inv = m.inverse()
    for z in (0.3, -2 + 1j, 5j):
        assert abs(inv(m(z)) - z) < 1e-12


def _dual_vertex_sets(Q):
    t = delaunay_sphere(Q)
    g = dual_graph(t, Q)
    return t, g


@pytest.mark.parametrize("Q", [[INF, 0, 1], [INF, 0], [INF, 0, 1, -4], [1, -1, 1j, -1j, 2 + 3j]])
def test_generator_paths_are_closed_lassos(Q):
    t, g = _dual_vertex_sets(Q)
    loops, order = generator_paths(g, list(range(len(Q))))
    assert sorted(order) == list(range(len(Q)))
    for loop in loops:
        assert loop[0] == loop[-1] == g.basepoint
        for u, v in zip(loop, loop[1:]):
            assert u == v or (u, v) in g.edges


def test_dual_edges_cross_their_delaunay_edges():
    t, g = _dual_vertex_sets([INF, 0, 1, 2j])
    for (u, v), e in g.edges.items():
        assert g.edges[(v, u)].left == e.right
        a, b = e.point(0.0), e.point(1.0)
        assert cmath.isclose(complex(a), complex(g.centers[u]), abs_tol=1e-9) or g.centers[u] == INF
        assert cmath.isclose(complex(b), complex(g.centers[v]), abs_tol=1e-9) or g.centers[v] == INF


def test_antipodal_pair_loops():
    # k = 2: the two lassos cross the same cut in opposite senses
    t, g = _dual_vertex_sets([INF, 0])
    loops, order = generator_paths(g, [0, 1])
    assert len(loops) == 2
