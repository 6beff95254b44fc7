"""Points of P^1(C) on the unit sphere, spherical Delaunay triangulations
and their Voronoi duals.

Chart: z = (X + iY)/(1 + Z), so z = 0 is the north pole and z = inf the
south pole.  The chart preserves orientation when the sphere is seen from
outside, and a triangle (a, b, c) is counterclockwise iff det(a, b, c) > 0.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull

INF = "inf"

# generic auxiliary points, used in order when the input needs augmenting
AUX_POINTS = [
    0.31 + 1.73j,
    -1.37 - 0.58j,
    2.11 - 0.93j,
    -0.42 + 0.27j,
    -3.3 + 2.2j,
    0.57 - 2.6j,
]


class TriangulationError(ValueError):
    pass


def to_sphere(z) -> np.ndarray:
    if z == INF or z is None:
        return np.array([0.0, 0.0, -1.0])
    z = complex(z)
    r2 = abs(z) ** 2
    if not np.isfinite(r2):
        return np.array([0.0, 0.0, -1.0])
    s = 1.0 + r2
    return np.array([2 * z.real / s, 2 * z.imag / s, (1 - r2) / s])


def from_sphere(v: Sequence[float]):
    X, Y, Z = (float(t) for t in v)
    if 1.0 + Z < 1e-15:
        return INF
    return complex(X, Y) / (1.0 + Z)


def homogeneous(z) -> tuple[complex, complex]:
    if z == INF:
        return (1.0 + 0j, 0j)
    return (complex(z), 1.0 + 0j)


def chordal(a, b) -> float:
    return float(np.linalg.norm(to_sphere(a) - to_sphere(b)))


def angle(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


def _det2(a, b):
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True)
class Mobius:
    """(z0 : z1) -> (a z0 + b z1 : c z0 + d z1)."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def three_points(cls, A, B, C) -> "Mobius":
        """The map with A -> 0, B -> 1, C -> inf.

        mu(Z) = det(Z,A) det(B,C) / (det(Z,C) det(B,A)) in homogeneous
        coordinates, which handles inf among A, B, C."""
        A, B, C = homogeneous(A), homogeneous(B), homogeneous(C)
        dBC, dBA = _det2(B, C), _det2(B, A)
        return cls(A[1] * dBC, -A[0] * dBC, C[1] * dBA, -C[0] * dBA)

    def apply_h(self, z0, z1):
        return (self.a * z0 + self.b * z1, self.c * z0 + self.d * z1)

    def __call__(self, z):
        n, d = self.apply_h(*homogeneous(z))
        if abs(d) <= 1e-300 * max(1.0, abs(n)):
            return INF
        return n / d

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)


@dataclass
class SphereTriangulation:
    vertices: np.ndarray  # (n, 3) unit vectors
    points: list  # chart coordinates (complex or INF)
    auxiliary: list[bool]
    triangles: np.ndarray  # (m, 3) counterclockwise

    # -- derived data -------------------------------------------------

    def circumcenters(self) -> np.ndarray:
        V = self.vertices
        a, b, c = V[self.triangles[:, 0]], V[self.triangles[:, 1]], V[self.triangles[:, 2]]
        n = np.cross(b - a, c - a)
        return n / np.linalg.norm(n, axis=1)[:, None]

    def circumradii(self) -> np.ndarray:
        cc = self.circumcenters()
        a = self.vertices[self.triangles[:, 0]]
        return np.array([angle(x, y) for x, y in zip(cc, a)])

    def shortest_sides(self) -> np.ndarray:
        V = self.vertices
        out = []
        for t in self.triangles:
            out.append(min(angle(V[t[i]], V[t[(i + 1) % 3]]) for i in range(3)))
        return np.array(out)

    def edges(self) -> set[tuple[int, int]]:
        out = set()
        for t in self.triangles:
            for i in range(3):
                a, b = int(t[i]), int(t[(i + 1) % 3])
                out.add((min(a, b), max(a, b)))
        return out

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges()) + len(self.triangles)

    def is_delaunay(self, tol: float = 1e-12) -> bool:
        """Empty circumcircle: no vertex lies strictly beyond any face plane."""
        V = self.vertices
        for t, n in zip(self.triangles, self.circumcenters()):
            h = float(np.dot(n, V[t[0]]))
            if np.any(V @ n > h + tol):
                return False
        return True

    def opposite_angle_sums(self) -> list[float]:
        """Sum of the two angles opposite each interior edge, in the chart-free
        spherical sense (angles measured on the sphere)."""
        V = self.vertices
        where: dict[tuple[int, int], list[int]] = {}
        for ti, t in enumerate(self.triangles):
            for i in range(3):
                a, b = int(t[i]), int(t[(i + 1) % 3])
                where.setdefault((min(a, b), max(a, b)), []).append(int(t[(i + 2) % 3]))
        out = []
        for (a, b), opp in where.items():
            s = 0.0
            for c in opp:
                s += _sph_angle(V[c], V[a], V[b])
            out.append(s)
        return out


def _sph_angle(at, u, v) -> float:
    tu = u - np.dot(u, at) * at
    tv = v - np.dot(v, at) * at
    return angle(tu, tv)


def _hull(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hull = ConvexHull(V)
    tris = []
    for s in hull.simplices:
        a, b, c = V[s[0]], V[s[1]], V[s[2]]
        if np.linalg.det(np.array([a, b, c])) < 0:
            s = [s[0], s[2], s[1]]
        tris.append([int(x) for x in s])
    return np.array(tris, dtype=int), hull.equations


def delaunay_sphere(points: Sequence, *, augment: bool = True, aux: Sequence | None = None) -> SphereTriangulation:
    """Delaunay triangulation of points on P^1(C).

    On the sphere this is the convex hull of the points.  When fewer than
    four points are given or when they lie on one circle, auxiliary vertices
    are appended from a fixed generic list; when they all lie in one
    hemisphere, a vertex facing away from them is added.  Auxiliary vertices
    carry no generator loop."""
    pts = list(points)
    flags = [False] * len(pts)
    extra = list(aux) if aux is not None else list(AUX_POINTS)
    if aux is not None:
        pts += extra
        flags += [True] * len(extra)
        extra = []
    opposite = 8
    while True:
        V = np.array([to_sphere(z) for z in pts])
        ok = len(pts) >= 4 and np.linalg.matrix_rank(V[1:] - V[0], tol=1e-9) == 3
        lopsided = False
        if ok:
            try:
                tris, eqs = _hull(V)
            except Exception:
                ok = False
            else:
                lopsided = not np.all(eqs[:, 3] < -1e-9)
                ok = not lopsided and len(tris) == 2 * len(pts) - 4
        if ok:
            return SphereTriangulation(V, pts, flags, tris)
        if not augment:
            raise TriangulationError("cannot triangulate: too few or degenerate points")
        c = V.mean(axis=0)
        if lopsided and opposite and np.linalg.norm(c) > 1e-9:
            # all points in one hemisphere: add a vertex facing away from them
            w = -c / np.linalg.norm(c) + np.array([0.071, -0.113, 0.053])
            pts.append(from_sphere(w / np.linalg.norm(w)))
            opposite -= 1
        elif extra:
            pts.append(extra.pop(0))
        else:
            raise TriangulationError("cannot triangulate: too few or degenerate points")
        flags.append(True)


def refine(t: SphereTriangulation, ratio: float = 1000.0, max_insertions: int = 1000) -> SphereTriangulation:
    """Insert circumcentres of triangles whose circumradius/shortest side exceeds ``ratio``."""
    for _ in range(max_insertions):
        r = t.circumradii() / np.maximum(t.shortest_sides(), 1e-300)
        bad = np.flatnonzero(r > ratio)
        if len(bad) == 0:
            return t
        worst = int(bad[np.argmax(r[bad])])
        cc = t.circumcenters()[worst]
        pts = t.points + [from_sphere(cc)]
        flags = t.auxiliary + [True]
        V = np.vstack([t.vertices, cc])
        tris, _ = _hull(V)
        t = SphereTriangulation(V, pts, flags, tris)
    raise TriangulationError("refinement did not converge")


# ---------------------------------------------------------------------------
# Voronoi dual
# ---------------------------------------------------------------------------


@dataclass
class DualEdge:
    """Voronoi edge from dual vertex ``u`` to ``v`` (triangle indices),
    crossing Delaunay edge (``left``, ``right``): cell ``left`` lies to the
    left when walking from u to v."""

    u: int
    v: int
    left: int
    right: int
    mobius: Mobius  # mobius(mu^-1([0,1])) parametrises the arc: u -> 0, v -> 1

    def point(self, t: float):
        return self.mobius.inverse()(t)


@dataclass
class DualGraph:
    tri: SphereTriangulation
    centers: list  # chart coordinates of the Voronoi vertices
    edges: dict[tuple[int, int], DualEdge]  # (u, v) both orientations
    rotation: list[list]  # per dual vertex: ccw list alternating ("cell", i) / ("edge", nbr)
    basepoint: int = 0

    def neighbors(self, u: int) -> list[int]:
        return [x[1] for x in self.rotation[u] if x[0] == "edge"]

    def cell_cycle(self, q: int, start: int) -> list[int]:
        """Dual vertices around cell q, counterclockwise, from ``start`` back to it."""
        out = [start]
        cur = start
        while True:
            nxt = self._ccw_next_around(q, cur)
            out.append(nxt)
            cur = nxt
            if cur == start:
                return out
            if len(out) > len(self.centers) + 2:
                raise TriangulationError("cell walk did not close")

    def _ccw_next_around(self, q: int, tri_index: int) -> int:
        # in ccw triangle (q, b, c) the next triangle around q shares edge (q, c)
        t = [int(x) for x in self.tri.triangles[tri_index]]
        i = t.index(q)
        c = t[(i + 2) % 3]
        for (u, v), e in self.edges.items():
            if u == tri_index and {e.left, e.right} == {q, c}:
                return v
        raise TriangulationError("dual adjacency broken")


def _arc_mobius(A, B):
    """Mobius with A -> 0, B -> 1 whose preimage of [0,1] is the short great arc."""
    va, vb = to_sphere(A), to_sphere(B)
    m = va + vb
    nm = np.linalg.norm(m)
    if nm < 1e-12:
        raise TriangulationError("antipodal dual edge")
    C = from_sphere(-m / nm)
    return Mobius.three_points(A, B, C)


def dual_graph(t: SphereTriangulation, Q: Sequence | None = None) -> DualGraph:
    centers_v = t.circumcenters()
    centers = [from_sphere(c) for c in centers_v]
    owner: dict[tuple[int, int], int] = {}
    for ti, tr in enumerate(t.triangles):
        for i in range(3):
            owner[(int(tr[i]), int(tr[(i + 1) % 3]))] = ti
    edges: dict[tuple[int, int], DualEdge] = {}
    rotation = []
    for ti, tr in enumerate(t.triangles):
        a, b, c = (int(x) for x in tr)
        rot = []
        for x, y in ((a, b), (b, c), (c, a)):
            nb = owner[(y, x)]
            rot += [("cell", x), ("edge", nb)]
            # walking from this circumcentre across edge x->y, cell y is on the left
            edges[(ti, nb)] = DualEdge(ti, nb, y, x, _arc_mobius(centers[ti], centers[nb]))
        rotation.append(rot)
    g = DualGraph(t, centers, edges, rotation)
    if Q is not None:
        qv = [to_sphere(q) for q in Q]
        best = max(range(len(centers_v)), key=lambda i: (min(angle(centers_v[i], v) for v in qv), -i))
        g.basepoint = best
    return g


def spanning_tree(g: DualGraph) -> dict[int, int]:
    """BFS parent map from the basepoint."""
    parent = {g.basepoint: -1}
    dq = deque([g.basepoint])
    while dq:
        u = dq.popleft()
        for v in g.neighbors(u):
            if v not in parent:
                parent[v] = u
                dq.append(v)
    return parent


def tree_path(parent: dict[int, int], v: int) -> list[int]:
    path = [v]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    return list(reversed(path))


def contour_corners(g: DualGraph, parent: dict[int, int]) -> list[tuple[int, int]]:
    """Corners (cell, dual vertex) met by a walk around the spanning tree.

    At each vertex the walk scans the rotation counterclockwise from the
    incoming edge, records the cells it passes, and leaves along the first
    tree edge it meets."""
    tree = {(u, v) for v, u in parent.items() if u >= 0} | {(v, u) for v, u in parent.items() if u >= 0}
    star = g.basepoint
    rot = g.rotation[star]
    first = next(i for i, x in enumerate(rot) if x[0] == "edge" and (star, x[1]) in tree)
    corners: list[tuple[int, int]] = []
    # corners at the basepoint before the first tree edge
    cur, came_from = star, None
    darts_left = 2 * (len(parent) - 1)
    # scanning order at the start: everything after `first`, wrapping round,
    # is handled when the walk comes back; begin by leaving along `first`
    nxt = rot[first][1]
    while True:
        came_from, cur = cur, nxt
        darts_left -= 1
        rot = g.rotation[cur]
        n = len(rot)
        i = next(k for k, x in enumerate(rot) if x == ("edge", came_from))
        j = (i + 1) % n
        while True:
            x = rot[j]
            if x[0] == "cell":
                corners.append((x[1], cur))
            elif (cur, x[1]) in tree:
                break
            j = (j + 1) % n
        nxt = rot[j][1]
        if cur == star and darts_left == 0:
            break
        if darts_left == 0:
            break
    # the final scan at the basepoint stops at `first`, closing the walk
    return corners


def generator_paths(g: DualGraph, loop_cells: Sequence[int]) -> tuple[list[list[int]], list[int]]:
    """Lassos based at the basepoint around each cell in ``loop_cells``.

    Each is the tree path to the first contour corner of the cell, the cell
    boundary counterclockwise, and the tree path back.  The lassos are
    returned in contour order together with that order; contracting the
    tree turns the cells into a disc cut by chords, and in this order the
    product of the lassos is trivial."""
    parent = spanning_tree(g)
    if len(parent) != len(g.centers):
        raise TriangulationError("dual graph is disconnected")
    corners = contour_corners(g, parent)
    # the walk starts just before leaving the basepoint, in the last corner scanned
    corners = corners[-1:] + corners[:-1]
    entry: dict[int, int] = {}
    order: list[int] = []
    for cell, v in corners:
        if cell not in entry:
            entry[cell] = v
            order.append(cell)
    out = {}
    for q in loop_cells:
        v = entry[q]
        path = tree_path(parent, v)
        cyc = g.cell_cycle(q, v)
        out[q] = path + cyc[1:] + list(reversed(path))[1:]
    ordered = [q for q in order if q in set(loop_cells)]
    return [out[q] for q in ordered], ordered
