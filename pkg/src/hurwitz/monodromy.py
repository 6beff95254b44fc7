"""Numerical monodromy of a rational map around its branch points.

Fibres over the Voronoi vertices of a Delaunay triangulation on the branch
points are transported along the Voronoi edges, either by connect-the-dots
(bisect until the nearest-point matching is unambiguous) or by tracking the
lift through a second triangulation built on the preimage of the branch
points.  Lassos around each branch point then give the permutations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .algebra import (
    PermTuple,
    cycle_type,
    perm_conj,
    perm_identity,
    perm_inv,
    perm_mul,
    perm_product,
)
from .roots import aberth
from .sphere import (
    INF,
    Mobius,
    delaunay_sphere,
    dual_graph,
    generator_paths,
    homogeneous,
    refine,
    to_sphere,
)

log = logging.getLogger(__name__)


class MonodromyError(ArithmeticError):
    pass


class DegenerateFiberError(MonodromyError):
    pass


class PrecisionExhaustedError(MonodromyError):
    pass


# ---------------------------------------------------------------------------
# rational maps
# ---------------------------------------------------------------------------


def _mpc(x):
    if isinstance(x, dict):
        return mpmath.mpc(mpmath.mpf(str(x.get("re", 0))), mpmath.mpf(str(x.get("im", 0))))
    if isinstance(x, (list, tuple)):
        return mpmath.mpc(mpmath.mpf(str(x[0])), mpmath.mpf(str(x[1])))
    if isinstance(x, str):
        return mpmath.mpc(mpmath.mpmathify(x))
    return mpmath.mpc(x)


class RationalMap:
    """f = N/D with complex coefficients (low degree first), degree max(deg N, deg D)."""

    def __init__(self, num: Sequence, den: Sequence):
        self.num = [_mpc(c) for c in num]
        self.den = [_mpc(c) for c in den]
        while len(self.num) > 1 and self.num[-1] == 0:
            self.num.pop()
        while len(self.den) > 1 and self.den[-1] == 0:
            self.den.pop()
        self.degree = max(len(self.num), len(self.den)) - 1
        d = self.degree
        self._n = self.num + [mpmath.mpc(0)] * (d + 1 - len(self.num))
        self._d = self.den + [mpmath.mpc(0)] * (d + 1 - len(self.den))

    @classmethod
    def from_json(cls, obj) -> "RationalMap":
        return cls(obj["numerator"], obj["denominator"])

    def to_json(self, digits: int = 40) -> dict:
        enc = lambda c: {"re": mpmath.nstr(c.real, digits), "im": mpmath.nstr(c.imag, digits)}
        return {"numerator": [enc(c) for c in self.num], "denominator": [enc(c) for c in self.den]}

    def compose_target(self, m: Mobius) -> "RationalMap":
        """m o f."""
        a, b, c, d = (mpmath.mpc(x) for x in (m.a, m.b, m.c, m.d))
        return RationalMap([a * x + b * y for x, y in zip(self._n, self._d)], [c * x + d * y for x, y in zip(self._n, self._d)])

    def _forms(self, z):
        """(N, D) at a point of P^1, homogenised to degree d."""
        d = self.degree
        if z == INF:
            return self._n[d], self._d[d]
        z = mpmath.mpc(z)
        if abs(z) > 1:
            u = 1 / z
            return mpmath.polyval(self._n, u), mpmath.polyval(self._d, u)
        return mpmath.polyval(list(reversed(self._n)), z), mpmath.polyval(list(reversed(self._d)), z)

    def __call__(self, z):
        n, dd = self._forms(z)
        if dd == 0:
            return INF
        return n / dd

    def sharp(self, z) -> float:
        """Spherical derivative |f'|(1+|z|^2)/(1+|f|^2), in the chart at inf when |z| > 1."""
        if z == INF or abs(z) > 1:
            u = mpmath.mpc(0) if z == INF else 1 / mpmath.mpc(z)
            N = list(self._n[::-1])  # reversed polynomials in u, low degree first
            D = list(self._d[::-1])
            x = u
        else:
            N, D, x = self._n, self._d, mpmath.mpc(z)
        nv = mpmath.polyval(list(reversed(N)), x)
        dv = mpmath.polyval(list(reversed(D)), x)
        dN = [i * c for i, c in enumerate(N)][1:] or [mpmath.mpc(0)]
        dD = [i * c for i, c in enumerate(D)][1:] or [mpmath.mpc(0)]
        ndv = mpmath.polyval(list(reversed(dN)), x)
        ddv = mpmath.polyval(list(reversed(dD)), x)
        num = abs(ndv * dv - nv * ddv) * (1 + abs(x) ** 2)
        den = abs(nv) ** 2 + abs(dv) ** 2
        return float(num / den)

    def fiber_poly(self, w) -> list:
        w0, w1 = homogeneous(w) if w != INF else (1, 0)
        w0, w1 = mpmath.mpc(w0), mpmath.mpc(w1)
        return [w1 * n - w0 * d for n, d in zip(self._n, self._d)]

    def fiber(self, w, init: Sequence | None = None, tol=None) -> list:
        """All d preimages of w (with multiplicity), INF included when the degree drops."""
        c = self.fiber_poly(w)
        scale = max(abs(x) for x in c)
        if scale == 0:
            raise DegenerateFiberError("map is constant")
        tiny = scale * mpmath.mpf(10) ** (-mpmath.mp.dps + 10)
        top = len(c) - 1
        while top > 0 and abs(c[top]) <= tiny:
            top -= 1
        n_inf = self.degree - top
        if top == 0:
            return [INF] * n_inf
        finite_init = None
        if init is not None:
            finite_init = [z for z in init if z != INF]
            if len(finite_init) != top:
                finite_init = None
        roots = aberth(c[: top + 1], mpmath.mp.dps, init=finite_init, tol=tol)
        return list(roots) + [INF] * n_inf

    def homogeneous_numpy(self):
        return np.array([complex(x) for x in self._n]), np.array([complex(x) for x in self._d])


def chordal(a, b) -> float:
    if a == INF and b == INF:
        return 0.0
    if a == INF:
        a, b = b, a
    if b == INF:
        return 2.0 / math.sqrt(1.0 + abs(complex(a)) ** 2)
    a, b = complex(a), complex(b)
    return 2.0 * abs(a - b) / math.sqrt((1 + abs(a) ** 2) * (1 + abs(b) ** 2))


def min_separation(points) -> float:
    if len(points) < 2:
        return math.inf
    return min(chordal(points[i], points[j]) for i in range(len(points)) for j in range(i))


# ---------------------------------------------------------------------------
# connect the dots
# ---------------------------------------------------------------------------


@dataclass
class EdgePermutation:
    edge: tuple[int, int]
    perm: tuple[int, ...]  # lift starting at fibre point j over u ends at perm[j] over v
    depth: int = 0

    def reversed(self) -> "EdgePermutation":
        return EdgePermutation((self.edge[1], self.edge[0]), perm_inv(self.perm), self.depth)


def _match(f: RationalMap, Fs, Ft, ws, wt):
    """Nearest-point matching if each lift provably stays within its disc."""
    ell = 1.6 * chordal(ws, wt)
    sep = min(min_separation(Fs), min_separation(Ft))
    out = []
    used = set()
    for a in Fs:
        fs = f.sharp(a) if a != INF else f.sharp(INF)
        if fs <= 0:
            return None
        r = 2.0 * ell / fs
        if r >= sep / 3:
            return None
        cand = [k for k, b in enumerate(Ft) if chordal(a, b) < r]
        if len(cand) != 1 or cand[0] in used:
            return None
        used.add(cand[0])
        out.append(cand[0])
    return tuple(out)


def lift_edge_cd(f: RationalMap, path, Fu, Fv, *, max_depth: int = 40) -> tuple[tuple[int, ...], int]:
    """Permutation of the fibre along ``path`` (t -> point, t in [0,1]).

    Returns (perm, deepest bisection level)."""
    deepest = 0

    def rec(s, Fs, t, Ft, depth):
        nonlocal deepest
        deepest = max(deepest, depth)
        m = _match(f, Fs, Ft, path(s), path(t))
        if m is not None:
            return m
        if depth >= max_depth:
            raise PrecisionExhaustedError("connect-the-dots bisection depth exceeded")
        u = (s + t) / 2
        Fu_ = f.fiber(path(u), init=Fs)
        m1 = rec(s, Fs, u, Fu_, depth + 1)
        m2 = rec(u, Fu_, t, Ft, depth + 1)
        return perm_mul(m1, m2)

    return rec(0.0, Fu, 1.0, Fv, 0), deepest


# ---------------------------------------------------------------------------
# two triangulations
# ---------------------------------------------------------------------------


def _poly_in_s(coef: np.ndarray, alpha, beta, gamma, delta) -> np.ndarray:
    """sum_k c_k z0^k z1^(d-k) with z0 = alpha s + beta, z1 = gamma s + delta."""
    P = np.polynomial.polynomial
    d = len(coef) - 1
    out = np.zeros(1, dtype=complex)
    for k, c in enumerate(coef):
        if c == 0:
            continue
        term = P.polymul(P.polypow([beta, alpha], k), P.polypow([delta, gamma], d - k))
        out = P.polyadd(out, c * term)
    return out


class TwoTriangulations:
    """Lifting data for one map: the triangulation on f^-1(Q) and crossing caches."""

    def __init__(self, f: RationalMap, Q: Sequence, preimages: Sequence, ratio: float = 1000.0):
        self.f = f
        self.C = refine(delaunay_sphere(list(preimages)), ratio)
        self.V = self.C.vertices
        self.tris = [tuple(int(x) for x in t) for t in self.C.triangles]
        self.nbr: dict[tuple[int, int], int] = {}
        for ti, (a, b, c) in enumerate(self.tris):
            for x, y in ((a, b), (b, c), (c, a)):
                self.nbr[(x, y)] = ti
        self.Q = [q for q in Q if q != INF]
        self._cache: dict = {}
        self._num, self._den = f.homogeneous_numpy()

    def locate(self, z) -> int:
        v = to_sphere(z if z == INF else complex(z))
        best, score = 0, -math.inf
        for ti, (a, b, c) in enumerate(self.tris):
            A, B, C = self.V[a], self.V[b], self.V[c]
            s = min(np.linalg.det(np.array([A, B, v])), np.linalg.det(np.array([B, C, v])), np.linalg.det(np.array([C, A, v])))
            if s > score:
                best, score = ti, s
        return best

    def _edge_param(self, x: int, y: int) -> Mobius:
        from .sphere import _arc_mobius

        return _arc_mobius(self.C.points[x], self.C.points[y])

    def crossings(self, key, mu_eps: Mobius, x: int, y: int):
        """(s, t) with f(nu^-1(s)) = mu_eps^-1(t), s, t in [0,1], on edge x -> y."""
        ck = (key, min(x, y), max(x, y))
        if ck not in self._cache:
            nu = self._edge_param(min(x, y), max(x, y))
            inv = nu.inverse()
            # (z0, z1) = inv applied to (s, 1)
            alpha, beta, gamma, delta = complex(inv.a), complex(inv.b), complex(inv.c), complex(inv.d)
            # f in homogeneous form: N(z0,z1) = sum n_k z0^k z1^(d-k)
            Np = _poly_in_s(self._num, alpha, beta, gamma, delta)
            Dp = _poly_in_s(self._den, alpha, beta, gamma, delta)
            a, b, c, d = (complex(t) for t in (mu_eps.a, mu_eps.b, mu_eps.c, mu_eps.d))
            P = np.polynomial.polynomial
            A = P.polyadd(a * Np, b * Dp)
            B = P.polyadd(c * Np, d * Dp)
            H = P.polymul(A, np.conj(B)).imag
            out = []
            if np.any(H):
                Hn = np.trim_zeros(H, "b")
                roots = P.polyroots(Hn) if len(Hn) > 1 else []
                for r in roots:
                    if abs(r.imag) > 1e-7 or not (-1e-9 <= r.real <= 1 + 1e-9):
                        continue
                    s = min(max(r.real, 0.0), 1.0)
                    av, bv = P.polyval(s, A), P.polyval(s, B)
                    if abs(bv) < 1e-300:
                        continue
                    g = av / bv
                    if abs(g.imag) > 1e-6 * max(1.0, abs(g)) or not (-1e-12 <= g.real <= 1 + 1e-12):
                        continue
                    out.append((s, g.real))
            self._cache[ck] = (min(x, y), max(x, y), out)
        lo, hi, pts = self._cache[ck]
        if (x, y) == (lo, hi):
            return pts
        return [(1.0 - s, t) for s, t in pts]

    def point_on_edge(self, x: int, y: int, s: float):
        nu = self._edge_param(min(x, y), max(x, y))
        if (x, y) != (min(x, y), max(x, y)):
            s = 1.0 - s
        return nu.inverse()(s)

    def winding_ok(self, x, y, path, t0: float, t1: float) -> bool:
        """f(great arc x -> y) followed by path back from t1 to t0 winds around no finite Q."""
        from .sphere import _arc_mobius

        pts = []
        if chordal(x, y) > 1e-14:
            arc = _arc_mobius(x, y).inverse()
            seg = [arc(s) for s in np.linspace(0.0, 1.0, 33)]
        else:
            seg = [x, y]
        for z in seg:
            v = self.f(z)
            if v == INF:
                return False
            pts.append(complex(v))
        for t in np.linspace(t1, t0, 33):
            v = path(float(t))
            if v == INF:
                return False
            pts.append(complex(v))
        pts.append(pts[0])
        return all(abs(_winding(pts, complex(q))) < 0.5 for q in self.Q)


def _winding(pts, q) -> float:
    # refine implicitly by assuming the sampled increments stay below pi
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        da = a - q
        db = b - q
        if da == 0 or db == 0:
            return math.inf
        total += math.atan2((db / da).imag, (db / da).real)
    return total / (2 * math.pi)


def lift_edge_tt(f: RationalMap, path, mu_eps: Mobius, key, Fu, Fv, tt: TwoTriangulations) -> tuple[tuple[int, ...], int]:
    """Edge permutation by tracking each lift through the triangles of tt.C."""
    out = []
    fallbacks = 0
    for j, start in enumerate(Fu):
        tri = tt.locate(start)
        x, tcur = start, 0.0
        came = None
        for _ in range(10 * len(tt.tris) + 10):
            a, b, c = tt.tris[tri]
            events = []
            for e in ((a, b), (b, c), (c, a)):
                if came is not None and set(e) == set(came):
                    # never immediately re-cross the edge just used at the same time
                    pass
                for s, t in tt.crossings(key, mu_eps, e[0], e[1]):
                    if t > tcur + 1e-12:
                        events.append((t, e, s))
            events.sort()
            step = None
            for t, e, s in events:
                y = tt.point_on_edge(e[0], e[1], s)
                if tt.winding_ok(x, y, path, tcur, t):
                    step = (t, e, y)
                    break
            if step is None:
                break
            t, e, y = step
            tri = tt.nbr[(e[1], e[0])]
            x, tcur, came = y, t, e
        cands = [k for k, z in enumerate(Fv) if tt.locate(z) == tri]
        cands = [k for k in cands if tt.winding_ok(x, Fv[k], path, tcur, 1.0)] if len(cands) > 1 else cands
        if len(cands) == 1:
            out.append(cands[0])
            continue
        # fall back on connect-the-dots from the last tracked point
        fallbacks += 1
        Fs = f.fiber(path(tcur), init=Fu)
        j0 = min(range(len(Fs)), key=lambda k: chordal(Fs[k], x))
        sub = lambda t, t0=tcur: path(t0 + (1.0 - t0) * t)
        perm, _ = lift_edge_cd(f, sub, Fs, Fv)
        out.append(perm[j0])
    if sorted(out) != list(range(len(Fu))):
        raise MonodromyError("two-triangulation lifts are not a bijection")
    return tuple(out), fallbacks


# ---------------------------------------------------------------------------
# monodromy
# ---------------------------------------------------------------------------


@dataclass
class MonodromyCertificate:
    computed: PermTuple
    target: PermTuple | None = None
    conjugator: tuple[int, ...] | None = None
    min_fiber_separation: float = 0.0
    max_depth: int = 0
    method: str = "cd"
    loops: list = field(default_factory=list)
    methods_agree: bool | None = None
    tt_fallbacks: int = 0

    @property
    def matches(self) -> bool:
        return self.conjugator is not None

    def to_json(self) -> dict:
        return {
            "computed": self.computed.to_json(),
            "target": self.target.to_json() if self.target else None,
            "conjugator": [x + 1 for x in self.conjugator] if self.conjugator is not None else None,
            "matches": self.matches if self.target else None,
            "diagnostics": {
                "min_fiber_separation": self.min_fiber_separation,
                "max_subdivision_depth": self.max_depth,
                "method": self.method,
                "methods_agree": self.methods_agree,
                "tt_fallbacks": self.tt_fallbacks,
            },
        }


def _normalise_target(f: RationalMap, Q: Sequence):
    """Move Q[0] to infinity when it is finite (orientation is preserved)."""
    if Q[0] == INF:
        return f, list(Q)
    q0 = complex(Q[0])
    m = Mobius(0, 1, 1, -q0)
    return f.compose_target(m), [m(q) if q != INF else 0j for q in Q]


def monodromy_of(
    f: RationalMap,
    Q: Sequence,
    *,
    method: str = "cd",
    digits: int = 128,
    target: PermTuple | None = None,
) -> MonodromyCertificate:
    """Monodromy tuple (sigma_1..sigma_k) of f around Q, as 0-based permutations
    of a fibre over the basepoint; loops wind counterclockwise and their
    product, first loop first, is trivial."""
    with mpmath.workdps(digits):
        f2, Q2 = _normalise_target(f, Q)
        tri = delaunay_sphere(Q2)
        g = dual_graph(tri, Q2)
        k = len(Q)
        loops, order = generator_paths(g, list(range(k)))
        fibers: dict[int, list] = {}
        seps = []

        def fib(v):
            if v not in fibers:
                F = f2.fiber(g.centers[v])
                seps.append(min_separation(F))
                if seps[-1] < 10 ** (-digits // 4):
                    raise DegenerateFiberError("fibre over a dual vertex is degenerate")
                fibers[v] = F
            return fibers[v]

        tt = None
        if method in ("tt", "both"):
            pre = [c[0] for q in Q2 for c in _clusters(f2, q)]
            tt = TwoTriangulations(f2, Q2, [complex(z) if z != INF else INF for z in pre])

        cache: dict[tuple[int, int], tuple] = {}
        depth = 0
        agree = True
        fallbacks = 0

        def edge_perm(u, v):
            nonlocal depth, agree, fallbacks
            if (u, v) in cache:
                return cache[(u, v)]
            if (v, u) in cache:
                return perm_inv(cache[(v, u)])
            e = g.edges[(u, v)]
            inv = e.mobius.inverse()
            cu, cv = g.centers[u], g.centers[v]

            def path(t):
                if t <= 0.0:
                    return cu
                if t >= 1.0:
                    return cv
                return inv(t)

            Fu, Fv = fib(u), fib(v)
            perm_cd = perm_tt = None
            if method in ("cd", "both"):
                perm_cd, dd = lift_edge_cd(f2, path, Fu, Fv)
                depth = max(depth, dd)
            if method in ("tt", "both"):
                perm_tt, fb = lift_edge_tt(f2, path, e.mobius, (u, v), Fu, Fv, tt)
                fallbacks += fb
            if perm_cd is not None and perm_tt is not None and perm_cd != perm_tt:
                agree = False
                log.warning("cd and tt disagree on dual edge %s", (u, v))
            perm = perm_cd if perm_cd is not None else perm_tt
            cache[(u, v)] = perm
            return perm

        d = f2.degree
        loop_perms = []
        for seq in loops:
            s = perm_identity(d)
            for u, v in zip(seq, seq[1:]):
                if u != v:
                    s = perm_mul(s, edge_perm(u, v))
            loop_perms.append(s)
        if perm_product(loop_perms, d) != perm_identity(d):
            raise MonodromyError("loop product is not the identity")
        sigmas, paths = _hurwitz_sort(order, loop_perms, loops)
        computed = PermTuple(d, tuple(sigmas))
        cert = MonodromyCertificate(
            computed=computed,
            target=target,
            min_fiber_separation=min(seps) if seps else 0.0,
            max_depth=depth,
            method=method,
            loops=paths,
            methods_agree=agree if method == "both" else None,
            tt_fallbacks=fallbacks,
        )
        if target is not None:
            cert.conjugator = conjugacy_witness(computed, target)
        return cert


def _hurwitz_sort(order, perms, loops):
    """Rotate to start at index 0, then bubble into index order with Hurwitz moves
    (a, b) -> (b, b^-1 a b); the product and the loop classes are preserved."""
    items = list(zip(order, perms, loops))
    r = next(i for i, it in enumerate(items) if it[0] == 0)
    items = items[r:] + items[:r]
    n = len(items)
    for i in range(n):
        for j in range(n - 1 - i):
            (qa, pa, la), (qb, pb, lb) = items[j], items[j + 1]
            if qa > qb:
                rev = list(reversed(lb))
                items[j] = (qb, pb, lb)
                items[j + 1] = (qa, perm_conj(pa, pb), rev + la[1:] + lb[1:])
    return [it[1] for it in items], [it[2] for it in items]


def _clusters(f: RationalMap, q) -> list[list]:
    """Numerical preimages of q grouped by proximity, one group per distinct point.

    An m-fold root is only resolved to about dps/m digits, so the iteration
    stops at dps/(d+2) digits and points closer than half that many digits
    are merged."""
    tol = mpmath.mpf(10) ** (-mpmath.mp.dps / (f.degree + 2))
    radius = float(mpmath.sqrt(tol))
    clusters: list[list] = []
    for z in f.fiber(q, tol=tol):
        for cl in clusters:
            if chordal(cl[0], z) < radius:
                cl.append(z)
                break
        else:
            clusters.append([z])
    return clusters


def fiber_shapes(f: RationalMap, Q: Sequence) -> list[tuple[int, ...]]:
    """Multiplicity profile of each fibre, by clustering the numerical preimages."""
    return [tuple(sorted((len(c) for c in _clusters(f, q)), reverse=True)) for q in Q]


# ---------------------------------------------------------------------------
# simultaneous conjugacy
# ---------------------------------------------------------------------------


def conjugacy_witness(computed: PermTuple, target: PermTuple) -> tuple[int, ...] | None:
    """tau with computed_i = tau^-1 target_i tau for all i, or None.

    tau relabels the points: computed_i(tau(y)) = tau(target_i(y)).  A choice
    of tau on one point of an orbit determines it on the whole orbit, so the
    search branches only once per orbit."""
    if computed.degree != target.degree or computed.k != target.k:
        return None
    d = computed.degree
    S, T = computed.perms, target.perms
    if [cycle_type(s) for s in S] != [cycle_type(t) for t in T]:
        return None
    tau = [-1] * d
    used = [False] * d

    def propagate(y0, x0):
        assigned = []
        stack = [(y0, x0)]
        while stack:
            y, x = stack.pop()
            if tau[y] == x:
                continue
            if tau[y] != -1 or used[x]:
                return assigned, False
            tau[y] = x
            used[x] = True
            assigned.append(y)
            for s, t in zip(S, T):
                stack.append((t[y], s[x]))
                stack.append((perm_inv_at(t, y), perm_inv_at(s, x)))
        return assigned, True

    inv_cache: dict = {}

    def perm_inv_at(p, i):
        key = id(p)
        if key not in inv_cache:
            inv_cache[key] = perm_inv(p)
        return inv_cache[key][i]

    def solve():
        try:
            y = tau.index(-1)
        except ValueError:
            return True
        for x in range(d):
            if used[x]:
                continue
            assigned, ok = propagate(y, x)
            if ok and solve():
                return True
            for z in assigned:
                used[tau[z]] = False
                tau[z] = -1
        return False

    if not solve():
        return None
    t = tuple(tau)
    # computed_i = tau^-1 target_i tau  (left-to-right composition)
    assert all(perm_conj(tg, t) == c for tg, c in zip(T, S))
    return t
