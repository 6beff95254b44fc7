"""Exhaustive search for rational maps over F_p with prescribed fibre shapes.

A map is written ``f = M^-1 o (W2 / (lam * W1))`` where ``M`` is a Mobius
transformation of the target sending Q1 to infinity and Q2 to 0, and W1, W2
are monic.  For every further point the numerator of ``f - Q_i`` is
``W_i = W2 - lam * q_i * W1`` with ``q_i = M(Q_i)``.

Enumeration runs over the factored W1 (the "outer" list, split into chunks
that form the checkpoint cursor) against all factored W2.  When W1 has a
pinned pole at infinity and some later shape has a part ``beta >= 2`` that
occurs once, the pair/lambda candidates are produced by a hash join: that
part is an F_p-rational root ``r`` of ``W_i`` of multiplicity ``beta``, so
the normalised Taylor coefficients of W1 and W2 at ``r`` up to order
``beta - 1`` must coincide.  Every candidate is then re-checked with the
full shape test, so the join only prunes, never decides.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .algebra import (
    AlgebraError,
    Partition,
    PrimeField,
    UniPoly,
    is_prime,
    riemann_hurwitz_ok,
    shape_of,
)

log = logging.getLogger(__name__)

INF = "inf"
FREE = "free"
CHECKPOINT_VERSION = 1


class SearchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# fast F_p polynomial helpers on plain coefficient lists (low degree first)
# ---------------------------------------------------------------------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _rem(a: list[int], b: list[int], p: int) -> list[int]:
    a = list(a)
    db = len(b) - 1
    inv = pow(b[-1], -1, p)
    for k in range(len(a) - 1 - db, -1, -1):
        c = a[k + db] * inv % p
        if c:
            for j in range(db + 1):
                a[k + j] = (a[k + j] - c * b[j]) % p
    del a[db if db > 0 else 0 :]
    return _trim(a)


def _gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _rem(a, b, p)
    return a


def _deriv(a: Sequence[int], p: int) -> list[int]:
    return _trim([i * c % p for i, c in enumerate(a)][1:])


def _mul(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return [c % p for c in out]


def _pow(a: Sequence[int], n: int, p: int) -> list[int]:
    out = [1]
    for _ in range(n):
        out = _mul(out, a, p)
    return out


def fiber_shape_ok(w: Sequence[int], d: int, dual: Sequence[int], p: int) -> bool:
    """Does the degree-d binary form with affine part ``w`` have the shape
    whose dual partition is ``dual``?  Missing degree counts as a root at
    infinity.  Aborts the gcd chain at the first disagreeing degree drop."""
    w = _trim(list(w))
    if not w:
        return False
    inf_mult = d - (len(w) - 1)
    # the point at infinity contributes a part of size inf_mult; fold it in by
    # reducing the expected drops: drop_e counts parts >= e among finite roots
    expect = [dual[e] - (1 if inf_mult > e else 0) for e in range(len(dual))]
    if inf_mult > len(dual):
        return False
    g = w
    deriv = w
    e = 0
    while len(g) > 1:
        if e >= len(expect):
            return False
        deriv = _deriv(deriv, p)
        nxt = _gcd(g, deriv, p) if deriv else g
        if len(g) - len(nxt) != expect[e]:
            return False
        g = nxt
        e += 1
    return all(x == 0 for x in expect[e:])


# ---------------------------------------------------------------------------
# problem and solution types
# ---------------------------------------------------------------------------


def _parse_point(q, p: int):
    if q is None or q == INF or q == "infinity":
        return INF
    if q == FREE:
        return FREE
    return int(q) % p


@dataclass(frozen=True)
class SearchProblem:
    p: int
    degree: int
    shapes: tuple[Partition, ...]
    points: tuple  # ints mod p, INF, or FREE

    def __post_init__(self):
        shapes = tuple(s if isinstance(s, Partition) else Partition(tuple(s)) for s in self.shapes)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "points", tuple(_parse_point(q, self.p) for q in self.points))
        if not is_prime(self.p):
            raise SearchError(f"{self.p} is not prime")
        if len(shapes) != len(self.points):
            raise SearchError("need one point per shape")
        if len(shapes) < 2:
            raise SearchError("need at least two branch points")
        if not riemann_hurwitz_ok(shapes, self.degree):
            raise SearchError("shapes violate the Riemann-Hurwitz count 2d-2")
        if max(max(s.parts) for s in shapes) >= self.p:
            raise SearchError(f"prime {self.p} must exceed every multiplicity")
        if FREE in self.points[:2]:
            raise SearchError("Q1 and Q2 must be specified")
        fixed = [q for q in self.points if q != FREE]
        if len(set(fixed)) != len(fixed):
            raise SearchError("specified points must be distinct")

    @property
    def k(self) -> int:
        return len(self.shapes)

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "degree": self.degree,
            "shapes": [s.to_json() for s in self.shapes],
            "points": [q if isinstance(q, str) else int(q) for q in self.points],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SearchProblem":
        return cls(int(obj["p"]), int(obj["degree"]), tuple(Partition(tuple(s)) for s in obj["shapes"]), tuple(obj["points"]))


def normalizing_mobius(points: Sequence, p: int) -> tuple[int, int, int, int]:
    """Matrix (a, b, c, e) of z -> (a z + b)/(c z + e) over F_p with
    Q1 -> inf, Q2 -> 0 and, when Q3 is specified, Q3 -> 1."""
    q1, q2 = points[0], points[1]
    if q1 == INF:
        a, b, c, e = 1, -q2, 0, 1
    elif q2 == INF:
        a, b, c, e = 0, 1, 1, -q1
    else:
        a, b, c, e = 1, -q2, 1, -q1
    m = (a % p, b % p, c % p, e % p)
    if len(points) > 2 and points[2] != FREE:
        v = mobius_apply(m, points[2], p)
        if v in (INF, 0):
            raise SearchError("Q3 collides with Q1 or Q2")
        s = pow(v, -1, p)
        m = (m[0] * s % p, m[1] * s % p, m[2], m[3])
    return m


def mobius_apply(m, z, p: int):
    a, b, c, e = m
    if z == INF:
        num, den = a, c
    else:
        num, den = (a * z + b) % p, (c * z + e) % p
    if den % p == 0:
        return INF
    return num * pow(den, -1, p) % p


def mobius_inverse(m, p: int):
    a, b, c, e = m
    return (e % p, -b % p, -c % p, a % p)


@dataclass
class FFSolution:
    p: int
    degree: int
    W1: list[tuple[tuple[int, ...], int]]  # finite poles: (monic factor coeffs, multiplicity)
    W2: list[tuple[tuple[int, ...], int]]
    lam: int
    points: list  # resolved Q_1..Q_k in original coordinates
    qs: list  # normalised points M(Q_i)
    mobius: tuple[int, int, int, int]
    pole_at_infinity: int = 0  # multiplicity of the pinned pole at infinity
    zero_at_origin: int = 0  # multiplicity of the pinned zero at 0 (a factor of W2)

    def poly(self, which: int) -> UniPoly:
        F = PrimeField(self.p)
        out = UniPoly(F, (1,))
        for coeffs, m in (self.W1 if which == 1 else self.W2):
            out = out * UniPoly(F, coeffs) ** m
        return out

    def W(self, i: int) -> UniPoly:
        """Numerator of M(f) - q_i for i >= 2 (1-based), W1 for i == 1."""
        if i == 1:
            return self.poly(1)
        if i == 2:
            return self.poly(2)
        return self.poly(2) - self.poly(1) * (self.lam * self.qs[i - 1])

    def key(self) -> tuple:
        return (tuple(self.W1), tuple(self.W2), self.lam, tuple(self.points))

    def to_json(self) -> dict:
        enc = lambda fs: [{"factor": list(c), "mult": m} for c, m in fs]
        pt = lambda q: q if isinstance(q, str) else int(q)
        return {
            "p": self.p,
            "degree": self.degree,
            "W1": enc(self.W1),
            "W2": enc(self.W2),
            "lambda": self.lam,
            "points": [pt(q) for q in self.points],
            "q": [pt(q) for q in self.qs],
            "mobius": list(self.mobius),
            "pole_at_infinity": self.pole_at_infinity,
            "zero_at_origin": self.zero_at_origin,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FFSolution":
        dec = lambda fs: [(tuple(int(c) for c in f["factor"]), int(f["mult"])) for f in fs]
        pt = lambda q: q if isinstance(q, str) else int(q)
        return cls(
            p=int(obj["p"]),
            degree=int(obj["degree"]),
            W1=dec(obj["W1"]),
            W2=dec(obj["W2"]),
            lam=int(obj["lambda"]),
            points=[pt(q) for q in obj["points"]],
            qs=[pt(q) for q in obj["q"]],
            mobius=tuple(int(v) for v in obj["mobius"]),
            pole_at_infinity=int(obj.get("pole_at_infinity", 0)),
            zero_at_origin=int(obj.get("zero_at_origin", 0)),
        )

    def verify(self, shapes: Sequence[Partition]) -> bool:
        """Independent re-check with the generic algebra routines."""
        from .algebra import poly_gcd

        F = PrimeField(self.p)
        W1, W2 = self.poly(1), self.poly(2)
        d = self.degree
        if W2.degree != d or W1.degree != d - self.pole_at_infinity:
            return False
        if poly_gcd(W1, W2).degree != 0 or self.lam % self.p == 0:
            return False

        def fiber(w: UniPoly) -> Partition:
            parts = list(shape_of(w).parts) if w.degree > 0 else []
            if w.degree < d:
                parts.append(d - w.degree)
            return Partition(tuple(parts))

        if fiber(W1) != shapes[0] or fiber(W2) != shapes[1]:
            return False
        for i in range(3, len(shapes) + 1):
            Wi = W2 - W1 * F(self.lam * self.qs[i - 1])
            if fiber(Wi) != shapes[i - 1]:
                return False
        return True


# ---------------------------------------------------------------------------
# enumeration of factored monic polynomials
# ---------------------------------------------------------------------------


def monic_polys(p: int, n: int) -> Iterator[tuple[int, ...]]:
    """All monic degree-n polynomials, colexicographic in the coefficients."""
    for tail in itertools.product(range(p), repeat=n):
        yield tuple(reversed(tail)) + (1,)


def _is_irreducible(f: tuple[int, ...], p: int) -> bool:
    n = len(f) - 1
    if n <= 1:
        return n == 1
    F = PrimeField(p)
    fp = UniPoly(F, f)
    xp = UniPoly.x(F)
    x = UniPoly.x(F)
    from .algebra import poly_gcd

    for _ in range(n // 2):
        xp = _powmod(xp, p, fp)
        if poly_gcd(xp - x, fp).degree > 0:
            return False
    return True


def _powmod(a: UniPoly, e: int, m: UniPoly) -> UniPoly:
    out = UniPoly(a.ring, (1,))
    base = a % m
    while e:
        if e & 1:
            out = (out * base) % m
        e >>= 1
        if e:
            base = (base * base) % m
    return out


def monic_irreducibles(p: int, n: int) -> list[tuple[int, ...]]:
    return [f for f in monic_polys(p, n) if _is_irreducible(f, p)]


def count_irreducibles(p: int, n: int) -> int:
    """Necklace formula (1/n) sum_{e | n} mobius(e) p^(n/e)."""

    def mobius(m: int) -> int:
        out, q = 1, 2
        while q * q <= m:
            if m % q == 0:
                m //= q
                if m % q == 0:
                    return 0
                out = -out
            q += 1
        return -out if m > 1 else out

    return sum(mobius(e) * p ** (n // e) for e in range(1, n + 1) if n % e == 0) // n


def _squarefree_products(pool: dict[int, list[tuple[int, ...]]], m: int, p: int, banned: frozenset):
    """(poly, used-irreducibles) for every product of distinct irreducibles of total degree m."""
    out = []
    items = [f for deg in sorted(pool) if deg <= m for f in pool[deg] if f not in banned]

    def rec(start, remaining, used, poly):
        if remaining == 0:
            out.append((tuple(poly), frozenset(used)))
            return
        for idx in range(start, len(items)):
            f = items[idx]
            deg = len(f) - 1
            if deg <= remaining:
                rec(idx + 1, remaining - deg, used + [f], _mul(poly, f, p))

    rec(0, m, [], [1])
    out.sort(key=lambda t: tuple(reversed(t[0])))
    return out


def enumerate_factored(
    shape: Partition,
    p: int,
    *,
    pin: int | None = None,
    pin_root: int | None = None,
    pool: bool = True,
) -> Iterator[list[tuple[tuple[int, ...], int]]]:
    """Tuples of monic factors (f_1, ..., f_n) with deg f_j = mu_j for the
    compact form (beta_j^mu_j) of ``shape``.

    ``pin`` names a part beta whose linear factor is fixed elsewhere
    (at infinity when ``pin_root`` is None, else at x - pin_root), which
    lowers that mu by one.  In pool mode the factors are products of distinct
    monic irreducibles, no irreducible used twice; shape and internal
    coprimality then hold automatically.  Otherwise every monic polynomial
    of the right degree is produced and the caller filters by shape.
    """
    roles = []
    for beta, mu in shape.compact:
        if pin is not None and beta == pin:
            mu -= 1
            pin = None
        roles.append((beta, mu))
    if pin is not None:
        raise SearchError(f"pinned part {pin} not in shape {shape}")
    if not pool:
        lists = [list(monic_polys(p, mu)) for _, mu in roles]
        for combo in _colex_product(lists):
            yield [(f, beta) for f, (beta, _) in zip(combo, roles) if len(f) > 1]
        return
    top = max((mu for _, mu in roles), default=0)
    irr = {n: monic_irreducibles(p, n) for n in range(1, top + 1)}
    banned = frozenset() if pin_root is None else frozenset({(-pin_root % p, 1)})
    lists = [_squarefree_products(irr, mu, p, banned) for _, mu in roles]
    for combo in _colex_product(lists):
        used: set = set()
        ok = True
        for _, u in combo:
            if used & u:
                ok = False
                break
            used |= u
        if ok:
            yield [(f, beta) for (f, _), (beta, _) in zip(combo, roles) if len(f) > 1]


def _colex_product(lists):
    # last role varies slowest, so the tuple order is colexicographic
    for combo in itertools.product(*reversed(lists)):
        yield tuple(reversed(combo))


# ---------------------------------------------------------------------------
# lambda sets
# ---------------------------------------------------------------------------


def lambda_set(W1: UniPoly, W2: UniPoly, q: int, alpha: Partition, degree: int | None = None) -> set[int]:
    """All nonzero lam in F_p with shape(W2 - lam*q*W1) == alpha (brute force)."""
    p = W1.ring.characteristic
    d = degree if degree is not None else W2.degree
    dual = alpha.dual().parts
    w1, w2 = list(W1.coeffs), list(W2.coeffs)
    n = max(len(w1), len(w2))
    w1 += [0] * (n - len(w1))
    w2 += [0] * (n - len(w2))
    out = set()
    for lam in range(1, p):
        c = lam * q % p
        wi = [(b - c * a) % p for a, b in zip(w1, w2)]
        if fiber_shape_ok(wi, d, dual, p):
            out.add(lam)
    return out


# ---------------------------------------------------------------------------
# the search
# ---------------------------------------------------------------------------


@dataclass
class SearchOptions:
    pool: bool | None = None  # None: decide from the largest mu (<= 8 pays off for F_11)
    normalize: bool = True  # pin linear factors at infinity / 0
    strategy: str = "auto"  # auto | join | brute
    chunk_size: int = 256
    threads: int = 1
    limit: int | None = None
    checkpoint: str | None = None


@dataclass
class _Plan:
    problem: SearchProblem
    mobius: tuple
    qs: list
    pin_inf: int | None
    pin_zero: int | None
    pool: bool
    join_index: int | None
    join_beta: int
    w1_list: list = field(default_factory=list)
    w2_list: list = field(default_factory=list)


def _unique_part(alpha: Partition) -> int | None:
    singles = [b for b, mu in alpha.compact if mu == 1]
    return max(singles) if singles else None


def _linear_part(alpha: Partition) -> int | None:
    # a part that occurs once has an F_p-rational point above it
    return _unique_part(alpha)


def _make_plan(problem: SearchProblem, opts: SearchOptions) -> _Plan:
    p = problem.p
    m = normalizing_mobius(problem.points, p)
    qs = [q if q == FREE else mobius_apply(m, q, p) for q in problem.points]
    a1, a2 = problem.shapes[0], problem.shapes[1]
    pin_inf = _linear_part(a1) if opts.normalize else None
    pin_zero = _linear_part(a2) if opts.normalize else None
    top_mu = max(mu for s in problem.shapes[:2] for _, mu in s.compact)
    pool = opts.pool if opts.pool is not None else top_mu <= 8
    join_index, join_beta = None, 0
    if opts.strategy != "brute" and pin_inf is not None:
        for i in range(2, problem.k):
            b = _unique_part(problem.shapes[i])
            if b is not None and b >= 2 and b > join_beta:
                join_index, join_beta = i, b
    if opts.strategy == "join" and join_index is None:
        raise SearchError("no shape admits the hash-join strategy")
    plan = _Plan(problem, m, qs, pin_inf, pin_zero, pool, join_index, join_beta)
    plan.w1_list = _build_side(problem, a1, pin_inf, None, pool)
    plan.w2_list = _build_side(problem, a2, pin_zero, 0, pool)
    return plan


def _build_side(problem: SearchProblem, alpha: Partition, pin, pin_root, pool: bool):
    """List of (expanded coeffs, factors) for one side, already shape-filtered."""
    p, d = problem.p, problem.degree
    out = []
    dual = alpha.dual().parts
    for factors in enumerate_factored(alpha, p, pin=pin, pin_root=pin_root, pool=pool):
        if pin is not None and pin_root is not None:
            factors = [((-pin_root % p, 1), pin)] + factors
        w = [1]
        for f, beta in factors:
            w = _mul(w, _pow(f, beta, p), p)
        if not pool:
            deg_total = d if pin_root is not None or pin is None else d
            if not fiber_shape_ok(w, deg_total, dual, p):
                continue
        out.append((tuple(w), factors))
    return out


def _taylor_matrix(p: int, n: int, r: int, depth: int) -> np.ndarray:
    """T with (coeffs @ T)[m] = m-th Taylor coefficient at r, m < depth."""
    T = np.zeros((n, depth), dtype=np.int64)
    for k in range(n):
        for m in range(min(depth, k + 1)):
            T[k, m] = comb(k, m) * pow(r, k - m, p) % p
    return T


def _keys(polys: list[tuple[int, ...]], p: int, n: int, depth: int) -> np.ndarray:
    """keys[r, idx] = (value at r, encoded normalised Taylor tail) or -1 when value 0."""
    A = np.zeros((len(polys), n), dtype=np.int64)
    for i, w in enumerate(polys):
        A[i, : len(w)] = w
    inv = np.array([0] + [pow(v, -1, p) for v in range(1, p)], dtype=np.int64)
    vals = np.zeros((p, len(polys)), dtype=np.int64)
    keys = np.full((p, len(polys)), -1, dtype=np.int64)
    for r in range(p):
        T = A @ _taylor_matrix(p, n, r, depth) % p
        v = T[:, 0]
        iv = inv[v]
        code = np.zeros(len(polys), dtype=np.int64)
        for m in range(depth - 1, 0, -1):
            code = code * p + (T[:, m] * iv % p)
        vals[r] = v
        keys[r] = np.where(v != 0, code, -1)
    return vals, keys


_PLAN: _Plan | None = None
_INDEX = None


def _join_index(plan: _Plan):
    p, d = plan.problem.p, plan.problem.degree
    depth = plan.join_beta
    w2vals, w2keys = _keys([w for w, _ in plan.w2_list], p, d + 1, depth)
    table = []
    for r in range(p):
        buckets: dict[int, list[int]] = {}
        for idx, key in enumerate(w2keys[r].tolist()):
            if key >= 0:
                buckets.setdefault(key, []).append(idx)
        table.append(buckets)
    return w2vals, table


def _process_chunk(plan: _Plan, index, lo: int, hi: int) -> list[FFSolution]:
    p = plan.problem.p
    chunk = plan.w1_list[lo:hi]
    out: list[FFSolution] = []
    if plan.join_index is not None:
        w2vals, table = index
        w1vals, w1keys = _keys([w for w, _ in chunk], p, plan.problem.degree + 1, plan.join_beta)
        for ci in range(len(chunk)):
            hints: dict[int, set[int]] = {}
            for r in range(p):
                key = int(w1keys[r, ci])
                if key < 0:
                    continue
                inv1 = pow(int(w1vals[r, ci]), -1, p)
                for j in table[r].get(key, ()):
                    hints.setdefault(j, set()).add(int(w2vals[r, j]) * inv1 % p)
            for j in sorted(hints):
                out.extend(_resolve_pair(plan, chunk[ci], plan.w2_list[j], hints[j]))
    else:
        for w1 in chunk:
            for w2 in plan.w2_list:
                out.extend(_resolve_pair(plan, w1, w2, None))
    return out


def _resolve_pair(plan: _Plan, side1, side2, hint: set[int] | None) -> list[FFSolution]:
    """All solutions with numerator W2 and denominator lam*W1.

    ``hint`` restricts the value c = lam*q at the join index."""
    prob = plan.problem
    p, d = prob.p, prob.degree
    w1, f1 = side1
    w2, f2 = side2
    n = d + 1
    a = list(w1) + [0] * (n - len(w1))
    b = list(w2) + [0] * (n - len(w2))

    def ok_c(i: int, c: int) -> bool:
        wi = [(y - c * x) % p for x, y in zip(a, b)]
        return fiber_shape_ok(wi, d, prob.shapes[i].dual().parts, p)

    fixed = [i for i in range(2, prob.k) if plan.qs[i] != FREE]
    free = [i for i in range(2, prob.k) if plan.qs[i] == FREE]
    ji = plan.join_index

    def c_candidates(i: int):
        if hint is not None and i == ji:
            return sorted(hint)
        return range(1, p)

    lams: list[int] | None = None
    # fixed points first, intersecting incrementally and bailing out when empty
    for i in fixed:
        qi = plan.qs[i]
        cand = set()
        for c in c_candidates(i):
            lam = c * pow(qi, -1, p) % p
            if (lams is None or lam in lams) and ok_c(i, c):
                cand.add(lam)
        lams = sorted(cand) if lams is None else sorted(set(lams) & cand)
        if not lams:
            return []
    if len(_trim(_gcd(list(w1), list(w2), p))) > 1:
        return []
    free_sets = {}
    for i in free:
        cs = [c for c in c_candidates(i) if ok_c(i, c)]
        if not cs:
            return []
        free_sets[i] = cs
    results = []
    if lams is None:
        # no specified Q_i beyond Q1, Q2: the first free point is normalised to 1
        first = free[0]
        lams = free_sets[first]
    inv_m = mobius_inverse(plan.mobius, p)
    for lam in lams:
        options = []
        for i in free:
            vals = [c * pow(lam, -1, p) % p for c in free_sets[i]]
            options.append(vals)
        for combo in itertools.product(*options):
            qs = list(plan.qs)
            for i, v in zip(free, combo):
                qs[i] = v
            fixed_vals = [q for q in qs]
            if len(set(map(str, fixed_vals))) != len(fixed_vals):
                continue
            pts = [mobius_apply(inv_m, q, p) for q in qs]
            results.append(
                FFSolution(
                    p=p,
                    degree=d,
                    W1=[(f, m) for f, m in f1],
                    W2=[(f, m) for f, m in f2],
                    lam=lam,
                    points=pts,
                    qs=qs,
                    mobius=plan.mobius,
                    pole_at_infinity=plan.pin_inf or 0,
                    zero_at_origin=plan.pin_zero or 0,
                )
            )
    return results


def _worker_init(problem_json, opts_json):
    global _PLAN, _INDEX
    opts = SearchOptions(**opts_json)
    _PLAN = _make_plan(SearchProblem.from_json(problem_json), opts)
    _INDEX = _join_index(_PLAN) if _PLAN.join_index is not None else None


def _worker_run(bounds):
    lo, hi = bounds
    return [s.to_json() for s in _process_chunk(_PLAN, _INDEX, lo, hi)]


def _load_checkpoint(path: str, digest: str):
    if not path or not os.path.exists(path):
        return 0, []
    with open(path) as fh:
        data = json.load(fh)
    if data.get("version") != CHECKPOINT_VERSION or data.get("problem") != digest:
        raise SearchError(f"checkpoint {path} belongs to a different problem")
    return int(data["next_chunk"]), [FFSolution.from_json(s) for s in data["solutions"]]


def _save_checkpoint(path: str, digest: str, next_chunk: int, sols: list[FFSolution], done: bool):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(
            {
                "version": CHECKPOINT_VERSION,
                "problem": digest,
                "next_chunk": next_chunk,
                "done": done,
                "solutions": [s.to_json() for s in sols],
            },
            fh,
        )
    os.replace(tmp, path)


def search(problem: SearchProblem, options: SearchOptions | None = None) -> Iterator[FFSolution]:
    """Stream every normalised solution over F_p, in cursor order."""
    opts = options or SearchOptions()
    plan = _make_plan(problem, opts)
    digest = problem.digest() + ("-pool" if plan.pool else "") + ("-norm" if opts.normalize else "")
    n = len(plan.w1_list)
    chunks = [(lo, min(lo + opts.chunk_size, n)) for lo in range(0, n, opts.chunk_size)]
    start, found = _load_checkpoint(opts.checkpoint, digest) if opts.checkpoint else (0, [])
    log.info(
        "search p=%d d=%d: %d x %d factored pairs, join=%s, chunks=%d (resume at %d)",
        problem.p, problem.degree, len(plan.w1_list), len(plan.w2_list), plan.join_index, len(chunks), start,
    )
    emitted = 0
    for s in found:
        if opts.limit is not None and emitted >= opts.limit:
            return
        emitted += 1
        yield s

    def finish(ci, sols):
        nonlocal found
        found = found + sols
        if opts.checkpoint:
            _save_checkpoint(opts.checkpoint, digest, ci + 1, found, ci + 1 == len(chunks))

    todo = list(range(start, len(chunks)))
    if opts.threads > 1 and len(todo) > 1:
        opts_json = {k: v for k, v in opts.__dict__.items() if k not in ("checkpoint",)}
        with ProcessPoolExecutor(opts.threads, initializer=_worker_init, initargs=(problem.to_json(), opts_json)) as ex:
            for ci, res in zip(todo, ex.map(_worker_run, [chunks[c] for c in todo])):
                sols = [FFSolution.from_json(s) for s in res]
                finish(ci, sols)
                for s in sols:
                    if opts.limit is not None and emitted >= opts.limit:
                        return
                    emitted += 1
                    yield s
        return
    index = _join_index(plan) if plan.join_index is not None else None
    for ci in todo:
        sols = _process_chunk(plan, index, *chunks[ci])
        finish(ci, sols)
        for s in sols:
            if opts.limit is not None and emitted >= opts.limit:
                return
            emitted += 1
            yield s


def search_all(problem: SearchProblem, options: SearchOptions | None = None) -> list[FFSolution]:
    return list(search(problem, options))


def map_as_forms(sol: FFSolution) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The map M^-1 o (W2/(lam W1)) as a pair of degree-d binary forms
    (numerator, denominator), given by affine coefficient lists of length d+1."""
    p, d = sol.p, sol.degree
    num = list(sol.poly(2).coeffs) + [0] * 0
    den = [c * sol.lam % p for c in sol.poly(1).coeffs]
    num += [0] * (d + 1 - len(num))
    den += [0] * (d + 1 - len(den))
    a, b, c, e = mobius_inverse(sol.mobius, p)
    # M^-1(N/D) = (a N + b D) / (c N + e D)
    out_n = tuple((a * x + b * y) % p for x, y in zip(num, den))
    out_d = tuple((c * x + e * y) % p for x, y in zip(num, den))
    return out_n, out_d


def check_problem_prime(shapes: Sequence[Partition], p: int):
    if max(max(s.parts) for s in shapes) >= p:
        raise AlgebraError(f"prime {p} must exceed every multiplicity")
