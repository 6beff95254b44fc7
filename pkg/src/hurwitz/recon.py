"""From p-adic approximations to exact algebraic solutions.

Coordinates are recognised one at a time as algebraic numbers; their complex
roots are stitched together into full solution vectors with compatibility
matrices built from random linear forms, and the resulting vectors are
checked exactly in Q[t]/(P_theta) for a primitive element theta.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import mpmath
import sympy

from .lattice import eval_mod, minpoly_candidate
from .roots import CertifiedRoot, complex_roots, root_separation

log = logging.getLogger(__name__)


class ReconstructionError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# number fields
# ---------------------------------------------------------------------------


class NumberField:
    """Q[t]/(P) for an integer polynomial P (low degree first)."""

    def __init__(self, poly: Sequence[int]):
        lc = Fraction(poly[-1])
        self.modulus = tuple(Fraction(c) / lc for c in poly)
        self.poly = tuple(int(c) for c in poly)
        self.degree = len(poly) - 1

    def __call__(self, coeffs) -> "NFElement":
        return NFElement(self, coeffs)

    def gen(self) -> "NFElement":
        return NFElement(self, [0, 1])

    def _reduce(self, c: list[Fraction]) -> tuple[Fraction, ...]:
        n = self.degree
        m = self.modulus
        c = list(c)
        for top in range(len(c) - 1, n - 1, -1):
            q = c[top]
            if q:
                for t in range(n + 1):
                    c[top - n + t] -= q * m[t]
        c = c[:n] + [Fraction(0)] * max(0, n - len(c))
        return tuple(c)


class NFElement:
    __slots__ = ("field", "coeffs")

    def __init__(self, field: NumberField, coeffs):
        self.field = field
        self.coeffs = field._reduce([Fraction(c) for c in coeffs])

    def _lift(self, other):
        if isinstance(other, NFElement):
            return other
        return NFElement(self.field, [other])

    def __add__(self, other):
        o = self._lift(other)
        return NFElement(self.field, [a + b for a, b in zip(self.coeffs, o.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return NFElement(self.field, [-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, NFElement):
            o = Fraction(other)
            return NFElement(self.field, [a * o for a in self.coeffs])
        out = [Fraction(0)] * (2 * self.field.degree)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return NFElement(self.field, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        out, base = NFElement(self.field, [1]), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __eq__(self, other):
        return (self - other).is_zero()

    def __hash__(self):
        return hash(self.coeffs)

    def embed(self, theta):
        return mpmath.polyval([mpmath.mpf(c.numerator) / c.denominator for c in reversed(self.coeffs)], theta)

    def __repr__(self):
        return f"NFElement({[str(c) for c in self.coeffs]})"


def factor_integer_poly(coeffs: Sequence[int]) -> list[list[int]]:
    """Irreducible factors over Z (primitive, low degree first)."""
    t = sympy.Symbol("t")
    P = sympy.Poly(list(reversed([int(c) for c in coeffs])), t, domain="ZZ")
    _, facs = P.factor_list()
    return [list(reversed([int(c) for c in f.all_coeffs()])) for f, _ in facs]


# ---------------------------------------------------------------------------
# minimal polynomials with escalation
# ---------------------------------------------------------------------------


@dataclass
class AlgebraicNumber:
    minpoly: list[int]
    root: CertifiedRoot | None = None
    padic: int | None = None

    def to_json(self) -> dict:
        out = {"minpoly": [int(c) for c in self.minpoly]}
        if self.root is not None:
            out["root"] = self.root.to_json()
        return out


def find_minpoly(
    residue: Callable[[int], int],
    p: int,
    N: int,
    *,
    max_degree: int,
    min_degree: int = 1,
    step: int = 1,
) -> list[int] | None:
    """Irreducible minimal polynomial via LLL at p^N, checked at p^(2N).

    ``residue(M)`` gives the p-adic number mod p^M.  Degrees are tried in
    multiples of ``step``; the climb stops once the shortest norm stabilises.
    Returns None when nothing verifies (more precision needed)."""
    a = residue(N)
    a2 = residue(2 * N)
    prev = None
    start = max(step, -(-min_degree // step) * step)
    for d in range(start, max_degree + 1, step):
        cand = minpoly_candidate(a, p, N, d, finer=(a2, 2 * N), prev_norm=prev)
        prev = cand.norm
        if cand.status == "stable":
            return None
        if cand.status != "verified":
            continue
        poly = cand.poly
        if len(poly) > 2:
            for f in factor_integer_poly(poly):
                if len(f) > 1 and eval_mod(f, a2, p ** (2 * N)) == 0:
                    poly = f if f[-1] > 0 else [-c for c in f]
                    break
        return poly
    return None


# ---------------------------------------------------------------------------
# compatibility matrices
# ---------------------------------------------------------------------------


@dataclass
class CompatibilityMatrix:
    M: list[list[int]]
    L: list[int]
    delta1: float
    delta2: float
    threshold: float

    @property
    def shape(self):
        return len(self.M), len(self.M[0]) if self.M else 0

    def row_sums(self):
        return [sum(r) for r in self.M]

    def col_sums(self):
        return [sum(c) for c in zip(*self.M)]

    def is_permutation(self) -> bool:
        return all(s == 1 for s in self.row_sums()) and all(s == 1 for s in self.col_sums())

    def is_valid(self, t: int) -> bool:
        """t ones per row and one per column."""
        return all(s == t for s in self.row_sums()) and all(s == 1 for s in self.col_sums())

    def is_consistent(self, total: int) -> bool:
        """Uniform row and column sums with ``total`` ones overall.

        Generalises :meth:`is_valid` to coordinates lying in a proper
        subfield, where a root of P_k extends several partial rows."""
        rs, cs = self.row_sums(), self.col_sums()
        return sum(rs) == total and len(set(rs)) == 1 and len(set(cs)) == 1 and rs[0] > 0


def compatibility_matrix(
    rows: Sequence[Sequence],
    roots: Sequence,
    L: Sequence[int],
    P_L: Sequence[int],
    *,
    delta1=None,
    delta2=None,
    factor: Fraction = Fraction(1, 3),
) -> CompatibilityMatrix:
    """M[i][j] = 1 iff |P_L(L(rows[i], roots[j]))| < factor*min(delta1, delta2)*|L|_1.

    ``rows`` hold the placed coordinates x_1..x_{k-1} of each partial
    solution; ``roots`` are the roots of P_k.  Separations default to those
    of ``roots`` and of the roots of P_L."""
    vals = lambda rs: [r.value if isinstance(r, CertifiedRoot) else mpmath.mpc(r) for r in rs]
    rts = vals(roots)
    if delta1 is None:
        delta1 = _sep(rts)
    if delta2 is None:
        delta2 = root_separation(complex_roots(P_L, mpmath.mp.dps))
    norm1 = sum(abs(c) for c in L)
    thr = mpmath.mpf(factor.numerator) / factor.denominator * min(delta1, delta2) * norm1
    coeffs = [mpmath.mpf(c) for c in reversed(P_L)]
    M = []
    for row in rows:
        base = sum((l * mpmath.mpc(x) for l, x in zip(L[:-1], row)), mpmath.mpc(0))
        M.append([1 if abs(mpmath.polyval(coeffs, base + L[-1] * r)) < thr else 0 for r in rts])
    return CompatibilityMatrix(M, list(L), float(delta1), float(delta2), float(thr))


def _sep(vals):
    if len(vals) < 2:
        return mpmath.inf
    return min(abs(a - b) for i, a in enumerate(vals) for b in vals[:i])


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------


@dataclass
class ReconOptions:
    max_degree: int = 12
    min_degree: int = 1
    digits: int = 60
    max_form_degree: int = 24
    sparse_forms: bool = True
    initial_N: int = 128
    max_N: int = 1024
    epsilon: float = 1e-6
    threshold_factor: Fraction = Fraction(1, 3)
    retries: int = 10
    seed: int = 1


@dataclass
class AlgebraicSolution:
    """One complex solution together with the exact number-field data."""

    values: list  # mpc per coordinate
    field_poly: list[int]  # P_theta
    theta: mpmath.mpc  # the embedding singling out this conjugate
    exact: list[NFElement]  # coordinates as polynomials in theta
    minpolys: list[list[int]]
    index: int = 0  # position among the conjugates

    def to_json(self, digits: int = 30) -> list[dict]:
        out = []
        for v, mp in zip(self.values, self.minpolys):
            out.append(
                {
                    "minpoly": [int(c) for c in mp],
                    "root": {"re": mpmath.nstr(v.real, digits), "im": mpmath.nstr(v.imag, digits)},
                }
            )
        return out


@dataclass
class ZeroDimSystem:
    """Equations F(x) = 0 evaluated on any ring elements, plus a p-adic feed.

    ``feed(N)`` returns all coordinates mod p^N of one p-adic solution."""

    n: int
    equations: Callable[[list], list]
    feed: Callable[[int], list[int]]
    p: int


def solve_zero_dimensional(system: ZeroDimSystem, options: ReconOptions | None = None) -> Iterator[AlgebraicSolution]:
    """Yield every exactly verified solution conjugate to the p-adic one."""
    opts = options or ReconOptions()
    rng = random.Random(opts.seed)
    p = system.p
    N = opts.initial_N
    cache: dict[int, list[int]] = {}

    def residues(M: int) -> list[int]:
        if M not in cache:
            cache[M] = system.feed(M)
        return cache[M]

    def coord(j):
        return lambda M: residues(M)[j] % p**M

    eps = mpmath.mpf(opts.epsilon)
    while True:
        try:
            table = _stitch(system, opts, rng, residues, coord, N, eps)
        except _Restart as r:
            if r.halve:
                eps /= 2
                continue
            N *= 2
            if N > opts.max_N:
                raise ReconstructionError("precision limit reached during stitching") from None
            log.info("raising p-adic precision to p^%d", N)
            continue
        rows, minpolys = table
        log.debug("stitched %d candidate rows; verifying exactly", len(rows))
        sols = _verify(system, rows, minpolys, opts, rng)
        if sols:
            yield from sols
            return
        N *= 2
        if N > opts.max_N:
            raise ReconstructionError("no candidate passed exact verification")


class _Restart(Exception):
    def __init__(self, halve: bool):
        self.halve = halve


def _stitch(system, opts, rng, residues, coord, N, eps):
    p = system.p
    digits = max(opts.digits, int(-mpmath.log10(eps)) + 20)
    mpmath.mp.dps = digits + 10
    rows: list[list] = [[]]
    minpolys: list[list[int]] = []
    skipped: list[int] = []
    order = list(range(system.n))
    pos = 0
    placed: list[int] = []
    while pos < len(order):
        j = order[pos]
        pos += 1
        P = find_minpoly(coord(j), p, N, max_degree=opts.max_degree, min_degree=opts.min_degree)
        if P is None:
            raise _Restart(False)
        roots = complex_roots(P, digits)
        if len(roots) > 1 and root_separation(roots) < eps:
            raise _Restart(True)
        rts = [r.value for r in roots]
        s = len(rows)
        if len(rts) == 1:
            rows = [r + [rts[0]] for r in rows]
        elif s == 1:
            # every placed coordinate is rational, so each root extends
            rows = [rows[0] + [r] for r in rts]
        else:
            new = _extend(rows, placed, [max(map(abs, mp)) for _, mp in minpolys], j, rts, P, opts, rng, coord, p, N, digits, eps)
            if new is None:
                if j in skipped:
                    raise _Restart(False)
                skipped.append(j)
                order.append(j)
                continue
            rows = new
        placed.append(j)
        minpolys.append((j, P))
        log.debug("coordinate %d: degree %d, %d partial rows", j, len(P) - 1, len(rows))
    # restore coordinate order
    perm = placed
    out_rows = []
    for r in rows:
        v = [None] * system.n
        for idx, j in enumerate(perm):
            v[j] = r[idx]
        out_rows.append(v)
    mp = [None] * system.n
    for j, P in minpolys:
        mp[j] = P
    return out_rows, mp


def _extend(rows, placed, heights, j, rts, P, opts, rng, coord, p, N, digits, eps):
    s = len(rows)
    nonzero = [c for c in range(-9, 10) if c]
    # a placed coordinate whose values already tell the rows apart keeps the
    # form supported on two coordinates, which keeps P_L small
    sep = None
    if opts.sparse_forms:
        tiny = mpmath.mpf(10) ** (-digits // 2)
        good = [idx for idx in range(len(placed)) if _sep([r[idx] for r in rows]) > tiny]
        if good:
            sep = min(good, key=lambda idx: heights[idx])
    for _ in range(opts.retries):
        if sep is None:
            L = [rng.randint(-9, 9) for _ in placed] + [rng.choice(nonzero)]
        else:
            L = [0] * len(placed) + [rng.choice(nonzero)]
            L[sep] = rng.choice(nonzero)

        def lval(M, L=L):
            mod = p**M
            return (sum(l * coord(i)(M) for l, i in zip(L, placed + [j]))) % mod

        PL = None
        Nl = N
        while PL is None and Nl <= opts.max_N:
            PL = find_minpoly(lval, p, Nl, max_degree=min(opts.max_form_degree, s * (len(P) - 1)), step=s)
            Nl *= 2
        if PL is None or (len(PL) - 1) % s:
            continue
        rl = complex_roots(PL, digits)
        if len(rl) > 1 and root_separation(rl) < eps:
            raise _Restart(True)
        cm = compatibility_matrix(
            rows,
            rts,
            L,
            PL,
            delta1=_sep(rts),
            delta2=root_separation(rl),
            factor=opts.threshold_factor,
        )
        total = len(PL) - 1
        if cm.is_consistent(total):
            return [r + [rts[c]] for r, mrow in zip(rows, cm.M) for c, bit in enumerate(mrow) if bit]
        log.debug("compatibility matrix rejected for coordinate %d with L=%s", j, L)
    return None


def _rationalize(x, digits: int) -> Fraction | None:
    if abs(x.imag) > mpmath.mpf(10) ** (-(digits // 2)) * max(1, abs(x.real)):
        return None
    v = x.real
    m, e = mpmath.frexp(v)
    f = Fraction(int(mpmath.ldexp(m, mpmath.mp.prec)), 1) * Fraction(2) ** (int(e) - mpmath.mp.prec)
    r = f.limit_denominator(10 ** (digits // 2 - 5))
    if abs(mpmath.mpf(r.numerator) / r.denominator - v) > mpmath.mpf(10) ** (-(3 * digits // 4)) * max(1, abs(v)):
        return None
    return r


def _verify(system, rows, minpolys, opts, rng) -> list[AlgebraicSolution]:
    s = len(rows)
    digits = mpmath.mp.dps - 10
    # primitive element: a coordinate of full degree if available, else a random form
    cands = [j for j in range(system.n) if len(minpolys[j]) - 1 == s]
    tries = 0
    while tries < opts.retries:
        tries += 1
        if cands:
            j = min(cands, key=lambda j: max(abs(c) for c in minpolys[j]))
            cands = []
            thetas = [r[j] for r in rows]
            Ptheta = minpolys[j]
        else:
            L = [rng.randint(-9, 9) for _ in range(system.n)]
            thetas = [sum((l * x for l, x in zip(L, r)), mpmath.mpc(0)) for r in rows]
            prod = [mpmath.mpc(1)]
            for th in thetas:
                prod = [mpmath.mpc(0)] + prod
                for t in range(len(prod) - 1):
                    prod[t] -= th * prod[t + 1]
            fr = [_rationalize(c, digits) for c in prod]
            if any(c is None for c in fr):
                continue
            den = 1
            for c in fr:
                den = den * c.denominator // _gcd(den, c.denominator)
            Ptheta = [int(c * den) for c in fr]
        if _sep(thetas) < mpmath.mpf(10) ** (-digits // 4):
            continue
        K = NumberField(Ptheta)
        V = mpmath.matrix([[th**e for e in range(s)] for th in thetas])
        exact = []
        ok = True
        for j in range(system.n):
            b = mpmath.matrix([r[j] for r in rows])
            c = mpmath.lu_solve(V, b)
            fr = [_rationalize(c[e], digits) for e in range(s)]
            if any(x is None for x in fr):
                ok = False
                break
            exact.append(K(fr))
        if not ok:
            continue
        log.debug("coordinates expressed in Q[t]/(P_theta); evaluating equations")
        res = system.equations(exact)
        if not all((r.is_zero() if isinstance(r, NFElement) else r == 0) for r in res):
            log.info("exact verification failed for %d candidate rows", s)
            return []
        return [
            AlgebraicSolution(values=list(r), field_poly=list(Ptheta), theta=th, exact=exact, minpolys=minpolys, index=i)
            for i, (r, th) in enumerate(zip(rows, thetas))
        ]
    return []


def _gcd(a, b):
    import math

    return math.gcd(a, b)
