import itertools
import json
from functools import lru_cache

import pytest
import sympy

from hurwitz.algebra import Partition, PrimeField, UniPoly
from hurwitz.ffsearch import (
    FREE,
    INF,
    FFSolution,
    SearchError,
    SearchOptions,
    SearchProblem,
    count_irreducibles,
    enumerate_factored,
    lambda_set,
    monic_irreducibles,
    search,
    search_all,
)

F11 = PrimeField(11)
x = UniPoly.x(F11)


def expand(factors, p):
    F = PrimeField(p)
    out = UniPoly(F, (1,))
    for c, m in factors:
        out = out * UniPoly(F, tuple(c)) ** m
    return tuple(int(c) for c in out.coeffs)


def canon(sol: FFSolution):
    return (expand(sol.W1, sol.p), expand(sol.W2, sol.p), sol.lam % sol.p)


# --- independent oracle: sympy factorisation over F_p -----------------------


@lru_cache(maxsize=None)
def oracle_shape(coeffs: tuple, p: int, d: int):
    X = sympy.Symbol("x")
    f = sympy.Poly(list(reversed(coeffs)), X, modulus=p)
    if f.is_zero:
        return None
    parts = []
    if f.degree() > 0:
        _, facs = f.factor_list()
        parts = [m for h, m in facs for _ in range(h.degree())]
    if f.degree() < d:
        parts.append(d - f.degree())
    return tuple(sorted(parts, reverse=True))


def _unique(alpha):
    singles = [b for b, mu in Partition(alpha).compact if mu == 1]
    return max(singles)


def oracle(p, d, shapes, qs):
    """All (W1, W2, lam) with W1 monic of degree d - b1 (pole of order b1 at
    infinity) and W2 = x^b2 * monic (zero of order b2 at 0)."""
    shapes = [tuple(sorted(s, reverse=True)) for s in shapes]
    b1, b2 = _unique(shapes[0]), _unique(shapes[1])

    def monic(n):
        for tail in itertools.product(range(p), repeat=n):
            yield tail + (1,)

    W1s = [w for w in monic(d - b1) if oracle_shape(w, p, d) == shapes[0]]
    W2s = []
    for g in monic(d - b2):
        w = (0,) * b2 + g
        if g[0] % p and oracle_shape(w, p, d) == shapes[1]:
            W2s.append(w)
    out = set()
    for w1, w2 in itertools.product(W1s, W2s):
        X = sympy.Symbol("x")
        if sympy.Poly(list(reversed(w1)), X, modulus=p).gcd(sympy.Poly(list(reversed(w2)), X, modulus=p)).degree() > 0:
            continue
        for lam in range(1, p):
            ok = True
            for i in range(2, len(shapes)):
                c = lam * qs[i] % p
                wi = tuple((b - c * (w1[j] if j < len(w1) else 0)) % p for j, b in enumerate(w2))
                if oracle_shape(wi, p, d) != shapes[i]:
                    ok = False
                    break
            if ok:
                out.add((w1, w2, lam))
    return out


CASES = [
    (3, [(3,), (2, 1), (2, 1)], [INF, 0, 1]),
    (3, [(2, 1)] * 4, [INF, 0, 1, 2]),
    (3, [(2, 1)] * 4, [INF, 0, 1, 3]),
    (4, [(4,), (2, 1, 1), (2, 1, 1), (2, 1, 1)], [INF, 0, 1, 2]),
    (4, [(3, 1), (3, 1), (2, 2)], [INF, 0, 1]),
    (4, [(3, 1), (3, 1), (3, 1)], [INF, 0, 1]),
    (4, [(3, 1), (3, 1), (2, 1, 1), (2, 1, 1)], [INF, 0, 1, 3]),
]


@pytest.mark.parametrize("p", [5, 7])
@pytest.mark.parametrize("d,shapes,qs", CASES)
def test_search_complete_against_oracle(p, d, shapes, qs):
    prob = SearchProblem(p, d, tuple(shapes), tuple(qs))
    expect = oracle(p, d, shapes, [None, 0] + [q % p for q in qs[2:]])
    for opts in (SearchOptions(), SearchOptions(strategy="brute", pool=False), SearchOptions(pool=True)):
        sols = search_all(prob, opts)
        got = [canon(s) for s in sols]
        assert len(got) == len(set(got))
        assert set(got) == expect
        assert all(s.verify(prob.shapes) for s in sols)


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_cubic_reduction(p):
    # every solution is a rescaling f(a z) of 3z^2 - 2z^3, one per a in F_p^*
    sols = search_all(SearchProblem(p, 3, ((3,), (2, 1), (2, 1)), (INF, 0, 1)))
    got = {canon(s) for s in sols}
    want = set()
    for a in range(1, p):
        # 3 a^2 z^2 - 2 a^3 z^3 = z^2 (z - 3/(2a)) / (lam * 1)
        lam = -pow(2 * a**3, -1, p) % p
        r = 3 * pow(2 * a, -1, p) % p
        want.add(((1,), (0, 0, -r % p, 1), lam))
    assert got == want


def test_search_rejects_bad_problems():
    with pytest.raises(SearchError):
        SearchProblem(11, 3, ((3,), (2, 1)), (INF, 0))  # Riemann-Hurwitz
    with pytest.raises(SearchError):
        SearchProblem(3, 3, ((3,), (2, 1), (2, 1)), (INF, 0, 1))  # p too small
    with pytest.raises(SearchError):
        SearchProblem(12, 3, ((3,), (2, 1), (2, 1)), (INF, 0, 1))
    with pytest.raises(SearchError):
        SearchProblem(11, 3, ((3,), (2, 1), (2, 1)), (INF, 0, 0))
    with pytest.raises(SearchError):
        SearchProblem(11, 3, ((3,), (2, 1), (2, 1)), (INF, FREE, 1))


def test_lambda_set_contains_minus_four():
    W1 = (x - 5) ** 3 * (x**3 + 3 * x**2 + 2 * x + 3) ** 2
    W2 = x**4 * (x + 3) ** 3 * (x**3 - 3 * x - 5) ** 2
    assert 7 in lambda_set(W1, W2, 1, Partition((4, 3, 2, 2, 2)), 13)
    assert lambda_set(W1, W2, 1, Partition((13,)), 13) == set()


def test_lambda_set_squarefree_scan():
    F = PrimeField(13)
    X = UniPoly.x(F)
    W1, W2 = X + 2, X**3 + 5 * X
    got = lambda_set(W1, W2, 1, Partition((1, 1, 1)), 3)
    want = set()
    for lam in range(1, 13):
        f = W2 - W1 * F(lam)
        disc = sympy.discriminant(sympy.Poly(list(reversed([int(c) for c in f.coeffs])), sympy.Symbol("x")))
        if int(disc) % 13:
            want.add(lam)
    assert got == want


def test_enumerate_factored_counts():
    assert len(list(enumerate_factored(Partition((2, 1)), 3, pool=False))) == 9
    assert list(enumerate_factored(Partition((5,)), 7, pin=5)) == [[]]
    # (3,3,2,1,1): roles mu=(2,1,2); distinct irreducibles across all roles
    p = 11
    sols = list(enumerate_factored(Partition((3, 3, 2, 1, 1)), p, pool=True))
    n1, n2 = count_irreducibles(p, 1), count_irreducibles(p, 2)
    # products of distinct irreducibles of degree 2: pairs of linears or one quadratic
    expected = 0
    for a in itertools.product(["LL", "Q"], ["L"], ["LL", "Q"]):
        lin = sum(s.count("L") for s in a)
        quad = sum(s.count("Q") for s in a)
        ways_lin = 1
        for i in range(lin):
            ways_lin *= n1 - i
        # unordered within a role of two linears
        ways_lin //= 2 ** sum(1 for s in a if s == "LL")
        ways_quad = 1
        for i in range(quad):
            ways_quad *= n2 - i
        expected += ways_lin * ways_quad
    assert len(sols) == expected


@pytest.mark.parametrize("p,n", [(2, 4), (3, 3), (5, 2), (11, 3)])
def test_irreducible_count_necklace(p, n):
    assert len(monic_irreducibles(p, n)) == count_irreducibles(p, n)
    X = sympy.Symbol("x")
    assert all(sympy.Poly(list(reversed(f)), X, modulus=p).is_irreducible for f in monic_irreducibles(p, n))


def test_checkpoint_resume(tmp_path):
    prob = SearchProblem(11, 4, ((3, 1), (3, 1), (2, 1, 1), (2, 1, 1)), (INF, 0, 1, 3))
    full = [s.to_json() for s in search_all(prob, SearchOptions(chunk_size=1))]
    ck = str(tmp_path / "ck.json")
    it = search(prob, SearchOptions(chunk_size=1, checkpoint=ck))
    assert len(full) > 4
    first = [next(it).to_json() for _ in range(2)]
    it.close()
    state = json.load(open(ck))
    assert not state["done"]
    rest = [s.to_json() for s in search(prob, SearchOptions(chunk_size=1, checkpoint=ck))]
    assert first == full[:2]
    assert rest == full
    assert json.load(open(ck))["done"]
    other = SearchProblem(11, 4, ((3, 1), (3, 1), (2, 1, 1), (2, 1, 1)), (INF, 0, 1, 4))
    with pytest.raises(SearchError):
        list(search(other, SearchOptions(checkpoint=ck)))


def test_determinism_across_threads():
    prob = SearchProblem(11, 4, ((3, 1), (3, 1), (2, 1, 1), (2, 1, 1)), (INF, 0, 1, 3))
    a = [s.to_json() for s in search_all(prob, SearchOptions(chunk_size=2))]
    b = [s.to_json() for s in search_all(prob, SearchOptions(chunk_size=2, threads=2))]
    assert a == b


def test_solution_json_roundtrip():
    sol = search_all(SearchProblem(7, 3, ((3,), (2, 1), (2, 1)), (INF, 0, 1)))[0]
    assert FFSolution.from_json(json.loads(json.dumps(sol.to_json()))) == sol
