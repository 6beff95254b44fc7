import itertools
import random

import sympy
from conftest import P121, W121_64
from padic_oracle import hensel_root, simple_roots

from hurwitz.lattice import (
    eval_mod,
    is_lll_reduced,
    lll_reduce,
    minpoly_candidate,
    minpoly_lattice,
    recognize_algebraic,
)


def _det(rows):
    return int(sympy.Matrix(rows).det())


def _shortest(basis, bound=3):
    best = None
    for cs in itertools.product(range(-bound, bound + 1), repeat=len(basis)):
        if any(cs):
            v = [sum(c * b[i] for c, b in zip(cs, basis)) for i in range(len(basis[0]))]
            n = sum(x * x for x in v)
            best = n if best is None else min(best, n)
    return best


def test_minpoly_golden():
    c = minpoly_candidate(W121_64, 11, 64, 6)
    assert c.poly == P121
    assert eval_mod(P121, W121_64, 11**64) == 0


def test_minpoly_of_integer():
    for N in (2, 5, 9):
        c = minpoly_candidate(7, 11, N, 1)
        assert c.poly == [-7, 1]


def test_identity_basis_is_reduced():
    I = [[int(i == j) for j in range(4)] for i in range(4)]
    assert lll_reduce(I) == I


def test_lll_properties_random():
    rng = random.Random(11)
    for _ in range(30):
        n = rng.randint(2, 4)
        B = [[rng.randint(-50, 50) for _ in range(n)] for _ in range(n)]
        if _det(B) == 0:
            continue
        R = lll_reduce(B)
        assert is_lll_reduced(R)
        assert abs(_det(R)) == abs(_det(B))
        # same lattice: R = U B with U unimodular
        U = sympy.Matrix(R) * sympy.Matrix(B).inv()
        assert all(x.is_integer for x in U) and abs(U.det()) == 1
        # first vector within the LLL factor of the true minimum
        lam1 = _shortest(R, bound=2)
        assert sum(x * x for x in R[0]) <= 2 ** (n - 1) * lam1


def test_classic_2d_reduction():
    R = lll_reduce([[1, 0], [99, 1]])
    assert sorted(sum(x * x for x in r) for r in R) == [1, 1]
    R = lll_reduce([[201, 37], [1648, 297]])
    assert is_lll_reduced(R)
    assert sum(x * x for x in R[0]) == _shortest(R, bound=5)


def test_lattice_rows_vanish():
    rows = minpoly_lattice(W121_64, 11, 8, 3)
    for r in rows:
        assert eval_mod(r, W121_64, 11**8) == 0


def _planted(rng):
    while True:
        d = rng.randint(1, 4)
        poly = [rng.randint(-9, 9) for _ in range(d)] + [rng.randint(1, 6)]
        t = sympy.Symbol("t")
        P = sympy.Poly(list(reversed(poly)), t)
        if P.degree() != d or not P.is_irreducible or sympy.gcd_list(poly) != 1:
            continue
        for p in (11, 13, 17, 19, 23, 29, 31):
            if poly[-1] % p == 0:
                continue
            rs = simple_roots(poly, p)
            if rs:
                return poly, p, rs[0]


def test_planted_minpolys():
    rng = random.Random(2024)
    for _ in range(50):
        poly, p, r0 = _planted(rng)
        N = 64
        a = hensel_root(poly, r0, p, N)
        got = recognize_algebraic(lambda M: a % p**M, p, N, max_degree=6)
        assert got == poly
