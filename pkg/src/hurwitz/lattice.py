"""LLL reduction with exact rational Gram-Schmidt, and minimal polynomial
recognition of p-adic numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class DependentBasisError(ValueError):
    pass


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def gram_schmidt(basis: Sequence[Sequence[int]]):
    """(mu, B) with B[i] = |b*_i|^2, exact rationals."""
    n = len(basis)
    bstar: list[list[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    B = []
    for i in range(n):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            mu[i][j] = _dot(basis[i], bstar[j]) / B[j] if B[j] else Fraction(0)
            v = [a - mu[i][j] * b for a, b in zip(v, bstar[j])]
        bstar.append(v)
        B.append(_dot(v, v))
    return mu, B


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = Fraction(3, 4)) -> list[list[int]]:
    """Lovasz-reduced basis (rows), size-reduced with |mu| <= 1/2."""
    b = [list(map(int, v)) for v in basis]
    n = len(b)
    if n == 0:
        return b
    mu, B = gram_schmidt(b)
    if any(x == 0 for x in B):
        raise DependentBasisError("basis vectors are linearly dependent")
    half = Fraction(1, 2)

    def red(k, l):
        if abs(mu[k][l]) > half:
            q = math.floor(mu[k][l] + half)
            b[k] = [x - q * y for x, y in zip(b[k], b[l])]
            mu[k][l] -= q
            for i in range(l):
                mu[k][i] -= q * mu[l][i]

    k = 1
    while k < n:
        red(k, k - 1)
        if B[k] < (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            b[k], b[k - 1] = b[k - 1], b[k]
            for j in range(k - 1):
                mu[k][j], mu[k - 1][j] = mu[k - 1][j], mu[k][j]
            m = mu[k][k - 1]
            Bn = B[k] + m * m * B[k - 1]
            mu[k][k - 1] = m * B[k - 1] / Bn
            B[k] = B[k - 1] * B[k] / Bn
            B[k - 1] = Bn
            for i in range(k + 1, n):
                t = mu[i][k]
                mu[i][k] = mu[i][k - 1] - m * t
                mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b


def is_lll_reduced(basis, delta: Fraction = Fraction(3, 4)) -> bool:
    mu, B = gram_schmidt(basis)
    n = len(basis)
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1] for k in range(1, n))


# ---------------------------------------------------------------------------
# minimal polynomials of p-adic numbers
# ---------------------------------------------------------------------------


def minpoly_lattice(a: int, p: int, N: int, d: int) -> list[list[int]]:
    """Rows span {(c_0..c_d) : sum c_i a^i = 0 mod p^N}: p^N e_0 and e_i - a^i e_0."""
    m = p**N
    rows = [[m] + [0] * d]
    for i in range(1, d + 1):
        row = [0] * (d + 1)
        row[0] = -pow(a, i, m)
        row[i] = 1
        rows.append(row)
    return rows


def _primitive(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    g = 0
    for x in c:
        g = math.gcd(g, x)
    if g:
        c = [x // g for x in c]
    if c and c[-1] < 0:
        c = [-x for x in c]
    return c


def eval_mod(poly: Sequence[int], a: int, m: int) -> int:
    acc = 0
    for c in reversed(poly):
        acc = (acc * a + c) % m
    return acc


@dataclass
class MinpolyCandidate:
    """Result of one LLL run.

    ``status`` is ``"verified"`` when the polynomial vanishes at a finer
    approximation, ``"stable"`` when the short-vector norm did not improve
    over degree d-1, and ``"increase"`` when more precision or a larger
    degree is needed."""

    poly: list[int]  # primitive, low degree first, positive leading coefficient
    norm: float
    status: str


def minpoly_candidate(
    a_N: int,
    p: int,
    N: int,
    d: int,
    *,
    finer: tuple[int, int] | None = None,
    prev_norm: float | None = None,
) -> MinpolyCandidate:
    """Shortest vector of the degree-d lattice for ``a_N`` mod p^N.

    ``finer`` = (a_M, M) with M > N gives a better approximation for the
    vanishing test; ``prev_norm`` is the shortest norm at degree d-1."""
    m = p**N
    a = a_N % m
    red = lll_reduce(minpoly_lattice(a, p, N, d))
    v = min(red, key=lambda r: _dot(r, r))
    poly = _primitive(list(v))
    norm = math.sqrt(_dot(v, v))
    if not poly or len(poly) < 2:
        return MinpolyCandidate(poly, norm, "increase")
    if finer is not None:
        aM, M = finer
        if eval_mod(poly, aM, p**M) == 0:
            return MinpolyCandidate(poly, norm, "verified")
        return MinpolyCandidate(poly, norm, "increase")
    if prev_norm is not None and abs(norm - prev_norm) <= 1e-9 * max(1.0, prev_norm):
        return MinpolyCandidate(poly, norm, "stable")
    return MinpolyCandidate(poly, norm, "increase")


def recognize_algebraic(
    approx,
    p: int,
    N: int,
    *,
    max_degree: int = 12,
    min_degree: int = 1,
) -> list[int] | None:
    """Smallest-degree integer polynomial for a p-adic number.

    ``approx(M)`` returns the residue mod p^M for any M <= N.  LLL runs at
    precision N // 2 and the candidate must vanish mod p^N."""
    half = N // 2
    a_half = approx(half)
    a_full = approx(N)
    for d in range(min_degree, max_degree + 1):
        # the lattice determinant must dominate the coefficient height
        cand = minpoly_candidate(a_half, p, half, d, finer=(a_full, N))
        if cand.status == "verified":
            return cand.poly
    return None
