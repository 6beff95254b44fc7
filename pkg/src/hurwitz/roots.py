"""Complex roots of integer polynomials with certified inclusion radii."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .algebra import QQ, UniPoly, poly_gcd


class RootFindingError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CertifiedRoot:
    value: mpmath.mpc
    radius: mpmath.mpf

    def to_json(self, digits: int = 30) -> dict:
        return {
            "re": mpmath.nstr(self.value.real, digits),
            "im": mpmath.nstr(self.value.imag, digits),
            "radius": mpmath.nstr(self.radius, 5),
        }


def squarefree_part(coeffs: Sequence[int]) -> list[int]:
    """Primitive integer squarefree part (low degree first)."""
    f = UniPoly(QQ, [Fraction(c) for c in coeffs])
    g = poly_gcd(f, f.derivative())
    h = f.exact_div(g) if g.degree > 0 else f
    den = 1
    for c in h.coeffs:
        den = den * c.denominator // _gcd(den, c.denominator)
    ints = [int(c * den) for c in h.coeffs]
    g0 = 0
    for c in ints:
        g0 = _gcd(g0, c)
    ints = [c // g0 for c in ints]
    return ints if ints[-1] > 0 else [-c for c in ints]


def _gcd(a, b):
    import math

    return math.gcd(a, b)


def aberth(coeffs: list, dps: int, maxsteps: int = 500, init: Sequence | None = None, tol=None) -> list:
    """Aberth-Ehrlich iteration for all roots of a complex polynomial.

    ``init`` warm-starts the iteration (one guess per root).  Multiple roots
    only converge to about dps/m digits, so callers expecting them pass a
    looser relative ``tol``."""
    n = len(coeffs) - 1
    lc = mpmath.mpc(coeffs[-1])
    c = [mpmath.mpc(x) / lc for x in coeffs]
    if init is not None and len(init) == n:
        z = [mpmath.mpc(x) for x in init]
    else:
        # Cauchy bound for the initial circle
        R = 1 + max(abs(x) for x in c[:-1])
        z = [R * mpmath.expj(2 * mpmath.pi * (j + 0.25) / n) * (1 + mpmath.mpf(j) / (10 * n)) for j in range(n)]
    tol = mpmath.mpf(10) ** (-dps + 5) if tol is None else mpmath.mpf(tol)
    for _ in range(maxsteps):
        done = True
        for i in range(n):
            pv, dv = mpmath.mpc(0), mpmath.mpc(0)
            for a in reversed(c):
                dv = dv * z[i] + pv
                pv = pv * z[i] + a
            if pv == 0:
                continue
            ratio = pv / dv if dv != 0 else mpmath.mpc(tol)
            s = mpmath.fsum(1 / (z[i] - z[j]) for j in range(n) if j != i and z[i] != z[j])
            w = ratio / (1 - ratio * s)
            z[i] -= w
            if abs(w) > tol * max(1, abs(z[i])):
                done = False
        if done:
            return z
    raise RootFindingError("Aberth iteration did not converge")


def complex_roots(coeffs: Sequence[int], digits: int = 50, maxsteps: int = 500) -> list[CertifiedRoot]:
    """All roots of the squarefree part of an integer polynomial.

    Radius of root z is n*|P(z)|/|P'(z)|: the disc of that radius around any
    z contains a root.  The discs are checked to be pairwise disjoint, which
    makes the list a complete isolation."""
    P = squarefree_part(coeffs)
    n = len(P) - 1
    if n < 1:
        return []
    with mpmath.workdps(digits + 20):
        if n == 1:
            z = [mpmath.mpc(-mpmath.mpf(P[0]) / P[1])]
        else:
            z = aberth(P, digits + 20, maxsteps)
        out = []
        dP = [i * c for i, c in enumerate(P)][1:]
        for r in z:
            # polish once more with Newton at full working precision
            pv = mpmath.polyval(list(reversed(P)), r)
            dv = mpmath.polyval(list(reversed(dP)), r)
            if dv == 0:
                raise RootFindingError("derivative vanishes at an approximate root")
            r = r - pv / dv
            pv = mpmath.polyval(list(reversed(P)), r)
            dv = mpmath.polyval(list(reversed(dP)), r)
            rad = n * abs(pv) / abs(dv)
            out.append(CertifiedRoot(mpmath.mpc(r), mpmath.mpf(rad)))
        eps = mpmath.mpf(10) ** (-digits)
        for i in range(n):
            if out[i].radius > eps * max(1, abs(out[i].value)):
                raise RootFindingError("requested precision not reached")
            for j in range(i):
                if abs(out[i].value - out[j].value) <= out[i].radius + out[j].radius:
                    raise RootFindingError("inclusion discs overlap")
    out.sort(key=lambda r: (float(r.value.real), float(r.value.imag)))
    return out


def root_separation(roots: Sequence[CertifiedRoot]):
    if len(roots) < 2:
        return mpmath.inf
    return min(abs(a.value - b.value) for i, a in enumerate(roots) for b in roots[:i])
