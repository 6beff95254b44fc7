import random

import mpmath
import numpy as np
from conftest import P121

from hurwitz.roots import aberth, complex_roots, root_separation, squarefree_part


def test_printed_roots():
    roots = [complex(r.value) for r in complex_roots(P121, 30)]
    for want in (-0.150 + 0.807j, -0.5 + 0.440j, -0.850 + 0.807j):
        for w in (want, want.conjugate()):
            assert min(abs(z - w) for z in roots) < 5e-4


def test_i():
    roots = complex_roots([1, 0, 1], 40)
    assert len(roots) == 2
    with mpmath.workdps(40):
        assert abs(roots[0].value + 1j) < mpmath.mpf(10) ** -38
        assert abs(roots[1].value - 1j) < mpmath.mpf(10) ** -38


def test_squarefree_part():
    # (t - 1)^3 (t + 2)^2 (t^2 + 1)
    p = np.polynomial.polynomial
    f = p.polymul(p.polymul(p.polypow([-1, 1], 3), p.polypow([2, 1], 2)), [1, 0, 1])
    assert squarefree_part([int(c) for c in f]) == [int(c) for c in p.polymul(p.polymul([-1, 1], [2, 1]), [1, 0, 1])]
    assert len(complex_roots([int(c) for c in f], 30)) == 4


def test_radii_contain_roots_random():
    rng = random.Random(6)
    for _ in range(20):
        n = rng.randint(2, 7)
        poly = [rng.randint(-20, 20) for _ in range(n)] + [rng.randint(1, 5)]
        sf = squarefree_part(poly)
        roots = complex_roots(poly, 30)
        assert len(roots) == len(sf) - 1
        ref = np.roots(list(reversed(sf)))
        for r in roots:
            assert min(abs(complex(r.value) - z) for z in ref) < 1e-6
            assert r.radius < mpmath.mpf(10) ** -30 * max(1, abs(r.value))
        assert root_separation(roots) > 0


def test_aberth_warm_start():
    with mpmath.workdps(40):
        c = [mpmath.mpc(-6), 11, -6, 1]  # (t-1)(t-2)(t-3)
        z = aberth(c, 40, init=[1.1, 2.1, 2.9])
        assert sorted(round(float(x.real), 12) for x in z) == [1.0, 2.0, 3.0]
