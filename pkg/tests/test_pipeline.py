import random
from fractions import Fraction

import mpmath
import pytest
import sympy
from conftest import CUI_CYCLES

from hurwitz import pipeline as pl
from hurwitz.algebra import PermTuple
from hurwitz.ffsearch import INF
from hurwitz.monodromy import PrecisionExhaustedError
from hurwitz.pipeline import (
    HurwitzProblem,
    PipelineConfig,
    PrimePoolExhausted,
    ProblemError,
    _mobius_q,
    approximate_points,
    continued_fraction,
    normalizing_transform,
    run,
    select_prime,
)

CUBIC = PermTuple.from_cycles(3, ["(1,2,3)", "(1,2)", "(2,3)"])
FOUR = [
    ["(1,2)", "(1,2)", "(2,3)", "(2,3)"],
    ["(1,2)", "(2,3)", "(1,2)", "(1,3)"],
    ["(1,2)", "(2,3)", "(1,3)", "(2,3)"],
    ["(1,2)", "(2,3)", "(2,3)", "(1,2)"],
]


@pytest.fixture(scope="module")
def four_runs():
    return [run(HurwitzProblem(PermTuple.from_cycles(3, c), ("inf", 0, 1, -4))) for c in FOUR]


def cui_problem():
    return HurwitzProblem(PermTuple.from_cycles(13, CUI_CYCLES), ("inf", 0, 1))


def test_select_prime():
    pr = cui_problem()
    assert select_prime(pr) == 5
    assert select_prime(pr, [5, 7]) == 11
    third = HurwitzProblem(PermTuple.from_cycles(3, FOUR[0]), ("inf", 0, 1, "1/3"))
    assert select_prime(third) == 5
    # 6 = 1 mod 5 collides with Q_3
    clash = HurwitzProblem(PermTuple.from_cycles(3, FOUR[0]), ("inf", 0, 1, 6))
    assert select_prime(clash) == 7
    with pytest.raises(PrimePoolExhausted):
        select_prime(clash, pool=[3, 5])


def test_approximate_points():
    assert approximate_points([0.333333], 1e-6) == [Fraction(1, 3)]
    assert approximate_points([-4]) == [Fraction(-4)]
    assert approximate_points(["inf", 0, 1]) == [INF, 0, 1]
    assert continued_fraction(3.14159265, 2e-3) == Fraction(22, 7)
    assert continued_fraction(3.14159265, 1e-3) == Fraction(333, 106)
    assert continued_fraction(0.5, 1e-12) == Fraction(1, 2)


def test_normalizing_transform_random():
    rng = random.Random(1)
    for _ in range(100):
        pts = set()
        while len(pts) < 3:
            pts.add(Fraction(rng.randint(-20, 20), rng.randint(1, 9)))
        Q = list(pts)
        if rng.random() < 0.3:
            Q[rng.randrange(3)] = INF
        T = normalizing_transform(Q)
        assert [_mobius_q(T, q) for q in Q] == [INF, 0, 1]


def test_problem_validation():
    with pytest.raises(ProblemError):
        HurwitzProblem(PermTuple.from_cycles(3, ["(1,2,3)", "(1,3,2)"]), ("inf", 0))
    with pytest.raises(ProblemError):
        HurwitzProblem(PermTuple.from_cycles(3, ["(1,2)", "(1,2)", "(1,2)"]), ("inf", 0, 1))
    with pytest.raises(ProblemError):
        HurwitzProblem(CUBIC, ("inf", 0))
    with pytest.raises(ProblemError):
        HurwitzProblem(CUBIC, ("inf", 0, 1j))
    with pytest.raises(ProblemError):
        PipelineConfig.from_json({"nope": 1})
    doc = HurwitzProblem(CUBIC, ("inf", 0, 1)).to_json()
    assert HurwitzProblem.from_json(doc).sigma == CUBIC


def test_run_cubic_exact():
    res = run(HurwitzProblem(CUBIC, ("inf", 0, 1)))
    assert len(res) == 1
    cert = res.certificates[0]
    assert cert.matches
    num, den = cert.exact_map
    assert num == [0, 0, 3, -2] and den == [1]


def _critical_values(num, den):
    """Branch values of N/D with sympy, including critical points at poles and infinity."""
    z, u = sympy.symbols("z u")
    N = sum(sympy.Rational(c.numerator, c.denominator) * z**i for i, c in enumerate(num))
    D = sum(sympy.Rational(c.numerator, c.denominator) * z**i for i, c in enumerate(den))
    f = sympy.cancel(N / D)
    vals = {f.subs(z, c) for c in sympy.solve(sympy.numer(sympy.together(sympy.diff(f, z))), z)}
    if any(m > 1 for m in sympy.roots(sympy.Poly(sympy.denom(f), z)).values()):
        vals.add(INF)
    g = sympy.cancel(f.subs(z, 1 / u))
    at_inf = sympy.limit(g, u, 0)
    if at_inf in (sympy.oo, -sympy.oo, sympy.zoo):
        if abs(sympy.degree(sympy.numer(f), z) - sympy.degree(sympy.denom(f), z)) >= 2:
            vals.add(INF)
    elif sympy.limit(sympy.diff(g, u), u, 0) == 0:
        vals.add(at_inf)
    return vals


def test_run_cubic_moved_points():
    res = run(HurwitzProblem(CUBIC, (3, 0, 1)))
    assert len(res) == 1
    num, den = res.certificates[0].exact_map
    assert _critical_values(num, den) == {3, 0, 1}


@pytest.mark.parametrize("n", range(4))
def test_run_four_points(four_runs, n):
    w = -4
    res = four_runs[n]
    assert len(res.conjugates) == 4
    assert len(res) == 1
    for cert in res.conjugates:
        c = cert.exact[1]
        # f = z^2 (z + c) / (...) is f_a with a = 1/(1 + c); cleared of denominators
        assert ((2 + c) * (-c) ** 3 - w * (3 + 2 * c) ** 3).is_zero()
        den = cert.map.den
        with mpmath.workdps(30):
            cv = cert.values[1]
            assert abs(den[0] / den[1] + (2 + cv) / (3 + 2 * cv)) < 1e-20


def test_four_tuples_pick_distinct_conjugates(four_runs):
    seen = [complex(res.certificates[0].values[1]) for res in four_runs]
    assert all(abs(a - b) > 1e-6 for i, a in enumerate(seen) for b in seen[:i])


def test_monodromy_precision_escalation(monkeypatch):
    calls = []
    real = pl.monodromy_of

    def flaky(f, Q, **kw):
        calls.append(kw["digits"])
        if len(calls) == 1:
            raise PrecisionExhaustedError("forced")
        return real(f, Q, **kw)

    monkeypatch.setattr(pl, "monodromy_of", flaky)
    res = run(HurwitzProblem(CUBIC, ("inf", 0, 1)), PipelineConfig(digits=40))
    assert len(res) == 1
    assert calls == [40, 80]
    assert any(h.get("retry") == "PrecisionExhaustedError" for h in res.history)


def test_history_records_stages(four_runs):
    res = four_runs[0]
    stages = [h["stage"] for h in res.history]
    assert stages[0] == "search" and res.history[0]["prime"] == 3 and res.history[0]["solutions"] == 0
    for s in ("normalise", "lift", "promote", "monodromy"):
        assert s in stages
