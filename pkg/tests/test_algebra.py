import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from hurwitz.algebra import (
    QQ,
    AlgebraError,
    CharacteristicError,
    NotAFieldError,
    Partition,
    PermTuple,
    PrimeField,
    ResidueRing,
    UniPoly,
    cycle_type,
    dual_partition,
    gcd_chain,
    is_admissible,
    multiplicity_split,
    perm_conj,
    perm_from_cycles,
    perm_inv,
    perm_mul,
    perm_product,
    perm_to_cycles,
    poly_gcd,
    riemann_hurwitz_ok,
    shape_from_split,
    shape_of,
)

F11 = PrimeField(11)
x = UniPoly.x(F11)


def P(coeffs, F=F11):
    return UniPoly(F, tuple(coeffs))


def cui_w2():
    return x**4 * (x + 3) ** 3 * (x**3 - 3 * x - 5) ** 2


def sympy_shape(f: UniPoly) -> Partition:
    """Multiplicities via sympy's factorisation over F_p (independent oracle)."""
    X = sympy.Symbol("x")
    g = sympy.Poly(list(reversed([int(c) for c in f.coeffs])), X, modulus=f.ring.characteristic)
    _, facs = g.factor_list()
    return Partition(tuple(m for h, m in facs for _ in range(h.degree())))


def test_gcd_examples():
    assert poly_gcd(x**2 - 1, x - 1) == x - 1
    f = 3 * x**2 + 2
    assert poly_gcd(f, UniPoly(F11, ())) == f.monic()
    w = cui_w2()
    assert poly_gcd(w, w.derivative()) == x**3 * (x + 3) ** 2 * (x**3 - 3 * x - 5)


def test_gcd_against_sympy():
    rng = random.Random(3)
    X = sympy.Symbol("x")
    for _ in range(50):
        p = rng.choice([5, 7, 11, 101])
        F = PrimeField(p)
        a = P([rng.randrange(p) for _ in range(rng.randint(1, 8))] + [1], F)
        b = P([rng.randrange(p) for _ in range(rng.randint(1, 8))] + [1], F)
        c = P([rng.randrange(p) for _ in range(rng.randint(0, 3))] + [1], F)
        f, g = a * c, b * c
        ref = sympy.Poly(list(reversed([int(v) for v in f.coeffs])), X, modulus=p).gcd(
            sympy.Poly(list(reversed([int(v) for v in g.coeffs])), X, modulus=p)
        )
        ref = [int(v) % p for v in reversed(ref.monic().all_coeffs())]
        assert [int(v) for v in poly_gcd(f, g).coeffs] == ref


def test_shape_examples():
    f = (x - 1) ** 4 * (x - 3) ** 3 * (x**3 - 2 * x - 3) ** 2
    assert shape_of(f) == Partition((4, 3, 2, 2, 2))
    assert shape_of(f, Partition((4, 3, 2, 2, 2))) == Partition((4, 3, 2, 2, 2))
    assert shape_of(f, Partition((4, 4, 2, 2, 1))) is None
    for d in range(1, 10):
        assert shape_of(x**d) == Partition((d,))


def test_shape_random_against_factorisation():
    rng = random.Random(7)
    F = PrimeField(101)
    for _ in range(40):
        f = P([rng.randrange(101) for _ in range(6)] + [1], F)
        assert shape_of(f) == sympy_shape(f)


def test_shape_errors():
    with pytest.raises(AlgebraError):
        shape_of(UniPoly(F11, ()))
    with pytest.raises(AlgebraError):
        shape_of(UniPoly(F11, (3,)))
    with pytest.raises(NotAFieldError):
        shape_of(UniPoly(ResidueRing(11, 2), (0, 0, 1)))
    F3 = PrimeField(3)
    with pytest.raises(CharacteristicError):
        shape_of(UniPoly.x(F3) ** 3 + UniPoly(F3, (1,)))


def test_dual_partition():
    assert dual_partition(Partition((4, 3, 2, 2, 2))) == Partition((5, 5, 2, 1))
    assert dual_partition(Partition((6,))) == Partition((1,) * 6)


def test_multiplicity_split():
    split = multiplicity_split(cui_w2())
    assert split == [(x, 4), (x + 3, 3), (x**3 - 3 * x - 5, 2)]
    f = (x - 1) * (x - 2) * (x**2 + 1)
    assert multiplicity_split(3 * f) == [(f, 1)]


def test_is_admissible():
    from conftest import CUI_CYCLES

    assert is_admissible(PermTuple.from_cycles(13, CUI_CYCLES))
    for d in range(2, 9):
        up = "(" + ",".join(map(str, range(1, d + 1))) + ")"
        down = "(" + ",".join(map(str, range(d, 0, -1))) + ")"
        assert is_admissible(PermTuple.from_cycles(d, [up, down]))
    assert not is_admissible(PermTuple.from_cycles(3, ["(1,2)", "(1,2)"]))
    assert is_admissible(PermTuple.from_cycles(3, ["(1,2,3)", "(1,2)", "(2,3)"]))
    # product is not the identity
    assert not is_admissible(PermTuple.from_cycles(3, ["(1,2,3)", "(2,3)", "(1,2)"]))


def test_riemann_hurwitz():
    assert riemann_hurwitz_ok([Partition((4, 3, 2, 2, 2))] * 3, 13)
    assert not riemann_hurwitz_ok([Partition((3,)), Partition((2, 1))], 3)


def test_perm_conventions():
    a = perm_from_cycles("(1,2,3)", 3)
    b = perm_from_cycles("(1,2)", 3)
    # apply a first, then b
    assert perm_mul(a, b) == tuple(b[a[i]] for i in range(3))
    assert perm_to_cycles(a) == "(1,2,3)"
    assert perm_mul(a, perm_inv(a)) == (0, 1, 2)
    assert cycle_type(perm_conj(a, b)) == cycle_type(a)
    assert perm_product([a, b, perm_from_cycles("(2,3)", 3)], 3) == (0, 1, 2)


def test_perm_tuple_json_roundtrip():
    t = PermTuple.from_cycles(4, ["(1,2,3,4)", "(1,4,3,2)"])
    assert PermTuple.from_json(t.to_json()) == t
    assert PermTuple.from_json({"degree": 4, "perms": ["(1,2,3,4)", "(1,4,3,2)"]}) == t


# --- properties ------------------------------------------------------------

partitions = st.lists(st.integers(1, 5), min_size=1, max_size=5).map(lambda ps: Partition(tuple(ps)))


@given(partitions)
def test_dual_is_involution(alpha):
    assert dual_partition(dual_partition(alpha)) == alpha
    assert dual_partition(alpha).total == alpha.total


@settings(max_examples=100)
@given(st.data())
def test_shape_gcd_chain_duality(data):
    # 100 examples x 5 primes = 500 instances
    for p in (7, 11, 13, 17, 19):
        F = PrimeField(p)
        n = data.draw(st.integers(1, 4))
        roots = data.draw(st.lists(st.integers(0, p - 1), min_size=n, max_size=n, unique=True))
        mults = data.draw(st.lists(st.integers(1, min(5, p - 1)), min_size=n, max_size=n))
        f = UniPoly(F, (1,))
        for r, m in zip(roots, mults):
            f = f * UniPoly(F, (-r, 1)) ** m
        alpha = Partition(tuple(mults))
        assert shape_of(f) == alpha
        chain = gcd_chain(f)
        drops = [a.degree - b.degree for a, b in zip(chain, chain[1:])]
        assert Partition(tuple(drops)) == dual_partition(alpha)
        assert shape_from_split(multiplicity_split(f)) == alpha


@given(st.lists(st.fractions(max_denominator=9), min_size=1, max_size=5), st.lists(st.fractions(max_denominator=9), min_size=1, max_size=5))
def test_divmod_over_q(a, b):
    f, g = UniPoly(QQ, tuple(a)), UniPoly(QQ, tuple(b))
    if g.is_zero():
        return
    q, r = f.divmod(g)
    assert q * g + r == f
    assert r.is_zero() or r.degree < g.degree
