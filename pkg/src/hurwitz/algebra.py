"""Exact arithmetic: coefficient rings, dense univariate polynomials,
partitions, gcd chains and permutation tuples.

Polynomials are stored lowest degree first with no trailing zeros, so the
zero polynomial is the empty tuple.  Coefficient rings are tiny objects that
know how to normalise and invert their elements; the elements themselves are
plain Python numbers (``int``, ``Fraction`` or ``mpmath.mpc``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import groupby
from typing import Iterable, Sequence


class AlgebraError(ValueError):
    pass


class NotAFieldError(AlgebraError):
    pass


class CharacteristicError(AlgebraError):
    """A root multiplicity is not smaller than the characteristic."""


# ---------------------------------------------------------------------------
# coefficient rings
# ---------------------------------------------------------------------------


class Ring:
    is_field = False
    characteristic = 0

    def __call__(self, x):
        return self.normalize(x)

    def normalize(self, x):
        return x

    def is_zero(self, x) -> bool:
        return x == 0

    def inv(self, x):
        raise NotImplementedError


class _Modular(Ring):
    """Integers modulo ``modulus`` with canonical representatives in [0, m)."""

    modulus: int

    def normalize(self, x):
        return int(x) % self.modulus

    def inv(self, x):
        try:
            return pow(int(x), -1, self.modulus)
        except ValueError:
            raise ZeroDivisionError(f"{x} is not a unit mod {self.modulus}") from None

    def balanced(self, x) -> int:
        x = int(x) % self.modulus
        return x - self.modulus if x > self.modulus // 2 else x

    def __eq__(self, other):
        return type(self) is type(other) and self.modulus == other.modulus

    def __hash__(self):
        return hash((type(self).__name__, self.modulus))


class PrimeField(_Modular):
    is_field = True

    def __init__(self, p: int):
        if p < 2 or not is_prime(p):
            raise AlgebraError(f"{p} is not prime")
        self.p = self.modulus = self.characteristic = p

    def __repr__(self):
        return f"GF({self.p})"


class ResidueRing(_Modular):
    """Z/p^N."""

    def __init__(self, p: int, N: int):
        if N < 1:
            raise AlgebraError("precision exponent must be positive")
        self.p, self.N = p, N
        self.modulus = self.characteristic = p**N
        self.is_field = N == 1

    def inv(self, x):
        if int(x) % self.p == 0:
            raise ZeroDivisionError(f"{x} is not a unit mod {self.p}^{self.N}")
        return pow(int(x), -1, self.modulus)

    def __repr__(self):
        return f"Z/{self.p}^{self.N}"


class _Rationals(Ring):
    is_field = True

    def normalize(self, x):
        return x if isinstance(x, Fraction) else Fraction(x)

    def inv(self, x):
        return 1 / Fraction(x)

    def __repr__(self):
        return "QQ"


class _Integers(Ring):
    def normalize(self, x):
        return int(x)

    def inv(self, x):
        if x in (1, -1):
            return x
        raise ZeroDivisionError(f"{x} is not a unit in ZZ")

    def __repr__(self):
        return "ZZ"


class ComplexField(Ring):
    """Multiprecision complex numbers; division is inexact."""

    is_field = True

    def __init__(self, digits: int = 50):
        self.digits = digits

    def normalize(self, x):
        import mpmath

        return mpmath.mpc(x)

    def inv(self, x):
        return 1 / x

    def __repr__(self):
        return f"CC({self.digits})"


QQ = _Rationals()
ZZ = _Integers()


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_between(lo: int, hi: int) -> Iterable[int]:
    """Primes p with lo < p < hi, ascending."""
    for n in range(max(lo + 1, 2), hi):
        if is_prime(n):
            yield n


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


def _trim(ring: Ring, coeffs: Iterable) -> tuple:
    cs = [ring.normalize(c) for c in coeffs]
    while cs and ring.is_zero(cs[-1]):
        cs.pop()
    return tuple(cs)


class UniPoly:
    """Dense univariate polynomial over ``ring``; immutable."""

    __slots__ = ("ring", "coeffs", "__dict__")

    def __init__(self, ring: Ring, coeffs: Iterable = (), *, _trusted: bool = False):
        self.ring = ring
        self.coeffs = tuple(coeffs) if _trusted else _trim(ring, coeffs)

    # construction helpers
    @classmethod
    def x(cls, ring: Ring) -> "UniPoly":
        return cls(ring, (0, 1))

    @classmethod
    def constant(cls, ring: Ring, c) -> "UniPoly":
        return cls(ring, (c,))

    @classmethod
    def from_roots(cls, ring: Ring, roots: Iterable) -> "UniPoly":
        out = cls(ring, (1,))
        for r in roots:
            out = out * cls(ring, (-r, 1))
        return out

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lc(self):
        return self.coeffs[-1] if self.coeffs else self.ring.normalize(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __repr__(self):
        return f"UniPoly({self.ring!r}, {list(self.coeffs)})"

    def __str__(self):
        return format_poly(self)

    def __eq__(self, other):
        if isinstance(other, UniPoly):
            return self.coeffs == other.coeffs
        if other == 0:
            return not self.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else self.ring.normalize(0)

    # arithmetic
    def _coerce(self, other) -> "UniPoly":
        if isinstance(other, UniPoly):
            return other
        return UniPoly(self.ring, (other,))

    def __add__(self, other):
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return UniPoly(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return UniPoly(self.ring, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, UniPoly):
            return UniPoly(self.ring, [c * other for c in self.coeffs])
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return UniPoly(self.ring, ())
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
        return UniPoly(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise AlgebraError("negative power of a polynomial")
        result = UniPoly(self.ring, (1,))
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def divmod(self, other: "UniPoly") -> tuple["UniPoly", "UniPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        ring = self.ring
        inv_lc = ring.inv(other.lc)
        rem = list(self.coeffs)
        db = other.degree
        q = [0] * max(len(rem) - db, 0)
        b = other.coeffs
        for k in range(len(rem) - 1 - db, -1, -1):
            c = ring.normalize(rem[k + db] * inv_lc)
            if ring.is_zero(c):
                continue
            q[k] = c
            for j in range(db + 1):
                rem[k + j] = ring.normalize(rem[k + j] - c * b[j])
        return UniPoly(ring, q), UniPoly(ring, rem[:db] if db > 0 else ())

    def __floordiv__(self, other):
        return self.divmod(self._coerce(other))[0]

    def __mod__(self, other):
        return self.divmod(self._coerce(other))[1]

    def exact_div(self, other: "UniPoly") -> "UniPoly":
        q, r = self.divmod(other)
        if not r.is_zero():
            raise AlgebraError("division is not exact")
        return q

    def monic(self) -> "UniPoly":
        if self.is_zero():
            return self
        inv = self.ring.inv(self.lc)
        return UniPoly(self.ring, [c * inv for c in self.coeffs])

    def derivative(self) -> "UniPoly":
        return UniPoly(self.ring, [i * c for i, c in enumerate(self.coeffs)][1:])

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return self.ring.normalize(acc) if isinstance(x, int) else acc

    def map_coeffs(self, ring: Ring, fn=lambda c: c) -> "UniPoly":
        return UniPoly(ring, [fn(c) for c in self.coeffs])

    def taylor_shift(self, r) -> "UniPoly":
        """f(x + r)."""
        out = UniPoly(self.ring, ())
        shift = UniPoly(self.ring, (r, 1))
        for c in reversed(self.coeffs):
            out = out * shift + c
        return out

    def to_json(self) -> dict:
        ring = self.ring
        if isinstance(ring, PrimeField):
            return {"ring": "Fp", "p": ring.p, "coeffs": list(self.coeffs)}
        if isinstance(ring, ResidueRing):
            return {"ring": "Zp^N", "p": ring.p, "N": ring.N, "coeffs": [str(c) for c in self.coeffs]}
        if ring is QQ:
            return {"ring": "QQ", "coeffs": [str(c) for c in self.coeffs]}
        if ring is ZZ:
            return {"ring": "ZZ", "coeffs": [str(c) for c in self.coeffs]}
        raise AlgebraError(f"no JSON encoding for {ring!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "UniPoly":
        kind = obj["ring"]
        if kind == "Fp":
            return cls(PrimeField(int(obj["p"])), [int(c) for c in obj["coeffs"]])
        if kind == "Zp^N":
            return cls(ResidueRing(int(obj["p"]), int(obj["N"])), [int(c) for c in obj["coeffs"]])
        if kind == "QQ":
            return cls(QQ, [Fraction(c) for c in obj["coeffs"]])
        if kind == "ZZ":
            return cls(ZZ, [int(c) for c in obj["coeffs"]])
        raise AlgebraError(f"unknown ring {kind!r}")


def format_poly(f: UniPoly, var: str = "x") -> str:
    if f.is_zero():
        return "0"
    bal = f.ring.balanced if isinstance(f.ring, _Modular) else (lambda c: c)
    terms = []
    for i in range(f.degree, -1, -1):
        c = bal(f.coeffs[i])
        if c == 0:
            continue
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        if mono and c == 1:
            s = mono
        elif mono and c == -1:
            s = "-" + mono
        else:
            s = f"{c}{'*' + mono if mono else ''}"
        terms.append(s)
    return " + ".join(terms).replace("+ -", "- ")


def poly_gcd(f: UniPoly, g: UniPoly) -> UniPoly:
    """Monic gcd over a field; gcd(0, 0) is 0."""
    if not f.ring.is_field:
        raise NotAFieldError(f"gcd requires a field, got {f.ring!r}")
    a, b = f, g
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def product(polys: Iterable[UniPoly], ring: Ring) -> UniPoly:
    out = UniPoly(ring, (1,))
    for p in polys:
        out = out * p
    return out


def expand_factored(factors: Sequence[tuple[UniPoly, int]], ring: Ring) -> UniPoly:
    return product((f**m for f, m in factors), ring)


# ---------------------------------------------------------------------------
# partitions and shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts:
            raise AlgebraError("empty partition")
        if any(p < 1 for p in parts):
            raise AlgebraError(f"non-positive part in {parts}")
        object.__setattr__(self, "parts", tuple(sorted(parts, reverse=True)))

    @classmethod
    def of(cls, *parts: int) -> "Partition":
        return cls(tuple(parts))

    @property
    def total(self) -> int:
        return sum(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"

    @cached_property
    def compact(self) -> tuple[tuple[int, int], ...]:
        """Run-length form ((beta_1, mu_1), ...) with beta strictly decreasing."""
        return tuple((b, len(list(g))) for b, g in groupby(self.parts))

    @property
    def defect(self) -> int:
        return sum(a - 1 for a in self.parts)

    def dual(self) -> "Partition":
        return dual_partition(self)

    def to_json(self) -> list[int]:
        return list(self.parts)


def dual_partition(alpha: Partition) -> Partition:
    parts = alpha.parts
    return Partition(tuple(sum(1 for a in parts if a >= j) for j in range(1, parts[0] + 1)))


def _check_shape_input(f: UniPoly):
    if f.is_zero():
        raise AlgebraError("shape of the zero polynomial is undefined")
    if f.degree < 1:
        raise AlgebraError("shape needs a polynomial of positive degree")
    if not f.ring.is_field:
        raise NotAFieldError(f"shape requires a field, got {f.ring!r}")


def gcd_chain(f: UniPoly, stop_after: int | None = None) -> list[UniPoly]:
    """[g_0, g_1, ...] with g_e = gcd(f, f', ..., f^(e)), until g_e = 1."""
    chain = [f.monic()]
    deriv = f
    while chain[-1].degree > 0:
        if stop_after is not None and len(chain) > stop_after:
            break
        deriv = deriv.derivative()
        chain.append(poly_gcd(chain[-1], deriv))
    return chain


def shape_of(f: UniPoly, target: Partition | None = None) -> Partition | None:
    """Multiset of root multiplicities of ``f`` over the algebraic closure.

    With ``target`` given, the gcd chain is abandoned as soon as a degree
    drop disagrees with the dual of the target, and None is returned.
    """
    _check_shape_input(f)
    p = f.ring.characteristic
    d = f.degree
    if target is not None:
        if target.total != d:
            return None
        expect = dual_partition(target).parts
    g = f.monic()
    deriv = f
    duals = []
    e = 0
    while g.degree > 0:
        e += 1
        if p and e >= p:
            # a root of multiplicity >= p would survive every derivative
            raise CharacteristicError(f"root multiplicity >= characteristic {p}")
        deriv = deriv.derivative()
        nxt = poly_gcd(g, deriv)
        drop = g.degree - nxt.degree
        if drop == 0:
            raise CharacteristicError(f"derivative chain of {f} stalls in characteristic {p}")
        if target is not None and (e > len(expect) or drop != expect[e - 1]):
            return None
        duals.append(drop)
        g = nxt
    if any(duals[i] < duals[i + 1] for i in range(len(duals) - 1)):
        raise CharacteristicError(f"gcd chain of {f} is not a dual partition (char {p})")
    shape = dual_partition(Partition(tuple(duals)))
    if target is not None and shape != target:
        return None
    return shape


def multiplicity_split(f: UniPoly) -> list[tuple[UniPoly, int]]:
    """Coprime monic f_j with f = lc * prod f_j^beta_j, beta strictly decreasing."""
    _check_shape_input(f)
    p = f.ring.characteristic
    chain = [f.monic()]
    deriv = f
    while chain[-1].degree > 0:
        if p and len(chain) >= p:
            raise CharacteristicError(f"root multiplicity >= characteristic {p}")
        deriv = deriv.derivative()
        chain.append(poly_gcd(chain[-1], deriv))
    # h_e = g_{e-1}/g_e is the product of the roots of multiplicity >= e
    h = [chain[e - 1].exact_div(chain[e]) for e in range(1, len(chain))]
    h.append(UniPoly(f.ring, (1,)))
    out = []
    for e in range(len(h) - 1, 0, -1):
        piece = h[e - 1].exact_div(h[e])
        if piece.degree > 0:
            out.append((piece, e))
    if sum(q.degree * m for q, m in out) != f.degree:
        raise CharacteristicError(f"multiplicity split of {f} is inconsistent (char {p})")
    return out


def shape_from_split(split: Sequence[tuple[UniPoly, int]]) -> Partition:
    return Partition(tuple(m for q, m in split for _ in range(q.degree)))


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------

Perm = tuple[int, ...]  # 0-based image list


def perm_mul(a: Perm, b: Perm) -> Perm:
    """Left-to-right product: apply ``a`` first, then ``b``."""
    return tuple(b[i] for i in a)


def perm_inv(a: Perm) -> Perm:
    out = [0] * len(a)
    for i, j in enumerate(a):
        out[j] = i
    return tuple(out)


def perm_identity(d: int) -> Perm:
    return tuple(range(d))


def perm_conj(a: Perm, t: Perm) -> Perm:
    """a^t = t^-1 a t."""
    return perm_mul(perm_mul(perm_inv(t), a), t)


def perm_product(perms: Iterable[Perm], d: int) -> Perm:
    out = perm_identity(d)
    for p in perms:
        out = perm_mul(out, p)
    return out


def cycles(a: Perm) -> list[tuple[int, ...]]:
    seen = [False] * len(a)
    out = []
    for i in range(len(a)):
        if seen[i]:
            continue
        cyc = []
        j = i
        while not seen[j]:
            seen[j] = True
            cyc.append(j)
            j = a[j]
        out.append(tuple(cyc))
    return out


def cycle_type(a: Perm) -> Partition:
    return Partition(tuple(len(c) for c in cycles(a)))


def perm_from_cycles(text: str, d: int) -> Perm:
    """Parse 1-based cycle notation like ``(1,7,11,2)(3,8)``."""
    img = list(range(d))
    for body in re.findall(r"\(([^()]*)\)", text):
        pts = [int(s) - 1 for s in re.split(r"[,\s]+", body.strip()) if s]
        for a, b in zip(pts, pts[1:] + pts[:1]):
            img[a] = b
    if sorted(img) != list(range(d)):
        raise AlgebraError(f"not a permutation: {text}")
    return tuple(img)


def perm_to_cycles(a: Perm) -> str:
    cs = [c for c in cycles(a) if len(c) > 1]
    if not cs:
        return "()"
    return "".join("(" + ",".join(str(i + 1) for i in c) + ")" for c in cs)


@dataclass(frozen=True)
class PermTuple:
    degree: int
    perms: tuple[Perm, ...]

    def __post_init__(self):
        perms = tuple(tuple(int(i) for i in p) for p in self.perms)
        for p in perms:
            if len(p) != self.degree or sorted(p) != list(range(self.degree)):
                raise AlgebraError(f"not a permutation of degree {self.degree}: {p}")
        object.__setattr__(self, "perms", perms)

    @classmethod
    def from_cycles(cls, d: int, texts: Sequence[str]) -> "PermTuple":
        return cls(d, tuple(perm_from_cycles(t, d) for t in texts))

    @property
    def k(self) -> int:
        return len(self.perms)

    def shapes(self) -> list[Partition]:
        return [cycle_type(p) for p in self.perms]

    def product(self) -> Perm:
        return perm_product(self.perms, self.degree)

    def conjugate(self, t: Perm) -> "PermTuple":
        return PermTuple(self.degree, tuple(perm_conj(p, t) for p in self.perms))

    def is_transitive(self) -> bool:
        if self.degree == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for p in self.perms:
                j = p[i]
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.degree

    def to_json(self) -> dict:
        return {"degree": self.degree, "perms": [[i + 1 for i in p] for p in self.perms]}

    @classmethod
    def from_json(cls, obj: dict) -> "PermTuple":
        d = int(obj["degree"])
        perms = []
        for p in obj["perms"]:
            if isinstance(p, str):
                perms.append(perm_from_cycles(p, d))
            else:
                perms.append(tuple(int(i) - 1 for i in p))
        return cls(d, tuple(perms))

    def __str__(self):
        return "[" + ", ".join(perm_to_cycles(p) for p in self.perms) + "]"


def is_admissible(sigma: PermTuple) -> bool:
    d = sigma.degree
    if d < 1:
        return False
    if sigma.product() != perm_identity(d):
        return False
    if sum(cycle_type(p).defect for p in sigma.perms) != 2 * d - 2:
        return False
    return sigma.is_transitive()


def riemann_hurwitz_ok(shapes: Sequence[Partition], d: int) -> bool:
    return all(a.total == d for a in shapes) and sum(a.defect for a in shapes) == 2 * d - 2


def balanced(x: int, m: int) -> int:
    x %= m
    return x - m if x > m // 2 else x


def lcm_list(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out = out * x // math.gcd(out, x)
    return out
