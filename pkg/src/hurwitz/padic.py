"""Hensel lifting of a coherent solution from F_p to Z/p^N.

The unknowns are the non-leading coefficients of the monic factors
``W_{i,j} = x^mu + w_{i,j,1} x^(mu-1) + ... + w_{i,j,mu}`` (pinned factors
excluded) followed by lam.  The equations are the coefficients of
``F_i = W_i + lam*q_i*W_1 - W_2`` for i >= 3 in degrees 0..d-1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .algebra import Partition, balanced
from .ffsearch import FFSolution, INF

log = logging.getLogger(__name__)


class LiftError(ArithmeticError):
    """Lifting impossible at this prime; the pipeline restarts with another."""


class NotNormalizableError(LiftError):
    pass


class SingularJacobianError(LiftError):
    pass


# ---------------------------------------------------------------------------
# generic dense polynomial helpers (coefficients support + and *)
# ---------------------------------------------------------------------------


def _pmul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _ppow(a, n):
    out = [1]
    for _ in range(n):
        out = _pmul(out, a)
    return out


def _padd(a, b, cb=1):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return [x + cb * y for x, y in zip(a, b)]


@dataclass(frozen=True)
class Role:
    """One factor W_{i,j}: its multiplicity, degree and pinned root (None = free).

    ``pinned`` is INF for the pole at infinity or an integer root (0 or 1)."""

    beta: int
    mu: int
    pinned: object = None
    split_from: int | None = None  # original mu when this is a split-off linear factor


@dataclass
class ResidueVector:
    entries: list[int]
    p: int
    N: int

    @property
    def modulus(self) -> int:
        return self.p**self.N

    def balanced(self) -> list[int]:
        return [balanced(e, self.modulus) for e in self.entries]

    def reduce(self, N: int) -> "ResidueVector":
        m = self.p**N
        return ResidueVector([e % m for e in self.entries], self.p, N)

    def to_json(self) -> dict:
        return {"p": self.p, "N": self.N, "entries": [str(e) for e in self.balanced()]}

    @classmethod
    def from_json(cls, obj) -> "ResidueVector":
        p, N = int(obj["p"]), int(obj["N"])
        return cls([int(e) % p**N for e in obj["entries"]], p, N)


@dataclass
class CoherentSystem:
    p: int
    N: int
    degree: int
    shapes: tuple[Partition, ...]
    roles: list[list[Role]]  # per i, factor roles with the pinned one first
    qs: list  # q_1 = INF, q_2 = 0, q_i exact (int/Fraction) for i >= 3
    values: ResidueVector
    meta: dict = field(default_factory=dict)

    # -- layout ---------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.shapes)

    @property
    def modulus(self) -> int:
        return self.p**self.N

    def variable_slots(self) -> list[tuple[int, int, int]]:
        """(i, j, s) per unknown, 1-based, in vector order; lam is last."""
        out = []
        for i, roles in enumerate(self.roles, start=1):
            for j, r in enumerate(roles, start=1):
                if r.pinned is None:
                    out.extend((i, j, s) for s in range(1, r.mu + 1))
        return out

    def q_mod(self, i: int, m: int | None = None) -> int:
        """q_i (1-based) as a residue mod p^N."""
        m = m or self.modulus
        q = self.qs[i - 1]
        q = Fraction(q)
        return q.numerator * pow(q.denominator, -1, m) % m

    # -- polynomial assembly over any coefficient type ------------------

    def factor_polys(self, vals: Sequence) -> list[list[list]]:
        """Monic factor coefficient lists (low degree first) per i and j."""
        it = iter(vals)
        out = []
        for roles in self.roles:
            row = []
            for r in roles:
                if r.pinned == INF:
                    row.append(None)
                elif r.pinned is not None:
                    row.append([-r.pinned, 1])
                else:
                    w = [next(it) for _ in range(r.mu)]
                    row.append(list(reversed(w)) + [1])
            out.append(row)
        return out

    def W_polys(self, vals: Sequence) -> list[list]:
        out = []
        for roles, facs in zip(self.roles, self.factor_polys(vals)):
            W = [1]
            for r, f in zip(roles, facs):
                if f is not None:
                    W = _pmul(W, _ppow(f, r.beta))
            out.append(W)
        return out

    def residual_generic(self, vals: Sequence, lam, qvals: Sequence) -> list:
        """Coefficients 0..d-1 of F_3..F_k; ``qvals[i]`` is q_i for 1-based i."""
        W = self.W_polys(vals)
        d = self.degree
        out = []
        for i in range(3, self.k + 1):
            F = _padd(_padd(W[i - 1], [c * lam * qvals[i] for c in W[0]]), W[1], -1)
            F = F + [0] * (d + 1 - len(F))
            if any(F[d:]):
                # the x^d coefficient cancels identically (both monic)
                pass
            out.extend(F[:d])
        return out

    def _qvals(self, m: int) -> list:
        return [None, None, 0] + [self.q_mod(i, m) for i in range(3, self.k + 1)]

    # -- residual and Jacobian mod p^N ----------------------------------

    def residual_at(self, entries: Sequence[int], m: int) -> list[int]:
        vals, lam = list(entries[:-1]), entries[-1]
        return [c % m for c in self.residual_generic(vals, lam, self._qvals(m))]

    def jacobian_at(self, entries: Sequence[int], m: int) -> list[list[int]]:
        d = self.degree
        vals, lam = list(entries[:-1]), entries[-1]
        facs = self.factor_polys(vals)
        qv = self._qvals(m)
        n = len(entries)
        rows = (self.k - 2) * d
        if rows != n:
            raise LiftError(f"{rows} equations for {n} unknowns: malformed shapes")
        J = [[0] * n for _ in range(rows)]
        W = self.W_polys(vals)
        col = 0
        for i, (roles, fs) in enumerate(zip(self.roles, facs), start=1):
            for j, (r, f) in enumerate(zip(roles, fs)):
                if r.pinned is not None:
                    continue
                # dW_i/dw_{i,j,s} = beta f^(beta-1) x^(mu-s) * prod_{other} f'^beta'
                rest = [1]
                for jj, (rr, ff) in enumerate(zip(roles, fs)):
                    if jj != j and ff is not None:
                        rest = _pmul(rest, _ppow(ff, rr.beta))
                base = _pmul(rest, [c * r.beta for c in _ppow(f, r.beta - 1)])
                for s in range(1, r.mu + 1):
                    dW = [0] * (r.mu - s) + base
                    for e in range(3, self.k + 1):
                        if i == 1:
                            coef = [c * lam * qv[e] for c in dW]
                        elif i == 2:
                            coef = [-c for c in dW]
                        elif i == e:
                            coef = dW
                        else:
                            continue
                        for t in range(min(d, len(coef))):
                            J[(e - 3) * d + t][col] = coef[t] % m
                    col += 1
        for e in range(3, self.k + 1):
            for t in range(min(d, len(W[0]))):
                J[(e - 3) * d + t][col] = W[0][t] * qv[e] % m
        return J

    def residual(self) -> list[int]:
        return self.residual_at(self.values.entries, self.modulus)

    def jacobian(self) -> list[list[int]]:
        return self.jacobian_at(self.values.entries, self.modulus)

    # -- misc -----------------------------------------------------------

    def reduce(self, N: int) -> "CoherentSystem":
        return CoherentSystem(self.p, N, self.degree, self.shapes, self.roles, self.qs, self.values.reduce(N), dict(self.meta))

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "N": self.N,
            "degree": self.degree,
            "shapes": [s.to_json() for s in self.shapes],
            "roles": [
                [
                    {"beta": r.beta, "mu": r.mu, "pinned": r.pinned, **({"split_from": r.split_from} if r.split_from else {})}
                    for r in roles
                ]
                for roles in self.roles
            ],
            "q": [q if q in (INF, None) else str(Fraction(q)) for q in self.qs],
            "values": self.values.to_json(),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj) -> "CoherentSystem":
        roles = [[Role(r["beta"], r["mu"], r.get("pinned"), r.get("split_from")) for r in rs] for rs in obj["roles"]]
        qs = [q if q == INF else Fraction(q) for q in obj["q"]]
        return cls(
            int(obj["p"]),
            int(obj["N"]),
            int(obj["degree"]),
            tuple(Partition(tuple(s)) for s in obj["shapes"]),
            roles,
            qs,
            ResidueVector.from_json(obj["values"]),
            dict(obj.get("meta", {})),
        )


def coherence_residual(sys: CoherentSystem):
    """(F_3, ..., F_k) as coefficient lists mod p^N, each of length d."""
    flat = sys.residual()
    d = sys.degree
    return [flat[t * d : (t + 1) * d] for t in range(sys.k - 2)]


def jacobian(sys: CoherentSystem) -> list[list[int]]:
    return sys.jacobian()


# ---------------------------------------------------------------------------
# linear algebra mod p^N
# ---------------------------------------------------------------------------


def mat_inverse_mod(A: Sequence[Sequence[int]], p: int, N: int) -> list[list[int]]:
    """Gauss-Jordan over Z/p^N choosing pivots that are units (not divisible by p)."""
    m = p**N
    n = len(A)
    M = [[x % m for x in row] + [int(i == j) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] % p), None)
        if piv is None:
            raise SingularJacobianError("Jacobian is singular mod p")
        M[c], M[piv] = M[piv], M[c]
        inv = pow(M[c][c], -1, m)
        M[c] = [x * inv % m for x in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [(x - f * y) % m for x, y in zip(M[r], M[c])]
    return [row[n:] for row in M]


def mat_mul_mod(A, B, m: int):
    Bt = list(zip(*B))
    return [[sum(x * y for x, y in zip(row, col)) % m for col in Bt] for row in A]


def mat_vec_mod(A, v, m: int):
    return [sum(x * y for x, y in zip(row, v)) % m for row in A]


# ---------------------------------------------------------------------------
# Hensel
# ---------------------------------------------------------------------------


def hensel_step(sys: CoherentSystem, Jinv: list[list[int]]) -> tuple[CoherentSystem, list[list[int]]]:
    """One Newton step: precision p^N -> p^(2N), inverse Jacobian updated alongside."""
    p, N = sys.p, sys.N
    pN = p**N
    m2 = pN * pN
    a = sys.values.entries
    F = sys.residual_at(a, m2)
    if any(f % pN for f in F):
        raise LiftError(f"residual not divisible by p^{N}")
    Fs = [f // pN for f in F]
    b = [(-x) % pN for x in mat_vec_mod(Jinv, Fs, pN)]
    a2 = [(x + pN * y) % m2 for x, y in zip(a, b)]
    # B' = B - p^N B C where J(a') B = 1 + p^N C
    J2 = sys.jacobian_at(a2, m2)
    JB = mat_mul_mod(J2, Jinv, m2)
    n = len(JB)
    C = [[((JB[i][j] - (i == j)) % m2) // pN for j in range(n)] for i in range(n)]
    if any((JB[i][j] - (i == j)) % pN for i in range(n) for j in range(n)):
        raise LiftError("inverse Jacobian is not an inverse mod p^N")
    BC = mat_mul_mod(Jinv, C, m2)
    B2 = [[(x - pN * y) % m2 for x, y in zip(r1, r2)] for r1, r2 in zip(Jinv, BC)]
    out = CoherentSystem(p, 2 * N, sys.degree, sys.shapes, sys.roles, sys.qs, ResidueVector(a2, p, 2 * N), dict(sys.meta))
    return out, B2


def system_from_solution(sol: FFSolution, q_lifts: Sequence | None = None) -> CoherentSystem:
    """Normalised F_p system from a search solution.

    Requires pinned linear factors of W_1 at infinity and W_2 at 0.  A third
    linear factor, of some W_i with i >= 3, is moved to 1 by the substitution
    x -> r x.  When the only rational root of that multiplicity sits inside a
    group beta^mu with mu > 1, the group is split into beta^1 * beta^(mu-1).
    """
    p, d = sol.p, sol.degree
    if not sol.pole_at_infinity or not sol.zero_at_origin:
        raise NotNormalizableError("no linear factor pinned at infinity or 0")
    shapes = _shapes_of(sol)
    k = len(shapes)
    if k < 3:
        raise NotNormalizableError("need at least three branch points to normalise")
    # third pin: a rational root of W_i (i >= 3) with multiplicity beta
    pick = _third_pin(sol, shapes)
    if pick is None:
        raise NotNormalizableError("no third rational linear factor")
    pin_i, beta, r, split = pick
    rinv = pow(r, -1, p)

    def scaled(coeffs):
        # monic f(r x) / r^deg
        n = len(coeffs) - 1
        return tuple(c * pow(r, t, p) * pow(rinv, n, p) % p for t, c in enumerate(coeffs))

    roles_all, vals = [], []
    for i in range(1, k + 1):
        alpha = shapes[i - 1]
        factors = _factors_of(sol, i)
        groups = {b: f for f, b in factors}
        roles = []
        free_vals = []
        if i == 1:
            roles.append(Role(sol.pole_at_infinity, 1, INF))
        elif i == 2:
            roles.append(Role(sol.zero_at_origin, 1, 0))
        elif i == pin_i:
            roles.append(Role(beta, 1, 1, split_from=split))
        for b, mu in alpha.compact:
            f = groups.get(b, (1,))
            if i == 1 and b == sol.pole_at_infinity:
                mu -= 1
            if i == 2 and b == sol.zero_at_origin:
                mu -= 1
                f = _divide_linear(f, 0, p)
            if i == pin_i and b == beta:
                mu -= 1
                f = _divide_linear(f, r, p)
            if mu == 0:
                continue
            f = scaled(f)
            roles.append(Role(b, mu))
            free_vals.extend(reversed(f[:-1]))
        roles_all.append(roles)
        vals.extend(free_vals)
    d1 = sol.poly(1).degree
    lam = sol.lam * pow(r, d1 - d, p) % p
    qs = [INF, 0] + [_q_value(sol, q_lifts, i) for i in range(3, k + 1)]
    vals.append(lam)
    meta = {
        "scale": r,
        "third_pin": pin_i,
        "mobius": list(sol.mobius),
        "points": [q if isinstance(q, str) else int(q) for q in sol.points],
    }
    return CoherentSystem(p, 1, d, tuple(shapes), roles_all, qs, ResidueVector([v % p for v in vals], p, 1), meta)


def _q_value(sol: FFSolution, q_lifts, i: int):
    if q_lifts is not None and q_lifts[i - 1] is not None:
        q = Fraction(q_lifts[i - 1])
        m = sol.p
        if q.denominator % m == 0 or (q.numerator * pow(q.denominator, -1, m) - sol.qs[i - 1]) % m:
            raise LiftError(f"lift of q_{i} does not reduce to the F_p value")
        return q
    return Fraction(sol.qs[i - 1])


def _shapes_of(sol: FFSolution) -> list[Partition]:
    d = sol.degree
    from .algebra import shape_of

    out = []
    for i in range(1, len(sol.qs) + 1):
        W = sol.W(i)
        parts = list(shape_of(W).parts) if W.degree > 0 else []
        if W.degree < d:
            parts.append(d - W.degree)
        out.append(Partition(tuple(parts)))
    return out


def _factors_of(sol: FFSolution, i: int) -> list[tuple[tuple[int, ...], int]]:
    """Multiplicity groups (f, beta) of W_i over F_p, merged per beta."""
    from .algebra import multiplicity_split

    if sol.W(i).degree < 1:
        return []
    return [(tuple(f.coeffs), b) for f, b in multiplicity_split(sol.W(i))]


def _divide_linear(f, r: int, p: int):
    # synthetic division of monic f by (x - r); the remainder must vanish
    n = len(f) - 1
    q = [0] * n
    acc = 0
    for t in range(n, 0, -1):
        acc = (f[t] + acc * r) % p
        q[t - 1] = acc
    if (f[0] + acc * r) % p:
        raise NotNormalizableError("pinned root is not a root")
    return tuple(q)


def _third_pin(sol: FFSolution, shapes):
    p = sol.p
    best = None
    for i in range(3, len(shapes) + 1):
        groups = _factors_of(sol, i)
        for f, b in groups:
            roots = [r for r in range(1, p) if sum(c * pow(r, t, p) for t, c in enumerate(f)) % p == 0]
            if not roots:
                continue
            mu = len(f) - 1
            cand = (mu == 1, b, -i)
            if best is None or cand > best[0]:
                best = (cand, (i, b, roots[0], None if mu == 1 else mu))
        if best is not None and best[0][0]:
            break
    return best[1] if best else None


def lift_solution(
    sol: FFSolution | CoherentSystem,
    target_N: int,
    q_lifts: Sequence | None = None,
    on_step: Callable[[CoherentSystem], None] | None = None,
) -> CoherentSystem:
    """Lift until the precision exponent reaches ``target_N`` (doubling)."""
    sys = sol if isinstance(sol, CoherentSystem) else system_from_solution(sol, q_lifts)
    if any(sys.residual()):
        raise LiftError("input is not a solution mod p^N")
    Jinv = mat_inverse_mod(sys.jacobian(), sys.p, sys.N)
    while sys.N < target_N:
        sys, Jinv = hensel_step(sys, Jinv)
        log.debug("lifted to p^%d", sys.N)
        if on_step:
            on_step(sys)
    return sys
