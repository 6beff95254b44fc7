"""End-to-end construction of Hurwitz maps: normalise, pick a prime, search
over F_p, lift, reconstruct the conjugates, and certify each by monodromy."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .algebra import Partition, PermTuple, cycle_type, is_admissible, is_prime
from .ffsearch import INF, SearchOptions, SearchProblem, search
from .monodromy import (
    DegenerateFiberError,
    MonodromyCertificate,
    PrecisionExhaustedError,
    RationalMap,
    fiber_shapes,
    monodromy_of,
)
from .padic import CoherentSystem, LiftError, lift_solution, system_from_solution
from .recon import (
    AlgebraicSolution,
    NFElement,
    ReconOptions,
    ReconstructionError,
    ZeroDimSystem,
    solve_zero_dimensional,
)

log = logging.getLogger(__name__)


class ProblemError(ValueError):
    """The problem is malformed or not admissible."""


class PrimePoolExhausted(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


def parse_point(spec):
    """INF, an exact Fraction, or a float awaiting approximation."""
    if spec is None:
        raise ProblemError("missing point")
    if isinstance(spec, str):
        s = spec.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        if any(ch in s for ch in ".e") and "/" not in s:
            return float(s)
        return Fraction(s)
    if isinstance(spec, bool):
        raise ProblemError(f"bad point {spec!r}")
    if isinstance(spec, int):
        return Fraction(spec)
    if isinstance(spec, float):
        return spec
    if isinstance(spec, Fraction):
        return spec
    if isinstance(spec, complex):
        if spec.imag:
            raise ProblemError("non-real branch points are not supported")
        return float(spec.real)
    raise ProblemError(f"bad point {spec!r}")


def continued_fraction(x: float, tol: float) -> Fraction:
    """First convergent of x within ``tol``."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    y = x
    for _ in range(64):
        a = int(y // 1)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        c = Fraction(h1, k1)
        if abs(float(c) - x) <= tol:
            return c
        frac = y - a
        if frac == 0:
            return c
        y = 1 / frac
    return Fraction(x).limit_denominator()


def approximate_points(points: Sequence, tol: float = 1e-9) -> list:
    """Exact points pass through; floats become the simplest nearby rational."""
    out = []
    for q in points:
        q = parse_point(q) if not isinstance(q, (float, Fraction)) and q != INF else q
        if isinstance(q, float):
            q = continued_fraction(q, tol)
        out.append(q)
    return out


def _mobius_q(m, z):
    """Rational Mobius (a, b, c, d) on Q u {INF}."""
    a, b, c, d = m
    if z == INF:
        return INF if c == 0 else Fraction(a) / c
    den = c * z + d
    if den == 0:
        return INF
    return (a * z + b) / den


def normalizing_transform(Q: Sequence):
    """(a, b, c, d) with Q1 -> INF, Q2 -> 0, Q3 -> 1."""
    q1, q2, q3 = Q[:3]
    # T(z) = (z - q2)(q3 - q1) / ((z - q1)(q3 - q2)), with INF handled by cancelling
    if q1 == INF:
        m = (Fraction(1), -q2, Fraction(0), q3 - q2)
    elif q2 == INF:
        m = (Fraction(0), q3 - q1, Fraction(1), -q1)
    elif q3 == INF:
        m = (Fraction(1), -q2, Fraction(1), -q1)
    else:
        m = (q3 - q1, -q2 * (q3 - q1), q3 - q2, -q1 * (q3 - q2))
    return tuple(Fraction(x) for x in m)


def _mobius_inv(m):
    a, b, c, d = m
    return (d, -b, -c, a)


# ---------------------------------------------------------------------------
# problem and configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HurwitzProblem:
    sigma: PermTuple
    points: tuple  # INF, Fraction or float per branch point
    tolerance: float = 1e-9  # for float points
    digits: int = 40  # digits of the complex output

    def __post_init__(self):
        pts = tuple(parse_point(q) if not isinstance(q, (Fraction, float)) else q for q in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) != self.sigma.k:
            raise ProblemError("need one branch point per permutation")
        if self.sigma.k < 3:
            raise ProblemError("at least three branch points are needed to normalise")
        if not is_admissible(self.sigma):
            raise ProblemError("permutation tuple is not admissible")

    @property
    def degree(self) -> int:
        return self.sigma.degree

    @property
    def shapes(self) -> tuple[Partition, ...]:
        return tuple(self.sigma.shapes())

    @classmethod
    def from_json(cls, obj: dict) -> "HurwitzProblem":
        try:
            sigma = PermTuple.from_json(obj)
            pts = obj["points"]
        except (KeyError, TypeError, ValueError) as e:
            raise ProblemError(f"bad problem document: {e}") from e
        return cls(sigma, tuple(pts), float(obj.get("tolerance", 1e-9)), int(obj.get("digits", 40)))

    def to_json(self) -> dict:
        return {
            **self.sigma.to_json(),
            "points": [q if q == INF else str(q) for q in self.points],
            "tolerance": self.tolerance,
            "digits": self.digits,
        }


@dataclass
class PipelineConfig:
    primes: list[int] | None = None  # explicit pool; default ascending primes below 2^16
    max_primes: int = 8
    lift_exponent: int = 64
    max_exponent: int = 1024
    max_degree: int = 12
    degree_cap: int = 48
    escalation: tuple[str, ...] = ("precision", "degree", "prime")
    digits: int = 128  # monodromy working precision
    method: str = "cd"
    workers: int = 1
    search_threads: int = 1
    chunk_size: int = 256
    checkpoint_dir: str | None = None
    seed: int = 1
    keep_nonmatching: bool = True

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        bad = set(obj) - names
        if bad:
            raise ProblemError(f"unknown config keys: {sorted(bad)}")
        obj = dict(obj)
        if "escalation" in obj:
            obj["escalation"] = tuple(obj["escalation"])
        return cls(**obj)

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["escalation"] = list(self.escalation)
        return out


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class SolutionCertificate:
    exact: list  # NFElements (coordinates in Q[t]/(P_theta))
    field_poly: list[int]
    minpolys: list[list[int]]
    values: list  # complex coordinates of this conjugate
    map: RationalMap  # the map with the original branch points
    exact_map: tuple[list[Fraction], list[Fraction]] | None  # when all coefficients are rational
    monodromy: MonodromyCertificate
    shapes_ok: bool
    provenance: dict = field(default_factory=dict)

    @property
    def matches(self) -> bool:
        return self.monodromy.matches and self.shapes_ok

    def to_json(self, digits: int = 30) -> dict:
        out = {
            "matches": self.matches,
            "field_poly": [int(c) for c in self.field_poly],
            "coordinates": [
                {
                    "minpoly": [int(c) for c in mp],
                    "root": {"re": mpmath.nstr(v.real, digits), "im": mpmath.nstr(v.imag, digits)},
                    "in_field": [str(c) for c in e.coeffs],
                }
                for v, mp, e in zip(self.values, self.minpolys, self.exact)
            ],
            "map": self.map.to_json(digits),
            "monodromy": self.monodromy.to_json(),
            "shapes_ok": self.shapes_ok,
            "provenance": self.provenance,
        }
        if self.exact_map is not None:
            out["exact_map"] = {
                "numerator": [str(c) for c in self.exact_map[0]],
                "denominator": [str(c) for c in self.exact_map[1]],
            }
        return out


@dataclass
class RunResult:
    certificates: list[SolutionCertificate]  # matching conjugates
    conjugates: list[SolutionCertificate]  # every conjugate found, matching or not
    history: list[dict]

    def __iter__(self):
        return iter(self.certificates)

    def __len__(self):
        return len(self.certificates)


# ---------------------------------------------------------------------------
# prime selection
# ---------------------------------------------------------------------------


def _reduce_q(q, p: int):
    if q == INF:
        return INF
    q = Fraction(q)
    if q.denominator % p == 0:
        return None
    return q.numerator * pow(q.denominator, -1, p) % p


def select_prime(problem: HurwitzProblem, history: Sequence[int] = (), pool: Sequence[int] | None = None) -> int:
    """Smallest untried prime above every multiplicity with distinct reductions of the points."""
    Q = normalized_points(problem)
    top = max(max(s.parts) for s in problem.shapes)
    tried = set(history)
    cands = pool if pool is not None else (p for p in range(top + 1, 1 << 16) if is_prime(p))
    for p in cands:
        if p <= top or p in tried or not is_prime(p):
            continue
        red = [_reduce_q(q, p) for q in Q]
        if any(r is None for r in red):
            continue
        if len(set(red)) != len(red):
            continue
        return p
    raise PrimePoolExhausted("no admissible prime left in the pool")


def normalized_points(problem: HurwitzProblem) -> list:
    Q = approximate_points(problem.points, problem.tolerance)
    if len(set(Q)) != len(Q):
        raise ProblemError("branch points must be distinct")
    T = normalizing_transform(Q)
    return [INF, Fraction(0), Fraction(1)] + [_mobius_q(T, q) for q in Q[3:]]


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def _equations(sys: CoherentSystem):
    qv = [None, None, 0] + [Fraction(q) for q in sys.qs[2:]]
    return lambda v: sys.residual_generic(v[:-1], v[-1], qv)


def _feed(sys: CoherentSystem):
    state = {"sys": sys}

    def feed(M: int) -> list[int]:
        if state["sys"].N < M:
            state["sys"] = lift_solution(state["sys"], M)
        return list(state["sys"].reduce(M).values.entries)

    return feed


def reduces_to(sol: AlgebraicSolution, residues: Sequence[int], p: int) -> bool:
    """Whether some root of P_theta mod p sends every coordinate to ``residues``."""
    P = sol.field_poly
    for t0 in range(p):
        if sum(c * pow(t0, e, p) for e, c in enumerate(P)) % p:
            continue
        ok = True
        for x, r in zip(sol.exact, residues):
            acc = 0
            for e, c in enumerate(x.coeffs):
                if c.denominator % p == 0:
                    return False
                acc += c.numerator * pow(c.denominator, -1, p) * pow(t0, e, p)
            if (acc - r) % p:
                ok = False
                break
        if ok:
            return True
    return False


def build_map(sys: CoherentSystem, values: Sequence, T_inv=None) -> RationalMap:
    """Complex map W_2 / (lam W_1) in the normalised chart, then T^-1 applied."""
    vals, lam = list(values[:-1]), values[-1]
    W = sys.W_polys([mpmath.mpc(v) for v in vals])
    num = [mpmath.mpc(c) for c in W[1]]
    den = [mpmath.mpc(lam) * c for c in W[0]]
    if T_inv is not None:
        a, b, c, d = (mpmath.mpf(x.numerator) / x.denominator for x in T_inv)
        n = max(len(num), len(den))
        num += [mpmath.mpc(0)] * (n - len(num))
        den += [mpmath.mpc(0)] * (n - len(den))
        num, den = [a * x + b * y for x, y in zip(num, den)], [c * x + d * y for x, y in zip(num, den)]
    return RationalMap(num, den)


def exact_rational_map(sys: CoherentSystem, exact: Sequence[NFElement], T_inv=None):
    """Exact (numerator, denominator) over Q when every coordinate is rational."""
    if any(any(c for c in e.coeffs[1:]) for e in exact):
        return None
    vals = [e.coeffs[0] if e.coeffs else Fraction(0) for e in exact]
    W = sys.W_polys([Fraction(v) for v in vals[:-1]])
    lam = Fraction(vals[-1])
    num = [Fraction(c) for c in W[1]]
    den = [lam * c for c in W[0]]
    if T_inv is not None:
        a, b, c, d = T_inv
        n = max(len(num), len(den))
        num += [Fraction(0)] * (n - len(num))
        den += [Fraction(0)] * (n - len(den))
        num, den = [a * x + b * y for x, y in zip(num, den)], [c * x + d * y for x, y in zip(num, den)]
    # normalise the denominator to be monic
    while len(den) > 1 and den[-1] == 0:
        den.pop()
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    lc = den[-1]
    return [x / lc for x in num], [x / lc for x in den]


def run(problem: HurwitzProblem, config: PipelineConfig | None = None) -> RunResult:
    """Certificates for the conjugates whose monodromy matches ``problem.sigma``."""
    cfg = config or PipelineConfig()
    Qn = normalized_points(problem)
    Q = approximate_points(problem.points, problem.tolerance)
    T_inv = _mobius_inv(normalizing_transform(Q))
    is_identity = T_inv == (1, 0, 0, 1) or (T_inv[1] == 0 and T_inv[2] == 0 and T_inv[0] == T_inv[3])
    T_inv = None if is_identity else T_inv
    shapes = problem.shapes
    d = problem.degree
    history: list[dict] = []
    tried: list[int] = []
    found: list[SolutionCertificate] = []
    max_degree = cfg.max_degree
    max_exp = cfg.max_exponent
    esc = list(cfg.escalation)

    def event(stage, **kw):
        rec = {"stage": stage, **kw}
        history.append(rec)
        log.info(stage, extra={"fields": rec})

    primes_used = 0
    while primes_used < cfg.max_primes:
        p = select_prime(problem, tried, cfg.primes)
        tried.append(p)
        primes_used += 1
        pts = [INF, 0, 1] + [_reduce_q(q, p) for q in Qn[3:]]
        t0 = time.monotonic()
        ckpt = None
        if cfg.checkpoint_dir:
            import os

            os.makedirs(cfg.checkpoint_dir, exist_ok=True)
            ckpt = os.path.join(cfg.checkpoint_dir, f"search-p{p}.json")
        opts = SearchOptions(threads=cfg.search_threads, chunk_size=cfg.chunk_size, checkpoint=ckpt)
        sols = list(search(SearchProblem(p, d, shapes, tuple(pts)), opts))
        event("search", prime=p, solutions=len(sols), seconds=round(time.monotonic() - t0, 3))
        if not sols:
            continue
        systems: list[CoherentSystem] = []
        seen = set()
        for s in sols:
            try:
                sys = system_from_solution(s, [INF, 0] + list(Qn[2:]))
                sys = lift_solution(sys, 1)
            except LiftError as e:
                event("lift", prime=p, error=type(e).__name__, detail=str(e))
                continue
            key = tuple(sys.values.entries)
            if key not in seen:
                seen.add(key)
                systems.append(sys)
        event("normalise", prime=p, systems=len(systems))
        orbits: list[tuple[CoherentSystem, list[AlgebraicSolution]]] = []
        retry_prime = False
        for sys in systems:
            if any(reduces_to(sols_[0], sys.values.entries, p) for _, sols_ in orbits):
                continue
            t0 = time.monotonic()
            try:
                lifted = lift_solution(sys, cfg.lift_exponent)
            except LiftError as e:
                event("lift", prime=p, error=type(e).__name__, detail=str(e))
                retry_prime = True
                continue
            event("lift", prime=p, precision=lifted.N, seconds=round(time.monotonic() - t0, 3))
            conj = _promote(lifted, cfg, max_degree, max_exp, esc, event, p)
            if conj is None:
                retry_prime = True
                continue
            orbits.append((lifted, conj))
        if not orbits:
            event("retry", prime=p, reason="lift or reconstruction failed" if retry_prime else "no normalisable solution")
            continue
        for sys, conj in orbits:
            for sol in conj:
                found.append(_certificate(problem, cfg, sys, sol, Qn, T_inv, p, event))
        matching = [c for c in found if c.matches]
        return RunResult(matching, found, history)
    raise PrimePoolExhausted(f"no solution after {primes_used} primes")


def _promote(lifted, cfg, max_degree, max_exp, esc, event, p):
    """Reconstruct all conjugates, escalating precision and then degree."""
    deg, top = max_degree, max_exp
    while True:
        opts = ReconOptions(max_degree=deg, max_N=top, seed=cfg.seed, initial_N=min(128, top))
        t0 = time.monotonic()
        try:
            with mpmath.workdps(mpmath.mp.dps):
                conj = list(solve_zero_dimensional(ZeroDimSystem(len(lifted.values.entries), _equations(lifted), _feed(lifted), p), opts))
            event("promote", prime=p, conjugates=len(conj), max_degree=deg, max_exponent=top, seconds=round(time.monotonic() - t0, 3))
            return conj
        except ReconstructionError as e:
            event("promote", prime=p, error="reconstruction", detail=str(e), max_degree=deg, max_exponent=top)
            for step in esc:
                if step == "precision" and top < 4 * max_exp:
                    top *= 2
                    break
                if step == "degree" and deg < cfg.degree_cap:
                    deg = min(cfg.degree_cap, 2 * deg)
                    break
                if step == "prime":
                    return None
            else:
                return None


def _certificate(problem, cfg, sys, sol, Qn, T_inv, p, event) -> SolutionCertificate:
    t0 = time.monotonic()
    Qc = [q if q == INF else complex(q) for q in Qn]
    digits = cfg.digits
    while True:
        try:
            with mpmath.workdps(digits):
                f = build_map(sys, [mpmath.mpc(v) for v in sol.values])
                cert = monodromy_of(f, Qc, method=cfg.method, digits=digits, target=problem.sigma)
                shapes = fiber_shapes(f, Qc)
            break
        except (PrecisionExhaustedError, DegenerateFiberError) as e:
            if digits >= 4 * cfg.digits:
                raise
            digits *= 2
            event("monodromy", prime=p, conjugate=sol.index, retry=type(e).__name__, precision=digits)
    with mpmath.workdps(problem.digits + 10):
        out_map = build_map(sys, [mpmath.mpc(v) for v in sol.values], T_inv)
    shapes_ok = [tuple(s.parts) for s in problem.shapes] == shapes and [
        cycle_type(s) for s in cert.computed.perms
    ] == list(problem.shapes)
    event(
        "monodromy",
        prime=p,
        conjugate=sol.index,
        matches=cert.matches,
        method=cfg.method,
        precision=digits,
        seconds=round(time.monotonic() - t0, 3),
    )
    return SolutionCertificate(
        exact=sol.exact,
        field_poly=sol.field_poly,
        minpolys=sol.minpolys,
        values=sol.values,
        map=out_map,
        exact_map=exact_rational_map(sys, sol.exact, T_inv),
        monodromy=cert,
        shapes_ok=shapes_ok,
        provenance={"prime": p, "lift_exponent": cfg.lift_exponent, "conjugate": sol.index, "normalized_points": [q if q == INF else str(q) for q in Qn]},
    )
