"""``hurwitz`` command line: individual stages and the full run.

Exit codes: 0 at least one certificate (or stage success), 2 no solution,
3 resource or retry exhaustion, 4 invalid input."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from fractions import Fraction

EXIT_OK, EXIT_NONE, EXIT_EXHAUSTED, EXIT_INVALID = 0, 2, 3, 4


class JsonLinesFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        rec = {
            "t": round(record.created, 3),
            "level": record.levelname.lower(),
            "logger": record.name,
            "msg": record.getMessage(),
        }
        rec.update(getattr(record, "fields", {}) or {})
        return json.dumps(rec, default=str)


def _setup_logging(level: str) -> None:
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(JsonLinesFormatter())
    root = logging.getLogger()
    root.handlers[:] = [h]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def load_json(arg: str):
    """Inline JSON, ``-`` for stdin, or a path."""
    if arg == "-":
        return json.load(sys.stdin)
    if os.path.exists(arg):
        with open(arg) as fh:
            return json.load(fh)
    return json.loads(arg)


def _write(obj, out) -> None:
    out.write(json.dumps(obj, default=str))
    out.write("\n")
    out.flush()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_search(a) -> int:
    from .ffsearch import SearchOptions, SearchProblem, search

    prob = SearchProblem(a.prime, a.degree, tuple(tuple(s) for s in load_json(a.shapes)), tuple(load_json(a.points)))
    opts = SearchOptions(threads=a.threads, limit=a.limit, checkpoint=a.checkpoint, chunk_size=a.chunk_size)
    n = 0
    t0 = time.monotonic()
    for sol in search(prob, opts):
        _write(sol.to_json(), sys.stdout)
        n += 1
    logging.getLogger("hurwitz.cli").info("search done", extra={"fields": {"stage": "search", "prime": a.prime, "solutions": n, "seconds": round(time.monotonic() - t0, 3)}})
    return EXIT_OK if n else EXIT_NONE


def cmd_lift(a) -> int:
    from .ffsearch import FFSolution
    from .padic import CoherentSystem, lift_solution

    obj = load_json(a.input)
    if "values" in obj:
        src = CoherentSystem.from_json(obj)
    else:
        src = FFSolution.from_json(obj)
    if a.prime is not None and src.p != a.prime:
        raise ValueError(f"input is over F_{src.p}, not F_{a.prime}")
    sys_ = lift_solution(src, a.precision_exponent)
    _write(sys_.to_json(), sys.stdout)
    return EXIT_OK


def cmd_promote(a) -> int:
    from .padic import CoherentSystem
    from .pipeline import _equations, _feed
    from .recon import ReconOptions, ZeroDimSystem, solve_zero_dimensional

    sys_ = CoherentSystem.from_json(load_json(a.input))
    opts = ReconOptions(max_degree=a.max_degree, min_degree=a.min_degree, digits=a.digits)
    zs = ZeroDimSystem(len(sys_.values.entries), _equations(sys_), _feed(sys_), sys_.p)
    sols = list(solve_zero_dimensional(zs, opts))
    _write([s.to_json(a.digits) for s in sols], sys.stdout)
    return EXIT_OK if sols else EXIT_NONE


def _point(q):
    from .sphere import INF

    if isinstance(q, str) and q.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    if isinstance(q, dict):
        return complex(float(q.get("re", 0)), float(q.get("im", 0)))
    if isinstance(q, str):
        try:
            return complex(Fraction(q))
        except ValueError:
            return complex(q.replace(" ", ""))
    return complex(q)


def cmd_monodromy(a) -> int:
    from .algebra import PermTuple
    from .monodromy import RationalMap, monodromy_of

    f = RationalMap.from_json(load_json(a.map))
    Q = [_point(q) for q in load_json(a.points)]
    target = PermTuple.from_json(load_json(a.target)) if a.target else None
    cert = monodromy_of(f, Q, method=a.method, digits=a.digits, target=target)
    _write(cert.to_json(), sys.stdout)
    if target is not None and not cert.matches:
        return EXIT_NONE
    return EXIT_OK


def cmd_run(a) -> int:
    from .pipeline import HurwitzProblem, PipelineConfig, run

    prob_doc = load_json(a.problem)
    cfg_doc = load_json(a.config) if a.config else {}
    if "problem" in cfg_doc:
        prob_doc = {**cfg_doc.pop("problem"), **prob_doc}
    # flags override the config document
    for key in ("digits", "method", "workers", "max_primes", "lift_exponent", "max_degree", "checkpoint_dir", "search_threads"):
        v = getattr(a, key, None)
        if v is not None:
            cfg_doc[key] = v
    problem = HurwitzProblem.from_json(prob_doc)
    cfg = PipelineConfig.from_json(cfg_doc)
    result = run(problem, cfg)
    certs = [c.to_json(problem.digits) for c in result.conjugates]
    doc = {"problem": problem.to_json(), "config": cfg.to_json(), "certificates": certs, "history": result.history}
    if a.out:
        os.makedirs(a.out, exist_ok=True)
        path = os.path.join(a.out, "certificates.json")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh, indent=1, default=str)
        os.replace(tmp, path)
        if a.report:
            from .report import write_report

            write_report(certs, problem.to_json()["points"], a.out)
    else:
        _write(doc, sys.stdout)
    return EXIT_OK if len(result) else EXIT_NONE


def cmd_report(a) -> int:
    from .report import write_report

    doc = load_json(a.input)
    certs = doc["certificates"] if isinstance(doc, dict) else doc
    points = load_json(a.points) if a.points else doc["problem"]["points"]
    for p in write_report(certs, points, a.out):
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hurwitz", description="Rational maps with prescribed branch data.")
    ap.add_argument("--log-level", default="info")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("search", help="enumerate solutions over F_p")
    s.add_argument("--prime", type=int, required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--shapes", required=True, help='JSON list of partitions, e.g. "[[3],[2,1],[2,1]]"')
    s.add_argument("--points", required=True, help='JSON list; "inf", integers, or "free"')
    s.add_argument("--checkpoint")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--limit", type=int)
    s.add_argument("--chunk-size", type=int, default=256)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("lift", help="Hensel-lift one F_p solution")
    s.add_argument("--input", required=True)
    s.add_argument("--precision-exponent", type=int, default=64)
    s.add_argument("--prime", type=int)
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("promote", help="reconstruct algebraic conjugates from a lifted system")
    s.add_argument("--input", required=True)
    s.add_argument("--max-degree", type=int, default=12)
    s.add_argument("--min-degree", type=int, default=1)
    s.add_argument("--digits", type=int, default=60)
    s.set_defaults(func=cmd_promote)

    s = sub.add_parser("monodromy", help="monodromy of a numerical rational map")
    s.add_argument("--map", required=True)
    s.add_argument("--points", required=True)
    s.add_argument("--target")
    s.add_argument("--method", choices=["cd", "tt", "both"], default="cd")
    s.add_argument("--digits", type=int, default=128)
    s.set_defaults(func=cmd_monodromy)

    s = sub.add_parser("run", help="full pipeline")
    s.add_argument("--problem", required=True)
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--report", action="store_true", help="also write tables and figures into --out")
    s.add_argument("--digits", type=int)
    s.add_argument("--method", choices=["cd", "tt", "both"])
    s.add_argument("--workers", type=int)
    s.add_argument("--max-primes", type=int)
    s.add_argument("--lift-exponent", type=int)
    s.add_argument("--max-degree", type=int)
    s.add_argument("--checkpoint-dir")
    s.add_argument("--search-threads", type=int)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", help="tables and figures from run output")
    s.add_argument("--input", required=True)
    s.add_argument("--points")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    _setup_logging(a.log_level)
    from .algebra import AlgebraError
    from .ffsearch import SearchError
    from .monodromy import MonodromyError
    from .padic import LiftError
    from .pipeline import PrimePoolExhausted, ProblemError
    from .recon import ReconstructionError

    log = logging.getLogger("hurwitz.cli")
    try:
        return a.func(a)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (ProblemError, SearchError, AlgebraError, json.JSONDecodeError, KeyError, FileNotFoundError) as e:
        log.error(str(e), extra={"fields": {"stage": a.cmd, "error": type(e).__name__}})
        return EXIT_INVALID
    except (PrimePoolExhausted, ReconstructionError, LiftError, MonodromyError) as e:
        log.error(str(e), extra={"fields": {"stage": a.cmd, "error": type(e).__name__}})
        return EXIT_EXHAUSTED
    except ValueError as e:
        log.error(str(e), extra={"fields": {"stage": a.cmd, "error": type(e).__name__}})
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
