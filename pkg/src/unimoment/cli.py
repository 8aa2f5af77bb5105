"""Command-line entry point.

Exit codes: 0 success (every check passed), 1 a verification failed,
2 bad usage or input.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bounds import DEFAULT_TOL, Bracket
from .coding import (
    campbell_lengths,
    cumulant,
    kraft_sum,
    load_lengths,
    redundancy_decomposition,
    shannon_lengths,
)
from .errors import BracketError, InfiniteMomentError, InputError
from .guessing import (
    MemorylessStrategy,
    guessing_bounds,
    guessing_moment,
    induced_guess_distribution,
    memoryless_factorial_moment,
    memoryless_moment_bits,
    mismatched_guess_order,
    optimal_guessing_order,
    simulate_memoryless,
)
from .measures import (
    OrderParameter,
    check_same_alphabet,
    escort,
    kl_divergence,
    load_distribution,
    log2_normalizer,
    renyi_entropy,
    shannon_entropy,
    sundaresan_divergence,
)
from .report import MC_SIGMAS, TASK_CLAIMS, VerificationReport, verify_suite
from .sequences import RULES, convergence_experiment
from .tasks import construct_partition, induced_partition_distribution, task_moment

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _checks(items) -> list[dict]:
    out = []
    for claim_id, check in items:
        d = check.as_dict()
        out.append({"claim_id": claim_id, "description": d.pop("label"), **d})
    return out


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _order(args) -> OrderParameter:
    if args.alpha is not None:
        return OrderParameter.from_alpha(args.alpha)
    return OrderParameter.from_rho(args.rho)


def _load(args):
    p = load_distribution(args.dist, strip_zeros=args.strip_zeros, normalize=args.normalize)
    q = None
    if getattr(args, "q_dist", None):
        q = load_distribution(args.q_dist, strip_zeros=args.strip_zeros, normalize=args.normalize)
        check_same_alphabet(p, q)
    return p, q


# -- subcommands ------------------------------------------------------------

def cmd_measures(args) -> dict:
    p, q = _load(args)
    order = _order(args)
    esc = escort(p, order)
    out = {
        "alphabet": list(p.symbols),
        "order": {"rho": order.rho, "alpha": order.alpha},
        "shannon_entropy": shannon_entropy(p),
        "renyi_entropy": renyi_entropy(p, order),
        "normalizer": esc.z_alpha,
        "log2_normalizer": log2_normalizer(p, order),
        "escort": esc.escort.as_dict(),
    }
    if q is not None:
        out["kl_divergence"] = kl_divergence(p, q)
        out["sundaresan_divergence"] = sundaresan_divergence(p, q, order)
    return out


def cmd_code(args) -> dict:
    p, q = _load(args)
    order = _order(args)
    if args.lengths:
        lengths = load_lengths(args.lengths)
        if lengths.alphabet != p.alphabet:
            raise InputError(f"{args.lengths}: symbols differ from {args.dist}")
        source = "file"
    elif order.is_zero_limit:
        lengths, source = shannon_lengths(p if q is None else q), "shannon"
    else:
        lengths, source = campbell_lengths(p if q is None else q, order), "campbell"
    eta = kraft_sum(lengths)
    out = {
        "order": {"rho": order.rho, "alpha": order.alpha},
        "source": source + ("" if q is None or args.lengths else " (built from q)"),
        "lengths": dict(zip(lengths.alphabet.symbols, lengths.lengths)),
        "kraft": float(eta),
        "kraft_exact": f"{eta.numerator}/{eta.denominator}",
        "cumulant": cumulant(p, lengths, order).value,
        "checks": [],
    }
    if not order.is_zero_limit and eta <= 1:
        dec = redundancy_decomposition(p, lengths, order, args.tol)
        out["divergence"] = dec.divergence
        out["induced"] = dec.q_l.as_dict()
        out["checks"] = _checks([("campbell.ql-identity", dec.identity),
                                 ("campbell.rc-bracket", dec.rc_bounds)])
    return out


def cmd_guess(args) -> dict:
    p, q = _load(args)
    order = _order(args)
    order.require_nonzero("guess")
    g = optimal_guessing_order(p)
    lower, upper = guessing_bounds(p, g, order, args.tol)
    checks = [("guess.lower", lower), ("guess.upper", upper)]
    g_used = g if q is None else optimal_guessing_order(q)
    induced = induced_guess_distribution(g_used, order, p, args.tol)
    checks += [("guess.qg-identity", induced.identity), ("guess.rg-bracket", induced.redundancy)]
    out = {
        "order": {"rho": order.rho, "alpha": order.alpha},
        "optimal_order": list(g.sequence()),
        "moment": guessing_moment(p, g, order),
        "induced": induced.q.as_dict(),
        "identity_slack": induced.identity_slack,
    }
    if q is not None:
        out["mismatched_order"] = list(g_used.sequence())
        out["mismatched_moment"] = guessing_moment(p, g_used, order)
        checks.append(("guess.mismatch-upper", mismatched_guess_order(p, q, order, args.tol)))
    if args.simulate:
        if not (order.rho >= 1 and order.rho.is_integer()):
            raise InputError("--simulate needs a positive integer --rho")
        k = int(order.rho)
        strat = MemorylessStrategy.escort_of(p if q is None else q, order)
        est = simulate_memoryless(p, strat, k, args.trials, args.seed)
        closed = memoryless_factorial_moment(p, strat, k)
        out["memoryless"] = {
            "closed_form": closed,
            "normalized": memoryless_moment_bits(p, strat, k),
            "empirical_mean": est.empirical_mean,
            "std_error": est.std_error,
            "trials": est.trials,
            "seed": args.seed,
        }
        half = MC_SIGMAS * est.std_error
        checks.append(("memoryless.monte-carlo",
                       Bracket.point(closed, est.empirical_mean - half, est.empirical_mean + half,
                                     tol=args.tol, units="moment",
                                     label=f"closed form within {MC_SIGMAS:g} standard errors")))
    out["checks"] = _checks(checks)
    return out


def cmd_tasks(args) -> dict:
    p, q = _load(args)
    order = _order(args)
    order.require_nonzero("tasks")
    built_from = p if q is None else q
    part = construct_partition(built_from, order, args.keys)
    rep = task_moment(p, part, order, n_keys=args.keys, q=q, tol=args.tol)
    induced = induced_partition_distribution(part, order, p, args.tol)
    checks = [(TASK_CLAIMS[r.label], r) for r in rep.reports]
    checks.append(("tasks.qa-identity", induced.identity))
    return {
        "order": {"rho": order.rho, "alpha": order.alpha},
        "keys": args.keys,
        "partition": part.symbol_cells(),
        "cells": part.n_cells,
        "A": dict(zip(part.alphabet.symbols, (int(v) for v in part.sizes))),
        "moment": rep.raw_moment,
        "normalized": rep.value,
        "checks": _checks(checks),
    }


def cmd_seq(args) -> dict:
    p, _ = _load(args)
    order = _order(args)
    series = convergence_experiment(p, args.rule, order, args.n_max, args.keys, args.tol)
    return {
        "rule": args.rule,
        "order": {"rho": order.rho, "alpha": order.alpha},
        "limit": series.limit,
        "rows": [r.as_dict() for r in series.rows],
        "trend": series.trend,
        "notes": list(series.notes),
    }


def cmd_verify(args) -> VerificationReport:
    p, q = _load(args)
    order = _order(args)
    inputs = {"dist": {"path": args.dist, "sha256": _digest(args.dist)}}
    if args.q_dist:
        inputs["q_dist"] = {"path": args.q_dist, "sha256": _digest(args.q_dist)}
    return verify_suite(p, order, q, n_max=args.n_max, n_keys=args.keys, trials=args.trials,
                        seed=args.seed, tol=args.tol, exhaustive=args.exhaustive,
                        metadata={"inputs": inputs})


# -- output -----------------------------------------------------------------

ROW_FIELDS = ("claim_id", "description", "direction", "lhs", "rhs", "slack", "tolerance", "verdict")


def _table_rows(payload: dict) -> tuple[list[str], list[list]]:
    if "rows" in payload:
        fields = ["n", "value", "lower", "upper", "verdict"]
        return fields, [[r[f] for f in fields] for r in payload["rows"]]
    if "entries" in payload or "checks" in payload:
        recs = payload.get("entries", payload.get("checks"))
        return list(ROW_FIELDS), [[r[f] for f in ROW_FIELDS] for r in recs]
    rows = []
    for key, value in payload.items():
        if isinstance(value, dict):
            rows += [[f"{key}.{k}", v] for k, v in value.items()]
        elif isinstance(value, list):
            rows.append([key, " ".join(map(str, value))])
        else:
            rows.append([key, value])
    return ["key", "value"], rows


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_cell(x) for x in v) + "]"
    return "" if v is None else str(v)


def render(payload: dict, fmt: str) -> str:
    payload = _json_safe(payload)
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    fields, rows = _table_rows(payload)
    text = [[_cell(v) for v in row] for row in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(fields)
        writer.writerows(text)
        return buf.getvalue()
    widths = [max(len(f), *(len(r[i]) for r in text)) if text else len(f)
              for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in text]
    if "summary" in payload:
        s = payload["summary"]
        lines.append(f"{s['passed']}/{s['total']} passed: {s['verdict']}")
    return "\n".join(lines) + "\n"


def _payload_passed(payload: dict) -> bool:
    if "summary" in payload:
        return payload["summary"]["verdict"] == "pass"
    recs = payload.get("rows", payload.get("checks", []))
    return all(r["verdict"] != "fail" for r in recs)


# -- parser -----------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unimoment",
        description="Moment bounds for coding, guessing and task partitioning, checked numerically.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dist", required=True, metavar="FILE",
                        help="distribution as CSV 'symbol,probability' lines or a JSON object")
    common.add_argument("--strip-zeros", action="store_true",
                        help="drop zero-probability symbols and renormalize")
    common.add_argument("--normalize", action="store_true",
                        help="rescale probabilities to sum to 1")
    common.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL,
                        help="absolute tolerance for verdicts (default 1e-9)")
    common.add_argument("--format", choices=("json", "csv", "table"), default="json")
    order = common.add_mutually_exclusive_group(required=True)
    order.add_argument("--rho", type=float, help="order rho in (-1, 0) u (0, inf); 0 is the Shannon limit")
    order.add_argument("--alpha", type=float, help="order alpha = 1/(1+rho) in (0, inf)")

    with_q = argparse.ArgumentParser(add_help=False)
    with_q.add_argument("--q-dist", metavar="FILE", help="mismatched distribution Q on the same symbols")

    p = sub.add_parser("measures", parents=[common, with_q],
                       help="entropies, normalizer, escort and divergences")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("code", parents=[common, with_q],
                       help="code lengths, Kraft sum, cumulant and redundancy split")
    p.add_argument("--lengths", metavar="FILE", help="evaluate 'symbol,length' CSV instead of building")
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("guess", parents=[common, with_q], help="guessing moments and brackets")
    p.add_argument("--simulate", action="store_true", help="Monte Carlo check of memoryless guessing")
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_guess)

    p = sub.add_parser("tasks", parents=[common, with_q], help="task partition construction and bounds")
    p.add_argument("--keys", type=_positive_int, required=True, metavar="N")
    p.set_defaults(func=cmd_tasks)

    p = sub.add_parser("seq", parents=[common], help="per-n sandwiches on i.i.d. blocks")
    p.add_argument("--rule", choices=RULES, required=True)
    p.add_argument("--n-max", "--n", type=_positive_int, required=True)
    p.add_argument("--keys", type=_positive_int, metavar="N", help="key count for task-partition")
    p.set_defaults(func=cmd_seq)

    p = sub.add_parser("verify", parents=[common, with_q], help="run every applicable check")
    p.add_argument("--n-max", "--n", type=_nonneg_int, default=0,
                   help="block lengths 1..n for sequence checks (0 skips)")
    p.add_argument("--keys", type=_positive_int, metavar="N")
    p.add_argument("--trials", type=_nonneg_int, default=0, help="Monte Carlo trials (0 skips)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exhaustive", action="store_true", help="add brute-force oracle checks")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        result = args.func(args)
    except (InputError, InfiniteMomentError, BracketError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    payload = result.as_dict() if isinstance(result, VerificationReport) else result
    stdout.write(render(payload, args.format))
    return EXIT_OK if _payload_passed(payload) else EXIT_FAIL


def main() -> None:
    sys.exit(run())
