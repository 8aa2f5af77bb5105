"""Theorem-verification report: one entry per claim with a stable claim-id."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import DEFAULT_TOL, EQUAL, LOWER, UPPER, Bracket, BoundReport
from .coding import (
    campbell_lengths,
    cumulant,
    kraft_sum,
    redundancy_decomposition,
    shannon_lengths,
)
from .errors import InputError, PreconditionError
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
    Distribution,
    OrderParameter,
    kl_divergence,
    renyi_entropy,
    shannon_entropy,
    sundaresan_divergence,
)
from .sequences import MAX_PRODUCT_SIZE, convergence_experiment
from .solver import (
    WeightFunction,
    escort_envelope,
    general_convex_bound,
    log_moment,
    log_objective,
    lower_bound_report,
    mismatch_lower,
    mismatch_upper,
    optimal_weight,
    power_moment,
    power_objective,
    renyi_divergence_identity,
)
from .tasks import (
    construct_partition,
    induced_partition_distribution,
    key_slack,
    partition_identity,
    task_moment,
)

# Monte Carlo agreement radius, in standard errors
MC_SIGMAS = 4.0
# tolerance for matching the bisection solver against closed forms
SOLVER_TOL = 1e-8
# offset from alpha = 1 used for the divergence continuity check
KL_LIMIT_STEP = 1e-4
KL_LIMIT_TOL = 1e-3

TASK_CLAIMS = {
    "(1/rho) log E[A^rho] >= H_a - log N": "tasks.lower",
    "E[A^rho] <= 1 (rho < 0)": "tasks.unit-upper",
    "E[A^rho] <= 1 + 2^{rho(H_a - log N~)}": "tasks.construction-upper",
    "E[A_Q^rho] <= 1 + 2^{rho(H_a + I_a - log N~)}": "tasks.mismatch-upper",
    "E[A^rho] >= 1": "tasks.construction-unit",
    "E[A^rho] >= (1/2) 2^{rho H_a} (rho < 0)": "tasks.construction-lower",
    "E[A^rho] >= N~^-rho/(1+N~^-rho) 2^{rho H_a} (rho < 0)": "tasks.construction-lower-exact",
}


@dataclass
class VerificationReport:
    entries: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, claim_id: str, check: BoundReport | Bracket, description: str | None = None):
        d = check.as_dict()
        label = d.pop("label")
        self.entries.append({"claim_id": claim_id, "description": description or label, **d})

    def skip(self, claim_id: str, reason: str):
        self.metadata.setdefault("skipped", []).append({"claim_id": claim_id, "reason": reason})

    @property
    def summary(self) -> dict:
        failed = sum(e["verdict"] != "pass" for e in self.entries)
        return {
            "total": len(self.entries),
            "passed": len(self.entries) - failed,
            "failed": failed,
            "verdict": "pass" if failed == 0 else "fail",
        }

    @property
    def passed(self) -> bool:
        return self.summary["failed"] == 0

    def as_dict(self) -> dict:
        return {"summary": self.summary, "entries": self.entries, "metadata": self.metadata}


def _memoryless_order(order: OrderParameter) -> int | None:
    rho = order.rho
    return int(rho) if rho >= 1 and float(rho).is_integer() else None


def _unified(rep: VerificationReport, p: Distribution, order: OrderParameter,
             q: Distribution | None, tol: float):
    psi = optimal_weight(p, 1.0, order)
    rep.add("unified.budget", BoundReport(psi.budget, 1.0, EQUAL, tol, units="budget",
                                          label="optimal weight spends the budget"))
    uniform = WeightFunction(p.alphabet, np.full(p.size, 1.0 / p.size))
    rep.add("unified.lower-bound", lower_bound_report(p, uniform, order, tol=tol),
            "uniform weight respects the budget lower bound")
    if order.is_zero_limit:
        h = shannon_entropy(p)
        rep.add("unified.achievability", BoundReport(log_moment(p, psi), h, EQUAL, tol,
                                                     label="E[log 1/(bP)] = H - log b"))
        gb = general_convex_bound(p, log_objective(), 1.0)
        rep.add("unified.general-log", BoundReport(gb.bound, h, EQUAL, SOLVER_TOL,
                                                   label="general solver, f = -log: bound = H"))
    else:
        h = renyi_entropy(p, order)
        rep.add("unified.achievability", BoundReport(power_moment(p, psi, order), h, EQUAL, tol,
                                                     label="escort weight attains H_a - log b"))
        gb = general_convex_bound(p, power_objective(order), 1.0)
        value = math.log2(order.sign * gb.bound) / order.rho
        rep.add("unified.general-power", BoundReport(value, h, EQUAL, SOLVER_TOL,
                                                     label="general solver, power f: bound = H_a"))
        gl = general_convex_bound(p, log_objective(), 1.0)
        rep.add("unified.general-log", BoundReport(gl.bound, shannon_entropy(p), EQUAL, SOLVER_TOL,
                                                   label="general solver, f = -log: bound = H"))
    if q is not None:
        env = escort_envelope(q, order)
        rep.add("unified.mismatch-upper", mismatch_upper(p, q, order, 0.0, 1.0, env, tol))
        rep.add("unified.mismatch-lower", mismatch_lower(p, q, order, 1.0, env, tol))
        if not order.is_zero_limit:
            rep.add("unified.identity", renyi_divergence_identity(p, q, order, tol))


def _measures(rep: VerificationReport, p: Distribution, q: Distribution | None, tol: float):
    same = sundaresan_divergence(p, p, OrderParameter.from_rho(1.0))
    rep.add("measures.self-divergence", BoundReport(same, 0.0, EQUAL, tol,
                                                    label="I_a(P, P) = 0"))
    if q is not None:
        kl = kl_divergence(p, q)
        for name, alpha in (("below", 1.0 - KL_LIMIT_STEP), ("above", 1.0 + KL_LIMIT_STEP)):
            near = sundaresan_divergence(p, q, OrderParameter.from_alpha(alpha))
            rep.add(f"measures.kl-limit[{name}]",
                    BoundReport(near, kl, EQUAL, KL_LIMIT_TOL,
                                label=f"I_a -> KL at alpha = {alpha:g}"))


def _source(rep: VerificationReport, p: Distribution, order: OrderParameter,
            q: Distribution | None, tol: float, exhaustive: bool):
    sl = shannon_lengths(p)
    expected = cumulant(p, sl, OrderParameter.zero_limit()).value
    h = shannon_entropy(p)
    rep.add("source.kraft", BoundReport(float(kraft_sum(sl)), 1.0, UPPER, 0.0, units="kraft",
                                        label="Shannon lengths satisfy Kraft"))
    rep.add("source.shannon-lower", BoundReport(expected, h, LOWER, tol, label="E[L] >= H"))
    rep.add("source.shannon-upper", BoundReport(expected, h + 1.0, UPPER, tol, label="E[L] < H + 1"))
    if order.is_zero_limit:
        rep.skip("campbell.*", "needs rho != 0")
        return
    h_a = renyi_entropy(p, order)
    cl = campbell_lengths(p, order)
    value = cumulant(p, cl, order).value
    rep.add("campbell.sandwich", Bracket.point(value, h_a, h_a + 1.0, tol=tol,
                                               label="H_a <= cumulant(Campbell) < H_a + 1"))
    minimum = None
    if exhaustive:
        from .oracle import best_lengths_exhaustive

        if p.size <= 6:
            _, minimum = best_lengths_exhaustive(p, order)
            rep.add("campbell.exhaustive", Bracket.point(minimum, h_a, h_a + 1.0, tol=tol,
                                                         label="enumerated minimum cumulant in [H_a, H_a + 1]"))
        else:
            rep.skip("campbell.exhaustive", "M > 6")
    target = p if q is None else q
    lengths = campbell_lengths(target, order)
    dec = redundancy_decomposition(p, lengths, order, tol, minimum)
    rep.add("campbell.ql-identity", dec.identity)
    rep.add("campbell.rc-bracket", dec.rc_bounds)
    if q is not None:
        # Campbell lengths for q satisfy psi^-1 = 2^L <= 2 Z_Q/Q^alpha
        env = WeightFunction(p.alphabet, np.exp2(-lengths.as_array()))
        rep.add("campbell.mismatch-upper", mismatch_upper(p, q, order, 0.0, 2.0, env, tol))


def _guessing(rep: VerificationReport, p: Distribution, order: OrderParameter,
              q: Distribution | None, tol: float, exhaustive: bool):
    g = optimal_guessing_order(p)
    lower, upper = guessing_bounds(p, g, order, tol)
    rep.add("guess.lower", lower)
    rep.add("guess.upper", upper)
    if exhaustive:
        from .oracle import best_guessing_exhaustive

        if p.size <= 6:
            _, best = best_guessing_exhaustive(p, order)
            rep.add("guess.exhaustive",
                    BoundReport(guessing_moment(p, g, order), best, EQUAL, tol,
                                label="descending order matches the M! enumeration"))
        else:
            rep.skip("guess.exhaustive", "M > 6")
    g_used = g if q is None else optimal_guessing_order(q)
    induced = induced_guess_distribution(g_used, order, p, tol)
    rep.add("guess.qg-identity", induced.identity)
    rep.add("guess.rg-bracket", induced.redundancy)
    if q is not None:
        rep.add("guess.mismatch-upper", mismatched_guess_order(p, q, order, tol))


def _memoryless(rep: VerificationReport, p: Distribution, order: OrderParameter,
                q: Distribution | None, tol: float, trials: int, seed: int, exhaustive: bool):
    k = _memoryless_order(order)
    if k is None:
        rep.skip("memoryless.*", "factorial moments need a positive integer rho")
        return
    h = renyi_entropy(p, order)
    strat = MemorylessStrategy.escort_of(p, order)
    rep.add("memoryless.escort-optimal",
            BoundReport(memoryless_moment_bits(p, strat, k), h, EQUAL, tol,
                        label="escort guesses attain (1/rho) log E[V_rho] = H_a"))
    uniform = MemorylessStrategy(Distribution.uniform(p.size, p.symbols))
    rep.add("memoryless.uniform-dominated",
            BoundReport(memoryless_moment_bits(p, uniform, k), h, LOWER, tol,
                        label="uniform guesses do no better than H_a"))
    closed = memoryless_factorial_moment(p, strat, k)
    if exhaustive:
        from .oracle import factorial_moment_series

        series = factorial_moment_series(p, strat, k, tail_tol=1e-12)
        rep.add("memoryless.series",
                BoundReport(series, closed, EQUAL, max(tol, 10 * 1e-12) * max(1.0, closed),
                            units="moment", label="truncated series = sum p p_hat^-rho"))
    if q is not None:
        sq = MemorylessStrategy.escort_of(q, order)
        rhs = h + sundaresan_divergence(p, q, order)
        rep.add("memoryless.mismatch-identity",
                BoundReport(memoryless_moment_bits(p, sq, k), rhs, EQUAL, tol,
                            label="escort of Q gives H_a + I_a(P, Q)"))
    if trials > 0:
        est = simulate_memoryless(p, strat, k, trials, seed)
        half = MC_SIGMAS * est.std_error
        rep.add("memoryless.monte-carlo",
                Bracket.point(closed, est.empirical_mean - half, est.empirical_mean + half,
                              tol=tol, units="moment",
                              label=f"closed form within {MC_SIGMAS:g} standard errors of {trials} trials"))


def _tasks(rep: VerificationReport, p: Distribution, order: OrderParameter,
           q: Distribution | None, tol: float, n_keys: int | None, exhaustive: bool):
    if n_keys is None:
        rep.skip("tasks.*", "no key count given")
        return
    if not key_slack(n_keys, p.size) > 0:
        rep.skip("tasks.*", f"N={n_keys} is not above log2 M + 2")
        return
    part = construct_partition(p, order, n_keys)
    n_cells = partition_identity(part)
    rep.add("tasks.identity", BoundReport(float(n_cells), float(part.n_cells), EQUAL, 0.0,
                                          units="cells", label="sum 1/A = number of cells"))
    rep.add("tasks.cell-budget", BoundReport(float(part.n_cells), float(n_keys), UPPER, 0.0,
                                             units="cells", label="construction uses at most N cells"))
    for r in task_moment(p, part, order, n_keys=n_keys, tol=tol).reports:
        rep.add(TASK_CLAIMS[r.label], r)
    rep.add("tasks.qa-identity", induced_partition_distribution(part, order, p, tol).identity)
    if q is not None:
        part_q = construct_partition(q, order, n_keys)
        for r in task_moment(p, part_q, order, n_keys=n_keys, q=q, tol=tol).reports:
            cid = TASK_CLAIMS[r.label]
            if cid != "tasks.mismatch-upper":
                cid = "tasks.mismatch." + cid.split(".", 1)[1]
            rep.add(cid, r)
    if exhaustive:
        from .oracle import best_partition_exhaustive

        if p.size <= 8:
            _, best = best_partition_exhaustive(p, n_keys, order)
            rep.add("tasks.exhaustive",
                    BoundReport(best, renyi_entropy(p, order) - math.log2(n_keys), LOWER, tol,
                                label="enumerated minimum >= H_a - log N"))
        else:
            rep.skip("tasks.exhaustive", "M > 8")


def _sequences(rep: VerificationReport, p: Distribution, order: OrderParameter, tol: float,
               n_max: int, n_keys: int | None):
    rules = ["shannon-code"]
    if not order.is_zero_limit:
        rules += ["campbell-code", "optimal-guess"]
        if n_keys is not None:
            rules.append("task-partition")
    short = {"shannon-code": "shannon", "campbell-code": "campbell",
             "optimal-guess": "guess", "task-partition": "tasks"}
    for rule in rules:
        series = convergence_experiment(p, rule, order, n_max, n_keys, tol)
        for row in series.rows:
            cid = f"seq.{short[rule]}[n={row.n}]"
            if row.value is None:
                rep.skip(cid, "key budget below the construction threshold")
                continue
            rep.add(cid, Bracket.point(row.value, row.lower, row.upper, tol=tol,
                                       units="moment" if rule == "task-partition" else "bits",
                                       label=f"{rule} at n={row.n} inside its finite-n sandwich"))


def verify_suite(p: Distribution, order: OrderParameter, q: Distribution | None = None, *,
                 n_max: int = 0, n_keys: int | None = None, trials: int = 0, seed: int = 0,
                 tol: float = DEFAULT_TOL, exhaustive: bool = False,
                 metadata: dict | None = None) -> VerificationReport:
    """Evaluate every claim that applies at ``(p, order)`` and collect the verdicts."""
    if not tol > 0:
        raise InputError("tolerance must be positive")
    if trials < 0:
        raise InputError("trials must be >= 0")
    if n_max < 0:
        raise InputError("n_max must be >= 0")
    if n_max and p.size ** n_max > MAX_PRODUCT_SIZE:
        raise InputError(f"|X|^n_max = {p.size}^{n_max} exceeds the cap 2^20")
    if n_keys is not None and n_keys < 1:
        raise PreconditionError("key count must be >= 1")
    rep = VerificationReport(metadata={
        "order": {"rho": order.rho, "alpha": order.alpha},
        "seed": seed,
        "tolerance": tol,
        "trials": trials,
        "n_max": n_max,
        "keys": n_keys,
        "exhaustive": exhaustive,
        **(metadata or {}),
        "skipped": [],
    })
    if q is not None:
        rep.metadata["divergence"] = sundaresan_divergence(p, q, order)
    _measures(rep, p, q, tol)
    _unified(rep, p, order, q, tol)
    _source(rep, p, order, q, tol, exhaustive)
    if order.is_zero_limit:
        rep.skip("guess.*", "needs rho != 0")
        rep.skip("memoryless.*", "needs rho != 0")
        rep.skip("tasks.*", "needs rho != 0")
    else:
        _guessing(rep, p, order, q, tol, exhaustive)
        _memoryless(rep, p, order, q, tol, trials, seed, exhaustive)
        _tasks(rep, p, order, q, tol, n_keys, exhaustive)
    if n_max:
        _sequences(rep, p, order, tol, n_max, n_keys)
    return rep
