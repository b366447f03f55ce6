"""Verification suites comparing simulated runs against the mechanism's guarantees.

Statistical comparisons use 3-sigma binomial slack around the theoretical
rate, with sample sizes fixed by the experiment spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from tioli.benchmark import cost_ratio_report, critical_epoch, expected_cost_bound
from tioli.dp_primitives import dp_ratio_audit
from tioli.harness.config import ExperimentSpec
from tioli.harness.experiment import ExperimentSummary, run_trials
from tioli.mechanism import SurveyOutcome, Transcript

LEMMA_RATE = 1.0 / 12.0
HALT_DECAY = 17.0 / 20.0
MAX_HALTING_ALPHA = 0.5


class ConfigOutOfRange(ValueError):
    pass


@dataclass
class SuiteResult:
    name: str
    passed: bool
    lines: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def report(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
        return "\n".join([head] + [f"    {ln}" for ln in self.lines])


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def _ensure_summary(spec: ExperimentSpec, summary: ExperimentSummary | None) -> ExperimentSummary:
    return run_trials(spec, keep_transcripts=False) if summary is None else summary


def accuracy_suite(spec: ExperimentSpec, summary: ExperimentSummary | None = None) -> SuiteResult:
    s = _ensure_summary(spec, summary)
    rate = s.failure_rate
    ok = rate < spec.failure_constant
    return SuiteResult("accuracy", ok,
                       [f"Pr[|estimate - a| > {spec.config.alpha}] = {rate:.4f} "
                        f"(limit {spec.failure_constant:.4f}, trials {len(s.trials)})"],
                       {"failure_rate": rate, "limit": spec.failure_constant})


def lemma_tail_suite(spec: ExperimentSpec, summary: ExperimentSummary | None = None) -> SuiteResult:
    """Violation rates of the three per-run error events, plus closed-form checks of the two noise events."""
    s = _ensure_summary(spec, summary)
    recs = s.trials
    n = len(recs)
    limit = LEMMA_RATE + 3.0 * binomial_sigma(LEMMA_RATE, n)
    rates = s.violation_rates
    lines, checks = [], {}
    for key in ("sample_deviation", "count_noise", "estimator_noise"):
        ok = rates[key] < limit
        checks[key] = ok
        lines.append(f"{key}: rate {rates[key]:.5f} < {limit:.5f}: {ok}")
    # union bound over the three events
    checks["joint"] = rates["any"] < 0.25
    lines.append(f"any event: rate {rates['any']:.5f} < 0.25: {checks['joint']}")

    # Each epoch's noise is independent of whether that epoch was reached, so the
    # number of violating epochs is a sum of independent Bernoullis with known means.
    obs = sum(r.count_noise_epochs for r in recs)
    mean = math.fsum(r.count_noise_expected for r in recs)
    var = math.fsum(r.count_noise_variance for r in recs)
    checks["count_noise_closed_form"] = abs(obs - mean) <= 3.0 * math.sqrt(var)
    lines.append(f"count noise epochs: observed {obs}, closed form {mean:.4g} +- 3*{math.sqrt(var):.3g}")

    done = [r for r in recs if r.error is None]
    obs_e = sum(r.estimator_noise for r in done)
    mean_e = math.fsum(r.estimator_noise_expected for r in done)
    var_e = math.fsum(r.estimator_noise_expected * (1 - r.estimator_noise_expected) for r in done)
    checks["estimator_noise_closed_form"] = abs(obs_e - mean_e) <= 3.0 * math.sqrt(var_e)
    lines.append(f"estimator noise: observed {obs_e}, closed form {mean_e:.4g} +- 3*{math.sqrt(var_e):.3g}")
    return SuiteResult("tails", all(checks.values()), lines,
                       {"rates": rates, "limit": limit, "checks": checks,
                        "count_noise": {"observed": obs, "expected": mean, "variance": var},
                        "estimator_noise": {"observed": obs_e, "expected": mean_e, "variance": var_e}})


def reach_rates(summary: ExperimentSummary, start: int, ks=range(1, 11)) -> dict:
    n = len(summary.trials)
    return {k: sum(r.epochs_run >= start + k for r in summary.trials) / n for k in ks}


def halting_tail_suite(spec: ExperimentSpec, summary: ExperimentSummary | None = None,
                       ks=range(1, 11)) -> SuiteResult:
    alpha = spec.config.alpha
    if alpha > MAX_HALTING_ALPHA:
        raise ConfigOutOfRange(f"halting suite needs alpha <= {MAX_HALTING_ALPHA}, got {alpha}")
    s = _ensure_summary(spec, summary)
    jstar = critical_epoch(spec.population, spec.config)
    n = len(s.trials)
    rates = reach_rates(s, jstar, ks)
    lines, rows, ok = [], [], True
    for k, rate in rates.items():
        bound = HALT_DECAY**k
        limit = bound + 3.0 * binomial_sigma(bound, n)
        good = rate <= limit
        ok &= good
        rows.append({"k": k, "rate": rate, "bound": bound, "limit": limit, "passed": good})
        lines.append(f"Pr[reach j*+{k}] = {rate:.5f} <= {limit:.5f}: {good}")
    return SuiteResult("halting", ok, [f"critical epoch j* = {jstar}"] + lines,
                       {"critical_epoch": jstar, "rows": rows})


def cost_suite(spec: ExperimentSpec, summary: ExperimentSummary | None = None) -> SuiteResult:
    """Mean payment against the explicit expected-cost bound (3 standard errors of slack).

    When the experiment config pins a cost constant K, the benchmark ratio must also stay below it.
    """
    s = _ensure_summary(spec, summary)
    costs = [r.total_payments for r in s.trials]
    try:
        rep = cost_ratio_report(costs, spec.population, spec.config)
    except ValueError as exc:
        return SuiteResult("cost", False, [str(exc)])
    bound = expected_cost_bound(spec.population, spec.config)
    n = len(costs)
    mean = rep.mechanism_mean_cost
    se = math.sqrt(math.fsum((c - mean) ** 2 for c in costs) / (n - 1) / n) if n > 1 else 0.0
    ok_bound = math.isfinite(bound) and mean <= bound + 3.0 * se
    lines = [f"mean cost {mean:.6g} <= explicit bound {bound:.6g} (+3se {3 * se:.3g}): {ok_bound}"]
    ok = ok_bound
    if spec.cost_constant is not None:
        ok_k = rep.ratio <= spec.cost_constant
        ok = ok and ok_k
        lines.append(f"ratio to loglog*benchmark + 1/alpha^2: {rep.ratio:.4f} <= K={spec.cost_constant}: {ok_k}")
    else:
        lines.append(f"ratio to loglog*benchmark + 1/alpha^2: {rep.ratio:.4f}")
    return SuiteResult("cost", ok, lines,
                       {"report": rep.to_dict(), "bound": bound, "cost_constant": spec.cost_constant})


def transcript_dp_audit(items: list, eps: float, tolerance: float = 1e-9) -> tuple[float, bool, int]:
    """Analytic density-ratio audit on every adjacent count pair appearing in recorded runs.

    ``items`` holds transcripts or survey outcomes. Each epoch's accepted count is
    paired with its neighbours one above and one below; for outcomes, the
    estimator's exact sum is audited the same way. Returns
    ``(max_ratio, passes, pairs_checked)``.
    """
    worst, ok, pairs = 1.0, True, 0
    centers: list[float] = []
    for it in items:
        t = it.transcript if isinstance(it, SurveyOutcome) else it
        centers.extend(float(e.number_accepted) for e in t.epochs)
        if isinstance(it, SurveyOutcome):
            centers.append(it.accepted_query_sum)
    for c in centers:
        for other in (c + 1.0, c - 1.0):
            r, good = dp_ratio_audit(eps, c, other, tolerance=tolerance)
            worst, ok, pairs = max(worst, r), ok and good, pairs + 1
    return worst, ok, pairs


def analytic_dp_suite(spec: ExperimentSpec, outcomes: list) -> SuiteResult:
    eps = spec.config.epsilon
    worst, ok, pairs = transcript_dp_audit(outcomes, eps)
    return SuiteResult("dp_analytic", ok,
                       [f"max density ratio {worst:.12f} over {pairs} neighbour pairs "
                        f"(limit e^eps = {math.exp(eps):.12f})"],
                       {"max_ratio": worst, "pairs": pairs})


def run_suites(spec: ExperimentSpec, workers: int = 1) -> list:
    """Run every suite the experiment config selects, sharing one batch of trials."""
    from tioli.harness.audit import empirical_dp_audit, default_script

    results = []
    need_trials = {"accuracy", "tails", "halting", "cost"} & set(spec.suites)
    keep = "dp_audit" in spec.suites
    summary = run_trials(spec, workers=workers, keep_transcripts=keep) if need_trials or keep else None
    if "accuracy" in spec.suites:
        results.append(accuracy_suite(spec, summary))
    if "tails" in spec.suites:
        results.append(lemma_tail_suite(spec, summary))
    if "halting" in spec.suites:
        try:
            results.append(halting_tail_suite(spec, summary))
        except ConfigOutOfRange as exc:
            results.append(SuiteResult("halting", False, [str(exc)]))
    if "cost" in spec.suites:
        results.append(cost_suite(spec, summary))
    if "dp_audit" in spec.suites:
        results.append(analytic_dp_suite(spec, summary.transcripts))
        rep = empirical_dp_audit(spec, default_script(spec.config, spec.audit_max_epoch))
        results.append(SuiteResult("dp_audit", rep.passed, rep.summary_lines(), rep.to_dict()))
    return results


# Ratio cap for single-value populations at alpha=0.4, eta=0.1 and v in {1, ..., 1e4}.
# Pilot maximum 27.16 (scripts/calibrate_cost_constant.py, seeds 1001-1003) times 1.25, rounded up.
SINGLE_VALUE_COST_CONSTANT = 34.0
