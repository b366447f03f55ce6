"""Monte Carlo orchestration of independent survey runs."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from tioli.dp_primitives import laplace_tail
from tioli.harness.config import ExperimentSpec
from tioli.mechanism import (
    EPOCH_CSV_COLUMNS,
    MaxEpochsExceeded,
    Transcript,
    epoch_rows,
    run_survey,
)
from tioli.population import PopulationExhausted, PopulationOracle, true_statistic
from tioli.rng import trial_rng

ERROR_BUCKET = "error"


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    estimate: float | None
    true_statistic: float
    abs_error: float | None
    total_payments: float
    final_epoch: int | None  # None when the run never halted
    epochs_run: int
    error: str | None = None
    # lemma events: sample mean off by > alpha/4, |nu_j| > (alpha/8) size_j, estimator noise > (alpha/4) size
    sample_deviation: bool = False
    count_noise: bool = False
    estimator_noise: bool = False
    estimator_noise_value: float | None = None
    # closed-form Laplace tail probabilities of the two noise events, for calibration checks
    count_noise_epochs: int = 0
    count_noise_expected: float = 0.0
    count_noise_variance: float = 0.0
    estimator_noise_expected: float = 0.0


@dataclass
class ExperimentSummary:
    alpha: float
    true_statistic: float
    trials: list
    transcripts: list = field(default_factory=list, repr=False)

    def _accurate(self, r: TrialRecord) -> bool:
        return r.abs_error is not None and r.abs_error <= self.alpha

    @property
    def failure_rate(self) -> float:
        return sum(not self._accurate(r) for r in self.trials) / len(self.trials)

    @property
    def mean_cost(self) -> float:
        return math.fsum(r.total_payments for r in self.trials) / len(self.trials)

    @property
    def error_count(self) -> int:
        return sum(r.error is not None for r in self.trials)

    @property
    def halting_histogram(self) -> dict:
        c = Counter(ERROR_BUCKET if r.final_epoch is None else str(r.final_epoch) for r in self.trials)
        return dict(sorted(c.items(), key=lambda kv: (kv[0] == ERROR_BUCKET, int(kv[0]) if kv[0] != ERROR_BUCKET else 0)))

    @property
    def violation_rates(self) -> dict:
        n = len(self.trials)
        rates = {k: sum(getattr(r, k) for r in self.trials) / n
                 for k in ("sample_deviation", "count_noise", "estimator_noise")}
        rates["any"] = sum(r.sample_deviation or r.count_noise or r.estimator_noise for r in self.trials) / n
        return rates

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "true_statistic": self.true_statistic,
            "trials": [asdict(r) for r in self.trials],
            "aggregates": {
                "trials": len(self.trials),
                "failure_rate": self.failure_rate,
                "mean_cost": self.mean_cost,
                "halting_histogram": self.halting_histogram,
                "violation_rates": self.violation_rates,
                "errors": self.error_count,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def epochs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EPOCH_CSV_COLUMNS)
        for trial, t in enumerate(self.transcripts):
            w.writerows(epoch_rows(t, trial))
        return buf.getvalue()

    def trials_csv(self) -> str:
        buf = io.StringIO()
        cols = list(TrialRecord.__dataclass_fields__)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.trials:
            w.writerow(["" if getattr(r, c) is None else getattr(r, c) for c in cols])
        return buf.getvalue()


def _lemma_flags(transcript: Transcript, alpha: float, eps: float, a: float) -> dict:
    dev = any(abs(e.approached_query_sum / e.epoch_size - a) > alpha / 4 for e in transcript.epochs)
    hits = sum(abs(e.nu) > alpha / 8 * e.epoch_size for e in transcript.epochs)
    ps = [laplace_tail(1.0 / eps, alpha / 8 * e.epoch_size) for e in transcript.epochs]
    return dict(sample_deviation=dev, count_noise=hits > 0, count_noise_epochs=hits,
                count_noise_expected=math.fsum(ps), count_noise_variance=math.fsum(p * (1 - p) for p in ps))


def run_one(spec: ExperimentSpec, trial: int) -> tuple[TrialRecord, Transcript]:
    rng = trial_rng(spec.master_seed, trial)
    model = spec.population
    alpha = spec.config.alpha
    eps = spec.config.epsilon
    a = true_statistic(model)
    oracle = PopulationOracle(model, rng)
    try:
        out = run_survey(spec.config, oracle, rng)
    except MaxEpochsExceeded as exc:
        t = exc.transcript
        return TrialRecord(trial, None, a, None, t.total_payments, None, len(t.epochs),
                           error="MaxEpochsExceeded", **_lemma_flags(t, alpha, eps, a)), t
    except PopulationExhausted:
        return TrialRecord(trial, None, a, None, 0.0, None, 0, error="PopulationExhausted"), Transcript()
    t = out.transcript
    size = t.epochs[-1].epoch_size
    rec = TrialRecord(
        trial, out.estimate, a, abs(out.estimate - a), t.total_payments, t.final_epoch, len(t.epochs),
        estimator_noise=abs(out.estimator_noise) > alpha / 4 * size,
        estimator_noise_value=out.estimator_noise,
        estimator_noise_expected=laplace_tail(1.0 / eps, alpha / 4 * size),
        **_lemma_flags(t, alpha, eps, a),
    )
    return rec, t


def _run_chunk(args) -> list:
    spec, trials = args
    return [run_one(spec, i) for i in trials]


def run_trials(spec: ExperimentSpec, workers: int = 1, keep_transcripts: bool = True) -> ExperimentSummary:
    """Run ``spec.trials`` independent surveys; results depend only on the master seed.

    Trial ``i`` always uses the stream derived from ``(master_seed, i)``, so the
    worker count changes wall time and nothing else.
    """
    idx = list(range(spec.trials))
    if workers > 1:
        chunks = [idx[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            results = [r for part in pool.map(_run_chunk, [(spec, c) for c in chunks]) for r in part]
        results.sort(key=lambda rt: rt[0].trial)
    else:
        results = [run_one(spec, i) for i in idx]
    return ExperimentSummary(
        alpha=spec.config.alpha,
        true_statistic=true_statistic(spec.population),
        trials=[r for r, _ in results],
        transcripts=[t for _, t in results] if keep_transcripts else [],
    )
