"""Two-arm Monte Carlo audit of the halting channel's privacy.

Each arm replays the survey with every participation decision fixed by a
script; the two scripts differ in one individual's decision. The observable
output (halting epoch, final noisy count in unit bins) is histogrammed per arm,
and each bin's probability ratio gets a conservative Clopper-Pearson bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from tioli.dp_primitives import NeighborViolation
from tioli.harness.config import ExperimentSpec
from tioli.mechanism import MaxEpochsExceeded, MechanismConfig, epoch_size, halting_threshold, run_harassment
from tioli.population import PopulationOracle

Script = tuple  # per-epoch boolean decision vectors, epoch 1 first

CONFIDENCE = 0.99
_AUDIT_STREAM = 1  # keeps audit streams disjoint from per-trial streams


@dataclass(frozen=True)
class AuditBins:
    """Bin layout fixed before sampling.

    Halting epochs ``1..max_epoch`` each get ``width`` unit-wide bins of the
    noisy count starting at ``floor(threshold_j)`` plus one overflow bin; later
    halts share a bin, and runs that never halt get the last bin.
    """

    max_epoch: int
    width: int

    @classmethod
    def for_config(cls, config: MechanismConfig, max_epoch: int = 4) -> "AuditBins":
        return cls(max_epoch, math.ceil(10.0 / config.epsilon))

    @property
    def count(self) -> int:
        return self.max_epoch * (self.width + 1) + 2

    def labels(self) -> list:
        out = []
        for j in range(1, self.max_epoch + 1):
            out += [f"j={j},k={k}" for k in range(self.width)] + [f"j={j},k>={self.width}"]
        return out + [f"j>{self.max_epoch}", "no_halt"]

    def index(self, j: int | None, noisy: float, config: MechanismConfig) -> int:
        if j is None:
            return self.count - 1
        if j > self.max_epoch:
            return self.count - 2
        k = math.floor(noisy) - math.floor(halting_threshold(j, config))
        return (j - 1) * (self.width + 1) + min(max(k, 0), self.width)


@dataclass
class DpAuditReport:
    epsilon: float
    runs_per_arm: int
    distance: int
    confidence: float
    labels: list
    counts_a: list
    counts_b: list
    log_ratio: list  # point estimate log(p_a / p_b), None where undefined
    lower_log_ratio_ab: list
    lower_log_ratio_ba: list
    upper_log_ratio_ab: list = field(default_factory=list)
    max_lower_log_ratio: float = -math.inf
    passed: bool = False

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if not math.isfinite(d["max_lower_log_ratio"]):
            d["max_lower_log_ratio"] = None
        return d

    def summary_lines(self) -> list:
        return [f"runs/arm {self.runs_per_arm}, neighbour distance {self.distance}, bins {len(self.labels)}",
                f"max lower-{self.confidence:.0%} log-ratio {self.max_lower_log_ratio:.4f} "
                f"<= eps {self.epsilon}: {self.passed}"]


def default_script(config: MechanismConfig, scripted_epochs: int = 4) -> tuple[Script, Script]:
    """Neighbouring scripts that keep the halting decision near its threshold.

    In each of the first ``scripted_epochs - 1`` epochs exactly
    ``ceil(threshold_j)`` individuals accept, so every one of those epochs halts
    with probability about one half. The second script flips the first
    individual of epoch 1 from accept to reject. Epochs past the script accept
    in full.
    """
    epochs = []
    for j in range(1, max(2, scripted_epochs)):
        mask = np.zeros(epoch_size(j, config), dtype=bool)
        mask[:math.ceil(halting_threshold(j, config))] = True
        epochs.append(mask)
    flipped = [m.copy() for m in epochs]
    flipped[0][0] = not flipped[0][0]
    return tuple(epochs), tuple(flipped)


def script_distance(a: Script, b: Script) -> int:
    if len(a) != len(b) or any(x.shape != y.shape for x, y in zip(a, b)):
        raise NeighborViolation("scripts must cover the same epochs with the same sizes")
    return int(sum(np.count_nonzero(np.asarray(x) != np.asarray(y)) for x, y in zip(a, b)))


def _override(script: Script):
    def fn(j, ids, cells):
        if j <= len(script):
            mask = np.asarray(script[j - 1], dtype=bool)
            if mask.shape != ids.shape:
                raise ValueError(f"script for epoch {j} has {mask.size} decisions, epoch has {ids.size}")
            return mask
        return np.ones(ids.shape, dtype=bool)
    return fn


def observe(spec: ExperimentSpec, script: Script, runs: int, bins: AuditBins,
            rng: np.random.Generator) -> np.ndarray:
    """Histogram of the observable output over ``runs`` scripted replays."""
    counts = np.zeros(bins.count, dtype=np.int64)
    fn = _override(script)
    for _ in range(runs):
        oracle = PopulationOracle(spec.population, rng)
        try:
            res = run_harassment(spec.config, oracle, rng, decision_override=fn)
        except MaxEpochsExceeded:
            counts[bins.index(None, 0.0, spec.config)] += 1
            continue
        last = res.transcript.epochs[-1]
        counts[bins.index(last.j, last.noisy_count, spec.config)] += 1
    return counts


def clopper_pearson(k: np.ndarray, n: int, confidence: float = CONFIDENCE) -> tuple[np.ndarray, np.ndarray]:
    a = (1.0 - confidence) / 2.0
    k = np.asarray(k, dtype=float)
    lo = np.where(k > 0, beta.ppf(a, k, n - k + 1), 0.0)
    hi = np.where(k < n, beta.ppf(1.0 - a, k + 1, n - k), 1.0)
    return lo, hi


def _log(x: np.ndarray) -> list:
    with np.errstate(divide="ignore"):
        v = np.log(x)
    return [None if not np.isfinite(t) else float(t) for t in v]


def empirical_dp_audit(spec: ExperimentSpec, decision_override: tuple[Script, Script],
                       bins: AuditBins | None = None, runs: int | None = None,
                       confidence: float = CONFIDENCE) -> DpAuditReport:
    """Compare the observable-output histograms of two scripted arms.

    Passes iff no bin's lower confidence bound on the probability ratio, in
    either direction, exceeds ``exp(eps0)``. Identical scripts are accepted as
    a control; scripts further apart than one decision are rejected.
    """
    a, b = decision_override
    dist = script_distance(a, b)
    if dist > 1:
        raise NeighborViolation(f"scripts differ in {dist} decisions, expected at most 1")
    cfg = spec.config
    bins = bins or AuditBins.for_config(cfg, spec.audit_max_epoch)
    n = spec.audit_runs if runs is None else runs
    streams = [np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(spec.master_seed, spawn_key=(_AUDIT_STREAM, arm)))) for arm in (0, 1)]
    ca = observe(spec, a, n, bins, streams[0])
    cb = observe(spec, b, n, bins, streams[1])
    return compare_histograms(ca, cb, n, cfg.epsilon, bins.labels(), dist, confidence)


def compare_histograms(ca, cb, n: int, eps: float, labels: list, distance: int,
                       confidence: float = CONFIDENCE) -> DpAuditReport:
    ca, cb = np.asarray(ca), np.asarray(cb)
    lo_a, hi_a = clopper_pearson(ca, n, confidence)
    lo_b, hi_b = clopper_pearson(cb, n, confidence)
    with np.errstate(divide="ignore", invalid="ignore"):
        low_ab = _log(lo_a / hi_b)
        low_ba = _log(lo_b / hi_a)
        up_ab = _log(hi_a / lo_b)
        point = _log(ca / cb)
    finite = [x for x in low_ab + low_ba if x is not None]
    worst = max(finite) if finite else -math.inf
    return DpAuditReport(
        epsilon=eps, runs_per_arm=n, distance=distance, confidence=confidence, labels=labels,
        counts_a=ca.tolist(), counts_b=cb.tolist(), log_ratio=point,
        lower_log_ratio_ab=low_ab, lower_log_ratio_ba=low_ba, upper_log_ratio_ab=up_ab,
        max_lower_log_ratio=worst, passed=worst <= eps,
    )
