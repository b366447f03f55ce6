"""Epoch-based posted-price survey with a noisy halting count, plus the private estimator."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from tioli.agents import Offer, decide_batch
from tioli.dp_primitives import LaplaceParam, sample_laplace
from tioli.population import PopulationOracle

# (site, epoch) -> noise value; site is "count" for the halting count, "estimate" for the estimator
NoiseHook = Callable[[str, int], float]
# (epoch, ids, cell_indices) -> boolean acceptance mask
DecisionOverride = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


class PriceOverflow(OverflowError):
    pass


class MaxEpochsExceeded(RuntimeError):
    def __init__(self, transcript: "Transcript"):
        super().__init__(f"no halt within {len(transcript.epochs)} epochs")
        self.transcript = transcript


@dataclass(frozen=True)
class MechanismConfig:
    alpha: float
    eta: float = 0.1
    eps0: float | None = None  # None: use alpha
    epoch_constant: float = 100.0
    participation_factor: float | None = None  # None: 1 - alpha/8
    base_price: float = 1.0
    max_epochs: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.eps0 is not None and not (math.isfinite(self.eps0) and self.eps0 > 0):
            raise ValueError("eps0 must be positive and finite")
        if not self.epoch_constant > 0:
            raise ValueError("epoch_constant must be positive")
        if not self.base_price > 0:
            raise ValueError("base_price must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")

    @property
    def epsilon(self) -> float:
        return self.alpha if self.eps0 is None else self.eps0

    @property
    def target_factor(self) -> float:
        return 1.0 - self.alpha / 8.0 if self.participation_factor is None else self.participation_factor


@dataclass
class EpochRecord:
    j: int
    price: float
    epoch_size: int
    approached: np.ndarray
    number_accepted: int
    nu: float
    noisy_count: float
    halted: bool
    payments_this_epoch: float
    approached_query_sum: float = 0.0

    def to_dict(self, include_approached: bool = True) -> dict:
        d = {
            "j": self.j,
            "price": self.price,
            "epoch_size": self.epoch_size,
            "number_accepted": self.number_accepted,
            "nu": self.nu,
            "noisy_count": self.noisy_count,
            "halted": self.halted,
            "payments_this_epoch": self.payments_this_epoch,
            "approached_query_sum": self.approached_query_sum,
        }
        if include_approached:
            d["approached"] = [int(i) for i in self.approached]
        return d


@dataclass
class Transcript:
    epochs: list = field(default_factory=list)

    @property
    def final_epoch(self) -> int:
        return self.epochs[-1].j if self.epochs else 0

    @property
    def halted(self) -> bool:
        return bool(self.epochs) and self.epochs[-1].halted

    @property
    def total_payments(self) -> float:
        return math.fsum(e.payments_this_epoch for e in self.epochs)

    def to_dict(self, include_approached: bool = True) -> dict:
        return {
            "epochs": [e.to_dict(include_approached) for e in self.epochs],
            "final_epoch": self.final_epoch,
            "total_payments": self.total_payments,
        }


@dataclass
class SurveyOutcome:
    transcript: Transcript
    estimate: float
    raw_noisy_sum: float
    accepted_query_sum: float = 0.0

    @property
    def estimator_noise(self) -> float:
        return self.raw_noisy_sum - self.accepted_query_sum

    def to_dict(self, include_approached: bool = True) -> dict:
        return {
            "transcript": self.transcript.to_dict(include_approached),
            "estimate": self.estimate,
            "raw_noisy_sum": self.raw_noisy_sum,
            "accepted_query_sum": self.accepted_query_sum,
        }

    def to_json(self, include_approached: bool = True) -> str:
        return json.dumps(self.to_dict(include_approached), sort_keys=True)


EPOCH_CSV_COLUMNS = ("trial", "j", "price", "epoch_size", "number_accepted", "nu", "noisy_count", "halted")


def epoch_rows(transcript: Transcript, trial: int = 0) -> list[tuple]:
    return [(trial, e.j, e.price, e.epoch_size, e.number_accepted, e.nu, e.noisy_count, int(e.halted))
            for e in transcript.epochs]


def transcript_csv(transcript: Transcript, trial: int = 0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EPOCH_CSV_COLUMNS)
    w.writerows(epoch_rows(transcript, trial))
    return buf.getvalue()


def epoch_size(j: int, config: MechanismConfig) -> int:
    """ceil(C * (ln j + 1) / alpha^2)."""
    if j < 1:
        raise ValueError("epochs are numbered from 1")
    return math.ceil(config.epoch_constant * (math.log(j) + 1.0) / config.alpha**2)


def offer_price(j: int, config: MechanismConfig) -> float:
    if j < 1:
        raise ValueError("epochs are numbered from 1")
    try:
        p = config.base_price * (1.0 + config.eta) ** j
    except OverflowError as exc:
        raise PriceOverflow(f"price at epoch {j} overflows") from exc
    if not math.isfinite(p):
        raise PriceOverflow(f"price at epoch {j} overflows")
    return p


def halting_threshold(j: int, config: MechanismConfig) -> float:
    return config.target_factor * epoch_size(j, config)


def _noise(hook: NoiseHook | None, site: str, j: int, scale: float, rng: np.random.Generator) -> float:
    if hook is not None:
        return float(hook(site, j))
    return float(sample_laplace(scale, rng))


@dataclass
class HarassmentResult:
    transcript: Transcript
    accepted_ids: np.ndarray
    accepted_cells: np.ndarray
    approached_cells: np.ndarray


def run_harassment(config: MechanismConfig, oracle: PopulationOracle, rng: np.random.Generator,
                   noise_hook: NoiseHook | None = None,
                   decision_override: DecisionOverride | None = None) -> HarassmentResult:
    """Offer geometrically rising prices to fresh epochs until the noisy count clears the target.

    Every accepter in every epoch is paid that epoch's price. Raises
    :class:`MaxEpochsExceeded` (carrying the partial transcript) when no epoch
    halts within ``config.max_epochs``.
    """
    model = oracle.model
    eps = config.epsilon
    scale = LaplaceParam.for_epsilon(eps).scale
    transcript = Transcript()
    for j in range(1, config.max_epochs + 1):
        size = epoch_size(j, config)
        price = offer_price(j, config)
        ids, cells = oracle.sample(size, rng)
        if decision_override is not None:
            accepted = np.asarray(decision_override(j, ids, cells), dtype=bool)
            if accepted.shape != ids.shape:
                raise ValueError("decision override returned a mask of the wrong length")
        else:
            accepted = decide_batch(model.values[cells], Offer(price, eps, eps), model.strategy, rng)
        n_acc = int(accepted.sum())
        nu = _noise(noise_hook, "count", j, scale, rng)
        noisy = n_acc + nu
        halted = noisy >= halting_threshold(j, config)
        transcript.epochs.append(EpochRecord(
            j=j, price=price, epoch_size=size, approached=ids, number_accepted=n_acc,
            nu=nu, noisy_count=noisy, halted=bool(halted), payments_this_epoch=price * n_acc,
            approached_query_sum=float(model.queries[cells].sum()),
        ))
        if halted:
            return HarassmentResult(transcript, ids[accepted], cells[accepted], cells)
    raise MaxEpochsExceeded(transcript)


def estimate(accepted_query_values: Sequence[float] | np.ndarray, epoch_size: int, eps: float,
             rng: np.random.Generator, noise_hook: NoiseHook | None = None,
             epoch: int = 0) -> tuple[float, float]:
    """Noisy sum of query values and its normalisation by the epoch size.

    Returns ``(raw_noisy_sum, raw_noisy_sum / epoch_size)``.
    """
    values = np.asarray(accepted_query_values, dtype=float)
    if values.size > epoch_size:
        raise ValueError("more accepted values than the epoch size")
    eps = float(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    raw = math.fsum(values) + _noise(noise_hook, "estimate", epoch, 1.0 / eps, rng)
    return raw, raw / epoch_size


def run_survey(config: MechanismConfig, oracle: PopulationOracle, rng: np.random.Generator,
               noise_hook: NoiseHook | None = None,
               decision_override: DecisionOverride | None = None) -> SurveyOutcome:
    res = run_harassment(config, oracle, rng, noise_hook, decision_override)
    final = res.transcript.epochs[-1]
    q = oracle.model.queries[res.accepted_cells]
    raw, est = estimate(q, final.epoch_size, config.epsilon, rng, noise_hook, final.j)
    return SurveyOutcome(res.transcript, est, raw, float(math.fsum(q)))
