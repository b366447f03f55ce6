"""Envy-free single-offer benchmark cost and cost-ratio reporting."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from tioli.mechanism import MechanismConfig, SurveyOutcome, epoch_size, offer_price
from tioli.population import PopulationModel, value_quantile

# Multiplier and privacy-floor constants of the single-offer lower bound
_ACCURACY_SHRINK = 32.0


class EmptyOutcomeSet(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkReport:
    alpha: float
    v_alpha8: float
    benchmark_cost: float
    theta_cost: float  # bare v(alpha/8) / alpha
    mechanism_mean_cost: float
    loglog_factor: float
    additive_term: float
    ratio: float
    critical_epoch: int  # acceptance price 2 * eps0 * v
    critical_epoch_loose: int  # price eps0 * v
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [(k, v) for k, v in self.to_dict().items()]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in rows)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def benchmark_cost(model: PopulationModel, alpha: float) -> float:
    """Pay v(alpha/8) * 32 / (alpha n) to n (1 - alpha/8) agents: 32 v (1 - alpha/8) / alpha."""
    v = value_quantile(model, alpha / 8.0)
    if v == 0:
        return 0.0
    return _ACCURACY_SHRINK * v * (1.0 - alpha / 8.0) / alpha


def _first_epoch_paying(required: float, config: MechanismConfig) -> int:
    if not math.isfinite(required):
        raise ValueError("critical epoch is undefined for an infinite cost quantile")
    j = 1
    while offer_price(j, config) < required:
        j += 1
    return j


def critical_epoch(model: PopulationModel, config: MechanismConfig) -> int:
    """First epoch whose price meets the guaranteed-acceptance price of the v(alpha/8) agent."""
    v = value_quantile(model, config.alpha / 8.0)
    eps = config.epsilon
    return _first_epoch_paying(v * (eps + eps), config)


def critical_epoch_loose(model: PopulationModel, config: MechanismConfig) -> int:
    v = value_quantile(model, config.alpha / 8.0)
    return _first_epoch_paying(v * config.epsilon, config)


def halting_miss_rate(config: MechanismConfig) -> float:
    """Upper bound on the chance that an epoch at or past the critical epoch fails to halt.

    With acceptance probability at least the target rate, the accepted count
    reaches ``target * size - 1`` with probability at least 1/2, and the noise
    then clears the remaining gap of at most one with probability at least
    ``exp(-eps0) / 2``.
    """
    return 1.0 - 0.25 * math.exp(-config.epsilon)


def expected_cost_bound(model: PopulationModel, config: MechanismConfig, rel_tol: float = 1e-12,
                        max_terms: int = 1_000_000) -> float:
    """Explicit upper bound on expected total payments.

    Epochs before the critical epoch pay at most ``p_j * size_j``; epoch
    ``j* + k`` is reached with probability at most ``miss**k``. Returns
    ``inf`` when the series diverges, i.e. when ``(1 + eta) * miss >= 1``.
    """
    jstar = critical_epoch(model, config)
    miss = halting_miss_rate(config)
    if (1.0 + config.eta) * miss >= 1.0:
        return math.inf
    terms = [offer_price(j, config) * epoch_size(j, config) for j in range(1, jstar)]
    k = 0
    while k < max_terms:
        j = jstar + k
        t = offer_price(j, config) * epoch_size(j, config) * miss**k
        terms.append(t)
        if t < rel_tol * math.fsum(terms):
            break
        k += 1
    return math.fsum(terms)


def loglog_factor(alpha: float, v_alpha8: float) -> float:
    return max(1.0, math.log(math.log(max(math.e * math.e, alpha * v_alpha8))))


def cost_ratio_report(outcomes: Sequence[SurveyOutcome | float], model: PopulationModel,
                      config: MechanismConfig) -> BenchmarkReport:
    """Mean mechanism payment against ``loglog * benchmark + 1/alpha^2``.

    ``outcomes`` may hold :class:`SurveyOutcome` objects or bare total payments
    (runs that hit the epoch cap still paid their accepters).
    """
    if not outcomes:
        raise EmptyOutcomeSet("need at least one outcome")
    costs = [o.transcript.total_payments if isinstance(o, SurveyOutcome) else float(o) for o in outcomes]
    alpha = config.alpha
    v = value_quantile(model, alpha / 8.0)
    if not math.isfinite(v):
        raise ValueError("cost ratio is undefined for an infinite cost quantile")
    bench = benchmark_cost(model, alpha)
    loglog = loglog_factor(alpha, v)
    additive = 1.0 / alpha**2
    mean = math.fsum(costs) / len(costs)
    return BenchmarkReport(
        alpha=alpha, v_alpha8=v, benchmark_cost=bench, theta_cost=v / alpha,
        mechanism_mean_cost=mean, loglog_factor=loglog, additive_term=additive,
        ratio=mean / (loglog * bench + additive),
        critical_epoch=critical_epoch(model, config),
        critical_epoch_loose=critical_epoch_loose(model, config),
        trials=len(costs),
    )
