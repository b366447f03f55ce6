"""Agents responding to take-it-or-leave-it offers.

Costs are linear, ``c(eps) = value * eps``, and the leak of the participation
decision into the private type is ``g(eps) = leak * eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable

import numpy as np


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class StrategyKind(str, Enum):
    RATIONAL_THRESHOLD = "rational"
    EXACT_UTILITY_MAX = "exact"
    SUB_THRESHOLD = "subthreshold"


@dataclass(frozen=True)
class DecisionStrategy:
    kind: StrategyKind = StrategyKind.RATIONAL_THRESHOLD
    accept_probability: float = 0.0  # only read by SUB_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if not 0.0 <= self.accept_probability <= 1.0:
            raise ValueError("accept_probability must lie in [0, 1]")


RATIONAL = DecisionStrategy()
EXACT = DecisionStrategy(StrategyKind.EXACT_UTILITY_MAX)


def sub_threshold(q: float) -> DecisionStrategy:
    return DecisionStrategy(StrategyKind.SUB_THRESHOLD, q)


@dataclass(frozen=True)
class Offer:
    payment: float
    eps1: float
    eps2: float

    def __post_init__(self):
        for name in ("payment", "eps1", "eps2"):
            x = float(getattr(self, name))
            if not (math.isfinite(x) and x >= 0):
                raise ValueError(f"offer {name} must be finite and >= 0, got {x!r}")


@dataclass(frozen=True)
class Agent:
    type_id: Hashable
    value: float
    leak: float = 0.0
    strategy: DecisionStrategy = field(default=RATIONAL)

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("cost value must be >= 0")
        if not 0.0 <= self.leak <= 1.0:
            raise ValueError("leak must lie in [0, 1]")

    def cost(self, eps: float) -> float:
        # 0 * inf is nan; a zero privacy level costs nothing even for v = inf
        return 0.0 if eps == 0 else self.value * eps


def acceptance_price(value: float, offer: Offer) -> float:
    """Payment at which the sufficient acceptance condition p >= c(eps1 + eps2) binds."""
    return value * (offer.eps1 + offer.eps2)


def decide(agent: Agent, offer: Offer, rng: np.random.Generator | None = None) -> Decision:
    s = agent.strategy
    if offer.payment >= agent.cost(offer.eps1 + offer.eps2):
        return Decision.ACCEPT
    if s.kind is StrategyKind.EXACT_UTILITY_MAX:
        # p - v(eps2 + k eps1) >= -v k eps1 reduces to p >= v eps2
        return Decision.ACCEPT if offer.payment >= agent.cost(offer.eps2) else Decision.REJECT
    if s.kind is StrategyKind.SUB_THRESHOLD and s.accept_probability > 0:
        if rng is None:
            raise ValueError("a stochastic strategy needs an rng")
        return Decision.ACCEPT if rng.random() < s.accept_probability else Decision.REJECT
    return Decision.REJECT


def realized_utility(agent: Agent, offer: Offer, decision: Decision | str) -> float:
    decision = Decision(decision)
    leaked = agent.cost(agent.leak * offer.eps1)
    if decision is Decision.ACCEPT:
        return offer.payment - agent.cost(offer.eps2 + agent.leak * offer.eps1)
    return -leaked


def decide_batch(values: np.ndarray, offer: Offer, strategy: DecisionStrategy,
                 rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`decide` for agents that share a strategy.

    Returns a boolean acceptance mask aligned with ``values``.
    """
    values = np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        total = offer.eps1 + offer.eps2
        accept = offer.payment >= (values * total if total else np.zeros_like(values))
        if strategy.kind is StrategyKind.EXACT_UTILITY_MAX:
            second = values * offer.eps2 if offer.eps2 else np.zeros_like(values)
            accept |= offer.payment >= second
        elif strategy.kind is StrategyKind.SUB_THRESHOLD and strategy.accept_probability > 0:
            below = ~accept
            accept[below] = rng.random(int(below.sum())) < strategy.accept_probability
    return accept
