"""Laplace distribution helpers and pointwise differential-privacy checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tioli.rng import open_uniform

DEFAULT_AUDIT_TOLERANCE = 1e-9
DEFAULT_PROBE_COUNT = 512
DEFAULT_PROBE_SPAN = 10.0  # in units of the noise scale


class NeighborViolation(ValueError):
    """Inputs handed to a privacy audit are not neighbors."""


@dataclass(frozen=True)
class LaplaceParam:
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"Laplace scale must be positive and finite, got {self.scale!r}")

    @classmethod
    def for_epsilon(cls, epsilon: "PrivacyLevel | float") -> "LaplaceParam":
        eps = epsilon.epsilon if isinstance(epsilon, PrivacyLevel) else float(epsilon)
        if eps <= 0:
            raise ValueError("Laplace noise for epsilon-DP needs epsilon > 0")
        return cls(1.0 / eps)


@dataclass(frozen=True)
class PrivacyLevel:
    epsilon: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")

    def __float__(self) -> float:
        return float(self.epsilon)


def _scale(param: LaplaceParam | float) -> float:
    return param.scale if isinstance(param, LaplaceParam) else LaplaceParam(float(param)).scale


def laplace_from_uniform(u, scale: float):
    """Inverse CDF of Lap(scale) evaluated at u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    x = np.where(u < 0.5, scale * np.log(2.0 * u), -scale * np.log(2.0 * (1.0 - u)))
    return x if x.ndim else float(x)


def sample_laplace(param: LaplaceParam | float, rng: np.random.Generator, size: int | None = None):
    """Draw from Lap(b) by inverse-CDF transform of one open uniform per value."""
    return laplace_from_uniform(open_uniform(rng, size), _scale(param))


def laplace_density(param: LaplaceParam | float, x):
    b = _scale(param)
    out = np.exp(-np.abs(np.asarray(x, dtype=float)) / b) / (2.0 * b)
    return out if out.ndim else float(out)


def laplace_cdf(param: LaplaceParam | float, x):
    b = _scale(param)
    x = np.asarray(x, dtype=float)
    out = np.where(x < 0, 0.5 * np.exp(x / b), 1.0 - 0.5 * np.exp(-x / b))
    return out if out.ndim else float(out)


def laplace_tail(param: LaplaceParam | float, threshold: float) -> float:
    """Pr[|Y| >= threshold] for Y ~ Lap(b)."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return math.exp(-threshold / _scale(param))


def laplace_upper_tail(param: LaplaceParam | float, threshold: float) -> float:
    """One-sided Pr[Y >= threshold]."""
    return 1.0 - laplace_cdf(param, threshold) if threshold < 0 else 0.5 * math.exp(-threshold / _scale(param))


def default_probes(center_a: float, center_b: float, scale: float,
                   count: int = DEFAULT_PROBE_COUNT, span: float = DEFAULT_PROBE_SPAN) -> np.ndarray:
    lo = min(center_a, center_b) - span * scale
    hi = max(center_a, center_b) + span * scale
    return np.linspace(lo, hi, count)


def dp_ratio_audit(epsilon: PrivacyLevel | float, center_a: float, center_b: float,
                   probe_points: Sequence[float] | np.ndarray | None = None,
                   tolerance: float = DEFAULT_AUDIT_TOLERANCE) -> tuple[float, bool]:
    """Largest density quotient of Lap(1/eps) shifted to ``center_a`` over ``center_b``.

    Returns ``(max_ratio, passes)`` where passing means the quotient never
    exceeds ``exp(eps) * (1 + tolerance)`` at any probe point. The quotient is
    evaluated in log space so far-out probes do not underflow to 0/0.
    """
    eps = float(epsilon)
    if abs(center_a - center_b) > 1:
        raise NeighborViolation(
            f"centers {center_a} and {center_b} differ by more than the sensitivity bound 1")
    scale = 1.0 / eps
    if probe_points is None:
        probes = default_probes(center_a, center_b, scale)
    else:
        probes = np.asarray(probe_points, dtype=float)
    if probes.size == 0 or not np.all(np.isfinite(probes)):
        raise ValueError("probe points must be a non-empty finite collection")
    log_ratio = (np.abs(probes - center_b) - np.abs(probes - center_a)) / scale
    max_ratio = float(np.exp(log_ratio.max()))
    return max_ratio, max_ratio <= math.exp(eps) * (1.0 + tolerance)
