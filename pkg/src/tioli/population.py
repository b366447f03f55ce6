"""Population of agents over (type, cost value, leak) cells and its sampling oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from tioli.agents import RATIONAL, Agent, DecisionStrategy

MASS_TOLERANCE = 1e-12


class PopulationExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class TypeUniverse:
    """Finite ordered type set with the analyst's query value per type."""

    types: tuple
    query: tuple

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "query", tuple(float(q) for q in self.query))
        if not self.types:
            raise ValueError("type universe must be non-empty")
        if len(self.types) != len(self.query):
            raise ValueError("need exactly one query value per type")
        if len(set(self.types)) != len(self.types):
            raise ValueError("duplicate type identifiers")
        if any(not 0.0 <= q <= 1.0 for q in self.query):
            raise ValueError("query values must lie in [0, 1]")

    def q(self, type_id: Hashable) -> float:
        return self.query[self.types.index(type_id)]

    @classmethod
    def binary(cls) -> "TypeUniverse":
        return cls((0, 1), (0.0, 1.0))


@dataclass(frozen=True)
class Cell:
    mass: float
    type_id: Hashable
    value: float
    leak: float = 0.0


@dataclass(frozen=True)
class PopulationModel:
    universe: TypeUniverse
    cells: tuple
    pool_size: int | None = None  # None means infinite i.i.d. population
    strategy: DecisionStrategy = field(default=RATIONAL)

    def __post_init__(self):
        cells = tuple(c if isinstance(c, Cell) else Cell(*c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise ValueError("population needs at least one cell")
        for c in cells:
            if not 0.0 <= c.mass <= 1.0:
                raise ValueError(f"cell mass {c.mass} outside [0, 1]")
            if c.type_id not in self.universe.types:
                raise ValueError(f"cell type {c.type_id!r} not in the type universe")
            # +inf is allowed: an agent who never accepts any finite payment
            if math.isnan(c.value) or c.value < 0:
                raise ValueError(f"cell value {c.value} must be >= 0")
            if not 0.0 <= c.leak <= 1.0:
                raise ValueError(f"cell leak {c.leak} outside [0, 1]")
        total = math.fsum(c.mass for c in cells)
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"cell masses sum to {total!r}, expected 1")
        if self.pool_size is not None and self.pool_size < 1:
            raise ValueError("pool_size must be positive")
        q = np.array([self.universe.q(c.type_id) for c in cells])
        object.__setattr__(self, "_masses", np.array([c.mass for c in cells]))
        object.__setattr__(self, "_values", np.array([c.value for c in cells], dtype=float))
        object.__setattr__(self, "_queries", q)

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def queries(self) -> np.ndarray:
        return self._queries

    @property
    def mode(self) -> str:
        return "infinite" if self.pool_size is None else "finite"

    def agent(self, cell_index: int) -> Agent:
        c = self.cells[cell_index]
        return Agent(c.type_id, c.value, c.leak, self.strategy)

    def with_values(self, scale: float) -> "PopulationModel":
        cells = tuple(Cell(c.mass, c.type_id, c.value * scale, c.leak) for c in self.cells)
        return PopulationModel(self.universe, cells, self.pool_size, self.strategy)

    @classmethod
    def single_value(cls, value: float, query_mean: float = 0.3, **kw) -> "PopulationModel":
        """Binary-query population whose agents all share one cost value."""
        cells = [Cell(query_mean, 1, value), Cell(1.0 - query_mean, 0, value)]
        return cls(TypeUniverse.binary(), tuple(c for c in cells if c.mass > 0), **kw)


def true_statistic(model: PopulationModel) -> float:
    return math.fsum(c.mass * model.universe.q(c.type_id) for c in model.cells)


def value_quantile(model: PopulationModel, alpha: float) -> float:
    """Smallest cost value v with Pr[value <= v] >= 1 - alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    by_value: dict[float, float] = {}
    for c in model.cells:
        by_value[c.value] = by_value.get(c.value, 0.0) + c.mass
    cdf = 0.0
    ordered = sorted(by_value)
    for v in ordered:
        cdf += by_value[v]
        # slack absorbs the rounding left over from summing masses
        if cdf >= 1.0 - alpha - MASS_TOLERANCE:
            return v
    return ordered[-1]


class PopulationOracle:
    """Samples individuals from a population model.

    Individuals are identified by integers. In the infinite mode each draw is a
    fresh i.i.d. individual numbered by draw order; in finite-pool mode the pool
    is a fixed assignment of individuals to cells and draws are uniform without
    replacement.
    """

    def __init__(self, model: PopulationModel, rng: np.random.Generator | None = None):
        self.model = model
        self._drawn = 0
        self._pool_cells: np.ndarray | None = None
        self._order: np.ndarray | None = None
        if model.pool_size is not None:
            if rng is None:
                raise ValueError("finite-pool mode needs an rng to lay out the pool")
            n = model.pool_size
            self._pool_cells = rng.choice(len(model.cells), size=n, p=model.masses)
            self._order = rng.permutation(n)

    @property
    def drawn(self) -> int:
        return self._drawn

    @property
    def pool_cells(self) -> np.ndarray | None:
        return self._pool_cells

    def remaining(self) -> float:
        if self.model.pool_size is None:
            return math.inf
        return self.model.pool_size - self._drawn

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``n`` individuals; returns ``(ids, cell_indices)``."""
        if n > self.remaining():
            raise PopulationExhausted(
                f"asked for {n} individuals but only {self.remaining()} remain in the pool")
        start = self._drawn
        self._drawn += n
        if self._pool_cells is None:
            ids = np.arange(start, start + n)
            k = len(self.model.cells)
            cells = np.zeros(n, dtype=np.intp) if k == 1 else rng.choice(k, size=n, p=self.model.masses)
            return ids, cells
        ids = self._order[start:start + n]
        return ids, self._pool_cells[ids]


def sample_agent(oracle: PopulationOracle, rng: np.random.Generator) -> Agent:
    _, cells = oracle.sample(1, rng)
    return oracle.model.agent(int(cells[0]))
