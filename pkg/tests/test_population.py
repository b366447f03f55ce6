import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tioli.population import (
    Cell,
    PopulationExhausted,
    PopulationModel,
    PopulationOracle,
    TypeUniverse,
    sample_agent,
    true_statistic,
    value_quantile,
)

BIN = TypeUniverse.binary()


def model(*cells, **kw):
    return PopulationModel(BIN, tuple(Cell(*c) for c in cells), **kw)


def test_single_cell_always_same_agent(rng):
    m = PopulationModel(TypeUniverse(("A",), (0.5,)), (Cell(1.0, "A", 1.0, 0.0),))
    oracle = PopulationOracle(m)
    for _ in range(20):
        a = sample_agent(oracle, rng)
        assert (a.type_id, a.value, a.leak) == ("A", 1.0, 0.0)


def test_type_frequencies(rng):
    m = model((0.3, 1, 0.0), (0.7, 0, 0.0))
    _, cells = PopulationOracle(m).sample(100_000, rng)
    freq = np.mean(m.queries[cells])
    assert abs(freq - 0.3) < 0.01


def test_frequencies_within_chernoff_slack(rng):
    masses = (0.1, 0.25, 0.4, 0.25)
    m = model(*[(p, i % 2, float(i)) for i, p in enumerate(masses)])
    n = 100_000
    _, cells = PopulationOracle(m).sample(n, rng)
    counts = np.bincount(cells, minlength=len(masses)) / n
    for p, f in zip(masses, counts):
        assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_finite_pool_exhaustion(rng):
    m = model((1.0, 0, 1.0), pool_size=3)
    oracle = PopulationOracle(m, rng)
    for _ in range(3):
        sample_agent(oracle, rng)
    with pytest.raises(PopulationExhausted):
        sample_agent(oracle, rng)


def test_finite_pool_full_sweep_is_the_pool(rng):
    m = model((0.5, 0, 1.0), (0.5, 1, 2.0), pool_size=50)
    oracle = PopulationOracle(m, rng)
    ids, cells = oracle.sample(20, rng)
    ids2, cells2 = oracle.sample(30, rng)
    all_ids = np.concatenate([ids, ids2])
    assert sorted(all_ids.tolist()) == list(range(50))
    assert Counter(np.concatenate([cells, cells2]).tolist()) == Counter(oracle.pool_cells.tolist())


def test_true_statistic_examples():
    assert true_statistic(model((0.3, 1, 0.0), (0.7, 0, 0.0))) == pytest.approx(0.3)
    const = PopulationModel(TypeUniverse(("a", "b"), (0.4, 0.4)), (Cell(0.5, "a", 1), Cell(0.5, "b", 1)))
    assert true_statistic(const) == pytest.approx(0.4)
    three = PopulationModel(TypeUniverse(("x", "y", "z"), (0.5, 1.0, 0.0)),
                            (Cell(0.2, "x", 1), Cell(0.3, "y", 1), Cell(0.5, "z", 1)))
    assert true_statistic(three) == pytest.approx(0.4, abs=1e-15)


def test_value_quantile_examples():
    m = model((0.9, 0, 1.0), (0.1, 0, 10.0))
    assert value_quantile(m, 0.2) == 1.0
    assert value_quantile(m, 0.05) == 10.0
    single = model((1.0, 1, 7.0))
    for a in (0.01, 0.5, 0.99):
        assert value_quantile(single, a) == 7.0


def test_validation():
    with pytest.raises(ValueError):
        model((0.5, 0, 1.0))  # masses do not sum to one
    with pytest.raises(ValueError):
        model((1.0, 0, -1.0))
    with pytest.raises(ValueError):
        model((1.0, 0, 1.0, 1.5))
    with pytest.raises(ValueError):
        model((1.0, 7, 1.0))
    with pytest.raises(ValueError):
        TypeUniverse((0,), (1.5,))
    with pytest.raises(ValueError):
        value_quantile(model((1.0, 0, 1.0)), 1.0)


cell_lists = st.lists(st.tuples(st.integers(1, 20), st.sampled_from([0.0, 0.5, 1, 2, 3, 10, 100])),
                      min_size=1, max_size=6)


def _model_from(raw):
    total = sum(w for w, _ in raw)
    cells = [Cell(w / total, i % 2, v) for i, (w, v) in enumerate(raw)]
    # absorb rounding so masses sum to one
    drift = 1.0 - math.fsum(c.mass for c in cells)
    cells[0] = Cell(cells[0].mass + drift, cells[0].type_id, cells[0].value)
    return PopulationModel(BIN, tuple(cells))


@given(cell_lists, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_quantile_nonincreasing_in_alpha(raw, a1, a2):
    m = _model_from(raw)
    lo, hi = sorted((a1, a2))
    assert value_quantile(m, hi) <= value_quantile(m, lo)


@given(cell_lists)
def test_true_statistic_in_unit_interval(raw):
    assert 0.0 <= true_statistic(_model_from(raw)) <= 1.0
