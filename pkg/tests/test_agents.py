import numpy as np
import pytest
from hypothesis import given, strategies as st

from tioli.agents import (
    EXACT,
    RATIONAL,
    Agent,
    Decision,
    Offer,
    decide,
    decide_batch,
    realized_utility,
    sub_threshold,
)

ACCEPT, REJECT = Decision.ACCEPT, Decision.REJECT
STRATEGIES = [RATIONAL, EXACT, sub_threshold(0.0), sub_threshold(0.3), sub_threshold(1.0)]

values = st.floats(0, 1e4)
leaks = st.floats(0, 1)
epsilons = st.floats(0, 5)


def test_rational_accepts_at_lemma_price(rng):
    assert decide(Agent(0, 1.0), Offer(2.0, 0.5, 0.5), rng) is ACCEPT


def test_exact_accepts_below_lemma_price(rng):
    a = Agent(1, 1.0, leak=1.0, strategy=EXACT)
    offer = Offer(0.7, 0.5, 0.5)
    assert decide(a, offer, rng) is ACCEPT
    assert decide(Agent(1, 1.0, leak=1.0), offer, rng) is REJECT


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_zero_cost_agent_accepts(strategy, rng):
    for p in (0.0, 0.5, 10.0):
        assert decide(Agent(0, 0.0, strategy=strategy), Offer(p, 1.0, 2.0), rng) is ACCEPT


def test_tie_resolves_to_accept(rng):
    assert decide(Agent(0, 2.0), Offer(4.0, 1.0, 1.0), rng) is ACCEPT


def test_infinite_cost_rejects(rng):
    assert decide(Agent(0, float("inf")), Offer(1e300, 0.5, 0.5), rng) is REJECT


def test_utility_examples():
    assert realized_utility(Agent(0, 1.0, 1.0), Offer(2, 0.5, 0.5), ACCEPT) == pytest.approx(1.0)
    assert realized_utility(Agent(0, 1.0, 0.0), Offer(3, 0.7, 0.2), REJECT) == 0
    assert realized_utility(Agent(0, 3.0, 1.0), Offer(0, 0.2, 0.2), REJECT) == pytest.approx(-0.6)


def test_sub_threshold_rate():
    rng = np.random.default_rng(1)
    a = Agent(0, 10.0, strategy=sub_threshold(0.25))
    hits = sum(decide(a, Offer(1.0, 0.5, 0.5), rng) is ACCEPT for _ in range(20_000))
    assert abs(hits / 20_000 - 0.25) < 3 * np.sqrt(0.25 * 0.75 / 20_000)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Offer(-1, 0, 0)
    with pytest.raises(ValueError):
        Agent(0, -1.0)
    with pytest.raises(ValueError):
        Agent(0, 1.0, leak=2.0)
    with pytest.raises(ValueError):
        sub_threshold(1.5)


@given(values, leaks, epsilons, epsilons, st.floats(1, 3), st.sampled_from(STRATEGIES))
def test_one_sided_truthfulness(v, k, e1, e2, markup, strategy):
    p = v * (e1 + e2) * markup
    assert decide(Agent(0, v, k, strategy), Offer(p, e1, e2), np.random.default_rng(0)) is ACCEPT


@given(values, leaks, epsilons, epsilons, st.floats(0, 1e4), st.floats(0, 1e4),
       st.sampled_from([RATIONAL, EXACT]))
def test_price_monotone(v, k, e1, e2, p1, p2, strategy):
    lo, hi = sorted((p1, p2))
    a = Agent(0, v, k, strategy)
    if decide(a, Offer(lo, e1, e2)) is ACCEPT:
        assert decide(a, Offer(hi, e1, e2)) is ACCEPT


@given(values, leaks, epsilons, epsilons, st.floats(0, 1e5))
def test_rational_acceptance_is_utility_consistent(v, k, e1, e2, p):
    a = Agent(0, v, k)
    offer = Offer(p, e1, e2)
    if decide(a, offer) is ACCEPT:
        gap = realized_utility(a, offer, ACCEPT) - realized_utility(a, offer, REJECT)
        assert gap >= -1e-9 * max(1.0, p)


@given(values, epsilons, epsilons, st.floats(0, 100))
def test_no_leak_means_free_rejection(v, e1, e2, p):
    assert realized_utility(Agent(0, v, 0.0), Offer(p, e1, e2), REJECT) == 0


@given(st.lists(st.sampled_from([0.0, 0.1, 0.5, 1.0, 2.0, 7.5, float("inf")]), min_size=1, max_size=30),
       st.floats(0, 10), epsilons, epsilons, st.sampled_from([RATIONAL, EXACT, sub_threshold(0.0), sub_threshold(1.0)]))
def test_batch_matches_scalar(vals, p, e1, e2, strategy):
    offer = Offer(p, e1, e2)
    batch = decide_batch(np.array(vals), offer, strategy, np.random.default_rng(0))
    scalar = [decide(Agent(0, v, 0.0, strategy), offer, np.random.default_rng(0)) is ACCEPT for v in vals]
    assert batch.tolist() == scalar
