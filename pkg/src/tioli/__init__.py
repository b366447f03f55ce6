"""Simulation of a differentially private take-it-or-leave-it survey."""

from tioli.agents import Agent, Decision, DecisionStrategy, Offer, decide, realized_utility
from tioli.benchmark import BenchmarkReport, benchmark_cost, cost_ratio_report, critical_epoch
from tioli.dp_primitives import (
    LaplaceParam,
    NeighborViolation,
    PrivacyLevel,
    dp_ratio_audit,
    laplace_density,
    laplace_tail,
    sample_laplace,
)
from tioli.mechanism import (
    MaxEpochsExceeded,
    MechanismConfig,
    SurveyOutcome,
    Transcript,
    epoch_size,
    estimate,
    offer_price,
    run_harassment,
    run_survey,
)
from tioli.population import (
    PopulationExhausted,
    PopulationModel,
    PopulationOracle,
    TypeUniverse,
    sample_agent,
    true_statistic,
    value_quantile,
)

__version__ = "0.1.0"
