from tioli.harness.config import ConfigError, ExperimentSpec, load_spec, parse_spec
from tioli.harness.experiment import ExperimentSummary, TrialRecord, run_trials

__all__ = ["ConfigError", "ExperimentSpec", "ExperimentSummary", "TrialRecord",
           "load_spec", "parse_spec", "run_trials"]
