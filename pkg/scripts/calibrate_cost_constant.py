"""Pilot run that sets the cost-ratio constant K used by the single-value cost sweep.

Runs the sweep (alpha=0.4, eta=0.1, v in {1, 10, ..., 1e4}) under pilot seeds
disjoint from the test seed, prints the per-value ratios, and suggests K as
the pilot maximum times a safety margin. The chosen K is committed in
tioli/harness/suites.py as SINGLE_VALUE_COST_CONSTANT.
"""

import argparse
import math
import time

from tioli.benchmark import cost_ratio_report
from tioli.harness import ExperimentSpec, run_trials
from tioli.mechanism import MechanismConfig
from tioli.population import PopulationModel

VALUES = (1.0, 10.0, 100.0, 1e3, 1e4)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1001, 1002, 1003])
    ap.add_argument("--margin", type=float, default=1.25)
    args = ap.parse_args()
    cfg = MechanismConfig(alpha=0.4, eta=0.1)
    worst = 0.0
    for seed in args.seeds:
        for v in VALUES:
            t0 = time.perf_counter()
            model = PopulationModel.single_value(v)
            s = run_trials(ExperimentSpec(cfg, model, trials=args.trials, master_seed=seed),
                           keep_transcripts=False)
            rep = cost_ratio_report([r.total_payments for r in s.trials], model, cfg)
            worst = max(worst, rep.ratio)
            print(f"seed={seed} v={v:g} j*={rep.critical_epoch} mean_cost={rep.mechanism_mean_cost:.6g} "
                  f"loglog={rep.loglog_factor:.3f} ratio={rep.ratio:.4f} ({time.perf_counter() - t0:.1f}s)")
    print(f"pilot max ratio {worst:.4f}; suggested K = {math.ceil(worst * args.margin)}")


if __name__ == "__main__":
    main()
