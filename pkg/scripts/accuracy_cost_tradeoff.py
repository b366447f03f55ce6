"""Accuracy and payments as alpha varies, for a population whose costs track its types.

Writes one CSV row per alpha: failure rate at alpha, mean |error|, mean payments,
mean halting epoch and the benchmark ratio.

    python scripts/accuracy_cost_tradeoff.py --config configs/correlated.cfg --trials 200 > tradeoff.csv
"""

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from tioli.benchmark import cost_ratio_report
from tioli.harness import load_spec, run_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/correlated.cfg")
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.2, 0.3, 0.4, 0.5])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = load_spec(args.config)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha", "failure_rate", "mean_abs_error", "mean_cost", "mean_final_epoch", "cost_ratio"])
    for alpha in args.alphas:
        spec = replace(base, config=replace(base.config, alpha=alpha), trials=args.trials, master_seed=args.seed)
        s = run_trials(spec, keep_transcripts=False)
        done = [r for r in s.trials if r.error is None]
        rep = cost_ratio_report([r.total_payments for r in s.trials], spec.population, spec.config)
        w.writerow([alpha, s.failure_rate,
                    np.mean([r.abs_error for r in done]) if done else "",
                    s.mean_cost,
                    np.mean([r.final_epoch for r in done]) if done else "",
                    rep.ratio])


if __name__ == "__main__":
    main()
