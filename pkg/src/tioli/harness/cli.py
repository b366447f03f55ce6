"""Command-line entry point: ``tioli {run,sweep,audit,benchmark,verify}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from tioli.benchmark import cost_ratio_report
from tioli.harness.audit import default_script, empirical_dp_audit
from tioli.harness.config import ConfigError, ExperimentSpec, load_spec
from tioli.harness.experiment import run_trials
from tioli.harness.suites import run_suites

ENV_OUT = "TIOLI_OUT"
ENV_SEED = "TIOLI_SEED"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _spec(args) -> ExperimentSpec:
    spec = load_spec(args.config)
    seed = args.seed
    if seed is None and os.environ.get(ENV_SEED):
        try:
            seed = int(os.environ[ENV_SEED])
        except ValueError:
            raise ConfigError(ENV_SEED, f"expected an integer, got {os.environ[ENV_SEED]!r}") from None
    kw = {}
    if seed is not None:
        kw["master_seed"] = seed
    if args.trials is not None:
        kw["trials"] = args.trials
    try:
        return replace(spec, **kw)
    except ValueError as exc:
        raise ConfigError("arguments", str(exc)) from None


def _out(args) -> Path:
    return Path(args.out or os.environ.get(ENV_OUT) or "out")


def cmd_run(args) -> int:
    spec = _spec(args)
    s = run_trials(spec, workers=args.workers)
    out = _out(args)
    _write(out, "summary.json", s.to_json())
    _write(out, "epochs.csv", s.epochs_csv())
    if args.format == "csv":
        sys.stdout.write(s.trials_csv())
    else:
        sys.stdout.write(_dump(s.to_dict()["aggregates"]))
    return EXIT_OK


SWEEP_COLUMNS = ("alpha", "eta", "value_scale", "trials", "failure_rate", "mean_cost",
                 "mean_epochs", "errors", "cost_ratio")


def cmd_sweep(args) -> int:
    spec = _spec(args)
    rows = []
    for alpha in spec.sweep.alphas:
        for eta in spec.sweep.etas:
            for scale in spec.sweep.value_scales:
                try:
                    cfg = replace(spec.config, alpha=alpha, eta=eta)
                except ValueError as exc:
                    raise ConfigError("sweep", str(exc)) from None
                cell = replace(spec, config=cfg, population=spec.population.with_values(scale))
                s = run_trials(cell, workers=args.workers, keep_transcripts=False)
                try:
                    ratio = cost_ratio_report([r.total_payments for r in s.trials], cell.population, cfg).ratio
                except ValueError:
                    ratio = None
                mean_epochs = sum(r.epochs_run for r in s.trials) / len(s.trials)
                rows.append(dict(zip(SWEEP_COLUMNS, (alpha, eta, scale, len(s.trials), s.failure_rate,
                                                     s.mean_cost, mean_epochs, s.error_count, ratio))))
    out = _out(args)
    _write(out, "sweep.json", _dump(rows))
    table = _csv(SWEEP_COLUMNS, [["" if r[c] is None else r[c] for c in SWEEP_COLUMNS] for r in rows])
    _write(out, "sweep.csv", table)
    sys.stdout.write(table if args.format == "csv" else _dump(rows))
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = _spec(args)
    rep = empirical_dp_audit(spec, default_script(spec.config, spec.audit_max_epoch))
    _write(_out(args), "audit.json", _dump(rep.to_dict()))
    if args.format == "json":
        sys.stdout.write(_dump(rep.to_dict()))
    elif args.format == "csv":
        sys.stdout.write(_csv(("bin", "count_a", "count_b", "lower_log_ratio_ab", "lower_log_ratio_ba"),
                              zip(rep.labels, rep.counts_a, rep.counts_b,
                                  rep.lower_log_ratio_ab, rep.lower_log_ratio_ba)))
    else:
        print("\n".join(rep.summary_lines()))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_benchmark(args) -> int:
    spec = _spec(args)
    s = run_trials(spec, workers=args.workers, keep_transcripts=False)
    try:
        rep = cost_ratio_report([r.total_payments for r in s.trials], spec.population, spec.config)
    except ValueError as exc:
        raise ConfigError("population", str(exc)) from None
    _write(_out(args), "benchmark.json", _dump(rep.to_dict()))
    if args.format == "json":
        sys.stdout.write(_dump(rep.to_dict()))
    elif args.format == "csv":
        d = rep.to_dict()
        sys.stdout.write(_csv(d.keys(), [d.values()]))
    else:
        print(rep.table())
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _spec(args)
    results = run_suites(spec, workers=args.workers)
    _write(_out(args), "verify.json",
           _dump([{"suite": r.name, "passed": r.passed, "lines": r.lines} for r in results]))
    if args.format == "json":
        sys.stdout.write(_dump([{"suite": r.name, "passed": r.passed} for r in results]))
    else:
        for r in results:
            print(r.report())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "audit": cmd_audit,
            "benchmark": cmd_benchmark, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config file (INI, schema_version 1)")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (env {ENV_SEED})")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--out", default=None, help=f"output directory (env {ENV_OUT}, default ./out)")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="stdout rendering")
    common.add_argument("--workers", type=int, default=1)
    p = argparse.ArgumentParser(prog="tioli", description="Private take-it-or-leave-it survey simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "run one experiment"), ("sweep", "grid over alpha, eta and cost scale"),
                        ("audit", "empirical privacy audit of the halting channel"),
                        ("benchmark", "cost against the envy-free benchmark"),
                        ("verify", "run the configured verification suites")]:
        sub.add_parser(name, parents=[common], help=help_)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
