"""Experiment configuration: an INI document with mechanism, population, cell and experiment sections.

Schema (version 1)::

    [meta]
    schema_version = 1

    [mechanism]
    alpha = 0.5            ; required
    eta = 0.1
    eps0 = 0.5             ; optional, defaults to alpha
    epoch_constant = 100
    participation_factor = 0.9375   ; optional, defaults to 1 - alpha/8
    base_price = 1
    max_epochs = 10000

    [population]
    mode = infinite        ; or finite (then pool_size is required)
    pool_size = 100000
    strategy = rational    ; rational | exact | subthreshold
    accept_probability = 0 ; subthreshold only
    types = 0, 1
    query = 0, 1

    [cell:<name>]          ; one section per cell, any number
    mass = 0.3
    type = 1
    value = 0              ; may be inf
    leak = 0

    [experiment]
    trials = 300
    seed = 0
    suites = accuracy, tails, halting, cost, dp_audit
    failure_constant = 0.3333333333333333
    audit_runs = 20000
    audit_max_epoch = 4
    cost_constant = 25      ; optional ratio cap for the cost suite

    [sweep]                ; optional, read by the sweep subcommand
    alphas = 0.3, 0.5
    etas = 0.1
    value_scales = 1, 10
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from tioli.agents import DecisionStrategy, StrategyKind
from tioli.mechanism import MechanismConfig
from tioli.population import Cell, PopulationModel, TypeUniverse

SCHEMA_VERSION = 1
SUITES = ("accuracy", "tails", "halting", "cost", "dp_audit")



class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SweepGrid:
    alphas: tuple = ()
    etas: tuple = ()
    value_scales: tuple = (1.0,)


@dataclass(frozen=True)
class ExperimentSpec:
    config: MechanismConfig
    population: PopulationModel
    trials: int = 100
    master_seed: int = 0
    suites: tuple = SUITES
    failure_constant: float = 1.0 / 3.0
    audit_runs: int = 20_000
    audit_max_epoch: int = 4
    cost_constant: float | None = None
    sweep: SweepGrid = field(default_factory=SweepGrid)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        bad = set(self.suites) - set(SUITES)
        if bad:
            raise ValueError(f"unknown suites: {sorted(bad)}")

    def with_(self, **kw) -> "ExperimentSpec":
        return replace(self, **kw)


def _type_id(raw: str):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        return raw


def _float(sec, key: str, where: str, default=None, required=False) -> float | None:
    if key not in sec:
        if required:
            raise ConfigError(f"{where}.{key}", "missing required field")
        return default
    try:
        return float(sec[key])
    except ValueError:
        raise ConfigError(f"{where}.{key}", f"expected a number, got {sec[key]!r}") from None


def _int(sec, key: str, where: str, default=None) -> int | None:
    if key not in sec:
        return default
    try:
        return int(sec[key])
    except ValueError:
        raise ConfigError(f"{where}.{key}", f"expected an integer, got {sec[key]!r}") from None


def _list(sec, key: str, where: str, conv=float, default=()) -> tuple:
    if key not in sec:
        return tuple(default)
    items = [s for s in (x.strip() for x in sec[key].split(",")) if s]
    try:
        return tuple(conv(s) for s in items)
    except ValueError:
        raise ConfigError(f"{where}.{key}", f"could not parse list {sec[key]!r}") from None


def _build(fieldname: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(fieldname, str(exc)) from None


def parse_spec(text: str) -> ExperimentSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("document", str(exc).splitlines()[0]) from None

    if "meta" not in cp or "schema_version" not in cp["meta"]:
        raise ConfigError("meta.schema_version", "missing required field")
    version = _int(cp["meta"], "schema_version", "meta")
    if version != SCHEMA_VERSION:
        raise ConfigError("meta.schema_version", f"unsupported version {version}")

    if "mechanism" not in cp:
        raise ConfigError("mechanism", "missing section")
    m = cp["mechanism"]
    config = _build("mechanism", MechanismConfig,
                    alpha=_float(m, "alpha", "mechanism", required=True),
                    eta=_float(m, "eta", "mechanism", 0.1),
                    eps0=_float(m, "eps0", "mechanism"),
                    epoch_constant=_float(m, "epoch_constant", "mechanism", 100.0),
                    participation_factor=_float(m, "participation_factor", "mechanism"),
                    base_price=_float(m, "base_price", "mechanism", 1.0),
                    max_epochs=_int(m, "max_epochs", "mechanism", 10_000))

    if "population" not in cp:
        raise ConfigError("population", "missing section")
    p = cp["population"]
    types = _list(p, "types", "population", _type_id, (0, 1))
    query = _list(p, "query", "population", float, (0.0, 1.0))
    universe = _build("population.types", TypeUniverse, types, query)
    mode = p.get("mode", "infinite").strip()
    if mode not in ("infinite", "finite"):
        raise ConfigError("population.mode", f"expected infinite or finite, got {mode!r}")
    pool = _int(p, "pool_size", "population")
    if mode == "finite" and pool is None:
        raise ConfigError("population.pool_size", "required in finite mode")
    try:
        kind = StrategyKind(p.get("strategy", "rational").strip())
    except ValueError:
        raise ConfigError("population.strategy", f"unknown strategy {p.get('strategy')!r}") from None
    strategy = _build("population.accept_probability", DecisionStrategy, kind,
                      _float(p, "accept_probability", "population", 0.0))

    cells = []
    for name in cp.sections():
        if not name.startswith("cell:"):
            continue
        s = cp[name]
        if "type" not in s:
            raise ConfigError(f"{name}.type", "missing required field")
        cells.append(Cell(_float(s, "mass", name, required=True), _type_id(s["type"]),
                          _float(s, "value", name, required=True), _float(s, "leak", name, 0.0)))
    if not cells:
        raise ConfigError("cell", "at least one [cell:<name>] section is required")
    population = _build("population", PopulationModel, universe, tuple(cells),
                        pool if mode == "finite" else None, strategy)

    e = cp["experiment"] if "experiment" in cp else {}
    suites = _list(e, "suites", "experiment", str, SUITES)
    sw = cp["sweep"] if "sweep" in cp else {}
    sweep = SweepGrid(_list(sw, "alphas", "sweep", float, (config.alpha,)),
                      _list(sw, "etas", "sweep", float, (config.eta,)),
                      _list(sw, "value_scales", "sweep", float, (1.0,)))
    fc = _float(e, "failure_constant", "experiment", 1.0 / 3.0)
    if not 0 < fc < 1:
        raise ConfigError("experiment.failure_constant", "must lie in (0, 1)")
    return _build("experiment", ExperimentSpec, config, population,
                  trials=_int(e, "trials", "experiment", 100),
                  master_seed=_int(e, "seed", "experiment", 0),
                  suites=suites, failure_constant=fc,
                  audit_runs=_int(e, "audit_runs", "experiment", 20_000),
                  audit_max_epoch=_int(e, "audit_max_epoch", "experiment", 4),
                  cost_constant=_float(e, "cost_constant", "experiment"),
                  sweep=sweep)


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("path", f"cannot read {path}: {exc.strerror}") from None
    return parse_spec(text)

