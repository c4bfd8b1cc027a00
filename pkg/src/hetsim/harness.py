"""Experiment configuration, execution and CSV output.

A configuration is a YAML document with the run-level keys ``scenario``,
``seed``, ``trials`` and ``output`` plus one section named after the
scenario. Every field of the section is optional and defaults to the values
in :mod:`hetsim.scenarios`; ``hetsim defaults <scenario>`` prints a fully
populated example.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import sys
import time
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from ._stats import MonteCarloStats, resolve_workers
from .scenarios import (DualBandConfig, HybridCaseConfig, RelayCaseConfig,
                        ScenarioResult, UeDistribution, run_hybrid_vs_digital,
                        run_mobile_relay, sweep_dual_band)

__all__ = [
    "ConfigError",
    "DualBandSweepConfig",
    "ExperimentSpec",
    "MonteCarloStats",
    "SCENARIOS",
    "default_document",
    "emit_table",
    "format_value",
    "load_config",
    "parse_config",
    "read_table",
    "run",
    "run_scenario",
]


class ConfigError(ValueError):
    """Malformed configuration; the message names the file, line and field."""


@dataclass(frozen=True)
class DualBandSweepConfig:
    """Sweep setup; ``trials`` is the number of UEs dropped per grid point."""

    grid: Tuple[Tuple[float, float], ...] = ((25.0, 100.0), (50.0, 150.0), (75.0, 200.0))
    cell: DualBandConfig = field(default_factory=DualBandConfig)
    radius_factor: float = 1.5
    trials: int = 10000

    def validate(self) -> None:
        if len(self.grid) == 0:
            raise ValueError("grid must contain at least one (a, b) point")
        if self.trials < 0:
            raise ValueError(f"trials must be >= 0, got {self.trials}")
        if not self.radius_factor > 0:
            raise ValueError("radius_factor must be positive")


SCENARIOS = {
    "hybrid_vs_digital": HybridCaseConfig,
    "mobile_relay": RelayCaseConfig,
    "dual_band_sweep": DualBandSweepConfig,
}


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    config: Any
    seed: int = 0
    trials: Optional[int] = None
    output_path: str = "results.csv"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"expected one of {sorted(SCENARIOS)}")
        if not isinstance(self.config, SCENARIOS[self.scenario]):
            raise ConfigError(f"scenario {self.scenario!r} needs a "
                              f"{SCENARIOS[self.scenario].__name__}, got "
                              f"{type(self.config).__name__}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def resolved_config(self):
        """The scenario config with the run-level trial count applied."""
        if self.trials is None:
            return self.config
        return dataclasses.replace(self.config, trials=int(self.trials))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Config parsing xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class _Locator:
    """Maps dotted field paths to 1-based line numbers of a YAML document."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            self.root = yaml.compose(text)
        except yaml.YAMLError:
            self.root = None

    def line(self, path: Sequence[Union[str, int]]) -> Optional[int]:
        node, best = self.root, None
        for key in path:
            if node is None:
                break
            best = node.start_mark.line + 1
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == key:
                        best, nxt = k.start_mark.line + 1, v
                        break
                node = nxt
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
                node = node.value[key] if key < len(node.value) else None
            else:
                node = None
        if node is not None:
            best = node.start_mark.line + 1
        return best

    def error(self, path, message: str) -> ConfigError:
        line = self.line(path)
        where = f"{self.source}:{line}" if line else self.source
        dotted = ".".join(str(p) for p in path)
        return ConfigError(f"{where}: {dotted}: {message}")


def _convert(value, hint, path, loc: _Locator):
    origin = typing.get_origin(hint)
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            raise loc.error(path, f"expected a mapping, got {value!r}")
        return _build(hint, value, path, loc)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise loc.error(path, f"expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise loc.error(path, f"expected a number, got {value!r}")
        return float(value)
    if origin is tuple:
        args = typing.get_args(hint)
        if not isinstance(value, (list, tuple)):
            raise loc.error(path, f"expected a list, got {value!r}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(v, args[0], path + [i], loc) for i, v in enumerate(value))
        if len(value) != len(args):
            raise loc.error(path, f"expected {len(args)} items, got {len(value)}")
        return tuple(_convert(v, a, path + [i], loc) for i, (v, a) in enumerate(zip(value, args)))
    raise TypeError(f"unsupported config field type {hint!r}")


def _build(cls, mapping: Dict[str, Any], path, loc: _Locator):
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    unknown = sorted(set(mapping) - set(names))
    if unknown:
        raise loc.error(path + [unknown[0]], f"unknown field; expected one of {names}")
    kwargs = {k: _convert(v, hints[k], path + [k], loc) for k, v in mapping.items()}
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise loc.error(path, str(exc)) from exc


def parse_config(text: str, source: str = "<config>") -> ExperimentSpec:
    """Parse a YAML experiment description into an :class:`ExperimentSpec`."""
    loc = _Locator(text, source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}{line}: YAML syntax error: "
                          f"{getattr(exc, 'problem', exc)}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    allowed = {"scenario", "seed", "trials", "output"} | set(SCENARIOS)
    for key in doc:
        if key not in allowed:
            raise loc.error([key], f"unknown key; expected one of {sorted(allowed)}")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise loc.error(["scenario"], f"expected one of {sorted(SCENARIOS)}, got {scenario!r}")
    for other in SCENARIOS:
        if other != scenario and other in doc:
            raise loc.error([other], f"section does not match scenario {scenario!r}")
    section = doc.get(scenario) or {}
    if not isinstance(section, dict):
        raise loc.error([scenario], "expected a mapping")
    config = _build(SCENARIOS[scenario], section, [scenario], loc)

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise loc.error(["seed"], f"expected a 64-bit unsigned integer, got {seed!r}")
    trials = doc.get("trials")
    if trials is not None and (isinstance(trials, bool) or not isinstance(trials, int)
                               or trials < 0):
        raise loc.error(["trials"], f"expected a non-negative integer, got {trials!r}")
    output = doc.get("output", f"{scenario}.csv")
    if not isinstance(output, str):
        raise loc.error(["output"], f"expected a path string, got {output!r}")
    return ExperimentSpec(scenario, config, seed, trials, output)


def load_config(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, str(path))


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def default_document(scenario: str, seed: int = 42) -> str:
    """Fully populated YAML config for ``scenario``."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")
    config = SCENARIOS[scenario]()
    doc = {"scenario": scenario, "seed": seed, "trials": config.trials,
           "output": f"{scenario}.csv", scenario: _plain(config)}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Tables xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def format_value(value) -> str:
    """Locale-independent decimal text with 9 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if not np.isfinite(x):
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    if x == 0:
        return "0"
    return np.format_float_positional(x, precision=9, unique=False, fractional=False,
                                      trim="-")


def emit_table(rows: Sequence, schema: Sequence[str], path) -> Path:
    """
    Write ``rows`` as comma-separated text.

    Parameters
    ----------
    rows : sequence of mapping or sequence
        Mappings must have exactly the ``schema`` keys; sequences must have
        one value per column.
    schema : sequence of str
        Column names, written as the header row.
    path : str or Path
        Destination file.
    """
    schema = list(schema)
    lines = []
    for i, row in enumerate(rows):
        if isinstance(row, dict):
            if set(row) != set(schema):
                raise ValueError(f"row {i} has columns {sorted(row)}, expected {schema}")
            values = [row[c] for c in schema]
        else:
            values = list(row)
            if len(values) != len(schema):
                raise ValueError(f"row {i} has {len(values)} values for {len(schema)} columns")
        lines.append([format_value(v) for v in values])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema)
    writer.writerows(lines)
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_table(path) -> Tuple[List[str], List[Dict[str, float]]]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [dict(zip(header, map(float, rec))) for rec in reader]
    return header, rows


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Running xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def validate(spec: ExperimentSpec) -> None:
    """Raise the scenario's own error if the configuration is infeasible."""
    config = spec.resolved_config()
    config.validate()
    if spec.scenario == "dual_band_sweep":
        # grid validity is checked per point at run time; the cell itself must be sane
        dataclasses.replace(config.cell, inner_radius_a_m=1.0, middle_radius_b_m=2.0).validate()


def run_scenario(spec: ExperimentSpec, workers: int = 1) -> ScenarioResult:
    config = spec.resolved_config()
    if spec.scenario == "hybrid_vs_digital":
        return run_hybrid_vs_digital(config, spec.seed, workers=workers)
    if spec.scenario == "mobile_relay":
        return run_mobile_relay(config, spec.seed, workers=workers)
    config.validate()
    dist = UeDistribution(count=config.trials, radius_factor=config.radius_factor)
    return sweep_dual_band(config.grid, config.cell, dist, spec.seed)


def run(spec: ExperimentSpec, workers: Optional[int] = 1, out=None,
        stream="stdout") -> Tuple[ScenarioResult, Path]:
    """
    Run one experiment and write its result table.

    Parameters
    ----------
    spec : ExperimentSpec
        What to run.
    workers : int or None
        Parallel trial workers; ``None`` uses every CPU. The
        ``HETSIM_MAX_WORKERS`` environment variable caps the count. Output
        does not depend on it.
    out : path, optional
        Overrides ``spec.output_path``.
    stream : file-like
        Where the one-line summary goes. Defaults to the current
        ``sys.stdout``; ``None`` silences it.
    """
    if stream == "stdout":
        stream = sys.stdout
    validate(spec)
    n_workers = resolve_workers(workers)
    start = time.perf_counter()
    result = run_scenario(spec, workers=n_workers)
    path = emit_table(result.rows, result.columns, out or spec.output_path)
    wall = time.perf_counter() - start
    if stream is not None:
        trials = spec.resolved_config().trials
        print(f"scenario={spec.scenario} seed={spec.seed} trials={trials} "
              f"rows={len(result.rows)} workers={n_workers} wall={wall:.2f}s -> {path}",
              file=stream)
        if trials == 1 and spec.scenario != "dual_band_sweep":
            print("note: n=1, standard errors are reported as 0", file=stream)
        for msg in result.diagnostics:
            print(f"diagnostic: {msg}", file=stream)
    return result, path
