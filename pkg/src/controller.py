"""Command-line parsing and execution of analysis runs."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Tuple

import numpy as np

from src.config import (
    CHAOS_T_END,
    DEFAULT_STEP,
    DEFAULT_T_END,
    DIVERGENCE_THRESHOLD,
    EXIT_DIVERGED,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_STORAGE,
    EXIT_USAGE,
    EXIT_VALIDATION,
    HISTORY_OFFSET,
    OUTPUT_FORMATS,
    TRANSIENT_FRACTION,
    VALID_COMMANDS,
    WORKERS,
)
from src.exceptions import (
    ConfigError,
    FddeError,
    NumericalError,
    StorageError,
    UsageError,
    ValidationError,
)
from src.models import Branch, ModelParams, RunConfig, SolverConfig
from src.service import AnalysisService
from src.storage import ResultWriter

logger = logging.getLogger(__name__)

# (flag, type, help); every flag may also appear as key=value in a --config file.
FLAGS: Tuple[Tuple[str, Any, str], ...] = (
    ("alpha", float, "derivative order in (0, 1]"),
    ("tau", float, "delay"),
    ("delta", float, "coefficient of x(t - tau)"),
    ("epsilon", float, "coefficient of -x(t - tau)^3"),
    ("p", float, "coefficient of -x(t)^2"),
    ("q", float, "coefficient of x(t)"),
    ("h", float, f"step size (default {DEFAULT_STEP})"),
    ("t-end", float, "final time"),
    ("history-const", float, f"constant initial function (default {HISTORY_OFFSET})"),
    ("memory-window", float, "truncate the fractional memory to this length"),
    ("tau-min", float, "first delay of a sweep"),
    ("tau-max", float, "last delay of a sweep"),
    ("tau-steps", int, "number of delays in a sweep"),
    ("transient", float, f"leading fraction of each sweep run discarded (default {TRANSIENT_FRACTION})"),
    ("q-range", str, "q interval as MIN,MAX (use --q-range=MIN,MAX for negative MIN)"),
    ("delta-range", str, "delta interval as MIN,MAX"),
    ("grid", str, "lattice size as NQxNDELTA (default 200x200)"),
    ("a", float, "linear coefficient of xi(t) for direct crit-delay"),
    ("b", float, "linear coefficient of xi(t - tau) for direct crit-delay"),
    ("branch", str, "equilibrium branch: x1, x2, x3 or all"),
    ("workers", int, "worker processes for grids and sweeps"),
    ("out", str, "output file (default: standard output)"),
    ("format", str, "csv or json"),
)
FLAG_NAMES = frozenset(name for name, _, _ in FLAGS)

_REQUIRED_MODEL = ("alpha", "delta", "epsilon", "p", "q")
_SWEEP = ("tau-min", "tau-max", "tau-steps")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdde", description="Fractional cubic delay equation analyzer")
    parser.add_argument("command", choices=VALID_COMMANDS)
    parser.add_argument("--config", default=None, help="file of key=value lines")
    for name, kind, text in FLAGS:
        options: Dict[str, Any] = {"type": kind, "default": None, "help": text}
        if name == "branch":
            options["choices"] = ("x1", "x2", "x3", "all")
        elif name == "format":
            options["choices"] = OUTPUT_FORMATS
        parser.add_argument(f"--{name}", **options)
    return parser


def _dest(flag: str) -> str:
    return flag.replace("-", "_")


def _read_config(path: str, parser: argparse.ArgumentParser, command: str) -> Dict[str, Any]:
    """Values from a key=value file, parsed with the same types as the flags."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e

    tokens: List[str] = []
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key not in FLAG_NAMES:
            raise ConfigError(f"{path}:{number}: unknown key {key!r}")
        tokens.append(f"--{key}={value}")

    try:
        namespace = parser.parse_args([command, *tokens])
    except UsageError as e:
        raise ConfigError(f"{path}: {e.args[0]}") from e
    return {_dest(name): getattr(namespace, _dest(name)) for name in FLAG_NAMES}


def _require(values: Dict[str, Any], command: str, *flags: str) -> None:
    missing = [f"--{flag}" for flag in flags if values.get(_dest(flag)) is None]
    if missing:
        raise UsageError(f"{command} requires {', '.join(missing)}")


def _parse_pair(text: str, flag: str) -> Tuple[float, float]:
    parts = text.split(",")
    try:
        low, high = (float(part) for part in parts)
    except ValueError as e:
        raise UsageError(f"--{flag} expects MIN,MAX, got {text!r}") from e
    return low, high


def _parse_grid(text: str) -> Tuple[int, int]:
    parts = text.lower().replace(",", "x").split("x")
    try:
        nq, ndelta = (int(part) for part in parts)
    except ValueError as e:
        raise UsageError(f"--grid expects NQxNDELTA, got {text!r}") from e
    return nq, ndelta


def _model(values: Dict[str, Any], alpha: float = 1.0, tau: float = 0.0) -> ModelParams:
    return ModelParams(
        alpha=values["alpha"] if values["alpha"] is not None else alpha,
        tau=values["tau"] if values["tau"] is not None else tau,
        delta=values["delta"],
        epsilon=values["epsilon"],
        p=values["p"],
        q=values["q"],
    )


def _solver(values: Dict[str, Any], t_end: float) -> SolverConfig:
    return SolverConfig(
        h=values["h"] if values["h"] is not None else DEFAULT_STEP,
        t_end=values["t_end"] if values["t_end"] is not None else t_end,
        divergence_threshold=DIVERGENCE_THRESHOLD,
        memory_window=values["memory_window"],
    )


def _tau_values(values: Dict[str, Any]) -> Tuple[float, ...]:
    steps = values["tau_steps"]
    if steps < 1:
        raise ConfigError(f"--tau-steps must be at least 1, got {steps}")
    if steps == 1:
        return (float(values["tau_min"]),)
    return tuple(float(t) for t in np.linspace(values["tau_min"], values["tau_max"], steps))


def _build_config(values: Dict[str, Any]) -> RunConfig:
    command = values["command"]
    branch = values["branch"]
    common: Dict[str, Any] = {
        "command": command,
        "branch": None if branch in (None, "all") else Branch(branch),
        "out": values["out"],
        "fmt": values["format"] or "csv",
        "workers": values["workers"] if values["workers"] is not None else WORKERS,
        "transient_fraction": (
            values["transient"] if values["transient"] is not None else TRANSIENT_FRACTION
        ),
    }

    if command == "simulate":
        _require(values, command, *_REQUIRED_MODEL, "tau")
        history = values["history_const"]
        return RunConfig(
            params=_model(values),
            solver=_solver(values, DEFAULT_T_END),
            history_const=history if history is not None else HISTORY_OFFSET,
            **common,
        )
    if command == "equilibria":
        _require(values, command, "delta", "epsilon", "p", "q")
        return RunConfig(params=_model(values), **common)
    if command == "classify":
        _require(values, command, *_REQUIRED_MODEL)
        return RunConfig(params=_model(values), **common)
    if command == "crit-delay":
        if values["a"] is not None or values["b"] is not None:
            _require(values, command, "a", "b", "alpha")
            return RunConfig(a=values["a"], b=values["b"], alpha=values["alpha"], **common)
        _require(values, command, *_REQUIRED_MODEL)
        return RunConfig(params=_model(values), **common)
    if command == "region":
        _require(values, command, "p", "epsilon", "q-range", "delta-range")
        grid = values["grid"]
        return RunConfig(
            p=values["p"],
            epsilon=values["epsilon"],
            q_range=_parse_pair(values["q_range"], "q-range"),
            delta_range=_parse_pair(values["delta_range"], "delta-range"),
            grid=_parse_grid(grid) if grid is not None else (200, 200),
            **common,
        )

    _require(values, command, *_REQUIRED_MODEL, *_SWEEP)
    return RunConfig(
        params=_model(values, tau=values["tau_min"]),
        solver=_solver(values, CHAOS_T_END),
        tau_values=_tau_values(values),
        **common,
    )


def parse_args(argv: Optional[List[str]] = None) -> RunConfig:
    """Parse a command line into a validated RunConfig.

    Flags given on the command line take precedence over the --config file.

    Raises:
        UsageError: Unknown command, unknown flag, malformed or missing value
        ValidationError: A value is outside its domain (ConfigError for a bad file)
    """
    parser = build_parser()
    namespace = parser.parse_args(argv)
    values = vars(namespace)
    if namespace.config:
        for key, value in _read_config(namespace.config, parser, namespace.command).items():
            if values.get(key) is None:
                values[key] = value
    return _build_config(values)


def exit_code_for(error: Exception) -> int:
    """Process exit status for an error raised while parsing or running."""
    if isinstance(error, UsageError):
        return EXIT_USAGE
    if isinstance(error, ValidationError):
        return EXIT_VALIDATION
    if isinstance(error, NumericalError):
        return EXIT_NUMERIC
    if isinstance(error, StorageError):
        return EXIT_STORAGE
    return EXIT_NUMERIC


def report_error(error: Exception, code: int, stream: Optional[TextIO] = None) -> None:
    """Write one JSON diagnostic line for an error."""
    line = json.dumps({"error": type(error).__name__, "message": str(error), "exit_code": code})
    print(line, file=stream if stream is not None else sys.stderr)


class AnalysisController:
    """Executes a RunConfig through AnalysisService and writes the result.

    Responsible for:
    - Dispatching the run to the service
    - Writing CSV/JSON to the output file or standard output
    - Mapping errors and divergence to exit codes
    """

    def __init__(self, service: AnalysisService):
        self.service = service

    def run(self, config: RunConfig) -> int:
        """Run one command and return its exit code.

        Divergent integrations still produce output and return EXIT_DIVERGED.
        """
        try:
            table = self.service.execute(config)
            if config.out:
                ResultWriter(config.out).write(table, config.fmt)
            else:
                sys.stdout.write(ResultWriter.render(table, config.fmt))
        except FddeError as e:
            code = exit_code_for(e)
            logger.debug("command %s failed", config.command, exc_info=True)
            report_error(e, code)
            return code
        except Exception as e:
            logger.exception("command %s failed unexpectedly", config.command)
            report_error(e, EXIT_NUMERIC)
            return EXIT_NUMERIC

        if table.diverged:
            logger.warning("%s: at least one integration diverged", config.command)
            return EXIT_DIVERGED
        return EXIT_OK


def run(config: RunConfig) -> int:
    """Execute a parsed configuration with a fresh service."""
    return AnalysisController(AnalysisService()).run(config)
