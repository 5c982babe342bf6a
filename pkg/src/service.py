import logging
from typing import List, Optional, Sequence, Tuple

from src import chaos, region, stability
from src.config import CSV_HEADERS
from src.core import equilibria, linearize
from src.exceptions import DomainError
from src.models import (
    Branch,
    ConstantHistory,
    Equilibrium,
    ModelParams,
    ResultTable,
    RunConfig,
    SolverConfig,
    VerdictKind,
)
from src.solver import integrate

logger = logging.getLogger(__name__)


class AnalysisService:
    """Runs one analysis per CLI command and packages the result as a ResultTable."""

    def execute(self, config: RunConfig) -> ResultTable:
        """Dispatch a validated run configuration to the matching analysis."""
        handlers = {
            "simulate": self._run_simulate,
            "equilibria": self._run_equilibria,
            "classify": self._run_classify,
            "crit-delay": self._run_crit_delay,
            "region": self._run_region,
            "bifurcation": self._run_bifurcation,
            "lyapunov": self._run_lyapunov,
        }
        return handlers[config.command](config)

    def simulate(
        self, params: ModelParams, solver: SolverConfig, history_const: float
    ) -> ResultTable:
        """Trajectory from a constant initial function."""
        series = integrate(params, ConstantHistory(history_const), solver)
        rows = [(float(t), float(x)) for t, x in zip(series.times, series.samples)]
        meta = {
            "command": "simulate",
            "params": params.to_dict(),
            "history_const": history_const,
            "h": series.h,
            "t_end": solver.t_end,
            "diverged": series.diverged,
        }
        return ResultTable(CSV_HEADERS["simulate"], rows, meta, diverged=series.diverged)

    def equilibria(self, params: ModelParams) -> ResultTable:
        """Every real equilibrium with its linearization."""
        rows = []
        for eq in equilibria(params):
            coeffs = linearize(params, eq.value)
            rows.append((eq.branch.value, eq.value, coeffs.a, coeffs.b))
        meta = {"command": "equilibria", "params": params.to_dict()}
        return ResultTable(CSV_HEADERS["equilibria"], rows, meta)

    def classify(self, params: ModelParams, branch: Optional[Branch] = None) -> ResultTable:
        """Stability verdict of each equilibrium (or of one branch)."""
        rows = []
        for eq in self._select(params, branch):
            coeffs = linearize(params, eq.value)
            verdict = stability.classify_equilibrium(params, eq)
            rows.append(
                (
                    eq.branch.value,
                    eq.value,
                    coeffs.a,
                    coeffs.b,
                    verdict.kind.value,
                    verdict.tau_star,
                    verdict.source_label,
                )
            )
        meta = {"command": "classify", "params": params.to_dict()}
        return ResultTable(CSV_HEADERS["classify"], rows, meta)

    def crit_delay(self, a: float, b: float, alpha: float) -> ResultTable:
        """Critical delay of D^alpha xi = a*xi + b*xi(t - tau)."""
        crossing = stability.critical_crossing(a, b, alpha)
        meta = {"command": "crit-delay", "mode": "direct"}
        return ResultTable(
            CSV_HEADERS["crit-delay"], [(a, b, alpha, crossing.tau, crossing.omega)], meta
        )

    def crit_delay_for_model(
        self, params: ModelParams, branch: Optional[Branch] = None
    ) -> ResultTable:
        """Critical delays of the equilibria whose stability depends on the delay."""
        rows = []
        for eq in self._select(params, branch):
            coeffs = linearize(params, eq.value)
            verdict = stability.classify_linear(coeffs.a, coeffs.b, params.alpha)
            if verdict.kind is not VerdictKind.DELAY_DEPENDENT:
                logger.info("%s at %r is %s; no critical delay", eq.branch.value, eq.value, verdict.kind.value)
                continue
            crossing = stability.critical_crossing(coeffs.a, coeffs.b, params.alpha)
            rows.append((coeffs.a, coeffs.b, params.alpha, crossing.tau, crossing.omega))
        if not rows:
            raise DomainError("crit-delay", "no equilibrium has a delay-dependent verdict")
        meta = {"command": "crit-delay", "mode": "model", "params": params.to_dict()}
        return ResultTable(CSV_HEADERS["crit-delay"], rows, meta)

    def region(
        self,
        p: float,
        eps: float,
        q_range: Tuple[float, float],
        delta_range: Tuple[float, float],
        grid: Tuple[int, int],
        workers: int = 1,
    ) -> ResultTable:
        """Region labels over a (q, delta) lattice, q varying fastest."""
        points = region.sample_grid(p, eps, *q_range, *delta_range, *grid, workers=workers)
        rows = [(q, delta, label.value) for q, delta, label in points]
        meta = {
            "command": "region",
            "p": p,
            "epsilon": eps,
            "grid": list(grid),
            "order": "row-major, q fastest",
            "landmarks": region.landmarks(p, eps).to_dict(),
        }
        return ResultTable(CSV_HEADERS["region"], rows, meta)

    def bifurcation(
        self,
        params: ModelParams,
        tau_values: Sequence[float],
        solver: SolverConfig,
        transient_fraction: float,
        workers: int = 1,
    ) -> ResultTable:
        """One (tau, extremum) row per post-transient extremum."""
        points = chaos.bifurcation_scan(
            params, tau_values, solver, transient_fraction, workers=workers
        )
        rows = [(point.tau, value) for point in points for value in point.extrema]
        diverged = [point.tau for point in points if point.diverged]
        meta = {
            "command": "bifurcation",
            "params": params.to_dict(),
            "transient_fraction": transient_fraction,
            "diverged_taus": diverged,
        }
        return ResultTable(CSV_HEADERS["bifurcation"], rows, meta, diverged=bool(diverged))

    def lyapunov(
        self,
        params: ModelParams,
        tau_values: Sequence[float],
        solver: SolverConfig,
        transient_fraction: float,
    ) -> ResultTable:
        """Maximum Lyapunov exponent per delay; diverged delays carry nan."""
        estimates = chaos.lyapunov_table(params, tau_values, solver, transient_fraction)
        rows = [(est.tau, est.mle) for est in estimates]
        diverged = any(est.diverged for est in estimates)
        meta = {
            "command": "lyapunov",
            "params": params.to_dict(),
            "transient_fraction": transient_fraction,
        }
        return ResultTable(CSV_HEADERS["lyapunov"], rows, meta, diverged=diverged)

    def _select(self, params: ModelParams, branch: Optional[Branch]) -> List[Equilibrium]:
        found = equilibria(params)
        if branch is None:
            return found
        chosen = [eq for eq in found if eq.branch is branch]
        if not chosen:
            raise DomainError("equilibria", f"branch {branch.value} does not exist for {params}")
        return chosen

    def _run_simulate(self, config: RunConfig) -> ResultTable:
        assert config.params is not None and config.solver is not None
        return self.simulate(config.params, config.solver, config.history_const)

    def _run_equilibria(self, config: RunConfig) -> ResultTable:
        assert config.params is not None
        return self.equilibria(config.params)

    def _run_classify(self, config: RunConfig) -> ResultTable:
        assert config.params is not None
        return self.classify(config.params, config.branch)

    def _run_crit_delay(self, config: RunConfig) -> ResultTable:
        if config.params is None:
            assert config.a is not None and config.b is not None and config.alpha is not None
            return self.crit_delay(config.a, config.b, config.alpha)
        return self.crit_delay_for_model(config.params, config.branch)

    def _run_region(self, config: RunConfig) -> ResultTable:
        assert config.p is not None and config.epsilon is not None
        assert config.q_range is not None and config.delta_range is not None
        return self.region(
            config.p, config.epsilon, config.q_range, config.delta_range, config.grid,
            workers=config.workers,
        )

    def _run_bifurcation(self, config: RunConfig) -> ResultTable:
        assert config.params is not None and config.solver is not None
        return self.bifurcation(
            config.params, config.tau_values, config.solver, config.transient_fraction,
            workers=config.workers,
        )

    def _run_lyapunov(self, config: RunConfig) -> ResultTable:
        assert config.params is not None and config.solver is not None
        return self.lyapunov(
            config.params, config.tau_values, config.solver, config.transient_fraction
        )
