"""Data models for the fractional cubic delay equation analyzer."""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from src.config import OUTPUT_FORMATS, VALID_COMMANDS
from src.exceptions import ConfigError, ValidationError


def _require_finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValidationError(f"{name} must be a finite real number, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Constants of D^alpha x = delta*x(t-tau) - epsilon*x(t-tau)^3 - p*x^2 + q*x.

    Attributes:
        alpha: Derivative order, 0 < alpha <= 1
        tau: Delay, tau >= 0
        delta: Coefficient of the linear delayed term
        epsilon: Coefficient of the cubic delayed term
        p: Coefficient of the quadratic instantaneous term
        q: Coefficient of the linear instantaneous term
    """
    alpha: float
    tau: float
    delta: float
    epsilon: float
    p: float
    q: float

    def __post_init__(self):
        """Validate model constants."""
        for name in ("alpha", "tau", "delta", "epsilon", "p", "q"):
            _require_finite(name, getattr(self, name))
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if self.tau < 0.0:
            raise ValidationError(f"tau must be non-negative, got {self.tau!r}")

    @property
    def discriminant(self) -> float:
        """p^2 + 4*epsilon*(delta + q), the existence test for the nonzero equilibria."""
        return self.p * self.p + 4.0 * self.epsilon * (self.delta + self.q)

    def with_tau(self, tau: float) -> "ModelParams":
        return replace(self, tau=tau)

    def to_dict(self) -> dict:
        """Convert to dictionary for serialization."""
        return {
            "alpha": self.alpha,
            "tau": self.tau,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "p": self.p,
            "q": self.q,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Create ModelParams from dictionary."""
        return cls(
            alpha=float(data["alpha"]),
            tau=float(data["tau"]),
            delta=float(data["delta"]),
            epsilon=float(data["epsilon"]),
            p=float(data["p"]),
            q=float(data["q"]),
        )


class Branch(Enum):
    """Equilibrium branch label; X2 is the '+sqrt' root."""
    X1 = "x1"
    X2 = "x2"
    X3 = "x3"


@dataclass(frozen=True)
class Equilibrium:
    """A steady state x* with f(x*, x*) = 0 and its branch label."""
    value: float
    branch: Branch

    def __post_init__(self):
        _require_finite("value", self.value)

    def to_dict(self) -> dict:
        return {"branch": self.branch.value, "value": self.value}


@dataclass(frozen=True)
class LinearCoeffs:
    """Coefficients of the linearization D^alpha xi = a*xi + b*xi(t - tau)."""
    a: float
    b: float

    def __post_init__(self):
        _require_finite("a", self.a)
        _require_finite("b", self.b)


@dataclass(frozen=True)
class ConstantHistory:
    """Initial function phi(t) = c on [-tau, 0]."""
    c: float

    def __post_init__(self):
        _require_finite("history constant", self.c)

    def covers(self, tau: float) -> bool:
        return True

    def sample(self, times: np.ndarray) -> np.ndarray:
        return np.full(np.shape(times), float(self.c))


@dataclass
class SampledHistory:
    """Initial function given as (t, x) pairs on [-tau, 0], read through a monotone cubic.

    Attributes:
        times: Strictly increasing sample times, the last one at 0
        values: Finite states at those times
    """
    times: Sequence[float]
    values: Sequence[float]
    _interp: Optional[PchipInterpolator] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        """Validate the sampling grid and build the interpolant."""
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != x.shape or t.size == 0:
            raise ValidationError("history times and values must be equal-length 1-D sequences")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValidationError("history samples must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValidationError("history times must be strictly increasing")
        if abs(t[-1]) > 1e-12:
            raise ValidationError(f"history must end at t = 0, ends at {t[-1]!r}")
        self.times = t
        self.values = x
        if t.size > 1:
            self._interp = PchipInterpolator(t, x, extrapolate=False)

    def covers(self, tau: float) -> bool:
        return bool(self.times[0] <= -tau + 1e-12)

    def sample(self, times: np.ndarray) -> np.ndarray:
        if self._interp is None:
            return np.full(np.shape(times), float(self.values[0]))
        # Clamp round-off overshoot at the ends of the grid.
        clipped = np.clip(times, self.times[0], self.times[-1])
        return np.asarray(self._interp(clipped), dtype=float)


HistoryFn = Union[ConstantHistory, SampledHistory]


@dataclass(frozen=True)
class SolverConfig:
    """Uniform-grid settings for the predictor-corrector.

    Attributes:
        h: Requested step size (aligned to the delay before integration)
        t_end: Final time
        divergence_threshold: |x| above which a run is truncated and flagged
        memory_window: Optional length of the convolution memory; None keeps full memory
    """
    h: float
    t_end: float
    divergence_threshold: float = 1e8
    memory_window: Optional[float] = None

    def __post_init__(self):
        """Validate grid settings."""
        for name in ("h", "t_end", "divergence_threshold"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0.0:
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if self.h > self.t_end:
            raise ConfigError(f"step {self.h!r} exceeds t_end {self.t_end!r}")
        if self.memory_window is not None and not self.memory_window > 0.0:
            raise ConfigError(f"memory_window must be positive, got {self.memory_window!r}")


@dataclass
class TimeSeries:
    """Trajectory sampled at t0 + k*h.

    Attributes:
        t0: Start time
        h: Step size actually used
        samples: States on the grid
        diverged: True when the run was truncated at the divergence threshold
    """
    t0: float
    h: float
    samples: np.ndarray
    diverged: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.size == 0:
            raise ValidationError("time series must hold at least one sample")
        if not self.h > 0.0:
            raise ValidationError(f"time series step must be positive, got {self.h!r}")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.samples.size)

    @property
    def t_last(self) -> float:
        return self.t0 + self.h * (self.samples.size - 1)

    def tail(self, fraction: float) -> np.ndarray:
        """Samples in the trailing `fraction` of the run."""
        n = max(1, int(round(self.samples.size * fraction)))
        return self.samples[-n:]


class VerdictKind(Enum):
    STABLE_ALL_DELAYS = "StableAllDelays"
    UNSTABLE_ALL_DELAYS = "UnstableAllDelays"
    DELAY_DEPENDENT = "DelayDependent"


class VerdictSource(Enum):
    GENERAL_CLASSIFIER = "GeneralClassifier"
    THEOREM_PREDICATE = "TheoremPredicate"


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of the linearized stability trichotomy.

    Attributes:
        kind: Stable for all delays, unstable for all delays, or delay dependent
        tau_star: Critical delay, present iff kind is DELAY_DEPENDENT
        source: Whether a theorem predicate matched or only the general classifier ran
        theorem_id: Identifier of the matched theorem predicate, if any
    """
    kind: VerdictKind
    tau_star: Optional[float] = None
    source: VerdictSource = VerdictSource.GENERAL_CLASSIFIER
    theorem_id: Optional[str] = None

    def __post_init__(self):
        if self.kind is VerdictKind.DELAY_DEPENDENT:
            if self.tau_star is None or not self.tau_star > 0.0:
                raise ValidationError("a delay-dependent verdict needs tau_star > 0")
        elif self.tau_star is not None:
            raise ValidationError(f"{self.kind.value} verdict cannot carry tau_star")

    @property
    def source_label(self) -> str:
        if self.source is VerdictSource.THEOREM_PREDICATE:
            return f"TheoremPredicate({self.theorem_id})"
        return self.source.value

    def is_stable_at(self, tau: float) -> bool:
        """Whether the linearization is asymptotically stable at delay tau."""
        if self.kind is VerdictKind.STABLE_ALL_DELAYS:
            return True
        if self.kind is VerdictKind.UNSTABLE_ALL_DELAYS:
            return False
        assert self.tau_star is not None
        return tau < self.tau_star


@dataclass(frozen=True)
class CrossingPoint:
    """Purely imaginary characteristic root i*omega reached at delay tau."""
    omega: float
    tau: float

    def __post_init__(self):
        if not (self.omega > 0.0 and self.tau > 0.0):
            raise ValidationError("crossing needs omega > 0 and tau > 0")


@dataclass(frozen=True)
class RegionLandmarks:
    """Landmark constants of the q-delta stability sketch for x2* (epsilon > 0, p > 0)."""
    q0: float
    q1: float
    q2: float
    q3: float
    delta0: float
    delta1: float

    def to_dict(self) -> dict:
        return {
            "q0": self.q0,
            "q1": self.q1,
            "q2": self.q2,
            "q3": self.q3,
            "delta0": self.delta0,
            "delta1": self.delta1,
        }


class RegionLabel(Enum):
    """Region of the q-delta plane; the value is the short code written to files."""
    A_DELAY_DEPENDENT = "A"
    B_STABLE_ALL_TAU = "B"
    CI_DELAY_DEPENDENT = "CI"
    CII_STABLE_ALL_TAU = "CII"
    UNSTABLE_NO_POSITIVE_SUM = "UNS"
    NO_REAL_EQUILIBRIUM = "NOEQ"
    ON_BIFURCATION_CURVE = "CURVE"

    @property
    def implied_verdict(self) -> Optional[VerdictKind]:
        return _IMPLIED_VERDICT.get(self)


_IMPLIED_VERDICT = {
    RegionLabel.A_DELAY_DEPENDENT: VerdictKind.DELAY_DEPENDENT,
    RegionLabel.CI_DELAY_DEPENDENT: VerdictKind.DELAY_DEPENDENT,
    RegionLabel.B_STABLE_ALL_TAU: VerdictKind.STABLE_ALL_DELAYS,
    RegionLabel.CII_STABLE_ALL_TAU: VerdictKind.STABLE_ALL_DELAYS,
    RegionLabel.UNSTABLE_NO_POSITIVE_SUM: VerdictKind.UNSTABLE_ALL_DELAYS,
}


@dataclass(frozen=True)
class BifurcationPoint:
    """Post-transient extrema of x(t) at one delay value."""
    tau: float
    extrema: Tuple[float, ...] = ()
    diverged: bool = False

    def __post_init__(self):
        if any(b < a for a, b in zip(self.extrema, self.extrema[1:])):
            raise ValidationError("extrema must be sorted ascending")


@dataclass(frozen=True)
class LyapunovEstimate:
    """Maximum Lyapunov exponent at one delay value; mle is nan for a diverged run."""
    tau: float
    mle: float
    diverged: bool = False


@dataclass(frozen=True)
class EmbeddingConfig:
    """Delay-embedding and neighbor-tracking settings for the MLE estimate.

    Attributes:
        dim: Embedding dimension (>= 2)
        lag: Embedding lag in samples (>= 1)
        theiler_window: Neighbors closer than this many samples in time are excluded
        evolve_steps: Samples a pair is evolved before its separation is measured
        replacement_threshold: Separation above which a neighbor is replaced
    """
    dim: int
    lag: int
    theiler_window: int
    evolve_steps: int
    replacement_threshold: float

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 2:
            raise ValidationError(f"dim must be an integer >= 2, got {self.dim!r}")
        if not isinstance(self.lag, int) or self.lag < 1:
            raise ValidationError(f"lag must be an integer >= 1, got {self.lag!r}")
        if not isinstance(self.theiler_window, int) or self.theiler_window < 0:
            raise ValidationError(
                f"theiler_window must be a non-negative integer, got {self.theiler_window!r}"
            )
        if not isinstance(self.evolve_steps, int) or self.evolve_steps < 1:
            raise ValidationError(f"evolve_steps must be an integer >= 1, got {self.evolve_steps!r}")
        if not self.replacement_threshold > 0.0:
            raise ValidationError("replacement_threshold must be positive")


@dataclass
class ResultTable:
    """Tabular command output handed to the writer.

    Attributes:
        header: Column names
        rows: One tuple per record, aligned with header
        meta: Run description copied into JSON output
        diverged: True when any underlying integration hit the divergence threshold
    """
    header: Tuple[str, ...]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)
    diverged: bool = False

    def to_dict(self) -> dict:
        """Convert to the JSON document layout: one object with meta and data."""
        return {
            "meta": dict(self.meta),
            "data": [dict(zip(self.header, row)) for row in self.rows],
        }


@dataclass(frozen=True)
class RunConfig:
    """One validated command-line invocation.

    Attributes:
        command: One of the CLI commands
        params: Model constants (None for direct crit-delay and region runs)
        solver: Grid settings for commands that integrate
        history_const: Constant initial function for simulate
        a, b: Linear coefficients for direct crit-delay mode
        branch: Equilibrium branch filter; None means every branch
        tau_values: Delays for bifurcation and lyapunov sweeps
        q_range, delta_range, grid: Region lattice (grid is (nq, ndelta))
        transient_fraction: Leading share of each run discarded by sweeps
        workers: Process count for sweeps
        out: Output file; None writes to standard output
        fmt: csv or json
    """
    command: str
    params: Optional[ModelParams] = None
    solver: Optional[SolverConfig] = None
    history_const: float = 0.1
    a: Optional[float] = None
    b: Optional[float] = None
    alpha: Optional[float] = None
    branch: Optional[Branch] = None
    tau_values: Tuple[float, ...] = ()
    q_range: Optional[Tuple[float, float]] = None
    delta_range: Optional[Tuple[float, float]] = None
    grid: Tuple[int, int] = (200, 200)
    p: Optional[float] = None
    epsilon: Optional[float] = None
    transient_fraction: float = 0.5
    workers: int = 1
    out: Optional[str] = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.command not in VALID_COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.fmt not in OUTPUT_FORMATS:
            raise ValidationError(f"format must be one of {OUTPUT_FORMATS}, got {self.fmt!r}")
        _require_finite("history_const", self.history_const)
        if self.workers < 1:
            raise ValidationError(f"workers must be at least 1, got {self.workers!r}")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha!r}")
