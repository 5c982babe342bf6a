"""Bifurcation scans over the delay and maximum Lyapunov exponents from scalar series.

The exponent is estimated from a delay embedding of x(t): a reference trajectory and its
nearest neighbor (outside a Theiler window) are evolved a fixed number of samples at a
time, the log growth of their separation is accumulated, and when the pair drifts too far
apart the neighbor is replaced by a close point lying in the same direction.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import mutual_info_score
from sklearn.neighbors import KDTree

from src.config import (
    CLUSTER_TOL,
    EMBEDDING_DIM,
    EVOLVE_STEPS,
    HISTORY_OFFSET,
    MAX_REPLACEMENT_ANGLE,
    MI_BINS,
    MIN_LAG_SERIES,
    MIN_MLE_SERIES,
    REPLACEMENT_CANDIDATES,
    REPLACEMENT_FRACTION,
    TRANSIENT_FRACTION,
    WORKERS,
)
from src.core import equilibrium_by_branch
from src.exceptions import ConfigError, DegenerateSeriesError, SeriesTooShortError
from src.models import (
    BifurcationPoint,
    Branch,
    ConstantHistory,
    EmbeddingConfig,
    HistoryFn,
    LyapunovEstimate,
    ModelParams,
    SolverConfig,
)
from src.solver import integrate

logger = logging.getLogger(__name__)


def _as_series(series, required: int) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if x.size < required:
        raise SeriesTooShortError(int(x.size), required)
    if not np.all(np.isfinite(x)):
        raise DegenerateSeriesError("series contains non-finite values")
    if np.ptp(x) == 0.0:
        raise DegenerateSeriesError()
    return x


def local_extrema(samples) -> np.ndarray:
    """Strict local maxima and minima (3-point stencil), sorted ascending."""
    x = np.asarray(samples, dtype=float)
    if x.size < 3:
        return np.empty(0)
    mid, left, right = x[1:-1], x[:-2], x[2:]
    peaks = ((mid > left) & (mid > right)) | ((mid < left) & (mid < right))
    return np.sort(mid[peaks])


def count_clusters(values, tol: float = CLUSTER_TOL) -> int:
    """Number of groups left after merging sorted values closer than tol."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0
    return int(np.count_nonzero(np.diff(v) > tol)) + 1


def trailing_amplitude(samples, fraction: float) -> float:
    """Peak-to-peak amplitude of the trailing fraction of a series."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must lie in (0, 1], got {fraction!r}")
    x = np.asarray(samples, dtype=float)
    n = max(1, int(round(x.size * fraction)))
    return float(np.ptp(x[-n:]))


def delay_embed(series, dim: int, lag: int) -> np.ndarray:
    """Rows (x[i], x[i + lag], ..., x[i + (dim - 1)*lag])."""
    x = np.asarray(series, dtype=float).ravel()
    rows = x.size - (dim - 1) * lag
    if rows < 1:
        raise SeriesTooShortError(int(x.size), (dim - 1) * lag + 1)
    return np.column_stack([x[i * lag: i * lag + rows] for i in range(dim)])


def _mutual_information(x: np.ndarray, lag: int) -> float:
    head = x[: x.size - lag] if lag else x
    contingency = np.histogram2d(head, x[lag:], bins=MI_BINS)[0]
    return float(mutual_info_score(None, None, contingency=contingency))


def _autocorrelation_lag(x: np.ndarray, max_lag: int) -> Optional[int]:
    for lag in range(1, max_lag + 1):
        if np.corrcoef(x[:-lag], x[lag:])[0, 1] < 1.0 / math.e:
            return lag
    return None


def estimate_lag(series) -> int:
    """Embedding lag from the auto mutual information (16-bin histograms).

    Returns the first lag that is a local minimum of the mutual information. Without
    one within length/10 the first 1/e crossing of the autocorrelation is used.
    """
    x = _as_series(series, MIN_LAG_SERIES)
    max_lag = x.size // 10

    previous = _mutual_information(x, 1)
    for lag in range(2, max_lag + 1):
        current = _mutual_information(x, lag)
        if current >= previous:
            return lag - 1
        previous = current

    fallback = _autocorrelation_lag(x, max_lag)
    if fallback is None:
        logger.warning("no mutual-information minimum or autocorrelation crossing; lag=%d", max_lag)
        return max_lag
    logger.warning("no mutual-information minimum up to lag %d; autocorrelation lag %d", max_lag, fallback)
    return fallback


def default_embedding(series, dim: int = EMBEDDING_DIM) -> EmbeddingConfig:
    """dim=3, estimated lag, Theiler window lag*dim, evolution over max(5, lag) samples,
    replacement at 10% of the diameter."""
    x = _as_series(series, MIN_LAG_SERIES)
    lag = estimate_lag(x)
    diameter = float(np.ptp(x)) * math.sqrt(dim)
    return EmbeddingConfig(
        dim=dim,
        lag=lag,
        theiler_window=lag * dim,
        evolve_steps=max(EVOLVE_STEPS, lag),
        replacement_threshold=REPLACEMENT_FRACTION * diameter,
    )


class _NeighborFinder:
    """Neighbors of embedded points at least theiler_window + 1 samples away in time."""

    def __init__(self, points: np.ndarray, theiler_window: int):
        self.points = points
        self.theiler_window = theiler_window
        self.tree = KDTree(points, leaf_size=16)
        self.k = min(points.shape[0], 2 * theiler_window + REPLACEMENT_CANDIDATES)

    def _candidates(self, i: int):
        dist, ind = self.tree.query(self.points[i: i + 1], k=self.k)
        for d, j in zip(dist[0], ind[0]):
            if abs(int(j) - i) > self.theiler_window and d > 0.0:
                yield int(j), float(d)

    def nearest(self, i: int) -> Optional[Tuple[int, float]]:
        return next(self._candidates(i), None)

    def replacement(
        self, i: int, direction: np.ndarray, max_distance: float
    ) -> Optional[Tuple[int, float]]:
        """Closest candidate within max_distance whose separation from point i keeps the
        orientation of `direction` to within MAX_REPLACEMENT_ANGLE; otherwise the
        candidate with the smallest angle; otherwise the nearest point."""
        norm = float(np.linalg.norm(direction))
        close = [(j, d) for j, d in self._candidates(i) if d <= max_distance]
        if norm == 0.0 or not close:
            return self.nearest(i)
        best = None
        best_angle = math.inf
        for j, d in close:
            cosine = abs(float(np.dot(self.points[j] - self.points[i], direction))) / (d * norm)
            angle = math.acos(min(1.0, cosine))
            if angle <= MAX_REPLACEMENT_ANGLE:
                return j, d
            if angle < best_angle:
                best, best_angle = (j, d), angle
        return best


def max_lyapunov(series, config: EmbeddingConfig, dt: float) -> float:
    """Wolf-style estimate of the largest Lyapunov exponent, in units of 1/time."""
    x = _as_series(series, MIN_MLE_SERIES)
    if not dt > 0.0:
        raise ConfigError(f"dt must be positive, got {dt!r}")
    emb = delay_embed(x, config.dim, config.lag)
    n = emb.shape[0]
    steps = config.evolve_steps
    limit = n - steps
    if limit <= 2 * config.theiler_window + 2:
        required = (config.dim - 1) * config.lag + steps + 2 * config.theiler_window + 3
        raise SeriesTooShortError(int(x.size), required)
    finder = _NeighborFinder(emb[:limit], config.theiler_window)

    total_log = 0.0
    total_time = 0.0
    replacements = 0
    skipped = 0
    i = 0
    pair = finder.nearest(i)
    while i < limit:
        if pair is None:
            skipped += 1
            i += steps
            if i < limit:
                pair = finder.nearest(i)
            continue
        j, d0 = pair
        separation = emb[j + steps] - emb[i + steps]
        d1 = float(np.linalg.norm(separation))
        if d1 > 0.0:
            total_log += math.log(d1 / d0)
            total_time += steps * dt
        i += steps
        if i >= limit:
            break
        if d1 > config.replacement_threshold or d1 == 0.0 or j + steps >= limit:
            pair = finder.replacement(i, separation, config.replacement_threshold)
            replacements += 1
        else:
            pair = (j + steps, d1)

    if total_time == 0.0:
        raise DegenerateSeriesError("no neighbor pair could be tracked")
    if skipped:
        logger.warning(
            "no neighbor outside the Theiler window for %d of %d evolution segments",
            skipped,
            skipped + int(round(total_time / (steps * dt))),
        )
    logger.debug(
        "wolf estimate over %.6g time units with %d replacements", total_time, replacements
    )
    return total_log / total_time


def _check_scan(tau_values: Sequence[float], transient_fraction: float) -> None:
    taus = list(tau_values)
    if not taus:
        raise ConfigError("tau_values must not be empty")
    if any(not t > 0.0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
        raise ConfigError("tau_values must be positive and strictly ascending")
    if not 0.0 <= transient_fraction < 1.0:
        raise ConfigError(f"transient_fraction must lie in [0, 1), got {transient_fraction!r}")


def _x2_history(params: ModelParams) -> HistoryFn:
    x2 = equilibrium_by_branch(params, Branch.X2)
    return ConstantHistory(x2.value + HISTORY_OFFSET)


def _scan_one(
    params: ModelParams,
    history: HistoryFn,
    solver_config: SolverConfig,
    transient_fraction: float,
    tau: float,
) -> BifurcationPoint:
    series = integrate(params.with_tau(tau), history, solver_config)
    if series.diverged:
        return BifurcationPoint(tau=tau, diverged=True)
    kept = series.tail(1.0 - transient_fraction)
    return BifurcationPoint(tau=tau, extrema=tuple(float(v) for v in local_extrema(kept)))


def bifurcation_scan(
    params: ModelParams,
    tau_values: Sequence[float],
    solver_config: SolverConfig,
    transient_fraction: float = TRANSIENT_FRACTION,
    workers: Optional[int] = None,
) -> List[BifurcationPoint]:
    """Post-transient extrema of x(t) for each delay, starting from x2* + 0.1.

    params.tau is ignored. Delays run in worker processes when workers > 1; results come
    back in the order of tau_values.
    """
    _check_scan(tau_values, transient_fraction)
    history = _x2_history(params)
    scan = partial(_scan_one, params, history, solver_config, transient_fraction)
    n_workers = WORKERS if workers is None else workers
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            points = list(pool.map(scan, tau_values))
    else:
        points = [scan(tau) for tau in tau_values]
    diverged = sum(point.diverged for point in points)
    if diverged:
        logger.warning("%d of %d delays diverged during the scan", diverged, len(points))
    return points


def lyapunov_table(
    params: ModelParams,
    tau_values: Sequence[float],
    solver_config: SolverConfig,
    transient_fraction: float = TRANSIENT_FRACTION,
) -> List[LyapunovEstimate]:
    """Maximum Lyapunov exponent of the post-transient trajectory at each delay."""
    _check_scan(tau_values, transient_fraction)
    history = _x2_history(params)
    table = []
    for tau in tau_values:
        series = integrate(params.with_tau(tau), history, solver_config)
        if series.diverged:
            table.append(LyapunovEstimate(tau=tau, mle=math.nan, diverged=True))
            continue
        kept = series.tail(1.0 - transient_fraction)
        embedding = default_embedding(kept)
        table.append(LyapunovEstimate(tau=tau, mle=max_lyapunov(kept, embedding, series.h)))
        logger.debug("tau=%r mle=%r (lag %d)", tau, table[-1].mle, embedding.lag)
    return table
