"""Stability regions of the X2 equilibrium in the (q, delta) plane for epsilon > 0, p > 0.

Along delta = g1(q) and delta = g2(q) the linearization at X2 satisfies a = b, and along
delta = -q it satisfies a + b = 0. Those three curves cut the plane into the labelled
regions returned by `classify_region`.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Optional, Tuple

import numpy as np

from src.config import CURVE_TOL, WORKERS
from src.exceptions import ConfigError, DomainError
from src.models import RegionLabel, RegionLandmarks

logger = logging.getLogger(__name__)

GridPoint = Tuple[float, float, RegionLabel]


def _check_quadrant(operation: str, p: float, eps: float) -> None:
    if not (p > 0.0 and eps > 0.0):
        raise DomainError(operation, f"needs p > 0 and epsilon > 0, got p={p!r}, epsilon={eps!r}")


def _radicand(p: float, q: float, eps: float) -> float:
    return 9.0 * p ** 4 - 16.0 * p * p * q * eps


def _q2(p: float, eps: float) -> float:
    return 9.0 * p * p / (16.0 * eps)


def _q3(p: float, eps: float) -> float:
    return -p * p / eps


def _curve_root(operation: str, p: float, q: float, eps: float) -> float:
    radicand = _radicand(p, q, eps)
    if radicand < 0.0:
        if radicand > -1e-12 * p ** 4:
            return 0.0
        raise DomainError(operation, f"q={q!r} exceeds q2={_q2(p, eps)!r}")
    return math.sqrt(radicand)


def g1(p: float, q: float, eps: float) -> float:
    """Upper branch of a = b at X2, defined for q <= q2."""
    _check_quadrant("g1", p, eps)
    root = _curve_root("g1", p, q, eps)
    return (15.0 * p * p - 16.0 * q * eps + 5.0 * root) / (8.0 * eps)


def g2(p: float, q: float, eps: float) -> float:
    """Lower branch of a = b at X2, defined for q3 <= q <= q2."""
    _check_quadrant("g2", p, eps)
    if q < _q3(p, eps):
        raise DomainError("g2", f"q={q!r} is below q3={_q3(p, eps)!r}")
    root = _curve_root("g2", p, q, eps)
    return (15.0 * p * p - 16.0 * q * eps - 5.0 * root) / (8.0 * eps)


def _slope_root(operation: str, p: float, q: float, eps: float) -> float:
    _check_quadrant(operation, p, eps)
    radicand = _radicand(p, q, eps)
    if radicand <= 0.0:
        raise DomainError(operation, f"slope is unbounded at q={q!r} >= q2")
    return math.sqrt(radicand)


def dg1_dq(p: float, q: float, eps: float) -> float:
    """-2 - 5p^2/sqrt(9p^4 - 16p^2*q*eps); negative everywhere below q2."""
    return -2.0 - 5.0 * p * p / _slope_root("dg1_dq", p, q, eps)


def dg2_dq(p: float, q: float, eps: float) -> float:
    """-2 + 5p^2/sqrt(9p^4 - 16p^2*q*eps); changes sign at q0."""
    if q < _q3(p, eps):
        raise DomainError("dg2_dq", f"q={q!r} is below q3={_q3(p, eps)!r}")
    return -2.0 + 5.0 * p * p / _slope_root("dg2_dq", p, q, eps)


def landmarks(p: float, eps: float) -> RegionLandmarks:
    _check_quadrant("landmarks", p, eps)
    scale = p * p / eps
    return RegionLandmarks(
        q0=11.0 * scale / 64.0,
        q1=5.0 * scale / 16.0,
        q2=9.0 * scale / 16.0,
        q3=-scale,
        delta0=30.0 * scale / 8.0,
        delta1=-scale / 32.0,
    )


def classify_region(p: float, eps: float, q: float, delta: float) -> RegionLabel:
    """Label of (q, delta) for the X2 equilibrium.

    The C strip runs up to q2 rather than q1: between q1 and q2 the wedge g2 < delta < g1
    is stable for every delay and is labelled CII; the rest of that strip above -q is A.
    For q < 0 the points above g1 are delay dependent and also labelled A.
    """
    _check_quadrant("classify_region", p, eps)
    if p * p + 4.0 * eps * (delta + q) < 0.0:
        return RegionLabel.NO_REAL_EQUILIBRIUM

    marks = landmarks(p, eps)
    upper = g1(p, q, eps) if q <= marks.q2 else None
    lower = g2(p, q, eps) if 0.0 <= q <= marks.q2 else None

    near = [abs(delta + q)]
    near.extend(abs(delta - curve) for curve in (upper, lower) if curve is not None)
    if min(near) <= CURVE_TOL:
        return RegionLabel.ON_BIFURCATION_CURVE

    if delta < -q:
        return RegionLabel.UNSTABLE_NO_POSITIVE_SUM
    if upper is None:
        return RegionLabel.A_DELAY_DEPENDENT
    if lower is None:
        return RegionLabel.B_STABLE_ALL_TAU if delta < upper else RegionLabel.A_DELAY_DEPENDENT

    if lower < delta < upper:
        return RegionLabel.CII_STABLE_ALL_TAU
    if q <= marks.q1:
        return RegionLabel.CI_DELAY_DEPENDENT
    return RegionLabel.A_DELAY_DEPENDENT


def _classify_row(p: float, eps: float, q_values: np.ndarray, delta: float) -> List[GridPoint]:
    return [
        (float(q), float(delta), classify_region(p, eps, float(q), float(delta))) for q in q_values
    ]


def sample_grid(
    p: float,
    eps: float,
    q_min: float,
    q_max: float,
    delta_min: float,
    delta_max: float,
    nq: int,
    ndelta: int,
    workers: Optional[int] = None,
) -> List[GridPoint]:
    """Classify an nq x ndelta lattice, row-major with q varying fastest.

    Rows may be evaluated in worker processes; the result order never depends on them.
    """
    bounds = (q_min, q_max, delta_min, delta_max)
    if not all(math.isfinite(v) for v in bounds):
        raise ConfigError(f"grid ranges must be finite, got {bounds!r}")
    if not (q_min < q_max and delta_min < delta_max):
        raise ConfigError(
            f"grid ranges must be non-empty, got q=[{q_min}, {q_max}], delta=[{delta_min}, {delta_max}]"
        )
    if nq < 2 or ndelta < 2:
        raise ConfigError(f"grid counts must be at least 2, got {nq}x{ndelta}")
    _check_quadrant("sample_grid", p, eps)

    q_values = np.linspace(q_min, q_max, nq)
    delta_values = np.linspace(delta_min, delta_max, ndelta)
    classify = partial(_classify_row, p, eps, q_values)
    n_workers = WORKERS if workers is None else workers

    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(classify, delta_values))
    else:
        rows = [classify(delta) for delta in delta_values]

    logger.debug("classified %dx%d region grid with %d worker(s)", nq, ndelta, n_workers)
    return [point for row in rows for point in row]
