"""Uniform-grid integration of the Caputo delay equation and reference oracles.

`integrate` is a fractional Adams-Bashforth-Moulton predictor-corrector written on the
Volterra form x(t) = x(0) + I^alpha f(x(t), x(t - tau)). The grid step is aligned so
that tau/h is an integer, which puts every delayed argument on an already computed
grid point (or on the history when t - tau <= 0).

The convolution sums are evaluated with `numpy.dot` over contiguous slices, always in
the same order for the same step index, so repeated runs are bit-identical.
"""
import logging
import math
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma, gammaln

from src.config import ML_LOG_OVERFLOW, ML_MAX_TERMS, ML_QUAD_SPLIT, ML_SERIES_LIMIT
from src.core import rhs
from src.exceptions import ConfigError, DomainError
from src.models import HistoryFn, ModelParams, SolverConfig, TimeSeries

logger = logging.getLogger(__name__)


def align_step(tau: float, h: float) -> Tuple[float, int]:
    """Return (h', m) with h' closest to h such that tau = m*h' exactly.

    For tau = 0 the step is unchanged and m = 0.
    """
    if h <= 0.0:
        raise ConfigError(f"step must be positive, got {h!r}")
    if tau == 0.0:
        return h, 0
    m = max(1, int(round(tau / h)))
    return tau / m, m


def _grid(params: ModelParams, history: HistoryFn, config: SolverConfig):
    if not history.covers(params.tau):
        raise ConfigError(f"history does not cover [-{params.tau!r}, 0]")
    h, m = align_step(params.tau, config.h)
    if abs(h - config.h) > 1e-12 * config.h:
        logger.warning(
            "step adjusted from %r to %r so that tau/h = %d is an integer", config.h, h, m
        )
    n_steps = int(math.ceil(config.t_end / h - 1e-9))
    # hist[i] holds phi((i - m) * h), i = 0..m; hist[m] = phi(0) = x(0).
    hist = history.sample(h * np.arange(-m, 1, dtype=float))
    return h, m, n_steps, hist


def integrate(params: ModelParams, history: HistoryFn, config: SolverConfig) -> TimeSeries:
    """Integrate the model on t_k = k*h, k = 0..ceil(t_end/h).

    Predictor: fractional Adams-Bashforth (product rectangle rule).
    Corrector: one fractional Adams-Moulton pass (product trapezoidal rule).
    With `config.memory_window` set, only the last window of the convolution is kept;
    this trades accuracy (the dropped tail is not compensated) for O(N*W) cost.
    A run whose state leaves [-divergence_threshold, divergence_threshold] is cut at the
    last accepted sample and flagged as diverged.
    """
    h, m, n_steps, hist = _grid(params, history, config)
    alpha = params.alpha
    threshold = config.divergence_threshold

    x = np.empty(n_steps + 1)
    f = np.empty(n_steps + 1)
    x0 = float(hist[-1])
    x[0] = x0

    def delayed(k: int) -> float:
        j = k - m
        return float(hist[j + m]) if j < 0 else float(x[j])

    f[0] = rhs(params, x0, delayed(0))

    k = np.arange(n_steps + 1, dtype=float)
    b_weights = (k + 1.0) ** alpha - k ** alpha
    c_weights = (k + 2.0) ** (alpha + 1.0) + k ** (alpha + 1.0) - 2.0 * (k + 1.0) ** (alpha + 1.0)
    b_rev = np.ascontiguousarray(b_weights[::-1])
    c_rev = np.ascontiguousarray(c_weights[::-1])
    predictor_scale = h ** alpha / gamma(alpha + 1.0)
    corrector_scale = h ** alpha / gamma(alpha + 2.0)

    window = None
    if config.memory_window is not None:
        window = max(1, int(math.ceil(config.memory_window / h)))

    top = n_steps
    last = n_steps
    diverged = False
    for n in range(n_steps):
        lo = 0 if window is None else max(0, n + 1 - window)
        if lo == 0:
            predicted_sum = np.dot(b_rev[top - n:], f[: n + 1])
            a0 = n ** (alpha + 1.0) - (n - alpha) * (n + 1.0) ** alpha
            corrected_sum = a0 * f[0] + np.dot(c_rev[top - n + 1:], f[1: n + 1])
        else:
            predicted_sum = np.dot(b_rev[top - n + lo:], f[lo: n + 1])
            corrected_sum = np.dot(c_rev[top - n + lo:], f[lo: n + 1])

        x_pred = x0 + predictor_scale * predicted_sum
        x_lag = delayed(n + 1) if m > 0 else x_pred
        x_new = x0 + corrector_scale * (rhs(params, x_pred, x_lag) + corrected_sum)

        if not math.isfinite(x_new) or abs(x_new) > threshold:
            diverged = True
            last = n
            logger.warning(
                "integration diverged at t=%r (|x| > %r); series truncated", (n + 1) * h, threshold
            )
            break
        x[n + 1] = x_new
        f[n + 1] = rhs(params, x_new, x_new if m == 0 else x_lag)

    logger.debug("integrated %s: %d steps, h=%r, diverged=%s", params, last, h, diverged)
    return TimeSeries(t0=0.0, h=h, samples=x[: last + 1].copy(), diverged=diverged)


def reference_rk4(params: ModelParams, history: HistoryFn, config: SolverConfig) -> TimeSeries:
    """Classical RK4 with the method of steps, valid only for alpha = 1.

    Half-step delayed values come from the cubic Hermite interpolant built on the stored
    grid values and derivatives (or directly from the history for t - tau < 0).
    """
    if params.alpha != 1.0:
        raise ConfigError(f"reference_rk4 needs alpha = 1, got {params.alpha!r}")
    h, m, n_steps, hist = _grid(params, history, config)
    threshold = config.divergence_threshold

    x = np.empty(n_steps + 1)
    d = np.empty(n_steps + 1)
    x[0] = float(hist[-1])

    def lagged(j: int) -> float:
        return float(hist[j + m]) if j < 0 else float(x[j])

    def lagged_mid(j: int) -> float:
        if j < 0:
            return float(history.sample(np.array([(j + 0.5) * h]))[0])
        return 0.5 * (x[j] + x[j + 1]) + h * (d[j] - d[j + 1]) / 8.0

    d[0] = rhs(params, x[0], x[0] if m == 0 else lagged(-m))

    last = n_steps
    diverged = False
    for n in range(n_steps):
        xn = x[n]
        if m == 0:
            k1 = rhs(params, xn, xn)
            y = xn + 0.5 * h * k1
            k2 = rhs(params, y, y)
            y = xn + 0.5 * h * k2
            k3 = rhs(params, y, y)
            y = xn + h * k3
            k4 = rhs(params, y, y)
        else:
            j = n - m
            lag0, lag_mid, lag1 = lagged(j), lagged_mid(j), lagged(j + 1)
            k1 = rhs(params, xn, lag0)
            k2 = rhs(params, xn + 0.5 * h * k1, lag_mid)
            k3 = rhs(params, xn + 0.5 * h * k2, lag_mid)
            k4 = rhs(params, xn + h * k3, lag1)
        x_new = xn + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

        if not math.isfinite(x_new) or abs(x_new) > threshold:
            diverged = True
            last = n
            logger.warning("rk4 reference diverged at t=%r; series truncated", (n + 1) * h)
            break
        x[n + 1] = x_new
        d[n + 1] = rhs(params, x_new, x_new if m == 0 else lagged(n + 1 - m))

    return TimeSeries(t0=0.0, h=h, samples=x[: last + 1].copy(), diverged=diverged)


def _ml_negative_axis(alpha: float, x: float) -> float:
    """E_alpha(-x) for 0 < alpha < 1 and x > 0 from its completely monotone integral.

    E_alpha(-x) = sin(alpha*pi)/(alpha*pi) * int_0^inf exp(-(u*x)^(1/alpha)) du
                  / (u^2 + 2*u*cos(alpha*pi) + 1)
    The integrand is positive, so there is no cancellation.
    """
    cos_a = math.cos(alpha * math.pi)
    inv_alpha = 1.0 / alpha

    def integrand(u: float) -> float:
        return math.exp(-((u * x) ** inv_alpha)) / (u * u + 2.0 * u * cos_a + 1.0)

    # Peak of the kernel for alpha > 1/2, sharp as alpha -> 1.
    peak = -cos_a
    points = [peak] if 0.0 < peak < ML_QUAD_SPLIT else None
    tol = {"limit": 200, "epsabs": 1e-15, "epsrel": 1e-12}
    head, _ = quad(integrand, 0.0, ML_QUAD_SPLIT, points=points, **tol)
    tail, _ = quad(integrand, ML_QUAD_SPLIT, math.inf, **tol)
    return math.sin(alpha * math.pi) / (alpha * math.pi) * (head + tail)


def mittag_leffler_1p(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function E_alpha(z) = sum z^k / Gamma(alpha*k + 1).

    alpha = 1 is exp(z). Negative z uses the integral form above; positive z sums the
    power series (all terms positive) until terms are past their peak and below double
    precision relative to the partial sum. Only |z| <= 5 is accepted.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError("mittag_leffler_1p", f"alpha must lie in (0, 1], got {alpha!r}")
    if not math.isfinite(z) or abs(z) > ML_SERIES_LIMIT:
        raise DomainError(
            "mittag_leffler_1p", f"|z| = {abs(z)!r} is outside the series regime |z| <= 5"
        )
    if z == 0.0:
        return 1.0
    if alpha == 1.0:
        return math.exp(z)
    if z < 0.0:
        return _ml_negative_axis(alpha, -z)

    log_z = math.log(z)
    terms = [1.0]
    previous = 1.0
    for k in range(1, ML_MAX_TERMS):
        log_term = k * log_z - float(gammaln(alpha * k + 1.0))
        if log_term > ML_LOG_OVERFLOW:
            raise DomainError(
                "mittag_leffler_1p", f"series overflows for alpha={alpha!r}, z={z!r}"
            )
        magnitude = math.exp(log_term)
        terms.append(magnitude)
        if magnitude < previous and magnitude <= 1e-17 * math.fsum(terms):
            return math.fsum(terms)
        previous = magnitude
    raise DomainError(
        "mittag_leffler_1p",
        f"series did not converge in {ML_MAX_TERMS} terms for alpha={alpha!r}, z={z!r}",
    )
