"""Linearized stability of D^alpha xi = a*xi + b*xi(t - tau) and of the model's equilibria.

The trichotomy for the linear equation:

* b < -|a|            -> stable for tau < tau*, unstable beyond (Hopf at tau*)
* b > -a              -> unstable for every tau >= 0
* a < 0, a < b < -a   -> stable for every tau >= 0

The three open sets leave out the lines b = a (a <= 0) and b = -a, which raise
BoundaryError instead of guessing.
"""
import cmath
import logging
import math
from dataclasses import replace
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from src.config import BOUNDARY_TOL, CROSSING_RESIDUAL_TOL, CROSSING_SCAN_POINTS
from src.core import linearize
from src.exceptions import BoundaryError, ConsistencyError, DomainError, NoCrossingError
from src.models import (
    Branch,
    CrossingPoint,
    Equilibrium,
    LinearCoeffs,
    ModelParams,
    StabilityVerdict,
    VerdictKind,
    VerdictSource,
)

logger = logging.getLogger(__name__)

ALPHA_CANDIDATES = (0.8, 0.9, 0.95, 0.97, 0.98, 0.99, 1.0)


def _check_alpha(operation: str, alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise DomainError(operation, f"alpha must lie in (0, 1], got {alpha!r}")


def critical_crossing(a: float, b: float, alpha: float) -> CrossingPoint:
    """Closed-form first crossing (omega, tau*) for b < -|a|.

    The modulus condition gives omega^alpha = a*cos(alpha*pi/2) +- sqrt(b^2 - a^2*sin^2(alpha*pi/2));
    both signs are tried, non-positive values are discarded, and the phase condition
    fixes tau through the principal arccos.
    """
    _check_alpha("crit_delay", alpha)
    if not b < -abs(a):
        raise DomainError("crit_delay", f"no crossing unless b < -|a| (a={a!r}, b={b!r})")
    cos_h = math.cos(alpha * math.pi / 2.0)
    sin_h = math.sin(alpha * math.pi / 2.0)
    root = math.sqrt(b * b - a * a * sin_h * sin_h)

    best = None
    for sign in (1.0, -1.0):
        m = a * cos_h + sign * root
        if not m > 0.0:
            continue
        ratio = min(1.0, max(-1.0, (m * cos_h - a) / b))
        omega = m ** (1.0 / alpha)
        tau = math.acos(ratio) / omega
        if tau > 0.0 and (best is None or tau < best.tau):
            best = CrossingPoint(omega=omega, tau=tau)
    if best is None:
        raise DomainError("crit_delay", f"no admissible branch for a={a!r}, b={b!r}")
    return best


def crit_delay(a: float, b: float, alpha: float) -> float:
    """Smallest positive delay at which a root pair reaches the imaginary axis."""
    return critical_crossing(a, b, alpha).tau


def classify_linear(a: float, b: float, alpha: float) -> StabilityVerdict:
    """Stability verdict for D^alpha xi = a*xi + b*xi(t - tau)."""
    _check_alpha("classify_linear", alpha)
    if abs(b + abs(a)) <= BOUNDARY_TOL or abs(b + a) <= BOUNDARY_TOL:
        raise BoundaryError(a, b)
    if b < -abs(a):
        return StabilityVerdict(
            kind=VerdictKind.DELAY_DEPENDENT, tau_star=crit_delay(a, b, alpha)
        )
    if b > -a:
        return StabilityVerdict(kind=VerdictKind.UNSTABLE_ALL_DELAYS)
    return StabilityVerdict(kind=VerdictKind.STABLE_ALL_DELAYS)


def _characteristic(omega: float, alpha: float) -> complex:
    """(i*omega)^alpha on the principal branch."""
    return omega ** alpha * cmath.exp(1j * alpha * math.pi / 2.0)


def crossing_oracle(a: float, b: float, alpha: float) -> CrossingPoint:
    """Solve (i*omega)^alpha = a + b*exp(-i*omega*tau) numerically.

    The modulus equation |(i*omega)^alpha - a| = |b| is scanned on (0, 2*(|a|+|b|)^(1/alpha)]
    and each sign change is refined with Brent's method; tau then follows from the phase.
    Independent of the closed form used by `crit_delay`.
    """
    _check_alpha("crossing_oracle", alpha)
    if not b < -abs(a):
        raise DomainError("crossing_oracle", f"needs b < -|a| (a={a!r}, b={b!r})")

    def modulus_gap(omega: float) -> float:
        return abs(_characteristic(omega, alpha) - a) - abs(b)

    omega_max = 2.0 * (abs(a) + abs(b)) ** (1.0 / alpha)
    grid = np.concatenate(
        ([0.0], np.geomspace(1e-9 * omega_max, omega_max, CROSSING_SCAN_POINTS))
    )
    gaps = [modulus_gap(float(w)) for w in grid]

    best = None
    for left, right, g_left, g_right in zip(grid[:-1], grid[1:], gaps[:-1], gaps[1:]):
        if g_left == 0.0 and left > 0.0:
            omega = float(left)
        elif g_left * g_right < 0.0:
            omega = brentq(modulus_gap, float(left), float(right), xtol=1e-15)
        else:
            continue
        rotation = (_characteristic(omega, alpha) - a) / b
        phase = (-cmath.phase(rotation)) % (2.0 * math.pi)
        if phase == 0.0:
            phase = 2.0 * math.pi
        tau = phase / omega
        residual = abs(_characteristic(omega, alpha) - a - b * cmath.exp(-1j * omega * tau))
        if residual > CROSSING_RESIDUAL_TOL * max(1.0, abs(a), abs(b)):
            logger.warning("crossing at omega=%r has residual %r", omega, residual)
            continue
        if best is None or tau < best.tau:
            best = CrossingPoint(omega=omega, tau=tau)

    if best is None:
        raise NoCrossingError(a, b, alpha)
    return best


def pin_alpha(
    a: float, b: float, target_tau: float, candidates: Sequence[float] = ALPHA_CANDIDATES
) -> Tuple[float, float]:
    """Candidate order whose critical delay is closest to a published value.

    Returns (alpha, crit_delay(a, b, alpha)).
    """
    scored = [(abs(crit_delay(a, b, alpha) - target_tau), alpha) for alpha in candidates]
    _, alpha = min(scored)
    return alpha, crit_delay(a, b, alpha)


def x2_linear_coeffs_closed_form(params: ModelParams) -> LinearCoeffs:
    """a and b at X2 written through sqrt(p^2 + 4*epsilon*(delta + q))."""
    eps, p, delta, q = params.epsilon, params.p, params.delta, params.q
    if eps == 0.0 or params.discriminant < 0.0:
        raise DomainError("x2_linear_coeffs_closed_form", "X2 needs epsilon != 0 and D >= 0")
    root = math.sqrt(params.discriminant)
    a = p * p / eps - p * root / eps + q
    b = delta - 3.0 * (2.0 * p * p + 4.0 * eps * (delta + q) - 2.0 * p * root) / (4.0 * eps)
    return LinearCoeffs(a=a, b=b)


def theorem_predicates(params: ModelParams, branch: Branch) -> List[Tuple[str, VerdictKind]]:
    """Theorem-level conditions on (delta, epsilon, p, q) that hold for this branch.

    Each entry is (theorem id, verdict the theorem asserts). X3 has no theorem set.
    """
    delta, eps, p, q = params.delta, params.epsilon, params.p, params.q
    total = delta + q
    matched: List[Tuple[str, VerdictKind]] = []

    if branch is Branch.X1:
        if total > 0.0:
            matched.append(("X1_UNSTABLE", VerdictKind.UNSTABLE_ALL_DELAYS))
        elif total < 0.0 and delta >= q:
            matched.append(("X1_STABLE", VerdictKind.STABLE_ALL_DELAYS))
        elif total < 0.0 and delta < q:
            matched.append(("X1_DELAY", VerdictKind.DELAY_DEPENDENT))
        return matched

    if branch is not Branch.X2 or eps == 0.0:
        return matched

    if eps > 0.0 and p > 0.0:
        if 0.0 < -q < delta < -2.0 * q:
            matched.append(("X2_STABLE_EPS_P_POS", VerdictKind.STABLE_ALL_DELAYS))
        if delta < -p * p / (32.0 * eps) and total > 0.0:
            matched.append(("X2_DELAY_EPS_P_POS", VerdictKind.DELAY_DEPENDENT))
        if total < 0.0:
            matched.append(("X2_UNSTABLE_EPS_P_POS", VerdictKind.UNSTABLE_ALL_DELAYS))
    elif eps < 0.0 and p > 0.0:
        if total < 0.0:
            matched.append(("X2_UNSTABLE_EPS_NEG_P_POS", VerdictKind.UNSTABLE_ALL_DELAYS))
    elif eps > 0.0 and p < 0.0:
        if delta <= 3.0 * p * p / (4.0 * eps) and q > (-p * p - 4.0 * delta * eps) / (4.0 * eps):
            matched.append(("X2_DELAY_EPS_POS_P_NEG", VerdictKind.DELAY_DEPENDENT))
    elif eps < 0.0 and p < 0.0:
        if total < 0.0:
            matched.append(("X2_UNSTABLE_EPS_P_NEG", VerdictKind.UNSTABLE_ALL_DELAYS))
    return matched


def classify_equilibrium(params: ModelParams, eq: Equilibrium) -> StabilityVerdict:
    """Classify an equilibrium through its linearization and cross-check the theorems.

    Raises BoundaryError from the classifier and ConsistencyError when a matching
    theorem predicate asserts a different verdict.
    """
    coeffs = linearize(params, eq.value)
    verdict = classify_linear(coeffs.a, coeffs.b, params.alpha)
    matched = theorem_predicates(params, eq.branch)
    for theorem_id, expected in matched:
        if expected is not verdict.kind:
            logger.warning(
                "theorem %s disagrees with classifier at %s, %s: a=%r b=%r",
                theorem_id, params, eq, coeffs.a, coeffs.b,
            )
            raise ConsistencyError(theorem_id, expected.value, verdict.kind.value)
    if matched:
        return replace(
            verdict, source=VerdictSource.THEOREM_PREDICATE, theorem_id=matched[0][0]
        )
    return verdict
