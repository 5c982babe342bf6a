"""Model right-hand side, equilibria and local linearization."""
import logging
import math
from typing import List, Tuple

import numpy as np

from src.config import DISCRIMINANT_CLAMP, EQUILIBRIUM_TOL, FD_STEP
from src.exceptions import DomainError
from src.models import Branch, Equilibrium, LinearCoeffs, ModelParams

logger = logging.getLogger(__name__)


def rhs(params: ModelParams, x, x_delayed):
    """delta*x(t-tau) - epsilon*x(t-tau)^3 - p*x(t)^2 + q*x(t).

    Works elementwise on numpy arrays as well as on scalars.
    """
    return (
        params.delta * x_delayed
        - params.epsilon * x_delayed * x_delayed * x_delayed
        - params.p * x * x
        + params.q * x
    )


def _clamped_discriminant(params: ModelParams) -> float:
    disc = params.discriminant
    if -DISCRIMINANT_CLAMP <= disc < 0.0:
        return 0.0
    return disc


def _same_root(u: float, v: float) -> bool:
    return abs(u - v) <= EQUILIBRIUM_TOL * max(1.0, abs(u), abs(v))


def _quadratic_roots(params: ModelParams) -> List[Tuple[float, Branch]]:
    """Nonzero equilibria: roots of epsilon*x^2 + p*x - (delta + q) = 0."""
    eps, p = params.epsilon, params.p
    s = params.delta + params.q
    if eps == 0.0:
        if s != 0.0 and p != 0.0:
            return [(s / p, Branch.X2)]
        return []

    disc = _clamped_discriminant(params)
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    # Cancellation-free pair: one root from the formula, the other from the product -s/eps.
    sign = 1.0 if p >= 0.0 else -1.0
    w = -0.5 * (p + sign * root)
    if w == 0.0:
        return [(0.0, Branch.X2)]
    from_formula = w / eps
    from_product = -s / w
    if p >= 0.0:
        x2, x3 = from_product, from_formula
    else:
        x2, x3 = from_formula, from_product
    return [(x2, Branch.X2), (x3, Branch.X3)]


def equilibria(params: ModelParams) -> List[Equilibrium]:
    """All real equilibria, ordered X1, X2, X3, duplicates removed.

    X1 = 0 always exists. X2 is the '+sqrt' root (-p + sqrt(D)) / (2*epsilon) and X3 the
    '-sqrt' root, D = p^2 + 4*epsilon*(delta + q); both are absent when D < 0. When
    epsilon = 0 the quadratic degenerates and the single nonzero root (delta + q)/p is
    reported on branch X2.
    """
    found = [Equilibrium(value=0.0, branch=Branch.X1)]
    for value, branch in _quadratic_roots(params):
        if any(_same_root(value, eq.value) for eq in found):
            continue
        found.append(Equilibrium(value=float(value), branch=branch))
    logger.debug("equilibria for %s: %s", params, [eq.value for eq in found])
    return found


def equilibrium_by_branch(params: ModelParams, branch: Branch) -> Equilibrium:
    """Equilibrium on the given branch, or DomainError when it does not exist."""
    for eq in equilibria(params):
        if eq.branch is branch:
            return eq
    raise DomainError("equilibria", f"branch {branch.value} does not exist for {params}")


def linearize(params: ModelParams, x_star: float) -> LinearCoeffs:
    """a = d f/d x, b = d f/d x(t-tau), both evaluated at (x*, x*)."""
    a = -2.0 * params.p * x_star + params.q
    b = params.delta - 3.0 * params.epsilon * x_star * x_star
    return LinearCoeffs(a=float(a), b=float(b))


def finite_difference_coeffs(
    params: ModelParams, x_star: float, step: float = FD_STEP
) -> LinearCoeffs:
    """Central-difference estimate of the linearization, used to check `linearize`."""
    a = (rhs(params, x_star + step, x_star) - rhs(params, x_star - step, x_star)) / (2.0 * step)
    b = (rhs(params, x_star, x_star + step) - rhs(params, x_star, x_star - step)) / (2.0 * step)
    return LinearCoeffs(a=float(a), b=float(b))


def a_plus_b_closed_form(params: ModelParams) -> float:
    """a + b at X2: sqrt(D) * (p - sqrt(D)) / (2*epsilon)."""
    if params.epsilon == 0.0:
        raise DomainError("a_plus_b_closed_form", "epsilon must be nonzero")
    disc = _clamped_discriminant(params)
    if disc < 0.0:
        raise DomainError(
            "a_plus_b_closed_form", f"discriminant {params.discriminant!r} is negative"
        )
    root = math.sqrt(disc)
    return root * (params.p - root) / (2.0 * params.epsilon)


def residual(params: ModelParams, eq: Equilibrium) -> float:
    """|f(x*, x*)| for an equilibrium."""
    return float(np.abs(rhs(params, eq.value, eq.value)))
