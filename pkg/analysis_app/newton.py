# analysis_app/newton.py
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from common.errors import ConfigError, ConvergenceError, RodAnalysisError
from common.protocol import NEWTON_MAX_ITER, NEWTON_ROUNDOFF_FACTOR, NEWTON_TOL

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float = NEWTON_TOL
    max_iter: int = NEWTON_MAX_ITER
    initial_guess: object = None  # SampledFunction; None means the caller's default

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ConfigError(f"residual_tol must be > 0, got {self.residual_tol}", field="tol")
        if isinstance(self.max_iter, bool) or int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter must be an integer >= 1, got {self.max_iter}", field="max_iter")


def roundoff_floor(amplitude, grid):
    """Smallest sup-norm residual resolvable for samples of size `amplitude`."""
    return NEWTON_ROUNDOFF_FACTOR * EPS * amplitude / grid.h ** 4


def effective_tolerance(config, amplitude, grid):
    return max(config.residual_tol, roundoff_floor(amplitude, grid))


def newton_solve(residual_fn, jacobian_fn, u0, config, tolerance_fn, label="newton"):
    """Plain Newton on a dense system.

    residual_fn(u) -> vector, jacobian_fn(u) -> matrix, tolerance_fn(u) -> the
    sup-norm tolerance at u. Returns (u, iterations, history) where iterations
    counts the pass that detected convergence, so an exact initial guess gives 1.
    """
    u = np.array(u0, dtype=float)
    history = []
    for iteration in range(1, config.max_iter + 1):
        try:
            res = residual_fn(u)
        except RodAnalysisError as e:
            raise ConvergenceError(f"{label}: residual undefined at iteration {iteration}: {e}",
                                   residual_history=history) from e
        norm = float(np.max(np.abs(res))) if res.size else 0.0
        history.append(norm)
        logger.debug("%s: iteration %d residual %.3e", label, iteration, norm)
        if not np.isfinite(norm):
            break
        if norm <= tolerance_fn(u):
            return u, iteration, history
        try:
            step = linalg.solve(jacobian_fn(u), -res)
        except (linalg.LinAlgError, ValueError, RodAnalysisError) as e:
            raise ConvergenceError(f"{label}: linear solve failed at iteration {iteration}: {e}",
                                   residual_history=history) from e
        u = u + step
    raise ConvergenceError(
        f"{label}: no convergence in {config.max_iter} iterations (last residual {history[-1]:.3e})",
        residual_history=history)
