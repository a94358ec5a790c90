# analysis_app/continuation.py
"""Branches of nontrivial solutions through simple bifurcation points.

The branch is parametrized by its amplitude t = <x, e_m>; each point solves
the bordered system

    F(x, p) = 0,   <x, e_m> = t

for the samples x and the free parameter p (alpha or beta).
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from analysis_app.linear_analysis import detect_sign_changes
from analysis_app.newton import NewtonConfig, effective_tolerance, newton_solve
from common.errors import ConfigError, ConvergenceError, DomainError, SeedError
from common.protocol import (
    BRANCH_AMPLITUDE_CAP, BRANCH_COMPLETE, BRANCH_NEWTON_FAILED, DETECT_TOL,
    MAX_AMPLITUDE, MAX_SEED_AMPLITUDE, MAX_STEP, M_MAX,
)
from rod_app.core_model import Mode, Params
from rod_app.discretization import (
    discrete_mode_eigenvalue, from_free, inner_product, jacobian,
    parameter_derivative, residual, sample_eigenfunction, zero_function,
)

logger = logging.getLogger(__name__)

FREE_PARAMETERS = ("alpha", "beta")


@dataclass(frozen=True)
class BifurcationPoint:
    alpha: float
    beta: float
    mode: Mode


@dataclass(frozen=True)
class BranchPoint:
    t: float
    param: float
    x: object = field(repr=False)
    residual_norm: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class BranchSeed:
    bifurcation: BifurcationPoint
    direction: int
    free: str
    params: Params
    grid: object = field(repr=False)
    origin: BranchPoint = field(repr=False)
    point: BranchPoint = field(repr=False)
    newton: NewtonConfig = field(default_factory=NewtonConfig)


@dataclass(frozen=True)
class Branch:
    points: tuple
    free_parameter: str
    fixed: Params
    mode: Mode
    direction: int
    status: str = BRANCH_COMPLETE

    @property
    def t_values(self):
        return np.array([pt.t for pt in self.points])

    @property
    def param_values(self):
        return np.array([pt.param for pt in self.points])


def _check_free(free):
    if free not in FREE_PARAMETERS:
        raise ConfigError(f"free parameter must be 'alpha' or 'beta', got {free!r}", field="free")


def detect_bifurcation_on_trivial_branch(path, grid, steps, tol=DETECT_TOL, m_max=M_MAX):
    """[(BifurcationPoint, path parameter)] where the trivial branch loses invertibility."""
    found = []
    for crossing in detect_sign_changes(path, grid, steps, tol=tol, m_max=m_max):
        found.append((BifurcationPoint(alpha=crossing.alpha, beta=crossing.beta, mode=crossing.mode),
                      crossing.s))
    return found


def _bifurcation_value(m, free, fixed_value, grid):
    _check_free(free)
    if not fixed_value > 0:
        other = "beta" if free == "alpha" else "alpha"
        raise DomainError(f"{other} must be > 0, got {fixed_value}")
    sigma4 = discrete_mode_eigenvalue(m, 0.0, 0.0, grid)
    sigma2 = math.sqrt(sigma4)
    if free == "alpha":
        value = (sigma4 + fixed_value) / sigma2
    else:
        value = fixed_value * sigma2 - sigma4
    if not value > 0:
        raise DomainError(f"mode {m} has no admissible bifurcation value with {free} free "
                          f"(got {value:.6g})")
    return value


def discrete_bifurcation_value(mode, p, free, grid):
    """Value of the free parameter where the sampled e_m is in the discrete kernel."""
    m = mode.m if isinstance(mode, Mode) else int(mode)
    _check_free(free)
    return _bifurcation_value(m, free, p.beta if free == "alpha" else p.alpha, grid)


def ray_params(m, free, fixed_value, gamma, grid):
    """Params at the discrete bifurcation point of mode m, the other parameter held fixed."""
    value = _bifurcation_value(int(m), free, fixed_value, grid)
    if free == "alpha":
        return Params(alpha=value, beta=fixed_value, gamma=gamma, r=grid.r)
    return Params(alpha=fixed_value, beta=value, gamma=gamma, r=grid.r)


def bifurcation_on_ray(m, p, free, grid):
    value = discrete_bifurcation_value(m, p, free, grid)
    alpha, beta = (value, p.beta) if free == "alpha" else (p.alpha, value)
    return BifurcationPoint(alpha=alpha, beta=beta, mode=Mode.of(m, grid.r))


def _with_param(p, free, value):
    return replace(p, **{free: value})


def _bordered_solve(x0, p0, t, e, p, free, grid, config, label):
    """Newton on (F(x, p), <x, e> - t) for the free unknowns of x and p."""
    n_free = grid.free_count
    pairing = grid.simpson_weights[:-1] * e.free / (2.0 * grid.r)

    def unpack(u):
        return from_free(u[:n_free], grid), _with_param(p, free, u[n_free])

    def res(u):
        x, q = unpack(u)
        return np.append(residual(x, q, grid).free, pairing @ u[:n_free] - t)

    def jac(u):
        x, q = unpack(u)
        top = np.column_stack([jacobian(x, q, grid).matrix, parameter_derivative(x, q, grid, free)])
        bottom = np.append(pairing, 0.0)
        return np.vstack([top, bottom])

    u0 = np.append(x0.free, p0)
    u, iterations, history = newton_solve(
        res, jac, u0, config,
        tolerance_fn=lambda u: effective_tolerance(config, float(np.max(np.abs(u[:n_free]))), grid),
        label=label)
    return BranchPoint(t=t, param=float(u[n_free]), x=from_free(u[:n_free], grid),
                       residual_norm=history[-1], iterations=iterations)


def branch_switch(bif, direction, t0, free, p, grid, newton=None):
    """Converged first point of the branch at amplitude direction * t0."""
    _check_free(free)
    if direction not in (1, -1):
        raise DomainError(f"direction must be +1 or -1, got {direction}")
    if not 0 < t0 <= MAX_SEED_AMPLITUDE:
        raise DomainError(f"t0 must lie in (0, {MAX_SEED_AMPLITUDE}], got {t0}")
    newton = newton or NewtonConfig()
    p0 = getattr(bif, free)
    base = _with_param(p, free, p0)
    if free == "alpha":
        base = replace(base, beta=bif.beta)
    else:
        base = replace(base, alpha=bif.alpha)
    e = sample_eigenfunction(bif.mode.m, grid)
    t = direction * t0
    try:
        point = _bordered_solve(t * e, p0, t, e, base, free, grid, newton,
                                label=f"seed mode {bif.mode.m} t={t:.3g}")
    except ConvergenceError as exc:
        raise SeedError(f"branch switch failed for mode {bif.mode.m}: {exc}",
                        residual_history=exc.residual_history) from exc
    origin = BranchPoint(t=0.0, param=float(p0), x=zero_function(grid), residual_norm=0.0)
    logger.info("seed mode %d %s-free: t=%.3g %s=%.10g (%d iterations)",
                bif.mode.m, free, t, free, point.param, point.iterations)
    return BranchSeed(bifurcation=bif, direction=direction, free=free, params=base, grid=grid,
                      origin=origin, point=point, newton=newton)


def continue_branch(seed, n_steps, dt, max_amplitude=MAX_AMPLITUDE):
    """Amplitude-stepped continuation from a seed; partial branches carry a status."""
    if isinstance(n_steps, bool) or int(n_steps) != n_steps or n_steps < 0:
        raise ConfigError(f"n_steps must be an integer >= 0, got {n_steps}", field="steps")
    if not 0 < dt <= MAX_STEP:
        raise DomainError(f"dt must lie in (0, {MAX_STEP}], got {dt}")
    grid = seed.grid
    mode = seed.bifurcation.mode
    e = sample_eigenfunction(mode.m, grid)
    points = [seed.origin, seed.point]
    status = BRANCH_COMPLETE
    for step in range(1, int(n_steps) + 1):
        prev = points[-1]
        t = prev.t + seed.direction * dt
        if abs(t) > max_amplitude:
            logger.warning("branch mode %d stopped at |t| = %.3g: amplitude cap %g",
                           mode.m, abs(prev.t), max_amplitude)
            status = BRANCH_AMPLITUDE_CAP
            break
        if len(points) >= 3:
            before = points[-2]
            slope = (prev.param - before.param) / (prev.t - before.t)
            p_pred = prev.param + slope * (t - prev.t)
        else:
            p_pred = prev.param
        x_pred = prev.x * (t / prev.t)
        try:
            point = _bordered_solve(x_pred, p_pred, t, e, seed.params, seed.free, grid, seed.newton,
                                    label=f"branch mode {mode.m} t={t:.3g}")
        except ConvergenceError as exc:
            logger.warning("branch mode %d stopped at step %d: %s", mode.m, step, exc)
            status = BRANCH_NEWTON_FAILED
            break
        logger.debug("step %d: t=%.4g %s=%.10g", step, t, seed.free, point.param)
        points.append(point)
    logger.info("branch mode %d %s-free: %d points, status %s",
                mode.m, seed.free, len(points), status)
    return Branch(points=tuple(points), free_parameter=seed.free, fixed=seed.params,
                  mode=mode, direction=seed.direction, status=status)


def pitchfork_exponent(branch):
    """Slope of log|p(t) - p(0)| against log|t| over the nonzero-amplitude points."""
    p0 = branch.points[0].param
    t = np.abs(branch.t_values[1:])
    dp = np.abs(branch.param_values[1:] - p0)
    keep = (t > 0) & (dp > 0)
    if np.count_nonzero(keep) < 2:
        raise DomainError("need at least two branch points off the bifurcation value")
    slope, _ = np.polyfit(np.log(t[keep]), np.log(dp[keep]), 1)
    return float(slope)


def tangent_similarity(point, mode, grid):
    """<x/t, e_m> / ||x/t||."""
    e = sample_eigenfunction(mode.m, grid)
    scaled = point.x * (1.0 / point.t)
    return inner_product(scaled, e) / scaled.norm()
