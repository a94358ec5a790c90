# analysis_app/lyapunov_schmidt.py
"""Two-mode Lyapunov-Schmidt reduction at a double point.

For kernel coordinates xi the corrector x~ solves

    G(x) = F(x) + sum_i (xi_i - <x, e_i>) e_i = 0,

and the reduced map is phi_i = xi_i - <x~, e_i>. The Brouwer degree of phi on
a small xi-circle is computed as a winding number and compared with the sign
of the closed-form reduced Jacobian.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from analysis_app.newton import NewtonConfig, effective_tolerance, newton_solve
from analysis_app.workers import run_ordered
from common.errors import (
    ConfigError, ConvergenceError, DomainError, IndeterminateDegreeError,
    SingularityError,
)
from common.protocol import (
    JACOBIAN_STEP, MAX_WINDING_SAMPLES, MAX_WORKERS, MIN_WINDING_SAMPLES,
    NOISE_FLOOR_FACTOR, PARAM_BOX, STATUS_BOUNDARY, STATUS_INDETERMINATE,
    STATUS_OK, STATUS_SOLVER_FAILURE, WINDING_RADIUS, WINDING_SAMPLES, XI_RADIUS,
)
from rod_app.core_model import (
    BOUNDARY, Params, degree_sign_classification, double_point,
    reduced_jacobian_closed_form,
)
from rod_app.discretization import (
    discrete_mode_eigenvalue, from_free, inner_product, jacobian, residual,
    sample_eigenfunction,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReductionContext:
    double_point: object
    gamma0: float
    basis: tuple = field(repr=False)
    grid: object = field(repr=False)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    xi_radius: float = XI_RADIUS
    param_box: float = PARAM_BOX

    @property
    def modes(self):
        return self.double_point.m1, self.double_point.m2


def build_context(m1, m2, grid, gamma0=1.0, newton=None, xi_radius=XI_RADIUS, param_box=PARAM_BOX):
    if not gamma0 >= 0:
        raise DomainError(f"gamma0 must be >= 0, got {gamma0}")
    dp = double_point(m1, m2, grid.r)
    basis = (sample_eigenfunction(dp.m1, grid), sample_eigenfunction(dp.m2, grid))
    for i in range(2):
        for j in range(2):
            target = 1.0 if i == j else 0.0
            if abs(inner_product(basis[i], basis[j]) - target) > 1e-8:
                raise ConfigError(f"grid too coarse: eigenfunctions {dp.m1}, {dp.m2} not orthonormal",
                                  field="n")
    return ReductionContext(double_point=dp, gamma0=float(gamma0), basis=basis, grid=grid,
                            newton=newton or NewtonConfig(), xi_radius=xi_radius,
                            param_box=param_box)


def discrete_double_point(ctx):
    """(alpha, beta) where both sampled basis functions are exact kernel vectors."""
    # sigma^4 - alpha sigma^2 + beta = 0 for both modes
    s1 = discrete_mode_eigenvalue(ctx.modes[0], 0.0, 0.0, ctx.grid) ** 0.5
    s2 = discrete_mode_eigenvalue(ctx.modes[1], 0.0, 0.0, ctx.grid) ** 0.5
    return s1 + s2, s1 * s2


@dataclass(frozen=True)
class ReducedPoint:
    xi: tuple
    alpha: float
    beta: float
    xtilde: object = field(repr=False)
    phi: tuple = ()
    iterations: int = 0
    residual_norm: float = 0.0


def _check_box(xi, alpha, beta, ctx):
    dp = ctx.double_point
    if math.hypot(*xi) > ctx.xi_radius:
        raise DomainError(f"|xi| = {math.hypot(*xi):.3g} exceeds radius {ctx.xi_radius}")
    if abs(alpha - dp.alpha0) > ctx.param_box or abs(beta - dp.beta0) > ctx.param_box:
        raise DomainError(f"({alpha}, {beta}) outside the box of half-width {ctx.param_box} "
                          f"around ({dp.alpha0}, {dp.beta0})")


def solve_xtilde(xi, alpha, beta, ctx):
    xi = (float(xi[0]), float(xi[1]))
    _check_box(xi, alpha, beta, ctx)
    grid = ctx.grid
    p = Params(alpha=alpha, beta=beta, gamma=ctx.gamma0, r=grid.r)
    e_free = [e.free for e in ctx.basis]
    # <x, e_i> as a row acting on the free unknowns
    pairing = [grid.simpson_weights[:-1] * e / (2.0 * grid.r) for e in e_free]
    projector = sum(np.outer(e, w) for e, w in zip(e_free, pairing))

    def g(u):
        x = from_free(u, grid)
        out = residual(x, p, grid).free.copy()
        for xi_i, e, w in zip(xi, e_free, pairing):
            out += (xi_i - w @ u) * e
        return out

    def dg(u):
        return jacobian(from_free(u, grid), p, grid).matrix - projector

    guess = ctx.newton.initial_guess
    if guess is None:
        u0 = xi[0] * e_free[0] + xi[1] * e_free[1]
    else:
        u0 = guess.free
    u, iterations, history = newton_solve(
        g, dg, u0, ctx.newton,
        tolerance_fn=lambda u: effective_tolerance(ctx.newton, float(np.max(np.abs(u), initial=0.0)), grid),
        label=f"xtilde xi=({xi[0]:.3g}, {xi[1]:.3g})")
    xtilde = from_free(u, grid)
    phi = tuple(xi_i - inner_product(xtilde, e) for xi_i, e in zip(xi, ctx.basis))
    return ReducedPoint(xi=xi, alpha=float(alpha), beta=float(beta), xtilde=xtilde,
                        phi=phi, iterations=iterations, residual_norm=history[-1])


def reduced_map(xi, alpha, beta, ctx):
    return solve_xtilde(xi, alpha, beta, ctx).phi


def reduced_jacobian_numeric(alpha, beta, ctx, step=JACOBIAN_STEP):
    """Central-difference Jacobian of phi in xi at xi = 0; column j is d phi / d xi_j."""
    if not step > 0:
        raise DomainError(f"step must be > 0, got {step}")
    jac = np.empty((2, 2))
    for j in range(2):
        unit = [0.0, 0.0]
        unit[j] = step
        plus = np.array(reduced_map(tuple(unit), alpha, beta, ctx))
        minus = np.array(reduced_map((-unit[0], -unit[1]), alpha, beta, ctx))
        jac[:, j] = (plus - minus) / (2.0 * step)
    return jac


def winding_degree(alpha, beta, ctx, radius=WINDING_RADIUS, samples=WINDING_SAMPLES):
    """Winding number of theta -> phi(radius (cos theta, sin theta)) about 0."""
    if not 0 < radius <= ctx.xi_radius:
        raise DomainError(f"radius must lie in (0, {ctx.xi_radius}], got {radius}")
    if isinstance(samples, bool) or int(samples) != samples or samples < MIN_WINDING_SAMPLES:
        raise ConfigError(f"samples must be an integer >= {MIN_WINDING_SAMPLES}, got {samples}",
                          field="samples")
    noise_floor = NOISE_FLOOR_FACTOR * ctx.newton.residual_tol
    samples = int(samples)
    while True:
        theta = 2.0 * np.pi * np.arange(samples) / samples
        values = np.array([reduced_map((radius * math.cos(t), radius * math.sin(t)), alpha, beta, ctx)
                           for t in theta])
        z = values[:, 0] + 1j * values[:, 1]
        min_norm = float(np.min(np.abs(z)))
        if min_norm < noise_floor:
            raise IndeterminateDegreeError(
                f"|phi| = {min_norm:.3e} on the circle is below the noise floor {noise_floor:.1e}",
                min_norm=min_norm)
        angles = np.angle(np.append(z, z[0]))
        increments = (np.diff(angles) + np.pi) % (2.0 * np.pi) - np.pi
        if np.max(np.abs(increments)) <= np.pi / 2:
            return int(round(float(np.sum(increments)) / (2.0 * np.pi)))
        if samples * 2 > MAX_WINDING_SAMPLES:
            raise IndeterminateDegreeError(
                f"angle steps stay above pi/2 at {samples} samples", min_norm=min_norm)
        logger.warning("winding at (%g, %g): angle step too coarse, doubling samples to %d",
                       alpha, beta, samples * 2)
        samples *= 2


@dataclass(frozen=True)
class ProbeReport:
    alpha: float
    beta: float
    slope: float
    classification: object
    det_closed_form: object = None
    det_numeric: object = None
    winding: object = None
    status: str = STATUS_OK
    message: str = ""

    def to_record(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "slope": self.slope,
            "classification": self.classification,
            "det_closed_form": self.det_closed_form,
            "det_numeric": self.det_numeric,
            "winding": self.winding,
            "status": self.status,
            "message": self.message or None,
        }


def probe(alpha0_offset, slope, ctx, radius=WINDING_RADIUS, samples=WINDING_SAMPLES):
    dp = ctx.double_point
    alpha = dp.alpha0 + alpha0_offset
    beta = dp.beta0 + slope * alpha0_offset
    classification = degree_sign_classification(slope, dp.m1, dp.m2, dp.r)
    base = dict(alpha=alpha, beta=beta, slope=float(slope), classification=classification)
    try:
        _, det_closed = reduced_jacobian_closed_form(alpha, beta, dp.m1, dp.m2, dp.r)
    except SingularityError as e:
        return ProbeReport(**base, status=STATUS_SOLVER_FAILURE, message=str(e))
    base["det_closed_form"] = float(det_closed)
    if classification == BOUNDARY:
        logger.info("probe slope=%g lies on a ray direction; no winding", slope)
        return ProbeReport(**base, status=STATUS_BOUNDARY)
    det_numeric = None
    try:
        det_numeric = float(np.linalg.det(reduced_jacobian_numeric(alpha, beta, ctx)))
        winding = winding_degree(alpha, beta, ctx, radius, samples)
    except ConvergenceError as e:
        logger.warning("probe (%g, %g): %s", alpha, beta, e)
        return ProbeReport(**base, det_numeric=det_numeric, status=STATUS_SOLVER_FAILURE, message=str(e))
    except IndeterminateDegreeError as e:
        logger.warning("probe (%g, %g): %s", alpha, beta, e)
        return ProbeReport(**base, det_numeric=det_numeric, status=STATUS_INDETERMINATE, message=str(e))
    logger.info("probe (%.6g, %.6g) slope=%g: det=%.4g winding=%d expected %d",
                alpha, beta, slope, det_closed, winding, classification)
    return ProbeReport(**base, det_numeric=det_numeric, winding=winding, status=STATUS_OK)


def probe_batch(offsets, slopes, ctx, max_workers=MAX_WORKERS, **kwargs):
    """Every (offset, slope) pair, offsets outer; reports in that order."""
    pairs = [(o, s) for o in offsets for s in slopes]
    outcomes = run_ordered(lambda pair: probe(pair[0], pair[1], ctx, **kwargs), pairs, max_workers)
    reports = []
    for (offset, slope), (report, error) in zip(pairs, outcomes):
        if error is not None:
            raise error
        reports.append(report)
    return reports
