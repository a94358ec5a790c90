# rod_app/energy.py
"""Energy functionals of the rod.

total_energy is the quartic truncation whose variational gradient is the
residual F; exact_total_energy keeps the full curvature and end-shortening
terms. Both share the derivative stencils and the Simpson rule of the
discretization, so their difference isolates the truncation.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from common.errors import DomainError, ShapeError
from common.protocol import AMPLITUDE_STEP, DEFAULT_N, PARAMETER_STEP
from rod_app.core_model import Params, mode_coefficient
from rod_app.discretization import (
    build_grid, check_params_grid, inner_product, node_derivatives,
    residual, sample_eigenfunction,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalParams:
    lam: float    # compressive force
    mu: float     # linear foundation stiffness
    nu: float     # quartic foundation coefficient
    youngs_times_inertia: float

    def __post_init__(self):
        for name in ("lam", "mu", "youngs_times_inertia"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be > 0, got {value}")
        if not self.nu >= 0:
            raise DomainError(f"nu must be >= 0, got {self.nu}")

    def to_params(self, r):
        ei = self.youngs_times_inertia
        return Params(alpha=self.lam / ei, beta=self.mu / ei, gamma=self.nu / ei, r=r)

    @classmethod
    def from_params(cls, p, youngs_times_inertia):
        ei = float(youngs_times_inertia)
        return cls(lam=p.alpha * ei, mu=p.beta * ei, nu=p.gamma * ei, youngs_times_inertia=ei)


def _integrate(values, grid):
    return float(integrate.simpson(values, x=grid.nodes))


def total_energy(x, p):
    """(1/4r) * integral of the truncated energy density."""
    grid = x.grid
    check_params_grid(p, grid)
    d0, d1, d2, _, _ = node_derivatives(x.free, grid)
    d1sq = d1 * d1
    d2sq = d2 * d2
    density = (d2sq - 3.0 * d1sq * d2sq - p.alpha * d1sq - 0.25 * p.alpha * d1sq * d1sq
               + p.beta * d0 * d0 - 0.5 * p.gamma * d0 ** 4)
    return _integrate(density, grid) / (4.0 * grid.r)


def exact_total_energy(x, q):
    """E1 - E2 + E3 with the full curvature and end-shortening terms.

    The foundation potential is truncated after the quartic term.
    """
    grid = x.grid
    d0, d1, d2, _, _ = node_derivatives(x.free, grid)
    slope_sq = d1 * d1
    bad = np.flatnonzero(slope_sq >= 1.0)
    if bad.size:
        node = int(bad[0])
        raise DomainError(
            f"|x'| >= 1 at node {node} (s = {grid.nodes[node]:.6g}, x' = {d1[node]:.6g})")
    curvature_sq = d2 * d2 / (1.0 + slope_sq) ** 3
    # 1 - sqrt(1 - u) written without cancellation
    shortening = slope_sq / (1.0 + np.sqrt(1.0 - slope_sq))
    e1 = q.youngs_times_inertia * _integrate(0.5 * curvature_sq, grid)
    e2 = q.lam * _integrate(shortening, grid)
    e3 = _integrate(0.5 * q.mu * d0 * d0 - 0.25 * q.nu * d0 ** 4, grid)
    return e1 - e2 + e3


def first_variation(x, h, p):
    """Weak form of E'(x)h using only h, h' and h''."""
    grid = x.grid
    check_params_grid(p, grid)
    if h.grid != grid:
        raise ShapeError("x and h live on different grids")
    x0, x1, x2, _, _ = node_derivatives(x.free, grid)
    h0, h1, h2, _, _ = node_derivatives(h.free, grid)
    density = (2.0 * x2 * h2
               - 6.0 * x1 * x2 * x2 * h1 - 6.0 * x1 * x1 * x2 * h2
               - 2.0 * p.alpha * x1 * h1 - p.alpha * x1 ** 3 * h1
               + 2.0 * p.beta * x0 * h0 - 2.0 * p.gamma * x0 ** 3 * h0)
    return _integrate(density, grid) / (4.0 * grid.r)


def gradient_pairing_check(x, h, p, eps):
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    slope = (total_energy(x + eps * h, p) - total_energy(x - eps * h, p)) / (2.0 * eps)
    pairing = inner_product(residual(x, p, x.grid), h)
    return abs(slope - pairing)


def crandall_rabinowitz_coefficients(m, p, grid=None, amplitude_step=AMPLITUDE_STEP,
                                     parameter_step=PARAMETER_STEP):
    """Numeric E'''_xxa(0)(e, e, 1) and E'''_xxb(0)(e, e, 1) for the mode-m eigenfunction.

    Second amplitude derivative at 0 is 2 E(a e) / a^2 since E is even with
    E(0) = 0; the parameter derivative is a central difference of that.
    """
    mode_coefficient(m, p.r)
    if grid is None:
        grid = build_grid(DEFAULT_N, p.r)
    e = sample_eigenfunction(m, grid)
    probe = amplitude_step * e

    def curvature(params):
        return 2.0 * total_energy(probe, params) / amplitude_step ** 2

    def shifted(**delta):
        return Params(alpha=p.alpha + delta.get("alpha", 0.0),
                      beta=p.beta + delta.get("beta", 0.0), gamma=p.gamma, r=p.r)

    d = parameter_step
    if p.alpha <= d or p.beta <= d:
        raise DomainError(f"parameter step {d} too large for alpha={p.alpha}, beta={p.beta}")
    d_alpha = (curvature(shifted(alpha=d)) - curvature(shifted(alpha=-d))) / (2.0 * d)
    d_beta = (curvature(shifted(beta=d)) - curvature(shifted(beta=-d))) / (2.0 * d)
    logger.debug("mode %d: d_alpha=%.6g d_beta=%.6g", m, d_alpha, d_beta)
    if not (math.isfinite(d_alpha) and math.isfinite(d_beta)):
        raise DomainError(f"non-finite coefficients for mode {m}")
    return d_alpha, d_beta
