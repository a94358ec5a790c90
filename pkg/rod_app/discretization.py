# rod_app/discretization.py
"""Uniform-grid finite differences on [-r, r].

Boundary conditions are eliminated with ghost nodes:

* left end, x'(-r) = x'''(-r) = 0: even reflection, x[-1] = x[1], x[-2] = x[2];
* right end, x(r) = x''(r) = 0: x[n-1] = 0 and odd reflection,
  x[n] = -x[n-2], x[n+1] = -x[n-3].

The free unknowns are the node values x[0] .. x[n-2]. Every derivative is a
second-order central difference of the extended array. Operators act on the
free unknowns, so matrices are (n-1) x (n-1).
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from common.errors import ConfigError, ShapeError
from common.protocol import MIN_N
from rod_app.core_model import eigenfunction, mode_coefficient, nonlinearity_pointwise

logger = logging.getLogger(__name__)

GHOST_RULES = {
    "left": "x[-1] = x[1], x[-2] = x[2]",
    "right": "x[n-1] = 0, x[n] = -x[n-2], x[n+1] = -x[n-3]",
}


@dataclass(frozen=True)
class Grid:
    n: int
    r: float

    @property
    def h(self):
        return 2.0 * self.r / (self.n - 1)

    @property
    def free_count(self):
        return self.n - 1

    @cached_property
    def nodes(self):
        s = self.r * np.linspace(-1.0, 1.0, self.n)
        s[0] = -self.r
        s[-1] = self.r
        s[self.n // 2] = 0.0
        s.flags.writeable = False
        return s

    @cached_property
    def simpson_weights(self):
        w = np.full(self.n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= self.h / 3.0
        w.flags.writeable = False
        return w

    @cached_property
    def derivative_matrices(self):
        """(M0, .., M4): node derivatives on the free rows as matrices."""
        stacked = node_derivatives(np.eye(self.free_count), self)
        mats = []
        for d in stacked:
            m = np.ascontiguousarray(d[: self.free_count])
            m.flags.writeable = False
            mats.append(m)
        return tuple(mats)


def build_grid(n, r):
    if isinstance(n, bool) or int(n) != n:
        raise ConfigError(f"grid size must be an integer, got {n}", field="n")
    n = int(n)
    if n < MIN_N:
        raise ConfigError(f"grid size must be >= {MIN_N}, got {n}", field="n")
    if n % 2 == 0:
        raise ConfigError(f"grid size must be odd, got {n}", field="n")
    if not r > 0:
        raise ConfigError(f"half-length must be > 0, got {r}", field="r")
    return Grid(n=n, r=float(r))


@dataclass(frozen=True)
class SampledFunction:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ShapeError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def free(self):
        return self.values[:-1]

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    def __add__(self, other):
        _same_grid(self, other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return SampledFunction(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__

    def norm(self):
        return math.sqrt(max(inner_product(self, self), 0.0))


@dataclass(frozen=True)
class DiscreteOperator:
    grid: Grid
    matrix: np.ndarray = field(repr=False)
    ghost_rules: dict = field(default_factory=lambda: dict(GHOST_RULES), repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.shape != (self.grid.free_count, self.grid.free_count):
            raise ShapeError(f"operator must be {self.grid.free_count} square, got {mat.shape}")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    def apply(self, x):
        if x.grid != self.grid:
            raise ShapeError("operator and function live on different grids")
        return from_free(self.matrix @ x.free, self.grid)


def _same_grid(g, h):
    if g.grid != h.grid:
        raise ShapeError(f"grid mismatch: {g.grid} vs {h.grid}")


def from_free(u, grid):
    """Sampled function from free unknowns; the eliminated value x(r) is 0."""
    return SampledFunction(grid, np.append(np.asarray(u, dtype=float), 0.0))


def sample(fn, grid):
    return SampledFunction(grid, fn(grid.nodes))


def sample_eigenfunction(m, grid):
    vals = np.array(eigenfunction(m, grid.r, grid.nodes))
    vals[-1] = 0.0
    return SampledFunction(grid, vals)


def zero_function(grid):
    return SampledFunction(grid, np.zeros(grid.n))


def extend(u, grid):
    """Free unknowns (n-1 rows, any trailing shape) -> nodes -2 .. n+1."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != grid.free_count:
        raise ShapeError(f"expected {grid.free_count} free unknowns, got {u.shape[0]}")
    zero = np.zeros_like(u[:1])
    return np.concatenate([u[2:3], u[1:2], u, zero, -u[-1:], -u[-2:-1]], axis=0)


def node_derivatives(u, grid):
    """(x, x', x'', x''', x'''') at all n nodes from free unknowns.

    Higher differences are cascaded with np.diff so that neighbouring values
    cancel before scaling by powers of 1/h.
    """
    n = grid.n
    h = grid.h
    ext = extend(u, grid)
    d0 = ext[2:n + 2]
    d1 = (ext[3:n + 3] - ext[1:n + 1]) / (2.0 * h)
    d2 = np.diff(ext, 2, axis=0)[1:n + 1] / h ** 2
    diff3 = np.diff(ext, 3, axis=0)
    d3 = (diff3[1:n + 1] + diff3[0:n]) / (2.0 * h ** 3)
    d4 = np.diff(ext, 4, axis=0)[0:n] / h ** 4
    return d0, d1, d2, d3, d4


def inner_product(g, h):
    """<g, h> = (1/2r) * composite Simpson of g h."""
    _same_grid(g, h)
    grid = g.grid
    return float(integrate.simpson(g.values * h.values, x=grid.nodes)) / (2.0 * grid.r)


def assemble_linearized(alpha, beta, grid):
    """Matrix of h -> h'''' + alpha h'' + beta h on the free unknowns."""
    m0, _, m2, _, m4 = grid.derivative_matrices
    return DiscreteOperator(grid, m4 + alpha * m2 + beta * m0)


def symmetrized_operator(op):
    """W^(1/2) L W^(-1/2) with trapezoid weights (1/2 at the free left end).

    The discrete operator is self-adjoint for these weights, so the result is
    symmetric; roundoff asymmetry is averaged out. Returns the matrix and the
    diagonal of W^(1/2) so eigenvectors can be mapped back.
    """
    grid = op.grid
    weights = np.ones(grid.free_count)
    weights[0] = 0.5
    root = np.sqrt(weights)
    sym = root[:, None] * op.matrix / root[None, :]
    return 0.5 * (sym + sym.T), root


def discrete_mode_eigenvalue(m, alpha, beta, grid):
    """Eigenvalue of the discrete operator on the sampled e_m (exact eigenvector)."""
    k = math.sqrt(-mode_coefficient(m, grid.r))
    sigma2 = (2.0 * math.sin(0.5 * k * grid.h) / grid.h) ** 2
    return sigma2 * sigma2 - alpha * sigma2 + beta


def check_params_grid(p, grid):
    if abs(p.r - grid.r) > 1e-12 * grid.r:
        raise ShapeError(f"parameter half-length {p.r} does not match grid half-length {grid.r}")


def residual(x, p, grid):
    """F(x) on the free nodes; the eliminated node x(r) carries 0."""
    check_params_grid(p, grid)
    d0, d1, d2, d3, d4 = (d[:-1] for d in node_derivatives(x.free, grid))
    linear = d4 + p.alpha * d2 + p.beta * d0
    f = nonlinearity_pointwise(d0, d1, d2, d3, d4, p.alpha, p.gamma)
    return from_free(linear - f, grid)


def _nonlinearity_partials(d0, d1, d2, d3, d4, p):
    f0 = 3.0 * p.gamma * d0 ** 2
    f1 = 12.0 * d2 * d3 + 6.0 * d1 * (d4 - 0.5 * p.alpha * d2)
    f2 = 9.0 * d2 ** 2 + 12.0 * d1 * d3 - 1.5 * p.alpha * d1 ** 2
    f3 = 12.0 * d1 * d2
    f4 = 3.0 * d1 ** 2
    return f0, f1, f2, f3, f4


def jacobian(x, p, grid):
    """Analytic dF/dx; equals assemble_linearized exactly at x = 0."""
    check_params_grid(p, grid)
    d0, d1, d2, d3, d4 = (d[:-1] for d in node_derivatives(x.free, grid))
    partials = _nonlinearity_partials(d0, d1, d2, d3, d4, p)
    nonlinear = np.zeros((grid.free_count, grid.free_count))
    for coeff, mat in zip(partials, grid.derivative_matrices):
        nonlinear += coeff[:, None] * mat
    linear = assemble_linearized(p.alpha, p.beta, grid).matrix
    return DiscreteOperator(grid, linear - nonlinear)


def parameter_derivative(x, p, grid, free):
    """dF/d alpha or dF/d beta on the free nodes."""
    d0, d1, d2, _, _ = (d[:-1] for d in node_derivatives(x.free, grid))
    if free == "alpha":
        return d2 + 1.5 * d1 ** 2 * d2
    if free == "beta":
        return d0.copy()
    raise ConfigError(f"free parameter must be 'alpha' or 'beta', got {free!r}", field="free")
