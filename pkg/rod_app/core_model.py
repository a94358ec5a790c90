# rod_app/core_model.py
"""Closed-form mathematics of the rod model.

Parameters, spectral rays l_m, normalized eigenfunctions, the pointwise
nonlinearity f and the closed-form reduced Jacobian at a double point.
Nothing here depends on a discretization.
"""
import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from common.errors import DomainError, SingularityError
from common.protocol import M_MAX

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
BOUNDARY = "boundary"  # degree_sign_classification on a ray direction


@dataclass(frozen=True)
class Params:
    alpha: float
    beta: float
    gamma: float
    r: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not self.r > 0:
            raise DomainError(f"r must be > 0, got {self.r}")


@dataclass(frozen=True)
class Mode:
    m: int
    c: float
    r: float

    @classmethod
    def of(cls, m, r):
        return cls(m=int(m), c=mode_coefficient(m, r), r=float(r))

    @property
    def wavenumber(self):
        return math.sqrt(-self.c)


@dataclass(frozen=True)
class DoublePoint:
    m1: int
    m2: int
    alpha0: float
    beta0: float
    r: float


def _check_mode(m, r):
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"mode index must be an integer >= 1, got {m}")
    if not r > 0:
        raise DomainError(f"half-length r must be > 0, got {r}")


def mode_coefficient(m, r):
    """c_m = -(pi/r)^2 ((2m-1)/4)^2."""
    _check_mode(m, r)
    return -((math.pi / r) ** 2) * ((2 * m - 1) / 4.0) ** 2


def ray_beta(m, alpha, r):
    """beta on ray l_m at abscissa alpha; may be non-positive."""
    c = mode_coefficient(m, r)
    return -c * alpha - c * c


def mode_eigenvalue(m, alpha, beta, r):
    """Eigenvalue c_m^2 + alpha c_m + beta of the linearization on e_m."""
    c = mode_coefficient(m, r)
    return c * c + alpha * c + beta


def in_region_z(alpha, beta):
    return alpha > 0 and beta > 0 and 4.0 * beta <= alpha * alpha


def double_point(m1, m2, r):
    if m1 == m2:
        raise DomainError(f"double point needs two distinct modes, got m1 = m2 = {m1}")
    m1, m2 = sorted((m1, m2))
    c1 = mode_coefficient(m1, r)
    c2 = mode_coefficient(m2, r)
    return DoublePoint(m1=int(m1), m2=int(m2), alpha0=-(c1 + c2), beta0=c1 * c2, r=float(r))


def double_points_in_window(m_max, alpha_max, r):
    points = []
    for m1, m2 in combinations(range(1, m_max + 1), 2):
        dp = double_point(m1, m2, r)
        if dp.alpha0 <= alpha_max:
            points.append(dp)
    return points


def _check_abscissa(r, s):
    s_arr = np.asarray(s, dtype=float)
    slack = 1e-12 * r
    if np.any(s_arr < -r - slack) or np.any(s_arr > r + slack):
        raise DomainError(f"s must lie in [-{r}, {r}]")
    return s_arr


def eigenfunction(m, r, s):
    """Unit-normalized eigenfunction sqrt(2) cos(sqrt(-c_m)(s + r)).

    Accepts scalars or arrays; returns the same shape.
    """
    return eigenfunction_derivative(m, r, s, 0)


def eigenfunction_derivative(m, r, s, order):
    c = mode_coefficient(m, r)
    s_arr = _check_abscissa(r, s)
    k = math.sqrt(-c)
    phase = k * (s_arr + r)
    if order == 0:
        out = SQRT2 * np.cos(phase)
    elif order == 1:
        out = -SQRT2 * k * np.sin(phase)
    elif order == 2:
        out = -SQRT2 * k ** 2 * np.cos(phase)
    elif order == 3:
        out = SQRT2 * k ** 3 * np.sin(phase)
    elif order == 4:
        out = SQRT2 * k ** 4 * np.cos(phase)
    else:
        raise DomainError(f"derivative order must be 0..4, got {order}")
    if np.ndim(out) == 0:
        return float(out)
    return out


def _window_covers(alpha, beta, r, m_max, tol):
    # Past the vertex |c| > alpha/2 the residual c^2 + alpha c + beta grows with m.
    c = mode_coefficient(m_max, r)
    return -c > alpha / 2.0 and c * c + alpha * c + beta > tol


def classify_rays_through(alpha, beta, r, m_max=M_MAX, tol=1e-12):
    if m_max < 1:
        raise DomainError(f"m_max must be >= 1, got {m_max}")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    modes = []
    for m in range(1, m_max + 1):
        c = mode_coefficient(m, r)
        if abs(beta + c * alpha + c * c) <= tol:
            modes.append(m)
    if not _window_covers(alpha, beta, r, m_max, tol):
        logger.warning("m_max=%d may not cover all rays through (%g, %g)", m_max, alpha, beta)
    return modes


def nonlinearity_pointwise(x, d1, d2, d3, d4, alpha, gamma):
    """f = gamma x^3 + 3 x''^3 + 12 x' x'' x''' + 3 x'^2 (x'''' - (alpha/2) x'')."""
    return (gamma * x ** 3 + 3.0 * d2 ** 3 + 12.0 * d1 * d2 * d3
            + 3.0 * d1 ** 2 * (d4 - 0.5 * alpha * d2))


def reduced_jacobian_closed_form(alpha, beta, m1, m2, r):
    """Diagonal Jacobian of the reduced map at xi = 0 and its determinant.

    Entries are (c^2 + alpha c + beta) / (c^2 + alpha c + beta - 1), unshifted.
    """
    entries = []
    for m in (m1, m2):
        num = mode_eigenvalue(m, alpha, beta, r)
        den = num - 1.0
        if den == 0.0:
            raise SingularityError(f"zero denominator in reduced Jacobian for mode {m}", mode=m)
        entries.append(num / den)
    matrix = np.diag(entries)
    return matrix, entries[0] * entries[1]


def degree_sign_classification(slope, m1, m2, r):
    """Sign of det of the reduced Jacobian along (alpha0 + t, beta0 + slope t)."""
    if m1 >= m2:
        raise DomainError(f"need m1 < m2, got m1={m1}, m2={m2}")
    low = -mode_coefficient(m1, r)
    high = -mode_coefficient(m2, r)
    for edge in (low, high):
        if abs(slope - edge) <= 1e-12 * max(1.0, edge):
            return BOUNDARY
    if low < slope < high:
        return -1
    return 1
