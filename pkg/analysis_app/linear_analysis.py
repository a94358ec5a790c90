# analysis_app/linear_analysis.py
"""Kernel of the linearized operator at x = 0 and scans of the (alpha, beta) plane."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from analysis_app.workers import run_ordered
from common.errors import ConfigError, DomainError
from common.protocol import (
    DETECT_TOL, KERNEL_GAP_FACTOR, KERNEL_THRESHOLD_FACTOR, M_MAX,
    MAX_WORKERS, MIN_DETECT_STEPS, MIN_SCAN_RESOLUTION, MODE_MATCH_THRESHOLD,
)
from rod_app.core_model import Mode
from rod_app.discretization import (
    assemble_linearized, from_free, inner_product, sample_eigenfunction,
    symmetrized_operator,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelReport:
    alpha: float
    beta: float
    dim: int
    singular_values: tuple
    threshold: float
    gap_factor: float
    gap_ok: bool
    basis: tuple = field(repr=False)
    matched_modes: tuple = ()
    similarities: dict = field(default_factory=dict)

    def to_record(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "dim": self.dim,
            "singular_values": list(self.singular_values),
            "threshold": self.threshold,
            "gap_factor": self.gap_factor,
            "gap_ok": self.gap_ok,
            "matched_modes": list(self.matched_modes),
            "similarities": [self.similarities[m] for m in self.matched_modes],
        }


def operator_scale(alpha, beta):
    return max(1.0, alpha * alpha / 4.0 + beta)


def default_threshold(alpha, beta, grid):
    return KERNEL_THRESHOLD_FACTOR * grid.h ** 2 * operator_scale(alpha, beta)


def _symmetric_operator(alpha, beta, grid):
    return symmetrized_operator(assemble_linearized(alpha, beta, grid))


def _orthonormalize(functions):
    basis = []
    for f in functions:
        for b in basis:
            f = f - inner_product(f, b) * b
        basis.append(f * (1.0 / f.norm()))
    return tuple(basis)


def subspace_similarity(basis, m, grid):
    """Cosine of the angle between e_m and span(basis)."""
    if not basis:
        return 0.0
    e = sample_eigenfunction(m, grid)
    projected = sum(inner_product(e, b) ** 2 for b in basis)
    return math.sqrt(min(projected / inner_product(e, e), 1.0))


def kernel_analysis(alpha, beta, grid, threshold=None, m_max=M_MAX,
                    match_threshold=MODE_MATCH_THRESHOLD):
    if threshold is None:
        threshold = default_threshold(alpha, beta, grid)
    if not threshold > 0:
        raise DomainError(f"threshold must be > 0, got {threshold}")
    sym, root = _symmetric_operator(alpha, beta, grid)
    # singular values come back descending
    _, sigma, vt = linalg.svd(sym)
    order = np.argsort(sigma, kind="stable")
    sigma = sigma[order]
    vt = vt[order]
    dim = int(np.count_nonzero(sigma <= threshold))
    if dim > 2:
        logger.warning("%d singular values below threshold at (%g, %g)", dim, alpha, beta)

    floor = grid.h ** 2 * operator_scale(alpha, beta)
    below = sigma[dim - 1] if dim else 0.0
    gap_factor = float(sigma[dim] / max(below, floor)) if dim < sigma.size else math.inf
    gap_ok = gap_factor >= KERNEL_GAP_FACTOR
    if not gap_ok:
        logger.warning("singular-value gap %.3g below %g at (%g, %g)",
                       gap_factor, KERNEL_GAP_FACTOR, alpha, beta)

    basis = _orthonormalize([from_free(vt[i] / root, grid) for i in range(min(dim, 2))])
    matched, similarities = [], {}
    for m in range(1, m_max + 1):
        sim = subspace_similarity(basis, m, grid)
        if sim >= match_threshold:
            matched.append(m)
            similarities[m] = sim
    logger.debug("kernel at (%g, %g): dim=%d sigma=%s matched=%s",
                 alpha, beta, dim, sigma[:3], matched)
    return KernelReport(
        alpha=float(alpha), beta=float(beta), dim=dim,
        singular_values=tuple(float(s) for s in sigma[:3]),
        threshold=float(threshold), gap_factor=gap_factor, gap_ok=bool(gap_ok),
        basis=basis, matched_modes=tuple(matched), similarities=similarities,
    )


def kernel_analysis_at_params(p, grid, threshold=None):
    """Same as kernel_analysis; gamma never enters the linearization at 0."""
    return kernel_analysis(p.alpha, p.beta, grid, threshold)


@dataclass(frozen=True)
class ScanResult:
    alpha_values: np.ndarray = field(repr=False)
    beta_values: np.ndarray = field(repr=False)
    sigma_min: np.ndarray = field(repr=False)
    sigma_2: np.ndarray = field(repr=False)
    dim: np.ndarray = field(repr=False)
    threshold: float = 0.0

    def rows(self):
        """(alpha, beta, sigma_min, sigma_2, dim) with alpha outer, beta inner."""
        for i, a in enumerate(self.alpha_values):
            for j, b in enumerate(self.beta_values):
                yield (float(a), float(b), float(self.sigma_min[i, j]),
                       float(self.sigma_2[i, j]), int(self.dim[i, j]))

    def flagged(self):
        return [(a, b) for a, b, _, _, d in self.rows() if d >= 1]


def _cell_centers(lo_hi, resolution, name):
    lo, hi = (float(v) for v in lo_hi)
    if not 0 < lo < hi:
        raise ConfigError(f"{name} range must satisfy 0 < lo < hi, got {lo_hi}", field=name)
    step = (hi - lo) / resolution
    return lo + step * (np.arange(resolution) + 0.5), step


def _smallest_three(cell, grid):
    alpha, beta = cell
    sym, _ = _symmetric_operator(alpha, beta, grid)
    sigma = np.sort(np.abs(linalg.eigvalsh(sym)))
    return sigma[0], sigma[1], sigma[2]


def scan_bifurcation_set(alpha_range, beta_range, resolution, grid, max_workers=MAX_WORKERS):
    """Smallest singular values over a resolution x resolution cell grid.

    A cell counts a singular value when it is at most half the cell height in
    beta; the eigenvalue on e_m moves one-for-one with beta, so flagged cells
    follow the rays at every resolution.
    """
    if isinstance(resolution, bool) or int(resolution) != resolution or resolution < MIN_SCAN_RESOLUTION:
        raise ConfigError(f"resolution must be an integer >= {MIN_SCAN_RESOLUTION}, got {resolution}",
                          field="resolution")
    resolution = int(resolution)
    alphas, _ = _cell_centers(alpha_range, resolution, "alpha")
    betas, d_beta = _cell_centers(beta_range, resolution, "beta")
    threshold = 0.5 * d_beta
    cells = [(a, b) for a in alphas for b in betas]
    logger.info("scanning %d cells on n=%d", len(cells), grid.n)

    outcomes = run_ordered(lambda cell: _smallest_three(cell, grid), cells, max_workers)
    sigma_min = np.empty(len(cells))
    sigma_2 = np.empty(len(cells))
    dim = np.empty(len(cells), dtype=int)
    for k, (result, error) in enumerate(outcomes):
        if error is not None:
            raise error
        s1, s2, s3 = result
        sigma_min[k], sigma_2[k] = s1, s2
        dim[k] = int(s1 <= threshold) + int(s2 <= threshold) + int(s3 <= threshold)
    shape = (resolution, resolution)
    result = ScanResult(alphas, betas, sigma_min.reshape(shape), sigma_2.reshape(shape),
                        dim.reshape(shape), threshold)
    logger.info("scan done: %d flagged cells", int(np.count_nonzero(result.dim)))
    return result


@dataclass(frozen=True)
class PathSegment:
    start: tuple
    end: tuple

    def __post_init__(self):
        for point in (self.start, self.end):
            if not (point[0] > 0 and point[1] > 0):
                raise DomainError(f"path must stay in the positive quadrant, got {point}")

    def point(self, s):
        a0, b0 = self.start
        a1, b1 = self.end
        return a0 + s * (a1 - a0), b0 + s * (b1 - b0)


@dataclass(frozen=True)
class Crossing:
    s: float
    alpha: float
    beta: float
    mode: Mode
    similarity: float


def _negative_count(path, s, grid):
    alpha, beta = path.point(s)
    sym, _ = _symmetric_operator(alpha, beta, grid)
    return int(np.count_nonzero(linalg.eigvalsh(sym) < 0.0))


def _mode_guess(alpha, beta, grid, m_max):
    sym, root = _symmetric_operator(alpha, beta, grid)
    values, vectors = linalg.eigh(sym)
    k = int(np.argmin(np.abs(values)))
    v = from_free(vectors[:, k] / root, grid)
    v = v * (1.0 / v.norm())
    sims = [subspace_similarity((v,), m, grid) for m in range(1, m_max + 1)]
    best = int(np.argmax(sims))
    return best + 1, sims[best]


def detect_sign_changes(path, grid, steps, tol=DETECT_TOL, m_max=M_MAX):
    """Parameter values on the path where an eigenvalue of F'(0) crosses zero.

    A crossing changes the number of negative eigenvalues of the symmetric
    form of the operator; each bracket is bisected in the path parameter.
    """
    if isinstance(steps, bool) or int(steps) != steps or steps < MIN_DETECT_STEPS:
        raise ConfigError(f"steps must be an integer >= {MIN_DETECT_STEPS}, got {steps}", field="steps")
    grid_s = np.linspace(0.0, 1.0, int(steps) + 1)
    counts = [_negative_count(path, s, grid) for s in grid_s]
    crossings = []
    for k in range(len(grid_s) - 1):
        if counts[k] == counts[k + 1]:
            continue
        if abs(counts[k] - counts[k + 1]) > 1:
            logger.warning("several eigenvalues cross in [%g, %g]; refining one", grid_s[k], grid_s[k + 1])
        lo, hi = grid_s[k], grid_s[k + 1]
        count_lo = counts[k]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _negative_count(path, mid, grid) == count_lo:
                lo = mid
            else:
                hi = mid
            logger.debug("bisection bracket [%.12g, %.12g]", lo, hi)
        s = 0.5 * (lo + hi)
        alpha, beta = path.point(s)
        m, sim = _mode_guess(alpha, beta, grid, m_max)
        logger.info("crossing at s=%.10g (alpha=%.10g, beta=%.10g), mode %d", s, alpha, beta, m)
        crossings.append(Crossing(s=float(s), alpha=float(alpha), beta=float(beta),
                                  mode=Mode.of(m, grid.r), similarity=float(sim)))
    return crossings
