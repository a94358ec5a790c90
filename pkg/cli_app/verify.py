# cli_app/verify.py
"""Acceptance checks behind the `verify` command.

Every check returns (passed, message). `quick` runs at n = 201 only; `full`
adds the grid-refinement studies up to n = 401 and the long branches.
"""
import logging
import math

import numpy as np

from analysis_app.continuation import (
    bifurcation_on_ray, branch_switch, continue_branch, pitchfork_exponent,
    tangent_similarity,
)
from analysis_app.linear_analysis import kernel_analysis, kernel_analysis_at_params
from analysis_app.lyapunov_schmidt import (
    build_context, probe, reduced_jacobian_numeric, winding_degree,
)
from analysis_app.newton import roundoff_floor
from common.errors import RodAnalysisError
from common.protocol import DEFAULT_N, DEFAULT_R
from rod_app.core_model import (
    Params, double_point, mode_coefficient, ray_beta, reduced_jacobian_closed_form,
)
from rod_app.discretization import (
    assemble_linearized, build_grid, inner_product, sample, sample_eigenfunction,
)
from rod_app.energy import (
    PhysicalParams, crandall_rabinowitz_coefficients, exact_total_energy,
    gradient_pairing_check, total_energy,
)

logger = logging.getLogger(__name__)

R = DEFAULT_R
ON_RAY_1 = (1.0, 0.05859375)
OFF_RAY = (1.0, 0.2)
DOUBLE_12 = (0.625, 0.03515625)
PROBE_NEG = (0.725, 0.06515625)
PROBE_POS = (0.725, 0.13515625)
REFINEMENT = (101, 201, 401)
ASYMMETRY_SLACK = 1.25
REFINED_PAIRING_EPS = 1e-6


def observed_order(spacings, errors):
    """Slope of log(error) against log(h)."""
    slope, _ = np.polyfit(np.log(spacings), np.log(errors), 1)
    return float(slope)


def bc_polynomials(r):
    """Two polynomials in u = (s + r) / 2r that satisfy all four boundary conditions."""
    length = 2.0 * r

    def quartic(s):
        v = (s + r) / length
        return v ** 4 - 6.0 * v ** 2 + 5.0

    def sextic(s):
        v = (s + r) / length
        return v ** 6 - 15.0 * v ** 2 + 14.0

    return quartic, sextic


def smooth_bc_pair(seed, grid):
    """Random combination of boundary-condition polynomials and eigenfunctions."""
    rng = np.random.default_rng(seed)
    quartic, sextic = bc_polynomials(grid.r)
    parts = [sample(quartic, grid), sample(sextic, grid),
             sample_eigenfunction(1, grid), sample_eigenfunction(3, grid)]
    pair = []
    for _ in range(2):
        coeffs = rng.uniform(0.5, 1.5, size=len(parts)) * rng.choice([-1.0, 1.0], size=len(parts))
        f = parts[0] * coeffs[0]
        for c, part in zip(coeffs[1:], parts[1:]):
            f = f + part * c
        pair.append(f)
    return tuple(pair)


def pairing_asymmetry(g, h, alpha, beta):
    op = assemble_linearized(alpha, beta, g.grid)
    return abs(inner_product(op.apply(h), g) - inner_product(h, op.apply(g))) / (g.norm() * h.norm())


def check_closed_forms():
    ok = (math.isclose(mode_coefficient(1, R), -0.0625, rel_tol=1e-14)
          and math.isclose(ray_beta(1, 1.0, R), 0.05859375, rel_tol=1e-14))
    dp = double_point(1, 2, R)
    ok = ok and math.isclose(dp.alpha0, 0.625, rel_tol=1e-14) and math.isclose(dp.beta0, 0.03515625, rel_tol=1e-14)
    return ok, f"c_1={mode_coefficient(1, R)}, double point (1,2)=({dp.alpha0}, {dp.beta0})"


def check_kernel_trichotomy():
    grid = build_grid(DEFAULT_N, R)
    zero = kernel_analysis(*OFF_RAY, grid)
    one = kernel_analysis(*ON_RAY_1, grid)
    two = kernel_analysis(*DOUBLE_12, grid)
    ok = (zero.dim == 0 and one.dim == 1 and list(one.matched_modes) == [1]
          and two.dim == 2 and list(two.matched_modes) == [1, 2]
          and all(rep.gap_ok for rep in (zero, one, two)))
    return ok, f"dims {zero.dim}/{one.dim}/{two.dim}, matched {list(one.matched_modes)} and {list(two.matched_modes)}"


def check_crandall_rabinowitz():
    p = Params(alpha=ON_RAY_1[0], beta=ON_RAY_1[1], gamma=1.0, r=R)
    d_alpha, d_beta = crandall_rabinowitz_coefficients(1, p)
    ok = abs(d_alpha + 0.0625) <= 0.01 * 0.0625 and abs(d_beta - 1.0) <= 0.01
    return ok, f"d_alpha={d_alpha:.6g}, d_beta={d_beta:.6g}"


def check_closed_form_determinants():
    _, det_neg = reduced_jacobian_closed_form(*PROBE_NEG, 1, 2, R)
    _, det_pos = reduced_jacobian_closed_form(*PROBE_POS, 1, 2, R)
    ok = abs(det_neg + 6.223e-4) <= 1e-3 * 6.223e-4 and abs(det_pos - 4.733e-3) <= 1e-3 * 4.733e-3
    return ok, f"det {det_neg:.6g} and {det_pos:.6g}"


def _pairing_discrepancy(n, eps=1e-5):
    grid = build_grid(n, R)
    p = Params(alpha=1.0, beta=0.2, gamma=1.0, r=R)
    x = sample_eigenfunction(1, grid) * 0.05
    h = sample_eigenfunction(2, grid)
    return gradient_pairing_check(x, h, p, eps)


def check_gradient_pairing():
    value = _pairing_discrepancy(DEFAULT_N)
    return value <= 1e-6, f"discrepancy {value:.3e} at n={DEFAULT_N}"


def check_gradient_pairing_refined():
    # eps^2 term of the central difference sits below the h^2 term here
    coarse = _pairing_discrepancy(201, REFINED_PAIRING_EPS)
    fine = _pairing_discrepancy(401, REFINED_PAIRING_EPS)
    ratio = coarse / fine
    return 3.0 <= ratio <= 5.0, f"discrepancy {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2f}"


def check_degree_flip(gammas=(1.0,)):
    grid = build_grid(DEFAULT_N, R)
    found = []
    for gamma0 in gammas:
        ctx = build_context(1, 2, grid, gamma0=gamma0)
        neg = probe(1e-2, 0.3, ctx)
        pos = probe(1e-2, 1.0, ctx)
        found.append((gamma0, neg.winding, pos.winding))
    ok = all(w_neg == -1 and w_pos == 1 for _, w_neg, w_pos in found)
    return ok, "windings " + ", ".join(f"gamma0={g}: {a}/{b}" for g, a, b in found)


def check_reduced_jacobian_numeric():
    grid = build_grid(DEFAULT_N, R)
    ctx = build_context(1, 2, grid, gamma0=1.0)
    worst_rel, worst_off = 0.0, 0.0
    for point in (PROBE_NEG, PROBE_POS):
        closed, _ = reduced_jacobian_closed_form(*point, 1, 2, R)
        numeric = reduced_jacobian_numeric(*point, ctx)
        for k in range(2):
            worst_rel = max(worst_rel, abs(numeric[k, k] - closed[k, k]) / abs(closed[k, k]))
        worst_off = max(worst_off, abs(numeric[0, 1]), abs(numeric[1, 0]))
    return worst_rel <= 0.02 and worst_off <= 1e-4, f"diag rel err {worst_rel:.2e}, off-diag {worst_off:.2e}"


def check_gamma_invariance():
    grid = build_grid(DEFAULT_N, R)
    reports = [kernel_analysis_at_params(Params(*DOUBLE_12, gamma=g, r=R), grid) for g in (0.0, 1.0, 10.0)]
    same_kernel = all(rep.to_record() == reports[0].to_record() for rep in reports)
    windings = set()
    for gamma0 in (0.0, 1.0, 10.0):
        ctx = build_context(1, 2, grid, gamma0=gamma0)
        windings.add(winding_degree(*PROBE_NEG, ctx))
    ok = same_kernel and windings == {-1}
    return ok, f"kernel reports identical: {same_kernel}, windings {sorted(windings)}"


def check_discretization_order():
    alpha = 10.0
    beta = ray_beta(1, alpha, R)
    spacings, errors = [], []
    for n in REFINEMENT:
        grid = build_grid(n, R)
        e = sample_eigenfunction(1, grid)
        out = assemble_linearized(alpha, beta, grid).apply(e)
        spacings.append(grid.h)
        errors.append(float(np.max(np.abs(out.values))))
    order = observed_order(spacings, errors)
    return order >= 1.9, f"observed order {order:.3f}"


def asymmetry_within_bound(spacings, asym, floors, slack=ASYMMETRY_SLACK):
    """asym_k <= slack * C h_k^2 + floor_k, with C fixed by the coarsest grid."""
    c = asym[0] / spacings[0] ** 2
    return all(a <= slack * c * h * h + f for h, a, f in zip(spacings[1:], asym[1:], floors[1:]))


def check_self_adjointness():
    failed = []
    for seed in range(5):
        spacings, asym, floors = [], [], []
        for n in REFINEMENT:
            grid = build_grid(n, R)
            g, h = smooth_bc_pair(seed, grid)
            spacings.append(grid.h)
            asym.append(pairing_asymmetry(g, h, 1.0, 0.2))
            amplitude = (float(np.max(np.abs(g.values))) / g.norm()
                         + float(np.max(np.abs(h.values))) / h.norm())
            floors.append(roundoff_floor(amplitude, grid))
        if not asymmetry_within_bound(spacings, asym, floors):
            failed.append(seed)
    if failed:
        return False, f"asymmetry above C h^2 + roundoff for seeds {failed}"
    return True, "asymmetry within C h^2 + roundoff for all seeds"


def _branch(free, direction, steps, dt=5e-3):
    grid = build_grid(DEFAULT_N, R)
    p = Params(alpha=ON_RAY_1[0], beta=ON_RAY_1[1], gamma=1.0, r=R)
    bif = bifurcation_on_ray(1, p, free, grid)
    seed = branch_switch(bif, direction, 1e-3, free, p, grid)
    return continue_branch(seed, steps, dt), grid


def check_short_branch():
    branch, grid = _branch("alpha", 1, 6)
    worst = max(pt.residual_norm for pt in branch.points)
    tangent = tangent_similarity(branch.points[1], branch.mode, grid)
    ok = branch.status == "complete" and worst <= 1e-9 and tangent >= 0.999
    return ok, f"{len(branch.points)} points, max residual {worst:.2e}, tangent {tangent:.6f}"


def check_pitchfork_branches():
    messages, ok = [], True
    for free in ("alpha", "beta"):
        plus, grid = _branch(free, 1, 20)
        minus, _ = _branch(free, -1, 20)
        exponent = pitchfork_exponent(plus)
        worst = max(pt.residual_norm for pt in plus.points)
        mirror = max(float(np.max(np.abs(a.x.values + b.x.values)))
                     for a, b in zip(plus.points, minus.points))
        reached = abs(plus.points[-1].t) >= 0.1 - 1e-12
        ok = ok and reached and worst <= 1e-9 and exponent >= 1.9 and mirror <= 1e-8
        messages.append(f"{free}: exponent {exponent:.3f}, max residual {worst:.1e}, mirror {mirror:.1e}")
    return ok, "; ".join(messages)


def check_energy_truncation():
    grid = build_grid(DEFAULT_N, R)
    q = PhysicalParams(lam=2.0, mu=0.4, nu=2.0, youngs_times_inertia=2.0)
    p = q.to_params(R)
    amplitudes = (0.02, 0.04, 0.08)
    gaps = []
    for t in amplitudes:
        x = sample_eigenfunction(1, grid) * t
        exact = exact_total_energy(x, q) / (2.0 * R * q.youngs_times_inertia)
        gaps.append(abs(exact - total_energy(x, p)))
    slope = observed_order(amplitudes, gaps)
    return slope >= 5.5, f"log-log slope {slope:.3f}"


QUICK_CHECKS = [
    ("closed-form spectral data", check_closed_forms),
    ("kernel trichotomy", check_kernel_trichotomy),
    ("Crandall-Rabinowitz coefficients", check_crandall_rabinowitz),
    ("closed-form reduced determinants", check_closed_form_determinants),
    ("gradient pairing", check_gradient_pairing),
    ("degree flip at the (1,2) double point", check_degree_flip),
    ("short pitchfork branch", check_short_branch),
]

FULL_CHECKS = QUICK_CHECKS + [
    ("discretization order", check_discretization_order),
    ("discrete self-adjointness", check_self_adjointness),
    ("gradient pairing under refinement", check_gradient_pairing_refined),
    ("numeric reduced Jacobian", check_reduced_jacobian_numeric),
    ("degree flip for gamma0 in {0, 1}", lambda: check_degree_flip((0.0, 1.0))),
    ("gamma invariance", check_gamma_invariance),
    ("pitchfork branches", check_pitchfork_branches),
    ("energy truncation order", check_energy_truncation),
]


def run_checks(checks):
    """[(name, passed, message)]; a raised error counts as a failure."""
    results = []
    for name, check in checks:
        try:
            passed, message = check()
        except (RodAnalysisError, ArithmeticError, ValueError) as e:
            passed, message = False, f"{type(e).__name__}: {e}"
        logger.info("%s: %s", name, "pass" if passed else "FAIL")
        results.append((name, bool(passed), message))
    return results


def checks_for(level):
    return QUICK_CHECKS if level == "quick" else FULL_CHECKS
