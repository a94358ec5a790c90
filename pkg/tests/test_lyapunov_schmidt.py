# tests/test_lyapunov_schmidt.py
import numpy as np
import pytest

from analysis_app.lyapunov_schmidt import (
    build_context, discrete_double_point, probe, probe_batch, reduced_jacobian_numeric,
    reduced_map, solve_xtilde, winding_degree,
)
from common.errors import ConfigError, DomainError, IndeterminateDegreeError
from common.protocol import (
    PROBE_FIELDS, STATUS_BOUNDARY, STATUS_OK, STATUS_SOLVER_FAILURE,
)
from conftest import DOUBLE_12, PROBE_NEG, PROBE_POS, R
from rod_app.core_model import BOUNDARY, reduced_jacobian_closed_form
from rod_app.discretization import inner_product


@pytest.fixture(scope="module")
def ctx(grid201):
    return build_context(1, 2, grid201, gamma0=1.0)


def test_context(ctx):
    assert ctx.modes == (1, 2)
    assert (ctx.double_point.alpha0, ctx.double_point.beta0) == pytest.approx(DOUBLE_12)
    e1, e2 = ctx.basis
    assert inner_product(e1, e2) == pytest.approx(0.0, abs=1e-10)
    assert inner_product(e1, e1) == pytest.approx(1.0, abs=1e-10)


def test_context_validation(grid201):
    with pytest.raises(DomainError):
        build_context(1, 1, grid201)
    with pytest.raises(DomainError):
        build_context(1, 2, grid201, gamma0=-1.0)


def test_discrete_double_point_is_close(ctx):
    alpha, beta = discrete_double_point(ctx)
    assert alpha == pytest.approx(DOUBLE_12[0], abs=1e-4)
    assert beta == pytest.approx(DOUBLE_12[1], abs=1e-4)


def test_zero_kernel_coordinates_give_trivial_corrector(ctx):
    point = solve_xtilde((0.0, 0.0), *PROBE_NEG, ctx)
    assert point.iterations == 1
    assert point.phi == (0.0, 0.0)
    assert np.all(point.xtilde.values == 0.0)


def test_corrector_deviation_is_cubic(ctx):
    alpha, beta = discrete_double_point(ctx)
    e1 = ctx.basis[0]
    deviations = []
    for xi in (1e-2, 2e-2):
        point = solve_xtilde((xi, 0.0), alpha, beta, ctx)
        deviations.append((point.xtilde - xi * e1).norm())
    assert deviations[0] <= 1e-4
    assert 5.0 < deviations[1] / deviations[0] < 11.0


def test_solve_xtilde_stays_in_its_box(ctx):
    with pytest.raises(DomainError):
        solve_xtilde((0.2, 0.0), *PROBE_NEG, ctx)
    with pytest.raises(DomainError):
        solve_xtilde((0.0, 0.0), DOUBLE_12[0] + 0.5, DOUBLE_12[1], ctx)


def test_reduced_map_is_odd(ctx):
    plus = reduced_map((1e-3, 5e-4), *PROBE_POS, ctx)
    minus = reduced_map((-1e-3, -5e-4), *PROBE_POS, ctx)
    np.testing.assert_allclose(plus, -np.array(minus), atol=1e-12)


def test_numeric_jacobian_matches_closed_form(ctx):
    for point in (PROBE_NEG, PROBE_POS):
        closed, det = reduced_jacobian_closed_form(*point, 1, 2, R)
        numeric = reduced_jacobian_numeric(*point, ctx)
        np.testing.assert_allclose(np.diag(numeric), np.diag(closed), rtol=0.02)
        assert abs(numeric[0, 1]) <= 1e-4 and abs(numeric[1, 0]) <= 1e-4
        assert np.sign(np.linalg.det(numeric)) == np.sign(det)


def test_winding_follows_determinant_sign(ctx):
    assert winding_degree(*PROBE_NEG, ctx) == -1
    assert winding_degree(*PROBE_POS, ctx) == 1


def test_winding_indeterminate_on_tiny_circle(ctx):
    with pytest.raises(IndeterminateDegreeError) as info:
        winding_degree(*PROBE_NEG, ctx, radius=1e-12)
    assert info.value.min_norm < 1e-9


def test_winding_validation(ctx):
    with pytest.raises(ConfigError):
        winding_degree(*PROBE_NEG, ctx, samples=16)
    with pytest.raises(DomainError):
        winding_degree(*PROBE_NEG, ctx, radius=1.0)


def test_probe_reports(ctx):
    report = probe(0.1, 0.3, ctx)
    assert report.status == STATUS_OK
    assert report.classification == -1
    assert report.winding == -1
    assert report.det_closed_form < 0 and report.det_numeric < 0
    assert list(report.to_record()) == PROBE_FIELDS
    assert report.to_record()["message"] is None


def test_probe_on_a_ray_direction_is_boundary(ctx):
    report = probe(0.1, 0.0625, ctx)
    assert report.status == STATUS_BOUNDARY
    assert report.classification == BOUNDARY
    assert report.winding is None


def test_probe_singular_closed_form(ctx):
    # lambda_1 = 1 exactly at (1.625, 1.09765625)
    report = probe(1.0, 1.0625, ctx)
    assert report.status == STATUS_SOLVER_FAILURE
    assert report.winding is None
    assert "zero denominator" in report.to_record()["message"]


def test_probe_batch_keeps_input_order(ctx):
    reports = probe_batch([0.1], [0.0625, 1.0, 0.3], ctx, max_workers=3)
    assert [r.slope for r in reports] == [0.0625, 1.0, 0.3]
    assert [r.status for r in reports] == [STATUS_BOUNDARY, STATUS_OK, STATUS_OK]
    assert [r.winding for r in reports] == [None, 1, -1]


def test_corrector_deviation_fits_a_cubic(ctx):
    alpha, beta = discrete_double_point(ctx)
    e1 = ctx.basis[0]
    radii = (1e-3, 2e-3, 4e-3)
    deviations = [(solve_xtilde((xi, 0.0), alpha, beta, ctx).xtilde - xi * e1).norm() for xi in radii]
    order, _ = np.polyfit(np.log(radii), np.log(deviations), 1)
    assert order >= 2.5


@pytest.mark.parametrize("gamma0", [0.0, 1.0, 10.0])
def test_winding_does_not_depend_on_gamma0(grid201, gamma0):
    local = build_context(1, 2, grid201, gamma0=gamma0)
    assert winding_degree(*PROBE_NEG, local) == -1
    assert winding_degree(*PROBE_POS, local) == 1


@pytest.mark.slow
def test_winding_matches_classification_across_slopes(ctx):
    slopes = [0.1, 0.3, 0.45, 0.7, 1.0, 2.0]
    reports = probe_batch([5e-3, 1e-2], slopes, ctx, max_workers=4)
    assert len(reports) == 12
    for report in reports:
        assert report.status == STATUS_OK, report.message
        assert report.winding == report.classification
        assert np.sign(report.det_closed_form) == report.classification
