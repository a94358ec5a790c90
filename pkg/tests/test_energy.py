# tests/test_energy.py
import pytest

from common.errors import DomainError, ShapeError
from conftest import R
from rod_app.core_model import Params, mode_eigenvalue
from rod_app.discretization import (
    build_grid, inner_product, residual, sample_eigenfunction, zero_function,
)
from rod_app.energy import (
    PhysicalParams, crandall_rabinowitz_coefficients, exact_total_energy,
    first_variation, gradient_pairing_check, total_energy,
)

P = Params(alpha=1.0, beta=0.2, gamma=1.0, r=R)


def test_physical_params_round_trip():
    q = PhysicalParams(lam=2.0, mu=0.4, nu=2.0, youngs_times_inertia=2.0)
    p = q.to_params(R)
    assert (p.alpha, p.beta, p.gamma, p.r) == (1.0, 0.2, 1.0, R)
    assert PhysicalParams.from_params(p, 2.0) == q


@pytest.mark.parametrize("kwargs", [
    dict(lam=0.0, mu=1.0, nu=1.0, youngs_times_inertia=1.0),
    dict(lam=1.0, mu=-1.0, nu=1.0, youngs_times_inertia=1.0),
    dict(lam=1.0, mu=1.0, nu=-1.0, youngs_times_inertia=1.0),
    dict(lam=1.0, mu=1.0, nu=1.0, youngs_times_inertia=0.0),
])
def test_physical_params_validation(kwargs):
    with pytest.raises(DomainError):
        PhysicalParams(**kwargs)


def test_total_energy_is_even_and_zero_at_rest(grid201):
    assert total_energy(zero_function(grid201), P) == 0.0
    x = sample_eigenfunction(1, grid201) * 0.05 + sample_eigenfunction(2, grid201) * 0.03
    assert total_energy(x, P) == total_energy(-x, P)


def test_total_energy_quadratic_part(grid201):
    a = 1e-3
    x = sample_eigenfunction(1, grid201) * a
    expected = 0.5 * a * a * mode_eigenvalue(1, P.alpha, P.beta, R)
    assert total_energy(x, P) == pytest.approx(expected, rel=1e-3)


def test_gradient_pairing(grid201):
    x = sample_eigenfunction(1, grid201) * 0.05
    h = sample_eigenfunction(2, grid201)
    assert gradient_pairing_check(x, h, P, 1e-5) <= 1e-6
    with pytest.raises(DomainError):
        gradient_pairing_check(x, h, P, 0.0)


def test_gradient_pairing_converges_at_second_order():
    discrepancies = []
    for n in (201, 401):
        grid = build_grid(n, R)
        x = sample_eigenfunction(1, grid) * 0.05
        h = sample_eigenfunction(2, grid)
        discrepancies.append(gradient_pairing_check(x, h, P, 1e-6))
    assert 3.0 <= discrepancies[0] / discrepancies[1] <= 5.0


def test_first_variation_matches_residual_pairing(grid201):
    x = sample_eigenfunction(1, grid201) * 0.05
    h = sample_eigenfunction(1, grid201)
    expected = inner_product(residual(x, P, grid201), h)
    assert first_variation(x, h, P) == pytest.approx(expected, rel=1e-3)


def test_first_variation_grid_mismatch(grid201, grid51):
    with pytest.raises(ShapeError):
        first_variation(zero_function(grid201), zero_function(grid51), P)


def test_exact_energy_agrees_at_small_amplitude(grid201):
    q = PhysicalParams(lam=2.0, mu=0.4, nu=2.0, youngs_times_inertia=2.0)
    p = q.to_params(R)
    x = sample_eigenfunction(1, grid201) * 0.02
    exact = exact_total_energy(x, q) / (2.0 * R * q.youngs_times_inertia)
    assert exact == pytest.approx(total_energy(x, p), rel=1e-4)


def test_exact_energy_rejects_steep_slopes(grid201):
    q = PhysicalParams(lam=2.0, mu=0.4, nu=2.0, youngs_times_inertia=2.0)
    with pytest.raises(DomainError, match="node"):
        exact_total_energy(sample_eigenfunction(1, grid201) * 10.0, q)


def test_crandall_rabinowitz_coefficients(on_ray_params):
    d_alpha, d_beta = crandall_rabinowitz_coefficients(1, on_ray_params)
    assert d_alpha == pytest.approx(-0.0625, rel=0.01)
    assert d_beta == pytest.approx(1.0, rel=0.01)


def test_crandall_rabinowitz_needs_room_for_the_step():
    p = Params(alpha=5e-5, beta=0.2, gamma=1.0, r=R)
    with pytest.raises(DomainError):
        crandall_rabinowitz_coefficients(1, p, grid=build_grid(51, R))
