# tests/test_pohozaev.py
import numpy as np
import pytest

from app.core.errors import DomainError
from app.core.grushin import Domain, power_nonlinearity, solve_ground_state
from app.core.pohozaev import (
    nonexistence_classify,
    pohozaev_coefficient,
    pohozaev_lhs,
    pohozaev_residual,
    pohozaev_rhs,
    pohozaev_trend,
    star_shaped_check,
)
from app.core.shapes import ball
from app.schemas.pohozaev import ExponentRegime


def test_coefficient_vanishes_exactly_at_the_critical_power():
    for alpha in (0.5, 1.0, 2.0, 3.7):
        assert pohozaev_coefficient(5, alpha) == 0.0
        assert pohozaev_coefficient(5.0, alpha) == 0.0


def test_coefficient_values():
    assert pohozaev_coefficient(3, 1.0) == pytest.approx(0.5)
    assert pohozaev_coefficient(7, 1.0) == pytest.approx(-0.25)
    assert pohozaev_coefficient(2.5, 1.0) == pytest.approx(2 * (3 / 3.5 - 0.5))


def test_coefficient_needs_p_at_least_one():
    with pytest.raises(DomainError):
        pohozaev_coefficient(0.5, 1.0)


@pytest.mark.parametrize(
    "p, regime",
    [(1, ExponentRegime.subcritical), (4.99, ExponentRegime.subcritical), (5, ExponentRegime.critical), (5.01, ExponentRegime.supercritical)],
)
def test_classification(p, regime):
    assert nonexistence_classify(p) == regime


def test_centered_ball_is_star_shaped(coarse_quadrature, alpha_one):
    verdict = star_shaped_check(ball(1.0), alpha_one, coarse_quadrature)
    assert verdict.verdict
    assert verdict.min_value >= 0


def test_ball_away_from_the_origin_is_rejected(coarse_quadrature, alpha_one):
    with pytest.raises(DomainError):
        star_shaped_check(ball(1.0, center=(10.0, 0.0, 0.0)), alpha_one, coarse_quadrature)


def test_cube_star_shaped_minimum(alpha_one):
    verdict = star_shaped_check(Domain.cube(1.0, 8), alpha_one)
    assert verdict.verdict
    # x faces give x n = 1, y faces give (1 + a) y n = 2
    assert verdict.min_value == pytest.approx(1.0)


def test_star_shaped_minimum_comes_from_the_nearest_face(alpha_one):
    domain = Domain((-0.1, -1, -1), (2, 1, 1), (8, 8, 8))
    assert star_shaped_check(domain, alpha_one).min_value == pytest.approx(0.1)
    masked = Domain.from_shape(ball(0.8), (-1, -1, -1), (1, 1, 1), (12, 12, 12))
    assert star_shaped_check(masked, alpha_one).verdict


def test_trivial_function_has_zero_residual(alpha_one):
    domain = Domain.cube(1.0, 8)
    report = pohozaev_residual(domain.zeros(), 3.0, domain, alpha_one)
    assert report.trivial
    assert report.lhs == 0 and report.rhs == 0
    assert report.residual == 0


def test_lhs_is_zero_at_the_critical_power(alpha_one):
    domain = Domain.cube(1.0, 8)
    u = domain.from_function(lambda x1, x2, y: np.cos(x1) * np.cos(x2) * np.cos(y))
    assert pohozaev_lhs(u, 5.0, alpha_one) == 0.0


def test_printed_boundary_term_is_twice_the_halved_one(alpha_one):
    domain = Domain.cube(1.0, 8)
    u = domain.from_function(lambda x1, x2, y: np.cos(np.pi * x1 / 2) * np.cos(np.pi * x2 / 2) * np.cos(np.pi * y / 2))
    halved = pohozaev_rhs(u, domain, alpha_one)
    assert halved > 0
    assert pohozaev_rhs(u, domain, alpha_one, printed=True) == pytest.approx(2 * halved)
    assert pohozaev_rhs(u, domain, alpha_one, threads=3) == pytest.approx(halved, rel=1e-14)


def test_identity_holds_on_a_computed_solution(alpha_one):
    domain = Domain.cube(1.0, 24)
    solution = solve_ground_state(domain, power_nonlinearity(4.0, 1.0), alpha_one)
    report = pohozaev_residual(solution.u, 3.0, domain, alpha_one)
    assert not report.trivial
    assert report.regime == ExponentRegime.subcritical
    assert report.lhs > 0 and report.rhs > 0
    assert report.residual <= 0.15
    assert report.rhs_printed == pytest.approx(2 * report.rhs)
    assert report.star_shaped.verdict


def test_trend_reports_one_residual_per_resolution(alpha_one):
    trend = pohozaev_trend(3.0, alpha_one, resolutions=(8, 16))
    assert trend.resolutions == [8, 16]
    assert len(trend.residuals) == 2
    assert all(0 <= r < 0.5 for r in trend.residuals)
    assert trend.decreasing == (trend.residuals[1] <= trend.residuals[0])
