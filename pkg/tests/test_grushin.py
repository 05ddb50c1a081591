# tests/test_grushin.py
import math

import numpy as np
import pytest

from app.core.errors import ConvergenceError, DomainError
from app.core.grushin import (
    Domain,
    assemble_grushin,
    custom_nonlinearity,
    directional_derivative,
    dirichlet_energy,
    embedding_check,
    energy,
    initial_guess,
    linear_solve,
    manufactured_convergence,
    mountain_pass_level,
    nehari_residual,
    nehari_scale,
    poincare_constant,
    power_nonlinearity,
    random_bumps,
    solve_ground_state,
    truncated_extremal,
    validate_growth_conditions,
    weak_residual,
    zero_nonlinearity,
)
from app.core.shapes import ball
from app.schemas.solver import InitialGuess, SolverConfig, Verdict


@pytest.fixture(scope="module")
def ground_state():
    domain = Domain.cube(1.0, 16)
    nl = power_nonlinearity(4.0, 1.0)
    return domain, nl, solve_ground_state(domain, nl, 1.0, SolverConfig(outer_tolerance=1e-5))


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

def test_domain_needs_even_dims_across_the_axis():
    with pytest.raises(DomainError):
        Domain((-1, -1, -1), (1, 1, 1), (3, 4, 4))
    Domain((-1, -1, -1), (1, 1, 1), (4, 4, 3))


def test_domain_must_contain_the_origin():
    with pytest.raises(DomainError):
        Domain((0.5, -1, -1), (1, 1, 1), (4, 4, 4))


def test_disconnected_mask_is_rejected():
    mask = np.zeros((8, 8, 8), dtype=bool)
    mask[3:5, 3:5, 3:5] = True
    mask[0, 0, 0] = True
    with pytest.raises(DomainError):
        Domain((-1, -1, -1), (1, 1, 1), (8, 8, 8), mask)


def test_mask_shape_must_match():
    with pytest.raises(DomainError):
        Domain((-1, -1, -1), (1, 1, 1), (8, 8, 8), np.ones((4, 4, 4), dtype=bool))


def test_unknowns_sit_strictly_inside_the_box():
    domain = Domain.cube(1.0, 8)
    x1, _, _ = domain.axes()
    assert domain.spacing[0] == pytest.approx(2.0 / 9.0)
    assert x1[0] == pytest.approx(-1.0 + 2.0 / 9.0)
    assert x1[-1] == pytest.approx(1.0 - 2.0 / 9.0)
    lo, hi = domain.grid_bounds
    assert lo[0] == pytest.approx(-1.0 + 1.0 / 9.0)
    assert hi[2] == pytest.approx(1.0 - 1.0 / 9.0)
    assert domain.zeros().dims == (8, 8, 8)


def test_grid_function_round_trips_through_domain_of():
    domain = Domain.cube(1.0, 8)
    again = Domain.of(domain.zeros())
    assert np.allclose(again.lo, domain.lo)
    assert np.allclose(again.hi, domain.hi)
    assert again.dims == domain.dims


def test_masked_domain_from_shape():
    domain = Domain.from_shape(ball(0.8), (-1, -1, -1), (1, 1, 1), (12, 12, 12))
    assert domain.mask is not None
    assert 0 < np.count_nonzero(domain.mask) < 12 ** 3
    assert domain.weighted_volume(0.0) < Domain.cube(1.0, 12).weighted_volume(0.0)
    with pytest.raises(DomainError):
        domain.boundary_faces()
    indices, normals = domain.boundary_cells()
    assert len(indices) == len(normals) > 0


def test_dilation_factor_must_be_positive():
    with pytest.raises(DomainError):
        Domain.cube(1.0, 4).dilated(0.0)


# ---------------------------------------------------------------------------
# Operator
# ---------------------------------------------------------------------------

def test_operator_is_symmetric_and_positive():
    domain = Domain.cube(1.0, 10)
    A = assemble_grushin(domain, 1.5)
    rng = np.random.default_rng(3)
    u = rng.standard_normal(domain.dims)
    v = rng.standard_normal(domain.dims)
    assert A.inner(A.apply(u), v) == pytest.approx(A.inner(u, A.apply(v)), rel=1e-10)
    assert dirichlet_energy(domain.grid_function(u), A) > 0


def test_operator_ignores_inactive_cells():
    domain = Domain.from_shape(ball(0.8), (-1, -1, -1), (1, 1, 1), (12, 12, 12))
    A = assemble_grushin(domain, 1.0)
    out = A.apply(np.ones(domain.dims))
    assert np.all(out[~domain.mask] == 0)


def test_threaded_operator_matches_serial():
    domain = Domain.cube(1.0, 16)
    u = np.random.default_rng(5).standard_normal(domain.dims)
    serial = assemble_grushin(domain, 1.0).apply(u)
    threaded = assemble_grushin(domain, 1.0, threads=4).apply(u)
    assert np.array_equal(serial, threaded)


def test_linear_solve_inverts_the_operator():
    domain = Domain.cube(1.0, 10)
    A = assemble_grushin(domain, 1.0)
    u = random_bumps(domain, 1, seed=2)[0]
    solution = linear_solve(A, A(u))
    assert np.allclose(solution.values, u.values, rtol=0, atol=1e-8 * np.max(np.abs(u.values)))
    assert not np.any(linear_solve(A, domain.zeros()).values)


def test_linear_solve_reports_non_convergence():
    domain = Domain.cube(1.0, 10)
    A = assemble_grushin(domain, 1.0)
    u = random_bumps(domain, 1, seed=2)[0]
    with pytest.raises(ConvergenceError) as info:
        linear_solve(A, A(u), SolverConfig(cg_max_iterations=1))
    assert info.value.iterations <= 1
    assert info.value.residual > 0


# ---------------------------------------------------------------------------
# Energy functional
# ---------------------------------------------------------------------------

def test_directional_derivative_matches_finite_differences():
    domain = Domain.cube(1.0, 8)
    nl = power_nonlinearity(4.0, 1.0)
    u = initial_guess(domain)
    v = random_bumps(domain, 1, seed=7)[0]
    eps = 1e-6
    plus = energy(u.with_values(u.values + eps * v.values), nl, 1.0)
    minus = energy(u.with_values(u.values - eps * v.values), nl, 1.0)
    assert directional_derivative(u, v, nl, 1.0) == pytest.approx((plus - minus) / (2 * eps), rel=1e-6)


def test_nehari_scaling_and_mountain_pass():
    domain = Domain.cube(1.0, 8)
    nl = power_nonlinearity(4.0, 1.0)
    A = assemble_grushin(domain, 1.0)
    u = initial_guess(domain)
    t = nehari_scale(u, nl, 1.0, A)
    scaled = u.with_values(t * u.values)
    assert abs(nehari_residual(scaled, nl, 1.0, A)) <= 1e-9 * dirichlet_energy(scaled, A)
    level, t_max = mountain_pass_level(scaled, nl, 1.0, operator=A)
    assert t_max == pytest.approx(1.0, rel=1e-4)
    assert level == pytest.approx(energy(scaled, nl, 1.0, A), rel=1e-8)


def test_nehari_scale_needs_the_power_kind():
    domain = Domain.cube(1.0, 4)
    with pytest.raises(DomainError):
        nehari_scale(initial_guess(domain), zero_nonlinearity(), 1.0)


def test_initial_guess_center_must_be_inside():
    with pytest.raises(DomainError):
        initial_guess(Domain.cube(1.0, 4), InitialGuess(center=(2.0, 0.0, 0.0)))


# ---------------------------------------------------------------------------
# Ground states
# ---------------------------------------------------------------------------

def test_ground_state_is_a_critical_point(ground_state):
    domain, nl, report = ground_state
    assert report.energy > 0
    assert report.gradient_norm <= 1e-5
    assert report.gradient_norm == pytest.approx(weak_residual(report.u, nl, 1.0))
    assert abs(report.nehari_residual) <= 1e-8 * report.energy
    assert report.dims == (16, 16, 16)
    assert np.sum(report.u.values) > 0


def test_ground_state_sits_at_the_mountain_pass_level(ground_state):
    _, _, report = ground_state
    assert report.mountain_pass_level == pytest.approx(report.energy, rel=1e-8)


def test_ground_state_needs_a_subcritical_power():
    with pytest.raises(DomainError):
        solve_ground_state(Domain.cube(1.0, 8), power_nonlinearity(6.0, 1.0), 1.0)


def test_ground_state_iteration_limit():
    with pytest.raises(ConvergenceError):
        solve_ground_state(Domain.cube(1.0, 8), power_nonlinearity(4.0, 1.0), 1.0, SolverConfig(outer_max_iterations=1))


# ---------------------------------------------------------------------------
# Growth conditions
# ---------------------------------------------------------------------------

def test_power_nonlinearity_meets_every_condition():
    report = validate_growth_conditions(power_nonlinearity(4.0, 1.0))
    assert report.all_passed
    assert all(v.heuristic for v in report.verdicts.values())


def test_quadratic_power_fails_superlinearity():
    report = validate_growth_conditions(power_nonlinearity(2.0, 1.0))
    assert report.verdicts["A4"].status == Verdict.failed
    assert report.verdicts["A1"].status == Verdict.failed
    assert not report.all_passed


def test_conditions_without_witnesses_are_not_applicable():
    report = validate_growth_conditions(zero_nonlinearity(), alpha=1.0)
    for name in ("A1", "A2", "A3", "A5"):
        assert report.verdicts[name].status == Verdict.not_applicable
    assert report.verdicts["A4"].status == Verdict.failed


def test_custom_nonlinearity_needs_alpha():
    nl = custom_nonlinearity(lambda x1, x2, y, xi: xi ** 3, lambda x1, x2, y, xi: xi ** 4 / 4)
    with pytest.raises(DomainError):
        validate_growth_conditions(nl)


def test_nonzero_reaction_at_zero_fails():
    nl = custom_nonlinearity(lambda x1, x2, y, xi: xi + 1.0, lambda x1, x2, y, xi: xi * xi / 2 + xi)
    assert validate_growth_conditions(nl, alpha=1.0).verdicts["A4"].status == Verdict.failed


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------

def test_poincare_constant_between_the_bounds():
    lam = poincare_constant(Domain.cube(1.0, 16), 1.0)
    assert 0.98 * math.pi ** 2 / 2 <= lam <= (2 + 2 ** 1.0) * math.pi ** 2 / 4


@pytest.mark.parametrize("q", [4.0, 6.0])
def test_embedding_holds_on_random_bumps(q):
    domain = Domain.cube(1.0, 16)
    report = embedding_check(domain, q, 1.0, random_bumps(domain, 5, seed=11))
    assert report.violations == 0
    assert len(report.entries) == 5
    assert report.max_ratio < 1.0


def test_embedding_on_the_truncated_extremal():
    domain = Domain.cube(1.0, 16)
    report = embedding_check(domain, 6.0, 1.0, [truncated_extremal(domain, 1.0)])
    assert report.entries[0].lq_norm > 0
    assert report.entries[0].ratio > 0


def test_embedding_exponent_range():
    with pytest.raises(DomainError):
        embedding_check(Domain.cube(1.0, 4), 7.0, 1.0, [])


def test_manufactured_solution_converges_at_second_order():
    report = manufactured_convergence(1.0)
    assert report.errors[0] > report.errors[1] > report.errors[2]
    assert report.orders[-1] >= 1.8
