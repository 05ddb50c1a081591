# tests/test_rearrangement.py
import io
import math

import numpy as np
import pytest

from app.core.errors import DomainError
from app.core.grid import GridFunction3D
from app.core.grushin import Domain, assemble_grushin, dirichlet_energy, random_bumps
from app.core.rearrangement import (
    RadialProfile,
    coarea_derivative_compare,
    distribution_function,
    equimeasurability_gap,
    grushin_energy,
    polya_szego_report,
    radius_from_measure,
    rearrange,
    sector_ball_measure,
    weighted_lq_norm,
)
from app.core.runs import run_rearrange
from app.schemas.common import AlphaParam
from conftest import gauge_bump


def test_sector_ball_measure_inverts(alpha_one):
    # unit gauge ball in one sector has measure 2 pi / (3 n (a+1)^2)
    assert sector_ball_measure(1.0, alpha_one) == pytest.approx(2 * math.pi / 24)
    for m in (0.0, 0.01, 3.0):
        assert sector_ball_measure(radius_from_measure(m, alpha_one), alpha_one) == pytest.approx(m)


def test_radius_from_negative_measure(alpha_one):
    with pytest.raises(DomainError):
        radius_from_measure(-1.0, alpha_one)


def test_distribution_function_is_nonincreasing_and_ends_at_zero(radial_bump, alpha_one):
    dist = distribution_function(radial_bump, alpha_one, 64)
    assert np.all(np.diff(dist.measures) <= 0)
    assert dist.measures[-1] == 0.0
    assert dist.levels[-1] == radial_bump.values.max()


def test_profile_reproduces_the_distribution(radial_bump, alpha_one):
    levels = 128
    profile = rearrange(radial_bump, alpha_one, levels)
    dist = distribution_function(radial_bump, alpha_one, levels)
    for t, m in zip(dist.levels[1:-1:9], dist.measures[1:-1:9]):
        assert profile.superlevel_measure(t) == pytest.approx(m, rel=1e-9)
    assert profile.max_value == radial_bump.values.max()


def test_rearrangement_of_a_full_space_radial_bump(radial_bump, alpha_one):
    # the bump fills all 2n sectors, so u* is the profile dilated by (2n)^{1/3}
    profile = rearrange(radial_bump, alpha_one, 256)
    assert profile.support_radius == pytest.approx(4 ** (1.0 / 3.0), rel=3e-2)
    report = polya_szego_report(radial_bump, alpha_one, 256)
    assert report.ratio == pytest.approx(4 ** (-2.0 / 3.0), abs=2e-2)
    assert report.gap > 0


def test_lq_norms_are_preserved(alpha_one):
    u = gauge_bump(alpha_one, dims=64)
    profile = rearrange(u, alpha_one, 256)
    for q in (2.0, 4.0, 6.0):
        assert weighted_lq_norm(profile, q, alpha_one) == pytest.approx(weighted_lq_norm(u, q, alpha_one), rel=1e-2)


def test_equimeasurability_against_a_sampled_profile(radial_bump, alpha_one):
    profile = rearrange(radial_bump, alpha_one, 256)
    report = equimeasurability_gap(radial_bump, profile, alpha_one, levels=16, resolution=96)
    assert report.relative_gap <= 0.01
    assert report.rearranged_measures[-1] == 0.0


def test_zero_function_rearranges_to_zero(alpha_one):
    u = GridFunction3D((-1, -1, -1), (1, 1, 1), np.zeros((4, 4, 4)))
    profile = rearrange(u, alpha_one)
    assert profile.max_value == 0.0
    assert grushin_energy(profile, alpha_one) == 0.0


def test_negative_values_are_rejected(alpha_one):
    u = GridFunction3D((-1, -1, -1), (1, 1, 1), -np.ones((2, 2, 2)))
    with pytest.raises(DomainError):
        rearrange(u, alpha_one)


def test_plateau_gives_jumps(alpha_one):
    # u = 1 on a box: every level below the top has the same superlevel set
    values = np.zeros((8, 8, 8))
    values[2:6, 2:6, 2:6] = 1.0
    u = GridFunction3D((-1, -1, -1), (1, 1, 1), values)
    # low levels only, where the antialiased share of every box cell is 1
    profile = rearrange(u, alpha_one, [0.0, 0.1, 0.2, 1.0])
    assert profile.jumps == 2
    assert np.all(profile.radii[1:] == profile.support_radius)
    assert profile.superlevel_measure(0.05) == pytest.approx(profile.superlevel_measure(0.15))


def test_profile_energy_of_a_linear_cone(alpha_one):
    # phi = 1 - r on [0, 1]: (2 pi / n) int r^2 dr = pi / 3 for n = 2
    profile = RadialProfile(np.array([0.0, 1.0]), np.array([1.0, 0.0]), alpha_one)
    assert grushin_energy(profile, alpha_one) == pytest.approx(math.pi / 3)
    assert profile(0.25) == pytest.approx(0.75)
    assert profile(2.0) == 0.0


def test_profile_must_be_nonincreasing(alpha_one):
    with pytest.raises(DomainError):
        RadialProfile(np.array([0.0, 1.0]), np.array([0.0, 1.0]), alpha_one)


def test_profile_csv(alpha_one):
    profile = RadialProfile(np.array([0.0, 0.5]), np.array([2.0, 0.0]), alpha_one)
    stream = io.StringIO()
    profile.write_csv(stream)
    assert stream.getvalue().splitlines() == ["r,phi", "0,2", "0.5,0"]


def test_coarea_derivatives_agree(radial_bump, alpha_one):
    comparison = coarea_derivative_compare(radial_bump, alpha_one, 0.5 * radial_bump.values.max())
    assert not comparison.plateau
    assert comparison.relative_gap <= 0.05


def test_coarea_level_must_be_interior(radial_bump, alpha_one):
    with pytest.raises(DomainError):
        coarea_derivative_compare(radial_bump, alpha_one, 0.0)


def test_energy_ratio_law_for_alpha_two():
    alpha = AlphaParam(alpha=2.0)
    u = gauge_bump(alpha, dims=40)
    report = polya_szego_report(u, alpha, 256)
    # 2n = 6 sectors
    assert report.ratio == pytest.approx(6 ** (-2.0 / 3.0), abs=3e-2)


def test_grid_energy_is_the_operator_form():
    domain = Domain.cube(1.0, 12)
    u = random_bumps(domain, 1, seed=4)[0]
    A = assemble_grushin(domain, 1.5)
    assert grushin_energy(u, 1.5) == pytest.approx(dirichlet_energy(u, A), rel=1e-10)


def test_threaded_grid_energy_matches_serial(radial_bump, alpha_one):
    assert grushin_energy(radial_bump, alpha_one, threads=4) == grushin_energy(radial_bump, alpha_one)
    assert weighted_lq_norm(radial_bump, 6.0, alpha_one, threads=4) == weighted_lq_norm(radial_bump, 6.0, alpha_one)


def test_grid_energy_converges_at_second_order(alpha_one):
    def gaussian(x1, x2, y):
        return np.exp(-(x1 * x1 + x2 * x2 + y * y) / (2 * 0.3 ** 2))

    energies = [
        grushin_energy(GridFunction3D.from_function(gaussian, (-1.5,) * 3, (1.5,) * 3, (n, n, n)), alpha_one)
        for n in (24, 48, 96)
    ]
    order = math.log2(abs(energies[1] - energies[0]) / abs(energies[2] - energies[1]))
    assert order >= 1.8


@pytest.mark.parametrize("seed", range(20))
def test_polya_szego_on_non_radial_bumps(seed, alpha_one):
    u = random_bumps(Domain.cube(1.0, 24), 1, seed=seed)[0]
    u = u.with_values(np.abs(u.values))
    report = polya_szego_report(u, alpha_one, 128)
    assert report.gap >= -0.02 * report.energy


def test_rearrange_run_checks_the_lq_norms(alpha_one):
    report, _ = run_rearrange(gauge_bump(alpha_one, dims=64), alpha_one.alpha, levels=256, timing=False)
    checks = {check.name: check for check in report.checks}
    for q in (2, 4, 6):
        assert checks[f"lq_norm_{q}"].passed
        assert report.quantities[f"rearranged_lq_norm_{q}"] == pytest.approx(report.quantities[f"lq_norm_{q}"], rel=1e-2)
