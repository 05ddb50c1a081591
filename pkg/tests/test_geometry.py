# tests/test_geometry.py
import math

import numpy as np
import pytest

from app.core.errors import ComputationError, DomainError
from app.core.geometry import (
    isoperimetric_check,
    isoperimetric_quotient,
    power_sum_check,
    reference_quotient,
    scaling_exponents,
    sector_count,
    sector_of_point,
    sector_perimeter,
    sector_perimeters,
    volume_convergence,
    weighted_perimeter,
    weighted_volume,
)
from app.core.shapes import (
    ImplicitShape,
    anisotropic_ball,
    box,
    build_shape,
    cylinder,
    default_corpus,
    ellipsoid,
    empty_shape,
    lipschitz_estimate,
    reference_ball,
)
from app.schemas.common import AlphaParam, QuadratureConfig


@pytest.mark.parametrize("alpha, n", [(0.5, 2), (1.0, 2), (1.5, 3), (2.0, 3), (3.0, 4)])
def test_sector_count(alpha, n):
    assert sector_count(alpha) == n


def test_sector_count_rejects_nonpositive_alpha():
    with pytest.raises(DomainError):
        sector_count(0.0)


def test_sector_of_point(alpha_one):
    assert sector_of_point((1.0, 1.0, 0.0), alpha_one) == 1
    assert sector_of_point((-1.0, 0.5, 0.0), alpha_one) == 2
    assert sector_of_point((-1.0, -0.5, 3.0), alpha_one) == 3
    assert sector_of_point((1.0, -0.5, 0.0), alpha_one) == 4
    assert sector_of_point((1.0, 0.0, 0.0), alpha_one) is None
    assert sector_of_point((0.0, 0.0, 2.0), alpha_one) is None


@pytest.mark.parametrize("alpha, j, volume", [
    (1.0, 1, 2 * math.pi / 3),
    (0.5, 1, math.pi / 2),
    (1.0, 3, 2 * math.pi / 3),
])
def test_reference_ball_volume(alpha, j, volume, quadrature):
    shape, _ = reference_ball(AlphaParam(alpha=alpha), j)
    assert weighted_volume(shape, alpha, quadrature) == pytest.approx(volume, rel=2e-3)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_reference_ball_sector_perimeter(alpha, quadrature):
    param = AlphaParam(alpha=alpha)
    shape, values = reference_ball(param, 1)
    assert sector_perimeter(shape, param, 1, quadrature) == pytest.approx(2 * math.pi, rel=1e-2)
    assert values.sector_perimeter == pytest.approx(2 * math.pi)


def test_walls_do_not_count_toward_the_sector_perimeter(alpha_one, quadrature):
    shape, _ = reference_ball(alpha_one, 1)
    total = weighted_perimeter(shape, alpha_one, quadrature)
    assert total > sector_perimeter(shape, alpha_one, 1, quadrature) * 1.05
    others = sector_perimeters(shape, alpha_one, quadrature)[1:]
    assert all(p == 0.0 for p in others)


def test_cylinder_volume_and_perimeter(alpha_one, quadrature):
    shape = cylinder(1.0, 1.0)
    assert weighted_volume(shape, alpha_one, quadrature) == pytest.approx(math.pi, rel=2e-3)
    # lateral 4 pi plus two caps of pi / 2
    assert weighted_perimeter(shape, alpha_one, quadrature) == pytest.approx(5 * math.pi, rel=1e-2)


def test_cylinder_volume_for_alpha_two(quadrature):
    assert weighted_volume(cylinder(1.0, 1.0), 2.0, quadrature) == pytest.approx(2 * math.pi / 3, rel=2e-3)


def test_empty_shape(alpha_one, coarse_quadrature):
    shape = empty_shape()
    assert weighted_volume(shape, alpha_one, coarse_quadrature) == 0.0
    assert weighted_perimeter(shape, alpha_one, coarse_quadrature) == 0.0
    with pytest.raises(DomainError):
        isoperimetric_quotient(shape, alpha_one, coarse_quadrature)


def test_reference_quotient_value(alpha_one):
    assert reference_quotient(alpha_one) == pytest.approx(3 * math.sqrt(2 * math.pi))
    assert reference_quotient(alpha_one) == pytest.approx(7.51988, abs=1e-5)


def test_reference_ball_has_zero_deficit(alpha_one, quadrature):
    shape, _ = reference_ball(alpha_one, 1)
    check = isoperimetric_check(shape, alpha_one, quadrature)
    assert check.passed
    assert abs(check.deficit) <= check.tolerance
    assert check.error_estimate < check.tolerance


@pytest.mark.parametrize("shape", [cylinder(1.0, 1.0), box((0.5, 1.5, 0.75), (1.0, 0.0, 0.0))])
def test_isoperimetric_inequality_holds(shape, alpha_one, quadrature):
    check = isoperimetric_check(shape, alpha_one, quadrature)
    assert check.passed
    assert check.deficit > 0


def test_power_sum_on_the_anisotropic_ball(alpha_one, quadrature):
    check = power_sum_check(anisotropic_ball(alpha_one), alpha_one, quadrature)
    assert check.passed
    # four equal sectors: P^{3/2} = 4^{3/2} P_1^{3/2} = 2 sum_j P_j^{3/2}
    assert check.total == pytest.approx(2 * check.sector_sum, rel=1e-6)


def test_scaling_exponents(alpha_one, quadrature):
    exponents = scaling_exponents(cylinder(1.0, 1.0), alpha_one, quadrature)
    assert exponents["volume_exponent"] == pytest.approx(6.0, abs=1e-3)
    assert exponents["perimeter_exponent"] == pytest.approx(4.0, abs=1e-3)


def test_volume_convergence(alpha_one):
    cfg = QuadratureConfig(volume_resolution=16, refine_depth=2)
    study = volume_convergence(cylinder(1.0, 1.0), alpha_one, cfg)
    assert study.resolutions == [16, 32, 64]
    assert study.values[-1] == pytest.approx(math.pi, rel=2e-3)
    assert study.order is not None and study.order >= 1.0


def test_threads_do_not_change_the_volume(alpha_one):
    shape, _ = reference_ball(alpha_one, 1)
    one = weighted_volume(shape, alpha_one, QuadratureConfig(volume_resolution=32, threads=1))
    four = weighted_volume(shape, alpha_one, QuadratureConfig(volume_resolution=32, threads=4))
    assert one == four


def test_box_level_is_one_lipschitz():
    assert lipschitz_estimate(box()) == pytest.approx(1.0, rel=1e-6)


def test_non_lipschitz_level_is_refused(coarse_quadrature, alpha_one):
    def level(x1, x2, y):
        return np.where(x1 > 0.5, np.inf, 0.0 * (x2 + y) - 1.0)

    shape = ImplicitShape(level=level, lo=(-1, -1, -1), hi=(1, 1, 1), name="wall")
    with pytest.raises(ComputationError):
        weighted_perimeter(shape, alpha_one, coarse_quadrature)


CORPUS = default_corpus()
CORPUS_IDS = [f"{k}-{spec.name}" for k, spec in enumerate(CORPUS)]


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("spec", CORPUS, ids=CORPUS_IDS)
def test_corpus_satisfies_the_isoperimetric_inequality(spec, alpha, quadrature):
    param = AlphaParam(alpha=alpha)
    check = isoperimetric_check(build_shape(spec, param), param, quadrature)
    assert check.passed, f"deficit {check.deficit:.4g} below -{check.tolerance:.4g}"


def random_ellipsoids(count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [
        ellipsoid(tuple(rng.uniform(0.3, 2.0, 3)), tuple(rng.uniform(-1.0, 1.0, 3)), name=f"ellipsoid-{k}")
        for k in range(count)
    ]


@pytest.mark.parametrize("shape", random_ellipsoids(6, seed=17), ids=lambda s: s.name)
def test_random_ellipsoids_have_nonnegative_deficit(shape, alpha_one, quadrature):
    assert isoperimetric_check(shape, alpha_one, quadrature).deficit >= 0


@pytest.mark.parametrize("spec", CORPUS, ids=CORPUS_IDS)
def test_sector_perimeters_add_up_to_at_most_the_total(spec, alpha_one, coarse_quadrature):
    shape = build_shape(spec, alpha_one)
    total = weighted_perimeter(shape, alpha_one, coarse_quadrature)
    parts = sector_perimeters(shape, alpha_one, coarse_quadrature)
    assert len(parts) == alpha_one.sector_total
    assert all(p >= 0 for p in parts)
    assert sum(parts) <= total * (1 + 1e-12)
