# app/core/runs.py
"""
Drivers shared by the CLI and the HTTP routers: each runs one computation
and packs the numbers into a RunReport.
"""
import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import SOBOLEV_SLACK, VERSION
from app.core.geometry import (
    as_alpha,
    boundary_integrals,
    isoperimetric_check,
    power_sum_check,
    weighted_volume,
)
from app.core.grid import GridFunction3D
from app.core.grushin import (
    Domain,
    power_nonlinearity,
    solve_ground_state,
    validate_growth_conditions,
)
from app.core.pohozaev import (
    nonexistence_classify,
    pohozaev_coefficient,
    pohozaev_residual,
    regime_note,
)
from app.core.rearrangement import (
    RadialProfile,
    equimeasurability_gap,
    polya_szego_report,
    rearrange,
    weighted_lq_norm,
)
from app.core.shapes import build_shape, default_corpus
from app.core.sobolev import constants_row
from app.core.transform import (
    angle_dilation_check,
    pushforward_perimeter_check,
    pushforward_volume_check,
    rotate_to_first_sector,
)
from app.schemas.common import QuadratureConfig
from app.schemas.geometry import ShapeSpec
from app.schemas.report import Check, RunReport
from app.schemas.sobolev import FamilyConfig, SobolevRow
from app.schemas.solver import SampleConfig, SolutionReport, SolverConfig

logger = logging.getLogger(__name__)


@contextmanager
def _clock(report: RunReport, timing: bool) -> Iterator[None]:
    start = time.perf_counter()
    yield
    if timing:
        report.wall_time = time.perf_counter() - start


def _check(name: str, lhs: float, rhs: float, tolerance: float) -> Check:
    margin = lhs - rhs
    return Check(name=name, lhs=lhs, rhs=rhs, margin=margin, tolerance=tolerance, passed=margin >= -tolerance)


def _new(command: str, parameters: Dict) -> RunReport:
    return RunReport(command=command, parameters=parameters, version=VERSION)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _shape_quantities(report: RunReport, spec: ShapeSpec, alpha, cfg: QuadratureConfig, prefix: str = "") -> None:
    shape = build_shape(spec, alpha)
    volume = weighted_volume(shape, alpha, cfg)
    perimeter, sectors = boundary_integrals(shape, alpha, cfg)
    iso = isoperimetric_check(shape, alpha, cfg)
    power = power_sum_check(shape, alpha, cfg)
    report.quantities.update({
        f"{prefix}volume": volume,
        f"{prefix}perimeter": perimeter,
        f"{prefix}quotient": iso.quotient,
        f"{prefix}reference_quotient": iso.reference,
        f"{prefix}deficit": iso.deficit,
        f"{prefix}error_estimate": iso.error_estimate,
    })
    for j, p in enumerate(sectors, start=1):
        report.quantities[f"{prefix}sector_perimeter_{j}"] = p
    report.checks.append(_check(f"{prefix}isoperimetric", iso.quotient, iso.reference, iso.tolerance))
    report.checks.append(_check(f"{prefix}power_sum", power.total, power.sector_sum, 1e-9 * max(power.total, 1.0)))


def run_geometry(
    spec: Optional[ShapeSpec],
    alpha: float,
    cfg: QuadratureConfig,
    sweep: bool = False,
    timing: bool = True,
) -> RunReport:
    alpha = as_alpha(alpha)
    parameters = {"alpha": alpha.alpha, "sweep": sweep, "quadrature": cfg.model_dump()}
    if spec is not None:
        parameters["shape"] = spec.model_dump()
    report = _new("geometry", parameters)
    report.resolutions = {"volume": cfg.volume_resolution, "surface": cfg.surface_resolution}
    with _clock(report, timing):
        logger.info("=== geometry (alpha=%g, sweep=%s) ===", alpha.alpha, sweep)
        specs: List[ShapeSpec] = default_corpus() if sweep else [spec]
        for k, item in enumerate(specs):
            prefix = f"{k:02d}_{item.name}." if sweep else ""
            if sweep:
                report.labels[f"{k:02d}"] = item.model_dump_json()
            _shape_quantities(report, item, alpha, cfg, prefix)
    return report


# ---------------------------------------------------------------------------
# rearrange
# ---------------------------------------------------------------------------

def run_rearrange(
    u: GridFunction3D,
    alpha: float,
    levels: int = 256,
    resolution: int = 64,
    threads: int = 1,
    timing: bool = True,
) -> Tuple[RunReport, RadialProfile]:
    alpha = as_alpha(alpha)
    report = _new("rearrange", {"alpha": alpha.alpha, "levels": levels, "resolution": resolution, "dims": list(u.dims)})
    report.resolutions = {"n1": u.dims[0], "n2": u.dims[1], "n3": u.dims[2], "profile_grid": resolution}
    with _clock(report, timing):
        profile = rearrange(u, alpha, levels, threads)
        if profile.max_value == 0:
            report.quantities.update({
                "energy": 0.0, "rearranged_energy": 0.0, "polya_szego_gap": 0.0, "energy_ratio": 0.0,
                "sup_gap": 0.0, "support_measure": 0.0, "relative_gap": 0.0,
            })
            report.labels["note"] = "zero field"
            return report, profile
        equi = equimeasurability_gap(u, profile, alpha, resolution=resolution)
        ps = polya_szego_report(u, alpha, levels)
        report.quantities.update({
            "energy": ps.energy,
            "rearranged_energy": ps.rearranged_energy,
            "polya_szego_gap": ps.gap,
            "energy_ratio": ps.ratio,
            "jumps": float(ps.jumps),
            "sup_gap": equi.sup_gap,
            "support_measure": equi.support_measure,
            "relative_gap": equi.relative_gap,
            "max_value": profile.max_value,
            "support_radius": profile.support_radius,
        })
        for q in (2, 4, 6):
            source = weighted_lq_norm(u, q, alpha, threads)
            target = weighted_lq_norm(profile, q, alpha)
            report.quantities[f"lq_norm_{q}"] = source
            report.quantities[f"rearranged_lq_norm_{q}"] = target
            report.checks.append(_check(f"lq_norm_{q}", 0.01 * source, abs(source - target), 0.0))
        report.checks.append(_check("polya_szego", ps.energy, ps.rearranged_energy, 0.02 * ps.energy))
        report.checks.append(_check("equimeasurability", 0.01 * equi.support_measure, equi.sup_gap, 0.0))
    return report, profile


# ---------------------------------------------------------------------------
# sobolev
# ---------------------------------------------------------------------------

def run_sobolev(
    alphas: Sequence[float],
    family: Optional[FamilyConfig] = None,
    timing: bool = True,
) -> Tuple[RunReport, List[SobolevRow]]:
    parameters = {"alphas": list(alphas), "family": family.model_dump() if family else None}
    report = _new("sobolev", parameters)
    if family is not None:
        report.resolutions = {"family_grid": family.resolution}
    rows: List[SobolevRow] = []
    with _clock(report, timing):
        for a in alphas:
            row = constants_row(a, family)
            rows.append(row)
            key = f"alpha={row.alpha:g}."
            report.quantities.update({
                key + "n_alpha": float(row.n_alpha),
                key + "D": row.D,
                key + "L_derived": row.L_derived,
                key + "L_paper_printed": row.L_paper_printed,
                key + "D_printed": row.D_printed,
                key + "rayleigh_min": row.rayleigh_min,
            })
            if row.rayleigh_min is not None:
                # the grid minimum may undercut L only by discretization error
                report.checks.append(_check(key + "rayleigh_vs_bound", row.rayleigh_min, row.L_derived, SOBOLEV_SLACK * row.L_derived))
    return report, rows


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def run_solve(
    alpha: float,
    q: float,
    grid: int,
    half_width: float = 1.0,
    cfg: Optional[SolverConfig] = None,
    timing: bool = True,
) -> Tuple[RunReport, SolutionReport]:
    alpha = as_alpha(alpha)
    cfg = cfg or SolverConfig()
    report = _new("solve", {"alpha": alpha.alpha, "q": q, "grid": grid, "half_width": half_width, "solver": cfg.model_dump()})
    report.resolutions = {"grid": grid}
    with _clock(report, timing):
        domain = Domain.cube(half_width, grid)
        nl = power_nonlinearity(q, alpha.alpha)
        growth = validate_growth_conditions(nl, SampleConfig(lo=domain.lo, hi=domain.hi))
        for name, verdict in growth.verdicts.items():
            report.labels[f"growth.{name}"] = verdict.status.value
        solution = solve_ground_state(domain, nl, alpha, cfg)
        report.quantities.update({
            "energy": solution.energy,
            "gradient_norm": solution.gradient_norm,
            "nehari_residual": solution.nehari_residual,
            "l2_norm": solution.l2_norm,
            "iterations": float(solution.iterations),
            "mountain_pass_level": solution.mountain_pass_level,
        })
        report.checks.append(_check("nontrivial_energy", solution.energy, 0.0, 0.0))
        report.checks.append(_check("weak_residual", cfg.outer_tolerance, solution.gradient_norm, 0.0))
    return report, solution


# ---------------------------------------------------------------------------
# pohozaev
# ---------------------------------------------------------------------------

def run_pohozaev(
    p: float,
    alpha: float,
    grid: Optional[int] = None,
    half_width: float = 1.0,
    cfg: Optional[SolverConfig] = None,
    timing: bool = True,
) -> RunReport:
    """Coefficient and regime; with a grid and 1 < p < 5 also the identity on a computed solution."""
    alpha = as_alpha(alpha)
    report = _new("pohozaev", {"p": p, "alpha": alpha.alpha, "grid": grid, "half_width": half_width})
    with _clock(report, timing):
        regime = nonexistence_classify(p)
        report.quantities["coefficient"] = pohozaev_coefficient(p, alpha)
        report.labels["regime"] = regime.value
        report.labels["note"] = regime_note(regime)
        if grid is not None and 1 < p < 5:
            report.resolutions = {"grid": grid}
            domain = Domain.cube(half_width, grid)
            solution = solve_ground_state(domain, power_nonlinearity(p + 1.0, alpha.alpha), alpha, cfg)
            identity = pohozaev_residual(solution.u, p, domain, alpha)
            report.quantities.update({
                "lhs": identity.lhs,
                "rhs": identity.rhs,
                "rhs_printed": identity.rhs_printed,
                "residual": identity.residual,
                "star_min": identity.star_shaped.min_value,
            })
            report.checks.append(_check("identity_residual", 0.10, identity.residual, 0.0))
            report.checks.append(_check("star_shaped", identity.star_shaped.min_value, 0.0, 1e-10))
    return report


# ---------------------------------------------------------------------------
# transform-check
# ---------------------------------------------------------------------------

def run_transform_check(spec: ShapeSpec, alpha: float, cfg: QuadratureConfig, timing: bool = True) -> RunReport:
    alpha = as_alpha(alpha)
    report = _new("transform-check", {"alpha": alpha.alpha, "shape": spec.model_dump(), "quadrature": cfg.model_dump()})
    report.resolutions = {"volume": cfg.volume_resolution, "surface": cfg.surface_resolution}
    with _clock(report, timing):
        shape = build_shape(spec, alpha)
        if spec.name == "ball-sector" and spec.sector != 1:
            shape = rotate_to_first_sector(shape, spec.sector, alpha)
        volume = pushforward_volume_check(shape, alpha, cfg)
        perimeter = pushforward_perimeter_check(shape, alpha, cfg)
        rng = np.random.default_rng(0)
        theta = rng.uniform(0.05, 0.95, 64) * alpha.sector_width
        r = rng.uniform(0.1, 2.0, 64)
        points = np.stack([r * np.cos(theta), r * np.sin(theta), rng.uniform(-1, 1, 64)], axis=1)
        report.quantities.update({
            "weighted_volume": volume.weighted,
            "euclidean_volume": volume.euclidean,
            "volume_rel_gap": volume.rel_gap,
            "weighted_perimeter": perimeter.weighted,
            "euclidean_perimeter": perimeter.euclidean,
            "perimeter_rel_gap": perimeter.rel_gap,
            "angle_dilation_error": angle_dilation_check(points, alpha),
        })
        report.checks.append(_check("volume_pushforward", 1e-3, volume.rel_gap, 0.0))
        report.checks.append(_check("perimeter_pushforward", 1e-2, perimeter.rel_gap, 0.0))
    return report

