# app/core/grushin/nonlinearity.py
"""
Reaction terms f(x1, x2, y, xi) with their primitives F, and the sampled
checks of the growth conditions the existence theory asks for:

    A1  |f| <= |x|^{2a} (f1 + f2 |xi|^{q-1}) with the exponent constraints on p1, p2, q
    A2  |f| <= |x|^{2a} psi for |xi| <= C
    A3  phi <= f / xi for xi > 0, with phi <= 0
    A4  f(., 0) = 0, f / (|x|^{2a} xi) -> 0 as xi -> 0 and -> +inf as |xi| -> inf
    A5  f / xi increasing for xi >= C and decreasing for xi <= -C
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np

from app.core.errors import DomainError
from app.schemas.solver import ConditionVerdict, GrowthReport, SampleConfig, Verdict

logger = logging.getLogger(__name__)

PointFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
ReactionFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class NonlinearityKind(str, Enum):
    power = "power"
    custom = "custom"


@dataclass(frozen=True)
class GrowthWitnesses:
    q: float
    p1: float
    p2: float
    f1: PointFn
    f2: PointFn
    C: float = 0.0
    psi: Optional[PointFn] = None
    phi: Optional[PointFn] = None


@dataclass(frozen=True)
class Nonlinearity:
    f: ReactionFn
    F: ReactionFn
    kind: NonlinearityKind = NonlinearityKind.custom
    exponent: Optional[float] = None  # q for the power kind
    weight_alpha: Optional[float] = None  # the alpha in |x|^{2a} for the power kind
    witnesses: Optional[GrowthWitnesses] = None


def _weight(x1, x2, alpha: float):
    return np.hypot(x1, x2) ** (2.0 * alpha)


def power_witness_exponents(q: float) -> Dict[str, float]:
    """
    (p1, p2) declared for the power nonlinearity of exponent q: f1 = 0 lies in
    every L^p1, and p2 is the smallest value with q p2 / (p2 - 1) <= 6.
    """
    if not 2 <= q < 6:
        raise DomainError(f"no growth witnesses for q={q}")
    p2 = 6.0 / (6.0 - q)
    return {"p1": max(2.0, 6 * p2 / (p2 * (q - 1) + 6) + 1.0), "p2": p2}


def power_nonlinearity(q: float, alpha: float) -> Nonlinearity:
    """f = |x|^{2a} |xi|^{q-2} xi, F = |x|^{2a} |xi|^q / q."""
    if not q > 1:
        raise DomainError(f"power exponent must exceed 1, got {q}")

    def f(x1, x2, y, xi):
        return _weight(x1, x2, alpha) * np.abs(xi) ** (q - 2) * xi

    def F(x1, x2, y, xi):
        return _weight(x1, x2, alpha) * np.abs(xi) ** q / q

    witnesses = None
    if 2 <= q < 6:
        exponents = power_witness_exponents(q)
        witnesses = GrowthWitnesses(
            q=q,
            p1=exponents["p1"],
            p2=exponents["p2"],
            f1=lambda x1, x2, y: np.zeros(np.broadcast(x1, x2, y).shape),
            f2=lambda x1, x2, y: np.ones(np.broadcast(x1, x2, y).shape),
            C=1.0,
            psi=lambda x1, x2, y: np.ones(np.broadcast(x1, x2, y).shape),
            phi=lambda x1, x2, y: np.zeros(np.broadcast(x1, x2, y).shape),
        )
    return Nonlinearity(f, F, NonlinearityKind.power, float(q), float(alpha), witnesses)


def custom_nonlinearity(f: ReactionFn, F: ReactionFn, witnesses: Optional[GrowthWitnesses] = None) -> Nonlinearity:
    return Nonlinearity(f, F, NonlinearityKind.custom, witnesses=witnesses)


def zero_nonlinearity() -> Nonlinearity:
    """f = 0: the linear problem."""
    def zero(x1, x2, y, xi):
        return np.zeros(np.shape(xi))

    return Nonlinearity(zero, zero, NonlinearityKind.custom)


# ---------------------------------------------------------------------------
# Growth conditions
# ---------------------------------------------------------------------------

def _verdict(ok: bool, detail: str) -> ConditionVerdict:
    return ConditionVerdict(status=Verdict.passed if ok else Verdict.failed, detail=detail)


def _not_applicable(detail: str) -> ConditionVerdict:
    return ConditionVerdict(status=Verdict.not_applicable, detail=detail)


def _points(cfg: SampleConfig):
    rng = np.random.default_rng(cfg.seed)
    lo, hi = np.array(cfg.lo), np.array(cfg.hi)
    p = lo + (hi - lo) * rng.random((cfg.points, 3))
    return p[:, 0:1], p[:, 1:2], p[:, 2:3]


def _check_a1(nl: Nonlinearity, w: Optional[GrowthWitnesses], alpha: float, x1, x2, y, xi) -> ConditionVerdict:
    if w is None:
        return _not_applicable("no growth witnesses declared")
    q, p1, p2 = w.q, w.p1, w.p2
    exponents = {
        "2 < q < 6": 2 < q < 6,
        "p2 > 1": p2 > 1,
        "q p2 / (p2 - 1) <= 6": p2 > 1 and q * p2 / (p2 - 1) <= 6 + 1e-12,
        "p1 > 6 p2 / (p2 (q - 1) + 6)": p1 > 6 * p2 / (p2 * (q - 1) + 6),
        "p1 > 3/2": p1 > 1.5,
    }
    failed = [name for name, ok in exponents.items() if not ok]
    if failed:
        return _verdict(False, "exponent constraints violated: " + ", ".join(failed))
    bound = _weight(x1, x2, alpha) * (w.f1(x1, x2, y) + w.f2(x1, x2, y) * np.abs(xi) ** (q - 1))
    excess = np.abs(nl.f(x1, x2, y, xi)) - bound * (1 + 1e-12)
    worst = float(np.max(excess))
    return _verdict(worst <= 0.0, f"largest excess over the growth bound {worst:.3e}")


def _check_a2(nl: Nonlinearity, w: Optional[GrowthWitnesses], alpha: float, x1, x2, y, cfg: SampleConfig) -> ConditionVerdict:
    if w is None or w.psi is None:
        return _not_applicable("no bound function psi declared")
    xi = np.linspace(-w.C, w.C, cfg.xi_count)[None, :]
    psi = w.psi(x1, x2, y)
    if not np.all(np.isfinite(psi)):
        return _verdict(False, "psi is not finite on the samples")
    excess = np.abs(nl.f(x1, x2, y, xi)) - _weight(x1, x2, alpha) * psi * (1 + 1e-12)
    worst = float(np.max(excess))
    return _verdict(worst <= 0.0, f"largest excess over |x|^(2a) psi for |xi| <= {w.C}: {worst:.3e}")


def _check_a3(nl: Nonlinearity, w: Optional[GrowthWitnesses], x1, x2, y, cfg: SampleConfig) -> ConditionVerdict:
    if w is None or w.phi is None:
        return _not_applicable("no lower function phi declared")
    phi = w.phi(x1, x2, y)
    if np.any(phi > 0):
        return _verdict(False, "phi takes positive values")
    xi = np.linspace(cfg.xi_max / cfg.xi_count, cfg.xi_max, cfg.xi_count)[None, :]
    gap = phi - nl.f(x1, x2, y, xi) / xi
    worst = float(np.max(gap))
    return _verdict(worst <= 1e-12, f"largest phi - f/xi over xi > 0: {worst:.3e}")


def _check_a4(nl: Nonlinearity, alpha: float, x1, x2, y, cfg: SampleConfig) -> ConditionVerdict:
    at_zero = np.abs(nl.f(x1, x2, y, np.zeros_like(x1)))
    if np.any(at_zero > 0):
        return _verdict(False, f"f(., 0) != 0, max |f(., 0)| = {float(np.max(at_zero)):.3e}")
    w = _weight(x1, x2, alpha)
    keep = np.ravel(w > 0)
    x1, x2, y, w = x1[keep], x2[keep], y[keep], w[keep]

    def ratio(xi: float) -> np.ndarray:
        value = np.full_like(x1, xi)
        return nl.f(x1, x2, y, value) / (w * value)

    small = max(float(np.max(np.abs(ratio(cfg.small_probe)))), float(np.max(np.abs(ratio(-cfg.small_probe)))))
    large = min(float(np.min(ratio(cfg.large_probe))), float(np.min(ratio(-cfg.large_probe))))
    ok = small <= cfg.small_threshold and large >= cfg.large_threshold
    return _verdict(
        ok,
        f"|ratio| at xi={cfg.small_probe:g} is {small:.3e} (needs <= {cfg.small_threshold:g}); "
        f"ratio at |xi|={cfg.large_probe:g} is {large:.3e} (needs >= {cfg.large_threshold:g})",
    )


def _check_a5(nl: Nonlinearity, w: Optional[GrowthWitnesses], x1, x2, y, cfg: SampleConfig) -> ConditionVerdict:
    if w is None:
        return _not_applicable("no threshold C declared")
    C = max(w.C, cfg.xi_max / cfg.xi_count)
    xi = np.linspace(C, C + cfg.xi_max, cfg.xi_count)[None, :]
    up = nl.f(x1, x2, y, xi) / xi
    down = nl.f(x1, x2, y, -xi) / (-xi)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(up))), float(np.max(np.abs(down))))
    # along increasing |xi|: f/xi must not decrease for xi >= C nor for xi <= -C
    worst = min(float(np.min(np.diff(up, axis=1))), float(np.min(np.diff(down, axis=1))))
    return _verdict(worst >= -tol, f"smallest step of f/xi away from zero: {worst:.3e}")


def validate_growth_conditions(nl: Nonlinearity, cfg: Optional[SampleConfig] = None, alpha: Optional[float] = None) -> GrowthReport:
    """Sampling-based verdicts for A1..A5; every verdict is heuristic."""
    cfg = cfg or SampleConfig()
    if alpha is None:
        alpha = nl.weight_alpha
    if alpha is None:
        raise DomainError("the weight exponent alpha is needed for custom nonlinearities")
    x1, x2, y = _points(cfg)
    xi = np.linspace(-cfg.xi_max, cfg.xi_max, cfg.xi_count)[None, :]
    w = nl.witnesses
    verdicts: Dict[str, ConditionVerdict] = {
        "A1": _check_a1(nl, w, alpha, x1, x2, y, xi),
        "A2": _check_a2(nl, w, alpha, x1, x2, y, cfg),
        "A3": _check_a3(nl, w, x1, x2, y, cfg),
        "A4": _check_a4(nl, alpha, x1, x2, y, cfg),
        "A5": _check_a5(nl, w, x1, x2, y, cfg),
    }
    for name, verdict in verdicts.items():
        logger.debug("growth condition %s: %s (%s)", name, verdict.status.value, verdict.detail)
    return GrowthReport(verdicts=verdicts)
