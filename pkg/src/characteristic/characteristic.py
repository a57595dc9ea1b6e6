"""The characteristic function h_phi(z) = z - int e^{-zt} phi(dt): evaluation,
zero-freeness on the closed right half-plane, and bounded-order complete
monotonicity of 1/h_phi."""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from logger import logger
from src.config.config import get_config
from src.errors import ContourResolutionError, DerivativeOrderError, DomainError, OutsideRegimeError
from src.measure.delay_measure import DelayMeasure, laplace_deriv

PARTITION_ORDER_LIMIT = 12


def h_eval(phi: DelayMeasure, z):
    """z + lambda0 - L_eta(z) for Re z >= 0 (scalar or array)"""
    z = np.asarray(z, dtype=complex) if np.iscomplexobj(z) else np.asarray(z, dtype=float)
    if np.any(np.real(z) < 0):
        raise DomainError("h_phi is only evaluated on the closed right half-plane")
    return _h(phi, z)


def _h(phi: DelayMeasure, z):
    value = z + phi.lambda0 - laplace_deriv(phi.eta, z, 0)
    if np.ndim(value) == 0:
        return complex(value) if np.iscomplexobj(value) else float(value)
    return value


# ---------------------------------------------------------------------------
# Zero counting by the argument principle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourParams:
    """Half-disk contour settings; radius None means 2 * (1 + total variation)"""
    radius: Optional[float] = None
    initial_points: Optional[int] = None
    max_points: Optional[int] = None
    axis_tolerance: Optional[float] = None


@dataclass(frozen=True)
class ZeroFreeReport:
    winding: Optional[int]
    contour_radius: float
    min_modulus_on_axis: float
    verdict: bool
    n_points: int = 0


def half_disk_winding(
    func: Callable[[np.ndarray], np.ndarray],
    radius: float,
    contour: Optional[ContourParams] = None,
) -> ZeroFreeReport:
    """Count zeros of an analytic func in {Re z >= 0, |z| <= radius}.

    The boundary is walked counterclockwise: the semicircle from -iR to iR,
    then the imaginary axis back down. Steps are bisected until every phase
    increment stays below pi/4.

    Raises:
        ContourResolutionError: if refinement needs more than max_points
    """
    cfg = get_config()
    contour = contour or ContourParams()
    initial = contour.initial_points or cfg.contour_initial_points
    max_points = contour.max_points or cfg.contour_max_points
    axis_tol = cfg.axis_tolerance if contour.axis_tolerance is None else contour.axis_tolerance

    def path(s: np.ndarray) -> np.ndarray:
        # s in [0, 1]: semicircle on [0, 1/2], imaginary axis on [1/2, 1]
        arc = radius * np.exp(1j * np.pi * (2.0 * s - 0.5))
        axis = 1j * radius * (1.0 - 4.0 * (s - 0.5))
        return np.where(s <= 0.5, arc, axis)

    s = np.linspace(0.0, 1.0, initial + 1)
    values = func(path(s))
    for round_ in range(64):
        on_axis = s >= 0.5
        min_axis = float(np.min(np.abs(values[on_axis])))
        if np.min(np.abs(values)) <= axis_tol:
            logger.warning(f"|h| <= {axis_tol:g} on the contour; zero on or next to the boundary")
            return ZeroFreeReport(None, radius, min_axis, False, len(s))
        steps = np.angle(values[1:] / values[:-1])
        bad = np.flatnonzero(np.abs(steps) > np.pi / 4)
        if bad.size == 0:
            break
        if len(s) + bad.size > max_points:
            raise ContourResolutionError("contour resolution exhausted")
        mids = 0.5 * (s[bad] + s[bad + 1])
        logger.debug(f"Contour refinement round {round_}: {bad.size} new points")
        s = np.insert(s, bad + 1, mids)
        values = np.insert(values, bad + 1, func(path(mids)))
    else:
        raise ContourResolutionError("contour resolution exhausted")

    total_phase = float(np.sum(np.angle(values[1:] / values[:-1])))
    winding = int(round(total_phase / (2.0 * np.pi)))
    verdict = winding == 0 and min_axis > axis_tol
    return ZeroFreeReport(winding, radius, min_axis, verdict, len(s))


def zero_free(phi: DelayMeasure, contour: Optional[ContourParams] = None) -> ZeroFreeReport:
    """Certify h_phi(z) != 0 on the closed right half-plane.

    |h(z)| >= |z| - TV(phi) on Re z >= 0, so no zero lies outside radius
    2 * (1 + TV); the half-disk winding number counts the rest.
    """
    contour = contour or ContourParams()
    radius = contour.radius or 2.0 * (1.0 + phi.total_variation())
    report = half_disk_winding(lambda z: _h(phi, z), radius, contour)
    if report.verdict:
        logger.info(f"h_phi zero-free on the right half-plane (R={radius:.4g}, {report.n_points} points)")
    else:
        logger.warning(f"h_phi not zero-free: winding={report.winding}, min|h| on axis={report.min_modulus_on_axis:.3e}")
    return report


def discrete_delay_existence(lambda0: float, xi: float, tau: float) -> bool:
    """Existence for dX = (-lambda X_t + xi X_{t-tau}) dt + dL under |xi| <= 1/tau"""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if abs(xi) * tau > 1.0 + 1e-12:
        raise OutsideRegimeError(f"|xi| * tau = {abs(xi) * tau:.6g} > 1; decide with zero_free instead")
    return xi < lambda0


# ---------------------------------------------------------------------------
# Complete monotonicity of 1/h_phi
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def partitions(n: int) -> Tuple[Tuple[int, ...], ...]:
    """All alpha in N_0^n with sum_j j * alpha_j = n (alpha_j counts parts of size j)"""

    def build(remaining: int, largest: int) -> List[Tuple[int, ...]]:
        if remaining == 0:
            return [(0,) * n]
        out = []
        for part in range(min(remaining, largest), 0, -1):
            for tail in build(remaining - part, part):
                alpha = list(tail)
                alpha[part - 1] += 1
                out.append(tuple(alpha))
        return out

    return tuple(build(n, n))


@lru_cache(maxsize=None)
def _faa_di_bruno_weight(alpha: Tuple[int, ...]) -> float:
    n = sum((j + 1) * a for j, a in enumerate(alpha))
    size = sum(alpha)
    denominator = 1
    for j, a in enumerate(alpha, start=1):
        denominator *= math.factorial(a) * math.factorial(j) ** a
    return math.factorial(n) * math.factorial(size) / denominator


def cm_term(phi: DelayMeasure, x: float, n: int) -> float:
    """(-1)^n d^n/dx^n (1/h_phi)(x) through the Faa di Bruno expansion"""
    h = _h(phi, x)
    if n == 0:
        return 1.0 / h
    eta = phi.eta
    derivs = [laplace_deriv(eta, x, j) for j in range(n + 1)]
    total = 0.0
    for alpha in partitions(n):
        size = sum(alpha)
        term = _faa_di_bruno_weight(alpha) * (1.0 - derivs[1]) ** alpha[0] / h ** (size + 1)
        for j in range(2, n + 1):
            if alpha[j - 1]:
                term *= ((-1) ** j * derivs[j]) ** alpha[j - 1]
        total += term
    return total


@dataclass(frozen=True)
class CMFailure:
    n: int
    x: float
    value: float
    raw_value: float


@dataclass(frozen=True)
class CMReport:
    n_checked: int
    failure: Optional[CMFailure]
    verdict: bool


def default_cm_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-3, 1e2, 64)])


def complete_monotonicity_check(
    phi: DelayMeasure,
    n_max: Optional[int] = None,
    xs: Optional[Sequence[float]] = None,
    tolerance: Optional[float] = None,
) -> CMReport:
    """Search for a sign violation of (-1)^n (1/h)^{(n)}(x), n <= n_max.

    The reported value is normalized by h(x)^{n+1}; the raw derivative is
    kept alongside. Non-negative eta can never fail.
    """
    cfg = get_config()
    n_max = cfg.cm_n_max if n_max is None else n_max
    tolerance = cfg.cm_tolerance if tolerance is None else tolerance
    if n_max > PARTITION_ORDER_LIMIT:
        raise DerivativeOrderError(f"n_max={n_max} exceeds the partition bound {PARTITION_ORDER_LIMIT}")
    xs = default_cm_grid() if xs is None else np.asarray(xs, dtype=float)

    checked = 0
    for x in xs:
        h = _h(phi, float(x))
        if h <= 0:
            failure = CMFailure(0, float(x), h, 1.0 / h if h != 0 else -math.inf)
            return CMReport(checked, failure, False)
        scale = 1.0 / h
        for n in range(1, n_max + 1):
            raw = cm_term(phi, float(x), n)
            checked += 1
            if raw < -tolerance * scale:
                failure = CMFailure(n, float(x), raw * h ** (n + 1), raw)
                logger.info(f"Complete monotonicity fails at n={n}, x={x:.4g}: normalized value {failure.value:.6g}")
                return CMReport(checked, failure, False)
    return CMReport(checked, None, True)
