"""CARMA(p, q) models and their non-negativity classifiers.

A causal CARMA process has kernel b^T e^{At} e_p. When q = p - 1 and Q is
invertible it is also the stationary solution of the SDDE with delay measure
-lambda delta_0 + f(t) dt, which opens the SDDE sufficient conditions to it.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from logger import logger
from src.config.config import get_config
from src.errors import DegreeMismatchError, NonCausalError, NonInvertibleError, NonRealZeroError
from src.kernel.kernel import KernelGrid, f_explicit, kernel_statespace, min_scan, state_space
from src.measure.delay_measure import DelayMeasure, ExpPolyTerm, is_nonneg_on_positive
from src.polynomial.polynomial import Polynomial, cluster_roots, sdde_reduction, sort_roots

COMPOSITION_NOTE = "non-negative by composition"
CARMA_KERNEL_POINTS = 4096


@dataclass(frozen=True)
class CarmaModel:
    """Monic autoregressive P (degree p) and moving-average Q (degree q < p).

    Zeros are cached; pass them when known exactly (see from_zeros) so that
    double zeros do not go through numerical root finding.
    """

    P: Polynomial
    Q: Polynomial
    ar_zeros: Optional[Tuple[complex, ...]] = None
    ma_zeros: Optional[Tuple[complex, ...]] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.P.is_monic and self.Q.is_monic):
            raise ValueError(f"P and Q must be monic, got {self.P} and {self.Q}")
        if self.Q.degree >= self.P.degree:
            raise DegreeMismatchError(f"Need deg Q < deg P, got q={self.Q.degree}, p={self.P.degree}")
        ar = self.P.roots() if self.ar_zeros is None else self.ar_zeros
        ma = (self.Q.roots() if self.Q.degree >= 1 else []) if self.ma_zeros is None else self.ma_zeros
        object.__setattr__(self, "ar_zeros", tuple(sort_roots(ar)))
        object.__setattr__(self, "ma_zeros", tuple(sort_roots(ma)))
        object.__setattr__(self, "notes", tuple(self.notes))
        if any(a.real >= 0 for a in self.ar_zeros):
            raise NonCausalError(f"P must have all zeros in Re < 0, got {self.ar_zeros}")

    @classmethod
    def from_zeros(cls, alpha: Sequence[complex], beta: Sequence[complex] = ()) -> "CarmaModel":
        P = Polynomial.from_roots(alpha)
        Q = Polynomial.from_roots(beta) if len(beta) else Polynomial.one()
        return cls(P, Q, tuple(complex(a) for a in alpha), tuple(complex(b) for b in beta))

    @property
    def p(self) -> int:
        return self.P.degree

    @property
    def q(self) -> int:
        return self.Q.degree

    @property
    def is_invertible(self) -> bool:
        return all(b.real < 0 for b in self.ma_zeros)

    def state_space(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return state_space(self.P, self.Q)

    def with_note(self, note: str) -> "CarmaModel":
        return CarmaModel(self.P, self.Q, self.ar_zeros, self.ma_zeros, self.notes + (note,))


def _is_real(zs: Sequence[complex]) -> bool:
    tol = get_config().realness_tol
    return all(abs(z.imag) < tol for z in zs)


def ball_tsai_check(m: CarmaModel) -> bool:
    """Real negative zeros with sum_{j<=k} alpha_j >= sum_{j<=k} beta_j, k = 1..q (descending order)"""
    if not (_is_real(m.ar_zeros) and _is_real(m.ma_zeros)):
        return False
    alpha = sorted((a.real for a in m.ar_zeros), reverse=True)
    beta = sorted((b.real for b in m.ma_zeros), reverse=True)
    if any(x >= 0 for x in alpha + beta):
        return False
    tol = get_config().realness_tol
    partial_a = np.cumsum(alpha[: len(beta)])
    partial_b = np.cumsum(beta)
    return bool(np.all(partial_a >= partial_b - tol))


def _require_sdde_pair(m: CarmaModel) -> None:
    if m.p != m.q + 1:
        raise DegreeMismatchError(f"SDDE form needs p = q + 1, got p={m.p}, q={m.q}")
    if not m.is_invertible:
        raise NonInvertibleError(f"Q has zeros outside Re < 0: {m.ma_zeros}")


def sdde_form(m: CarmaModel) -> Tuple[float, List[ExpPolyTerm]]:
    """(lambda, f) such that -lambda delta_0 + f(t) dt is the equivalent delay measure"""
    _require_sdde_pair(m)
    lambda0, _ = sdde_reduction(m.P, m.Q)
    f = f_explicit(m.P, m.Q, zeros=m.ma_zeros)
    return lambda0, f


def delay_measure(m: CarmaModel) -> DelayMeasure:
    lambda0, f = sdde_form(m)
    return DelayMeasure(lambda0, (), tuple(f))


def thm31_check(m: CarmaModel) -> bool:
    """True iff the SDDE density f of m is non-negative"""
    try:
        _, f = sdde_form(m)
    except NonRealZeroError:
        logger.debug("Non-real moving-average zero; f >= 0 not established")
        return False
    if not f:
        return True
    return is_nonneg_on_positive(DelayMeasure(0.0, (), tuple(f))).is_yes


@dataclass(frozen=True)
class Cor34Verdict:
    nonneg_f: bool
    reason: str


def corollary34(m: CarmaModel) -> Cor34Verdict:
    """Exact sign of f for CARMA(3, 2).

    Distinct beta_1 > beta_2: f >= 0 iff P(beta_1) <= min(P(beta_2), 0).
    Double beta: f >= 0 iff max(P(beta), P'(beta)) <= 0.
    """
    if m.p != 3 or m.q != 2:
        raise DegreeMismatchError(f"corollary34 needs p=3, q=2, got p={m.p}, q={m.q}")
    if not _is_real(m.ma_zeros):
        return Cor34Verdict(False, "non-real moving-average zeros")
    _require_sdde_pair(m)
    tol = 1e-12
    clusters = cluster_roots(m.ma_zeros, get_config().root_cluster_tol)
    if len(clusters) == 1:
        beta = clusters[0][0].real
        p_val, dp_val = m.P(beta), m.P.derivative()(beta)
        if max(p_val, dp_val) <= tol:
            return Cor34Verdict(True, f"double zero: P={p_val:.6g}, P'={dp_val:.6g} both <= 0")
        return Cor34Verdict(False, f"double zero: max(P, P') = {max(p_val, dp_val):.6g} > 0")
    beta1, beta2 = sorted((b.real for b in m.ma_zeros), reverse=True)
    p1, p2 = m.P(beta1), m.P(beta2)
    if p1 <= min(p2, 0.0) + tol:
        return Cor34Verdict(True, f"P(beta1)={p1:.6g} <= min(P(beta2)={p2:.6g}, 0)")
    return Cor34Verdict(False, f"P(beta1)={p1:.6g} > min(P(beta2)={p2:.6g}, 0)")


def carma_kernel(m: CarmaModel, horizon: Optional[float] = None, n_points: int = CARMA_KERNEL_POINTS) -> KernelGrid:
    """State-space kernel on a horizon set by the slowest autoregressive decay"""
    if horizon is None:
        slowest = min(abs(a.real) for a in m.ar_zeros)
        horizon = get_config().horizon_factor / slowest
    return kernel_statespace(m.P, m.Q, horizon, horizon / n_points)


def compose(m1: CarmaModel, P2: Polynomial) -> CarmaModel:
    """CARMA model (P1 * P2, Q); its kernel is the convolution of both kernels"""
    if P2.degree < 1:
        return m1
    P2 = P2.monic()
    ar2 = P2.roots()
    composed = CarmaModel(m1.P * P2, m1.Q, m1.ar_zeros + tuple(ar2), m1.ma_zeros, m1.notes)
    if not thm31_check(m1):
        return composed
    car_factor = CarmaModel(P2, Polynomial.one(), tuple(ar2))
    _, g_min = min_scan(carma_kernel(car_factor))
    if g_min >= -get_config().kernel_tolerance:
        logger.info(f"Composed CARMA({composed.p},{composed.q}) is {COMPOSITION_NOTE}")
        return composed.with_note(COMPOSITION_NOTE)
    return composed


def carma21_verdict(m: CarmaModel) -> Tuple[bool, bool]:
    """(necessary and sufficient, f >= 0) verdicts for CARMA(2, 1).

    With AR zeros a1, a2 and MA zero c: non-negative iff both are real and
    c <= max(a1, a2); f >= 0 iff additionally c >= min(a1, a2).
    """
    if m.p != 2 or m.q != 1:
        raise DegreeMismatchError(f"carma21_verdict needs p=2, q=1, got p={m.p}, q={m.q}")
    if not (_is_real(m.ar_zeros) and _is_real(m.ma_zeros)):
        return False, False
    a1, a2 = (a.real for a in m.ar_zeros)
    c = m.ma_zeros[0].real
    nec_suff = bool(c <= max(a1, a2))
    return nec_suff, bool(nec_suff and c >= min(a1, a2))


# ---------------------------------------------------------------------------
# Region scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionScanSpec:
    """CARMA(3, 2) with fixed AR zeros, beta_1 = beta swept, beta_2 = beta2 or beta"""

    alpha: Tuple[float, float, float]
    beta_min: float
    beta_max: float
    step: Optional[float] = None
    beta2: Optional[float] = None

    def __post_init__(self):
        if len(self.alpha) != 3:
            raise ValueError(f"Region scans use three AR zeros, got {self.alpha}")
        if self.beta_min > self.beta_max:
            raise ValueError(f"Empty sweep [{self.beta_min}, {self.beta_max}]")
        if self.beta_max >= 0 or (self.beta2 is not None and self.beta2 >= 0):
            raise NonInvertibleError("Swept moving-average zeros must be negative")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    def grid(self) -> np.ndarray:
        step = self.step or get_config().region_step
        count = int(np.floor((self.beta_max - self.beta_min) / step + 1e-9)) + 1
        return np.round(self.beta_min + step * np.arange(count), 12)


@dataclass(frozen=True)
class RegionRow:
    beta: float
    ball_tsai: bool
    cor34: bool
    thm31: bool


def region_scan(spec: RegionScanSpec) -> List[RegionRow]:
    rows = []
    for beta in spec.grid():
        beta2 = beta if spec.beta2 is None else spec.beta2
        m = CarmaModel.from_zeros(spec.alpha, (float(beta), beta2))
        rows.append(RegionRow(float(beta), ball_tsai_check(m), corollary34(m).nonneg_f, thm31_check(m)))
    gap = [r.beta for r in rows if r.cor34 and not r.ball_tsai]
    if gap:
        logger.info(f"Region scan: {len(rows)} rows, cor34-only region [{min(gap):.4g}, {max(gap):.4g}]")
    else:
        logger.info(f"Region scan: {len(rows)} rows, no cor34-only points")
    return rows


def region_to_csv(rows: Sequence[RegionRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.array([[r.beta, r.ball_tsai, r.cor34, r.thm31] for r in rows], dtype=float).reshape(-1, 4)
    np.savetxt(
        path, table, delimiter=",", header="beta,ball_tsai,cor34,thm31",
        comments="", fmt=["%.17g", "%d", "%d", "%d"],
    )
    return path


# ---------------------------------------------------------------------------
# Aggregate verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonNegVerdict:
    by_ordering: Optional[bool]
    by_thm31: Optional[bool]
    by_cor34: Optional[bool]
    by_kernel_scan: bool
    notes: Tuple[str, ...] = ()

    @property
    def sufficient(self) -> bool:
        return bool(self.by_ordering or self.by_thm31 or self.by_cor34 or COMPOSITION_NOTE in self.notes)


def classify(m: CarmaModel) -> NonNegVerdict:
    """Run every applicable arm; n.a. arms are None"""
    notes = list(m.notes)
    sdde_pair = m.p == m.q + 1 and m.is_invertible
    by_thm31 = thm31_check(m) if sdde_pair else None
    by_cor34 = corollary34(m).nonneg_f if sdde_pair and m.p == 3 else None
    t_min, g_min = min_scan(carma_kernel(m))
    by_kernel_scan = g_min >= -get_config().kernel_tolerance
    if not by_kernel_scan:
        notes.append(f"kernel minimum {g_min:.3e} at t={t_min:.4g}")
    verdict = NonNegVerdict(ball_tsai_check(m), by_thm31, by_cor34, by_kernel_scan, tuple(notes))
    if verdict.sufficient and not by_kernel_scan:
        logger.warning(f"Sufficient condition holds but kernel scan found {g_min:.3e}")
    return verdict
