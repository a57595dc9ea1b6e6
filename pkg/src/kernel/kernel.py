"""Kernels g_phi of stationary SDDE solutions.

g_phi is the fundamental solution of g' = phi * g with g(0) = 1. It is
recovered by Fourier inversion of 1/h_phi(iy), by the CARMA state-space
representation b^T e^{At} e_p, or by the step method on the delay ODE.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.signal import fftconvolve

from logger import logger
from src.characteristic.characteristic import h_eval, zero_free
from src.config.config import get_config
from src.errors import (
    ConfluentCaseError,
    DegreeMismatchError,
    DomainError,
    LagResolutionError,
    NonCausalError,
    NonInvertibleError,
    NonRealZeroError,
    NonStationaryModelError,
)
from src.measure.delay_measure import DelayMeasure, ExpPolyTerm
from src.polynomial.polynomial import Polynomial, cluster_roots


@dataclass(frozen=True)
class KernelMeta:
    method: str
    frequency_cutoff: Optional[float] = None
    error_estimate: Optional[float] = None


@dataclass(frozen=True, eq=False)
class KernelGrid:
    """g sampled at t_k = k * dt, k = 0..n-1, so dt * n is the horizon"""

    dt: float
    values: np.ndarray
    meta: KernelMeta

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not self.dt > 0:
            raise ValueError(f"Kernel step must be positive, got {self.dt}")
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("A kernel grid needs at least two samples")
        if not np.all(np.isfinite(values)):
            raise ValueError("Kernel values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dt

    @property
    def horizon(self) -> float:
        return self.dt * len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def at(self, t) -> np.ndarray:
        """Linear interpolation, zero for t < 0"""
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, np.interp(t, self.times, self.values))

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(
            path, np.column_stack([self.times, self.values]),
            delimiter=",", header="t,g", comments="", fmt="%.17g",
        )
        logger.info(f"Kernel written to {path}")
        return path


def default_horizon(phi: DelayMeasure) -> float:
    """horizon_factor / lambda_eff, lambda_eff = -max(density rates, -lambda0)"""
    candidates = [-phi.lambda0] + [t.rate for t in phi.density]
    lambda_eff = -max(candidates)
    if lambda_eff <= 0:
        logger.warning(f"lambda_eff={lambda_eff:.4g} is not positive; using unit decay for the horizon")
        lambda_eff = 1.0
    return get_config().horizon_factor / lambda_eff


# ---------------------------------------------------------------------------
# Fourier inversion
# ---------------------------------------------------------------------------

def kernel_fft(
    phi: DelayMeasure,
    horizon: Optional[float] = None,
    n_points: Optional[int] = None,
) -> KernelGrid:
    """Invert 1/h_phi(iy) on the grid k * horizon / n_points.

    The exact transform 1/(iy + c) of e^{-ct} is subtracted first; the
    residual decays like y^-2 and is inverted with one inverse FFT.

    Raises:
        NonStationaryModelError: if h_phi has a zero in the closed right half-plane
    """
    report = zero_free(phi)
    if not report.verdict:
        raise NonStationaryModelError("non-stationary model")

    horizon = default_horizon(phi) if horizon is None else float(horizon)
    n = get_config().fft_points if n_points is None else int(n_points)
    if horizon <= 0 or n < 2:
        raise ValueError(f"Need horizon > 0 and n_points >= 2, got {horizon}, {n}")
    dt = horizon / n
    c = phi.lambda0 if phi.lambda0 > 0 else 1.0

    y = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    residual = 1.0 / h_eval(phi, 1j * y) - 1.0 / (1j * y + c)
    t = np.arange(n) * dt
    values = np.exp(-c * t) + np.real(np.fft.ifft(residual)) / dt

    cutoff = np.pi / dt
    tail = abs(cutoff ** 2 * (1.0 / h_eval(phi, 1j * cutoff) - 1.0 / (1j * cutoff + c)))
    error = tail / (np.pi * cutoff)
    logger.info(f"FFT kernel: n={n}, horizon={horizon:.4g}, cutoff={cutoff:.4g}, tail error ~ {error:.2e}")
    return KernelGrid(dt, values, KernelMeta("fft", cutoff, error))


# ---------------------------------------------------------------------------
# CARMA state space and residues
# ---------------------------------------------------------------------------

def state_space(P: Polynomial, Q: Polynomial) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A, b, e_p): companion matrix of P, Q's coefficients padded to length p, last unit vector"""
    if Q.degree >= P.degree:
        raise DegreeMismatchError(f"deg Q must be below deg P, got {Q.degree} >= {P.degree}")
    A = P.companion()
    p = P.degree
    b = np.zeros(p)
    b[: len(Q.coeffs)] = Q.coeffs
    e_p = np.zeros(p)
    e_p[-1] = 1.0
    return A, b, e_p


def kernel_statespace(P: Polynomial, Q: Polynomial, horizon: float, dt: float) -> KernelGrid:
    """g(t) = b^T e^{At} e_p, one matrix exponential powered along the grid"""
    roots = P.roots()
    if any(r.real >= 0 for r in roots):
        raise NonCausalError(f"P has zeros in the closed right half-plane: {roots}")
    A, b, e_p = state_space(P, Q)
    n = max(2, int(round(horizon / dt)))
    step = scipy.linalg.expm(A * dt)
    values = np.empty(n)
    v = e_p
    for k in range(n):
        values[k] = b @ v
        v = step @ v
    logger.info(f"State-space kernel: p={P.degree}, n={n}, dt={dt:.4g}")
    return KernelGrid(dt, values, KernelMeta("statespace"))


def f_explicit(P: Polynomial, Q: Polynomial, zeros: Optional[Sequence[complex]] = None) -> List[ExpPolyTerm]:
    """Exponential-polynomial f with Laplace transform R/Q, R = (z + lambda)Q - P.

    A simple zero beta of Q contributes -P(beta)/Q'(beta) e^{beta t}. A double
    zero with Q = (z - beta)^2 S contributes
    -(P(beta) t + P'(beta) - P(beta) S'(beta)/S(beta)) e^{beta t} / S(beta).

    Args:
        P: monic, degree q + 1
        Q: monic, degree q, zeros real and negative
        zeros: exact zeros of Q when known; otherwise computed and clustered
    """
    if not (P.is_monic and Q.is_monic) or P.degree != Q.degree + 1:
        raise DegreeMismatchError(f"Need monic P, Q with deg P = deg Q + 1, got {P.degree}, {Q.degree}")
    if Q.degree == 0:
        return []

    cfg = get_config()
    raw = list(zeros) if zeros is not None else Q.roots()
    clusters = cluster_roots(raw, cfg.root_cluster_tol)
    for beta, _ in clusters:
        if abs(beta.imag) > cfg.realness_tol:
            raise NonRealZeroError(f"non-real moving-average zero {beta}")
        if beta.real >= 0:
            raise NonInvertibleError(f"moving-average zero {beta} is not in the open left half-plane")
    if any(m > 2 for _, m in clusters):
        raise ConfluentCaseError("confluent case out of scope")

    dP = P.derivative()
    terms: List[ExpPolyTerm] = []
    for beta, multiplicity in clusters:
        b = beta.real
        others = [o.real for o, m in clusters if o != beta for _ in range(m)]
        S = math.prod(b - o for o in others)
        if multiplicity == 1:
            terms.append(ExpPolyTerm(-P(b) / S, b, 0))
        else:
            log_dS = sum(1.0 / (b - o) for o in others)
            terms.append(ExpPolyTerm(-P(b) / S, b, 1))
            terms.append(ExpPolyTerm(-(dP(b) - P(b) * log_dS) / S, b, 0))
    return [t for t in terms if t.coeff != 0.0]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def min_scan(g: KernelGrid) -> Tuple[float, float]:
    """Grid argmin with one parabolic refinement through its neighbours"""
    v = g.values
    i = int(np.argmin(v))
    if 0 < i < len(v) - 1:
        left, mid, right = v[i - 1], v[i], v[i + 1]
        curvature = left - 2.0 * mid + right
        if curvature > 0:
            offset = 0.5 * (left - right) / curvature
            return float((i + offset) * g.dt), float(mid - 0.25 * (left - right) * offset)
    return float(i * g.dt), float(v[i])


def _trapezoid(values: np.ndarray, dx: float) -> float:
    if len(values) < 2:
        return 0.0
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def lemma51_residual(phi: DelayMeasure, g: KernelGrid, s: float, t: float) -> float:
    """|g(t) - g(t-s) g(s) - int_s^t g(t-u) (phi * (g 1_[0,s)))(u) du|.

    s and t are snapped to the grid. The lambda0 part of phi drops out since
    g 1_[0,s) vanishes past s.
    """
    if not 0 < s < t <= g.horizon:
        raise DomainError(f"Need 0 < s < t <= horizon, got s={s}, t={t}")
    dt = g.dt
    i_s = int(round(s / dt))
    i_t = min(int(round(t / dt)), len(g) - 1)
    s, t = i_s * dt, i_t * dt
    v = g.values
    lhs = v[i_t] - v[i_t - i_s] * v[i_s]

    # Atom xi at tau: xi * int g(t - tau - w) g(w) dw over w in [max(0, s - tau), min(s, t - tau)].
    atom_part = 0.0
    for tau, xi in phi.atoms:
        lo, hi = max(0.0, s - tau), min(s, t - tau)
        if hi <= lo:
            continue
        m = max(2, int(math.ceil((hi - lo) / dt)) + 1)
        w = np.linspace(lo, hi, m)
        atom_part += xi * _trapezoid(g.at(t - tau - w) * g.at(w), (hi - lo) / (m - 1))

    density_part = 0.0
    if phi.density and i_s > 0:
        weights = np.full(i_s + 1, dt)
        weights[[0, -1]] *= 0.5
        f = phi.density_value(np.arange(i_t + 1) * dt)
        inner = fftconvolve(v[: i_s + 1] * weights, f)[: i_t + 1]
        outer = v[i_t - np.arange(i_s, i_t + 1)] * inner[i_s : i_t + 1]
        density_part = _trapezoid(outer, dt)

    return abs(lhs - atom_part - density_part)


# ---------------------------------------------------------------------------
# Step-method oracle
# ---------------------------------------------------------------------------

def kernel_step_method(phi: DelayMeasure, horizon: float, dt: float) -> KernelGrid:
    """Integrate g'(t) = -lambda0 g(t) + sum xi_j g(t - tau_j) + int_0^t f(v) g(t-v) dv.

    Heun steps from g(0) = 1 with g = 0 on negative times. Lagged values are
    linearly interpolated on the history; the convolution is a trapezoid sum.

    Raises:
        LagResolutionError: if dt exceeds the smallest lag
    """
    if phi.atoms and dt > min(tau for tau, _ in phi.atoms):
        raise LagResolutionError(f"dt={dt} exceeds the smallest lag")
    n = max(2, int(round(horizon / dt)))
    times = np.arange(n) * dt
    g = np.zeros(n)
    g[0] = 1.0
    f = phi.density_value(times) if phi.density else None

    def rhs(k: int, value: float) -> float:
        # k indexes the evaluation time; g[:k] is known, value stands in for g[k]
        out = -phi.lambda0 * value
        t_k = k * dt
        for tau, xi in phi.atoms:
            lag = t_k - tau
            if lag >= 0:
                out += xi * np.interp(lag, times[:k], g[:k])
        if f is not None and k > 0:
            conv = f[0] * value + g[0] * f[k]
            conv = 0.5 * conv + np.dot(f[1:k], g[k - 1 : 0 : -1])
            out += dt * conv
        return out

    for k in range(n - 1):
        k1 = rhs(k, g[k])
        k2 = rhs(k + 1, g[k] + dt * k1)
        g[k + 1] = g[k] + 0.5 * dt * (k1 + k2)

    logger.info(f"Step-method kernel: n={n}, dt={dt:.4g}")
    return KernelGrid(dt, g, KernelMeta("step", None, dt ** 2))
