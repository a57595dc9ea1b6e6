"""Stationary path simulation for SDDEs driven by subordinators.

Two schemes:
    simulate_ma     X_t = sum_j g(j dt) dL_{t - j dt}, the moving-average form
    simulate_euler  explicit Euler recursion of the delay equation itself

Given the same increments the two are aligned: output k of either scheme
uses increments up to and including index k + (len(increments) - n_out).
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from logger import logger
from src.characteristic.characteristic import zero_free
from src.config.config import get_config
from src.errors import LagResolutionError, NonStationaryModelError
from src.kernel.kernel import KernelGrid
from src.levy.subordinator import SubordinatorSpec, sample_increments
from src.measure.delay_measure import DelayMeasure
from src.multivar.multivar import MatrixKernelGrid


@dataclass(frozen=True)
class PathMeta:
    scheme: str
    seed: Optional[int]
    dt: float
    burn_in: float
    warnings: Tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True, eq=False)
class PathSample:
    t: np.ndarray
    x: np.ndarray
    meta: PathMeta

    def __post_init__(self):
        if len(self.t) != len(self.x):
            raise ValueError(f"t and x lengths differ: {len(self.t)} != {len(self.x)}")

    @property
    def dimension(self) -> int:
        return 1 if self.x.ndim == 1 else self.x.shape[1]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if self.x.ndim == 1:
            header = "t,x"
        else:
            header = ",".join(["t"] + [f"x{j + 1}" for j in range(self.dimension)])
        table = np.column_stack([self.t, self.x])
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
        logger.info(f"Path written to {path}")
        return path


def _tail_warnings(g: np.ndarray) -> Tuple[str, ...]:
    tail = float(np.max(np.abs(g[-1])))
    limit = get_config().tail_warning
    if tail > limit:
        logger.warning(f"Kernel tail {tail:.3e} at the horizon exceeds {limit:g}")
        return (f"kernel tail {tail:.3e} above {limit:g} at horizon",)
    return ()


def _n_steps(T: float, dt: float) -> int:
    n_out = int(round(T / dt))
    if n_out < 1:
        raise ValueError(f"T={T} is shorter than one step dt={dt}")
    return n_out


def simulate_ma(
    g: KernelGrid,
    s: SubordinatorSpec,
    T: float,
    seed: int,
    increments: Optional[np.ndarray] = None,
    stream: int = 0,
) -> PathSample:
    """Moving-average path on [0, T) at the kernel's step.

    A pre-sample window of one kernel horizon is drawn from the same driver,
    so the path starts in stationarity. Non-negative kernels and increments
    give non-negative output exactly (direct convolution, no FFT).
    """
    dt = g.dt
    n_out = _n_steps(T, dt)
    n_incr = n_out + len(g) - 1
    if increments is None:
        increments = sample_increments(s, dt, n_incr, seed, stream)
    elif len(increments) != n_incr:
        raise ValueError(f"Expected {n_incr} increments, got {len(increments)}")

    x = np.convolve(increments, g.values, mode="valid")
    meta = PathMeta("ma", seed, dt, (len(g) - 1) * dt, _tail_warnings(g.values))
    logger.info(f"MA path: n={n_out}, dt={dt:g}, min={x.min():.4g}")
    return PathSample(np.arange(n_out) * dt, x, meta)


def default_burn_in(phi: DelayMeasure) -> float:
    """burn_in_factor mean-reversion times of the slowest of lambda0 and the density rates"""
    lambda_eff = -max([-phi.lambda0] + [t.rate for t in phi.density])
    if lambda_eff <= 0:
        lambda_eff = 1.0
    return get_config().burn_in_factor / lambda_eff


def simulate_euler(
    phi: DelayMeasure,
    s: SubordinatorSpec,
    T: float,
    dt: float,
    seed: int,
    burn_in: Optional[float] = None,
    increments: Optional[np.ndarray] = None,
    stream: int = 0,
) -> PathSample:
    """Explicit Euler scheme for dX = (int X_{t-v} phi(dv)) dt + dL.

    Atom lags are snapped to multiples of dt; the density term is a
    trapezoid sum over the stored history, truncated where the density has
    decayed by e^{-scan_decay_factor}. History before time 0 is zero. When
    increments are passed, their length fixes the burn-in.

    Raises:
        NonStationaryModelError: if h_phi is not zero-free
        LagResolutionError: if dt exceeds the smallest lag
    """
    if not zero_free(phi).verdict:
        raise NonStationaryModelError("non-stationary model")
    if phi.atoms and dt > min(tau for tau, _ in phi.atoms) + 1e-12:
        raise LagResolutionError(f"dt={dt} exceeds the smallest lag {min(tau for tau, _ in phi.atoms)}")

    warnings = []
    lag_steps = [(int(round(tau / dt)), xi) for tau, xi in phi.atoms]
    snap = max((abs(k * dt - tau) for (k, _), (tau, _) in zip(lag_steps, phi.atoms)), default=0.0)
    if snap > 1e-12:
        logger.warning(f"Lags snapped to the dt grid, max error {snap:.3e}")
        warnings.append(f"lag snapping error {snap:.3e}")

    n_out = _n_steps(T, dt)
    if increments is None:
        burn_in = default_burn_in(phi) if burn_in is None else burn_in
        n_burn = int(round(burn_in / dt))
        increments = sample_increments(s, dt, n_burn + n_out, seed, stream)
    else:
        n_burn = len(increments) - n_out
        if n_burn < 0:
            raise ValueError(f"Need at least {n_out} increments, got {len(increments)}")
    total = n_burn + n_out

    weights = None
    if phi.density:
        support = get_config().scan_decay_factor / abs(phi.slowest_rate())
        n_f = min(int(math.ceil(support / dt)), total) + 1
        weights = phi.density_value(np.arange(n_f) * dt) * dt
        weights[[0, -1]] *= 0.5

    offset = max([k for k, _ in lag_steps] + [0 if weights is None else len(weights) - 1])
    x = np.zeros(offset + total + 1)
    for k in range(total):
        i = offset + k
        drift = -phi.lambda0 * x[i]
        for lag, xi in lag_steps:
            drift += xi * x[i - lag]
        if weights is not None:
            drift += np.dot(weights, x[i - len(weights) + 1 : i + 1][::-1])
        x[i + 1] = x[i] + dt * drift + increments[k]

    out = x[offset + 1 + n_burn :]
    meta = PathMeta("euler", seed, dt, n_burn * dt, tuple(warnings))
    logger.info(f"Euler path: n={n_out}, dt={dt:g}, burn-in={n_burn * dt:.4g}, min={out.min():.4g}")
    return PathSample(np.arange(n_out) * dt, out, meta)


def simulate_ma_multivariate(
    kernels: MatrixKernelGrid,
    drivers: Sequence[SubordinatorSpec],
    T: float,
    seed: int,
) -> PathSample:
    """X^j = sum_k g_jk * dL^k with independent component drivers (stream k)"""
    d = kernels.dimension
    if len(drivers) != d:
        raise ValueError(f"Need {d} drivers, got {len(drivers)}")
    dt = kernels.dt
    m = kernels.values.shape[0]
    n_out = _n_steps(T, dt)
    incr = [sample_increments(drivers[k], dt, n_out + m - 1, seed, stream=k) for k in range(d)]
    x = np.zeros((n_out, d))
    for j in range(d):
        for k in range(d):
            x[:, j] += np.convolve(incr[k], kernels.values[:, j, k], mode="valid")
    meta = PathMeta("ma", seed, dt, (m - 1) * dt, _tail_warnings(kernels.values))
    logger.info(f"Multivariate MA path: d={d}, n={n_out}, dt={dt:g}")
    return PathSample(np.arange(n_out) * dt, x, meta)


@dataclass(frozen=True)
class PathStats:
    min: float
    argmin: int
    mean: float
    fraction_negative: float


def path_stats(p: PathSample) -> PathStats:
    """Summary statistics; argmin is a time index, negatives are entries below -1e-12"""
    if len(p.x) == 0:
        raise ValueError("Empty path")
    flat = p.x.reshape(len(p.x), -1)
    idx = int(np.argmin(flat))
    return PathStats(
        min=float(flat.flat[idx]),
        argmin=idx // flat.shape[1],
        mean=float(np.mean(flat)),
        fraction_negative=float(np.mean(flat < -1e-12)),
    )
