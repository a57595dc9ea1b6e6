"""Multivariate SDDEs dX = (int phi(dv) X_{t-v}) dt + dL with a d x d matrix
delay measure phi = -Lambda delta_0 + Eta."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from logger import logger
from src.characteristic.characteristic import ContourParams, ZeroFreeReport, half_disk_winding
from src.config.config import get_config
from src.errors import DomainError, NonStationaryModelError, SingularFrequencyError
from src.kernel.kernel import KernelGrid, KernelMeta
from src.measure.delay_measure import DelayMeasure, is_nonneg_on_positive, laplace_deriv


@dataclass(frozen=True)
class MatrixDelayMeasure:
    """entries[j][k] is phi_jk; its lambda0 is Lambda[j, k]"""

    entries: Tuple[Tuple[DelayMeasure, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        d = len(rows)
        if any(len(row) != d for row in rows):
            raise ValueError("Matrix delay measure must be square")
        max_d = get_config().max_dimension
        if not 2 <= d <= max_d:
            raise ValueError(f"Dimension must be in [2, {max_d}], got {d}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_lambda(
        cls,
        Lambda: Sequence[Sequence[float]],
        eta: Optional[Sequence[Sequence[DelayMeasure]]] = None,
    ) -> "MatrixDelayMeasure":
        Lambda = np.asarray(Lambda, dtype=float)
        d = Lambda.shape[0]
        rows = []
        for j in range(d):
            row = []
            for k in range(d):
                part = eta[j][k] if eta is not None else DelayMeasure()
                row.append(DelayMeasure(Lambda[j, k], part.atoms, part.density))
            rows.append(tuple(row))
        return cls(tuple(rows))

    @classmethod
    def from_blocks(cls, blocks: Sequence[DelayMeasure]) -> "MatrixDelayMeasure":
        """Diagonal system of decoupled univariate equations"""
        d = len(blocks)
        return cls(tuple(
            tuple(blocks[j] if j == k else DelayMeasure() for k in range(d)) for j in range(d)
        ))

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def Lambda(self) -> np.ndarray:
        return np.array([[e.lambda0 for e in row] for row in self.entries])

    @property
    def Eta(self) -> Tuple[Tuple[DelayMeasure, ...], ...]:
        return tuple(tuple(e.eta for e in row) for row in self.entries)

    def max_total_variation(self) -> float:
        return max(e.total_variation() for row in self.entries for e in row)


# ---------------------------------------------------------------------------
# M-matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MMatrixReport:
    is_m: bool
    alpha: float
    spectral_radius_B: float
    witness: Optional[Tuple[int, int]] = None


def is_m_matrix(A) -> MMatrixReport:
    """A = alpha I - B with B >= 0 entrywise and rho(B) <= alpha.

    Off-diagonal entries must be <= 0 for any such split; alpha is taken as
    the largest diagonal entry.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"M-matrix check needs a square matrix, got shape {A.shape}")
    d = A.shape[0]
    alpha = max(float(np.max(np.diag(A))), 0.0)
    B = alpha * np.eye(d) - A
    rho = float(np.max(np.abs(scipy.linalg.eigvals(B))))

    off = A - np.diag(np.diag(A))
    positive = np.argwhere(off > 1e-12)
    if positive.size:
        j, k = (int(i) for i in positive[0])
        return MMatrixReport(False, alpha, rho, (j, k))
    return MMatrixReport(rho <= alpha + 1e-10, alpha, rho)


def matexp_nonneg_check(A, t_grid: Sequence[float]) -> bool:
    """e^{-At} entrywise >= -1e-10 at every t in t_grid"""
    A = np.asarray(A, dtype=float)
    return all(scipy.linalg.expm(-A * t).min() >= -1e-10 for t in t_grid)


# ---------------------------------------------------------------------------
# Characteristic matrix
# ---------------------------------------------------------------------------

def matrix_h_eval(phi: MatrixDelayMeasure, z) -> np.ndarray:
    """z I - int e^{-zt} phi(dt); shape (d, d), or (m, d, d) for m values of z"""
    z = np.asarray(z, dtype=complex)
    if np.any(z.real < 0):
        raise DomainError("h_phi is only evaluated on the closed right half-plane")
    d = phi.d
    L = np.empty(z.shape + (d, d), dtype=complex)
    for j, row in enumerate(phi.entries):
        for k, entry in enumerate(row):
            L[..., j, k] = laplace_deriv(entry.eta, z, 0)
    return z[..., None, None] * np.eye(d) + phi.Lambda - L


def det_zero_free(phi: MatrixDelayMeasure, contour: Optional[ContourParams] = None) -> ZeroFreeReport:
    """Winding of det h_phi on the half-disk of radius 2 (1 + d max TV)"""
    contour = contour or ContourParams()
    radius = contour.radius or 2.0 * (1.0 + phi.d * phi.max_total_variation())
    report = half_disk_winding(lambda z: np.linalg.det(matrix_h_eval(phi, z)), radius, contour)
    logger.info(f"det h_phi zero-free: {report.verdict} (winding={report.winding}, R={radius:.4g})")
    return report


@dataclass(frozen=True)
class Thm41Verdict:
    nonneg: bool
    zero_free: bool
    eta_nonneg: bool
    m_matrix: MMatrixReport
    notes: Tuple[str, ...] = ()


def thm41_check(phi: MatrixDelayMeasure) -> Thm41Verdict:
    """Non-negative solution when det h is zero-free, every Eta entry is >= 0 and Lambda is an M-matrix"""
    notes = []
    zf = det_zero_free(phi).verdict
    if not zf:
        notes.append("det h_phi has a zero in the closed right half-plane")
    eta_ok = True
    for j, row in enumerate(phi.Eta):
        for k, entry in enumerate(row):
            sign = is_nonneg_on_positive(entry)
            if not sign.is_yes:
                eta_ok = False
                notes.append(f"Eta[{j + 1}][{k + 1}] not non-negative (witness t={sign.witness})")
    m_report = is_m_matrix(phi.Lambda)
    if not m_report.is_m:
        notes.append(f"Lambda is not an M-matrix (witness {m_report.witness})")
    return Thm41Verdict(zf and eta_ok and m_report.is_m, zf, eta_ok, m_report, tuple(notes))


# ---------------------------------------------------------------------------
# Matrix kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixKernelGrid:
    dt: float
    values: np.ndarray
    meta: KernelMeta

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.dt

    def entry(self, j: int, k: int) -> KernelGrid:
        return KernelGrid(self.dt, self.values[:, j, k], self.meta)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        d = self.dimension
        header = ",".join(["t"] + [f"g{j + 1}{k + 1}" for j in range(d) for k in range(d)])
        table = np.column_stack([self.times, self.values.reshape(len(self.times), d * d)])
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")
        logger.info(f"Matrix kernel written to {path}")
        return path


def matrix_kernel_fft(
    phi: MatrixDelayMeasure,
    horizon: Optional[float] = None,
    n_points: Optional[int] = None,
) -> MatrixKernelGrid:
    """Invert h_phi(iy)^{-1} entrywise after subtracting (iy I + Lambda)^{-1}.

    The subtracted part is added back as e^{-Lambda t}. When Lambda has an
    eigenvalue with non-positive real part, (iy + 1)^{-1} I is used instead.

    Raises:
        NonStationaryModelError: if det h_phi is not zero-free
        SingularFrequencyError: if some h_phi(iy) has condition number above the limit
    """
    if not det_zero_free(phi).verdict:
        raise NonStationaryModelError("non-stationary model")
    cfg = get_config()
    d = phi.d
    Lambda = phi.Lambda
    decay = float(np.min(np.real(scipy.linalg.eigvals(Lambda))))
    if horizon is None:
        horizon = cfg.horizon_factor / (decay if decay > 0 else 1.0)
    n = cfg.fft_points if n_points is None else int(n_points)
    dt = horizon / n

    y = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    H = matrix_h_eval(phi, 1j * y)
    cond = np.linalg.cond(H)
    if np.max(cond) > cfg.condition_limit:
        raise SingularFrequencyError(f"h_phi(iy) near-singular at y={y[int(np.argmax(cond))]:.4g}")

    identity = np.eye(d)
    if decay > 0:
        reference = np.linalg.inv(1j * y[:, None, None] * identity + Lambda)
        step = scipy.linalg.expm(-Lambda * dt)
    else:
        reference = identity / (1j * y[:, None, None] + 1.0)
        step = np.exp(-dt) * identity
    residual = np.linalg.inv(H) - reference

    values = np.real(np.fft.ifft(residual, axis=0)) / dt
    power = identity.copy()
    for k in range(n):
        values[k] += power
        power = power @ step

    logger.info(f"Matrix FFT kernel: d={d}, n={n}, horizon={horizon:.4g}")
    return MatrixKernelGrid(dt, values, KernelMeta("fft", np.pi / dt, None))
