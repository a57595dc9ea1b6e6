"""Real polynomial arithmetic, companion-matrix root finding and the
CARMA-to-SDDE reduction (z + lambda) Q(z) - P(z)."""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from logger import logger
from src.config.config import get_config
from src.errors import (
    ConstantPolynomialError,
    DegreeMismatchError,
    ReductionError,
    UnpairedRootError,
)

Number = Union[int, float, complex]


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with coefficients ascending by power.

    The zero polynomial has no coefficients and degree -1.
    """

    coeffs: Tuple[float, ...]

    def __post_init__(self):
        values = [float(c) for c in self.coeffs]
        if not all(np.isfinite(values)):
            raise ValueError(f"Polynomial coefficients must be finite: {values}")
        while values and values[-1] == 0.0:
            values.pop()
        object.__setattr__(self, "coeffs", tuple(values))

    @classmethod
    def of(cls, *coeffs: float) -> "Polynomial":
        return cls(tuple(coeffs))

    @classmethod
    def one(cls) -> "Polynomial":
        return cls((1.0,))

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls(())

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        return self.coeffs[-1] if self.coeffs else 0.0

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_monic(self) -> bool:
        return self.leading == 1.0

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Horner evaluation; accepts scalars or numpy arrays"""
        result = np.zeros_like(np.asarray(z), dtype=np.result_type(z, float))
        for c in reversed(self.coeffs):
            result = result * z + c
        if np.ndim(result) == 0:
            return result.item()
        return result

    def derivative(self) -> "Polynomial":
        return Polynomial(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0.0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0.0] * (n - len(other.coeffs))
        return Polynomial(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: Union["Polynomial", float]) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(tuple(float(other) * c for c in self.coeffs))
        if self.is_zero or other.is_zero:
            return Polynomial.zero()
        return Polynomial(tuple(np.convolve(self.coeffs, other.coeffs)))

    __rmul__ = __mul__

    def monic(self) -> "Polynomial":
        if self.is_zero:
            raise ValueError("The zero polynomial has no monic normalization")
        return self * (1.0 / self.leading)

    def companion(self) -> np.ndarray:
        """Companion matrix of the monic normalization.

        Ones on the superdiagonal and the negated low-order coefficients on
        the last row, so its characteristic polynomial is the monic form.
        """
        if self.degree < 1:
            raise ConstantPolynomialError("constant polynomial")
        c = self.monic().coeffs
        p = self.degree
        A = np.zeros((p, p))
        A[np.arange(p - 1), np.arange(1, p)] = 1.0
        A[-1, :] = -np.asarray(c[:-1])
        return A

    def roots(self, cluster_tol: Optional[float] = None) -> List[complex]:
        """All complex roots with multiplicity.

        Eigenvalues of the companion matrix, with members of a numerical
        cluster replaced by the cluster mean; sorted by descending real part,
        then descending imaginary part.
        """
        if self.degree < 1:
            raise ConstantPolynomialError("constant polynomial")
        eig = scipy.linalg.eigvals(self.companion())
        merged: List[complex] = []
        for center, multiplicity in cluster_roots(eig, cluster_tol):
            merged.extend([center] * multiplicity)
        return sort_roots(merged)

    @classmethod
    def from_roots(cls, roots: Iterable[Number]) -> "Polynomial":
        """Monic real polynomial with exactly these roots"""
        rs = [complex(r) for r in roots]
        _check_conjugate_pairs(rs)
        coeffs = np.array([1.0 + 0j])
        for r in rs:
            coeffs = np.convolve(coeffs, [-r, 1.0])
        return cls(tuple(np.real(coeffs)))

    def __repr__(self) -> str:
        if self.is_zero:
            return "Polynomial(0)"
        terms = [f"{c:g}*z^{k}" for k, c in enumerate(self.coeffs) if c != 0.0]
        return f"Polynomial({' + '.join(reversed(terms))})"


def sort_roots(roots: Iterable[complex]) -> List[complex]:
    return sorted((complex(r) for r in roots), key=lambda r: (-r.real, -r.imag))


def cluster_roots(roots: Iterable[Number], tol: Optional[float] = None) -> List[Tuple[complex, int]]:
    """Group roots closer than tol (relative to max(1, |root|)).

    Returns (cluster mean, multiplicity) pairs; the mean of a cluster is far
    better conditioned than its individual members.
    """
    tol = get_config().root_cluster_tol if tol is None else tol
    remaining = sort_roots(roots)
    clusters: List[List[complex]] = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        rest = []
        for r in remaining:
            if any(abs(r - m) <= tol * max(1.0, abs(r), abs(m)) for m in members):
                members.append(r)
            else:
                rest.append(r)
        remaining = rest
        clusters.append(members)
    return [(complex(np.mean(members)), len(members)) for members in clusters]


def _check_conjugate_pairs(roots: Sequence[complex], tol: float = 1e-12) -> None:
    unmatched = [r for r in roots if abs(r.imag) > tol * max(1.0, abs(r))]
    while unmatched:
        r = unmatched.pop(0)
        for i, s in enumerate(unmatched):
            if abs(s - r.conjugate()) <= tol * max(1.0, abs(r)):
                unmatched.pop(i)
                break
        else:
            raise UnpairedRootError(f"Complex root {r} has no conjugate partner")


def sdde_reduction(P: Polynomial, Q: Polynomial, tol: Optional[float] = None) -> Tuple[float, Polynomial]:
    """Split a CARMA(p, p-1) pair into SDDE form.

    Args:
        P: monic autoregressive polynomial of degree p
        Q: monic moving-average polynomial of degree p - 1
        tol: truncation tolerance for the cancelled leading coefficient

    Returns:
        (lambda0, R) with R = (z + lambda0) Q - P and deg R < deg Q
    """
    tol = get_config().coeff_truncation_tol if tol is None else tol
    if not (P.is_monic and Q.is_monic):
        raise DegreeMismatchError("sdde_reduction needs monic P and Q")
    if P.degree != Q.degree + 1:
        raise DegreeMismatchError(
            f"deg P must equal deg Q + 1, got deg P={P.degree}, deg Q={Q.degree}"
        )
    q = Q.degree
    a1 = P.coeffs[q]
    b_last = Q.coeffs[q - 1] if q >= 1 else 0.0
    lambda0 = a1 - b_last

    full = Polynomial.of(lambda0, 1.0) * Q - P
    padded = list(full.coeffs) + [0.0] * (q + 2 - len(full.coeffs))
    scale = max(1.0, max(abs(c) for c in P.coeffs))
    for k in range(q, len(padded)):
        if abs(padded[k]) >= tol * scale:
            raise ReductionError(f"Coefficient of z^{k} in R did not cancel: {padded[k]}")
    R = Polynomial(tuple(padded[:q]))

    rng = np.random.default_rng(0)
    points = rng.normal(size=5) + 1j * rng.normal(size=5)
    lhs = P(points)
    rhs = Polynomial.of(lambda0, 1.0)(points) * Q(points) - R(points)
    rel = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))
    if np.max(rel) > 1e-9:
        raise ReductionError(f"P != (z + lambda) Q - R, relative error {np.max(rel):.3e}")

    logger.debug(f"SDDE reduction: lambda={lambda0:.6g}, R={R}")
    return lambda0, R
