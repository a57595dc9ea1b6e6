"""Signed delay measures phi = -lambda0 * delta_0 + sum xi_j delta_{tau_j} + f(t) dt.

The density f is an exponential polynomial sum_k c_k t^{p_k} e^{r_k t} with
r_k < 0, which keeps every moment finite and gives closed-form Laplace
transforms of all orders.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from logger import logger
from src.config.config import get_config
from src.errors import DerivativeOrderError


@dataclass(frozen=True)
class ExpPolyTerm:
    """Density term coeff * t**power * exp(rate * t)"""

    coeff: float
    rate: float
    power: int = 0

    def __post_init__(self):
        if not self.rate < 0:
            raise ValueError(f"ExpPolyTerm rate must be strictly negative, got {self.rate}")
        if int(self.power) != self.power or self.power < 0:
            raise ValueError(f"ExpPolyTerm power must be a non-negative integer, got {self.power}")
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "rate", float(self.rate))

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.coeff * t ** self.power * np.exp(self.rate * t)

    def integral(self) -> float:
        return self.coeff * math.factorial(self.power) / (-self.rate) ** (self.power + 1)

    def laplace_deriv(self, x, n: int = 0):
        """n-th derivative of x -> int_0^inf e^{-xt} c t^k e^{rt} dt.

        Equals c (-1)^n (k+n)! (x - r)^{-(k+n+1)}; x may be complex with Re x > r.
        """
        k = self.power
        return self.coeff * (-1) ** n * math.factorial(k + n) * (np.asarray(x) - self.rate) ** (-(k + n + 1))


@dataclass(frozen=True)
class DelayMeasure:
    """phi = -lambda0 delta_0 + sum_j xi_j delta_{tau_j} + sum_k term_k(t) dt"""

    lambda0: float = 0.0
    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Tuple[ExpPolyTerm, ...] = ()

    def __post_init__(self):
        atoms = tuple((float(tau), float(xi)) for tau, xi in self.atoms)
        locations = [tau for tau, _ in atoms]
        if any(not tau > 0 for tau in locations):
            raise ValueError(f"Atom locations must be strictly positive: {locations}")
        if len(set(locations)) != len(locations):
            raise ValueError(f"Atom locations must be pairwise distinct: {locations}")
        object.__setattr__(self, "lambda0", float(self.lambda0))
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))
        object.__setattr__(self, "density", tuple(self.density))

    @classmethod
    def discrete_delay(cls, lambda0: float, xi: float, tau: float) -> "DelayMeasure":
        return cls(lambda0, ((tau, xi),))

    @property
    def eta(self) -> "DelayMeasure":
        """Restriction of phi to (0, inf)"""
        return replace(self, lambda0=0.0)

    @property
    def max_lag(self) -> float:
        return max((tau for tau, _ in self.atoms), default=0.0)

    def density_value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.density:
            out = out + term.value(t)
        return out

    def total_mass(self) -> float:
        return -self.lambda0 + sum(xi for _, xi in self.atoms) + sum(t.integral() for t in self.density)

    def total_variation(self) -> float:
        """Upper bound on |phi|([0, inf)); exact when the density has one sign"""
        density_tv = abs(sum(t.integral() for t in self.density))
        if _sign_changes_possible(self.density):
            density_tv = sum(
                abs(t.coeff) * math.factorial(t.power) / (-t.rate) ** (t.power + 1) for t in self.density
            )
        return abs(self.lambda0) + sum(abs(xi) for _, xi in self.atoms) + density_tv

    def slowest_rate(self) -> Optional[float]:
        return max((t.rate for t in self.density), default=None)


def _sign_changes_possible(terms: Sequence[ExpPolyTerm]) -> bool:
    signs = {np.sign(t.coeff) for t in terms if t.coeff != 0}
    return len(signs) > 1


# ---------------------------------------------------------------------------
# Mass conditions
# ---------------------------------------------------------------------------

def total_mass(phi: DelayMeasure) -> float:
    return phi.total_mass()


def necessary_mass_check(phi: DelayMeasure) -> bool:
    """phi([0, inf)) < 0 is necessary for h_phi to be zero-free on the closed right half-plane"""
    return phi.total_mass() < 0


# ---------------------------------------------------------------------------
# Laplace transform of the positive-lag part
# ---------------------------------------------------------------------------

def laplace_deriv(eta: DelayMeasure, x, n: int = 0, n_max: Optional[int] = None):
    """n-th derivative of the Laplace transform of eta at x.

    Any atom at zero (lambda0) is ignored: only the part on (0, inf) enters.
    x may be a scalar or array, real or complex with Re x >= 0.

    Raises:
        DerivativeOrderError: if n exceeds n_max
    """
    n_max = get_config().max_derivative_order if n_max is None else n_max
    if n < 0 or n > n_max:
        raise DerivativeOrderError(f"Derivative order {n} outside [0, {n_max}]")
    x = np.asarray(x)
    total = np.zeros(x.shape, dtype=np.result_type(x, float))
    for tau, xi in eta.atoms:
        total = total + xi * (-tau) ** n * np.exp(-x * tau)
    for term in eta.density:
        total = total + term.laplace_deriv(x, n)
    if total.ndim == 0:
        return total.item()
    return total


@dataclass(frozen=True)
class FirstMoment:
    value: float
    violates_necessary_condition: bool


def first_moment(eta: DelayMeasure) -> FirstMoment:
    """int t eta(dt); values below -1 rule out non-negativity at order n = 1"""
    value = sum(tau * xi for tau, xi in eta.atoms)
    value += sum(
        t.coeff * math.factorial(t.power + 1) / (-t.rate) ** (t.power + 2) for t in eta.density
    )
    return FirstMoment(value=value, violates_necessary_condition=value < -1)


# ---------------------------------------------------------------------------
# Sign of phi on (0, inf)
# ---------------------------------------------------------------------------

class Sign(str, Enum):
    """Verdict arms for non-negativity of a measure on (0, inf)"""
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GridParams:
    """Dense scan on (0, t_max]; t_max defaults to decay_factor / |slowest rate|"""
    t_max: Optional[float] = None
    n_points: Optional[int] = None
    decay_factor: Optional[float] = None

    def resolved(self, eta: DelayMeasure) -> Tuple[float, int]:
        cfg = get_config()
        n_points = self.n_points or cfg.scan_points
        if self.t_max is not None:
            return self.t_max, n_points
        factor = self.decay_factor or cfg.scan_decay_factor
        slowest = eta.slowest_rate()
        return factor / abs(slowest), n_points


@dataclass(frozen=True)
class SignVerdict:
    status: Sign
    witness: Optional[float] = None
    numerically_verified: bool = False
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def is_yes(self) -> bool:
        return self.status == Sign.YES


def is_nonneg_on_positive(phi: DelayMeasure, scan: Optional[GridParams] = None) -> SignVerdict:
    """Decide whether phi restricted to (0, inf) is a non-negative measure.

    Atoms are checked exactly. The density is decided in closed form when it
    is a single term, a polynomial of degree <= 1 times one exponential, or
    two pure exponentials; otherwise by a dense scan with local refinement
    plus the sign of the dominant term at infinity.
    """
    for tau, xi in phi.atoms:
        if xi < 0:
            return SignVerdict(Sign.NO, witness=tau, notes=("negative atom",))

    terms = _combine_terms(phi.density)
    if not terms:
        return SignVerdict(Sign.YES, notes=("no density",))

    exact = _exact_density_sign(terms)
    if exact is not None:
        return exact

    return _scan_density_sign(terms, scan or GridParams(), DelayMeasure(0.0, (), tuple(terms)))


def _combine_terms(terms: Sequence[ExpPolyTerm]) -> List[ExpPolyTerm]:
    grouped: Dict[Tuple[float, int], float] = {}
    for t in terms:
        grouped[(t.rate, t.power)] = grouped.get((t.rate, t.power), 0.0) + t.coeff
    return [ExpPolyTerm(c, r, k) for (r, k), c in sorted(grouped.items(), reverse=True) if c != 0.0]


def _exact_density_sign(terms: List[ExpPolyTerm]) -> Optional[SignVerdict]:
    rates = sorted({t.rate for t in terms}, reverse=True)

    if len(terms) == 1:
        t = terms[0]
        if t.coeff >= 0:
            return SignVerdict(Sign.YES, notes=("single term",))
        return SignVerdict(Sign.NO, witness=max(t.power, 1) / -t.rate, notes=("single term",))

    # (c0 + c1 t) e^{rt}
    if len(rates) == 1 and max(t.power for t in terms) <= 1:
        r = rates[0]
        c0 = sum(t.coeff for t in terms if t.power == 0)
        c1 = sum(t.coeff for t in terms if t.power == 1)
        if c0 >= 0 and c1 >= 0:
            return SignVerdict(Sign.YES, notes=("linear times exponential",))
        witness = 1e-9 if c0 < 0 else (1.0 - c0 / c1) if c1 < 0 else None
        return SignVerdict(Sign.NO, witness=witness, notes=("linear times exponential",))

    # c1 e^{r1 t} + c2 e^{r2 t}, r1 > r2: e^{-r2 t} f(t) = c1 e^{d t} + c2 is monotone
    if len(terms) == 2 and all(t.power == 0 for t in terms):
        slow, fast = terms
        c1, c2, d = slow.coeff, fast.coeff, slow.rate - fast.rate
        if c1 >= 0 and c1 + c2 >= 0:
            return SignVerdict(Sign.YES, notes=("two exponentials",))
        if c1 < 0:
            crossing = math.log(-c2 / c1) / d if c2 > 0 else 0.0
            witness = max(crossing, 0.0) + 1.0 / d
        else:
            witness = 0.5 * math.log(-c2 / c1) / d
        return SignVerdict(Sign.NO, witness=witness, notes=("two exponentials",))

    return None


def _relative_density(terms: List[ExpPolyTerm], dominant: ExpPolyTerm, t: float) -> float:
    # density divided by t**power * exp(rate * t) of the dominant term; same sign, no underflow
    return float(sum(
        term.coeff * t ** (term.power - dominant.power) * np.exp((term.rate - dominant.rate) * t)
        for term in terms
    ))


def _scan_density_sign(terms: List[ExpPolyTerm], scan: GridParams, density: DelayMeasure) -> SignVerdict:
    # Sign at infinity comes from the slowest rate, highest power.
    dominant = max(terms, key=lambda t: (t.rate, t.power))
    t_max, n_points = scan.resolved(density)
    if dominant.coeff < 0:
        t = t_max
        while _relative_density(terms, dominant, t) >= 0 and t < 1e6 * t_max:
            t *= 2.0
        logger.debug(f"Density eventually negative; witness t={t:.6g}")
        return SignVerdict(Sign.NO, witness=float(t), notes=("negative at infinity",))

    grid = np.linspace(0.0, t_max, n_points + 1)
    values = density.density_value(grid)
    negative = np.flatnonzero(values < 0)
    if negative.size:
        i = int(negative[0])
        return SignVerdict(Sign.NO, witness=float(max(grid[i], 1e-9)), notes=("grid scan",))

    # Refine every interior local minimum of the samples.
    interior = np.flatnonzero((values[1:-1] <= values[:-2]) & (values[1:-1] <= values[2:])) + 1
    for i in interior:
        res = minimize_scalar(
            lambda s: float(density.density_value(s)),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
        )
        if res.fun < 0:
            return SignVerdict(Sign.NO, witness=float(res.x), notes=("refined scan",))

    logger.debug(f"Density non-negative on (0, {t_max:.4g}] over {n_points} samples")
    return SignVerdict(Sign.YES, numerically_verified=True, notes=("grid scan",))
