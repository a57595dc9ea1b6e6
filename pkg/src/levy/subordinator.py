"""Subordinators with finite mean: drift plus one exactly samplable jump part.

Increments over a step dt:
    compound Poisson   Poisson(rate * dt) jumps, exponential or constant sizes
    gamma              Gamma(shape * dt, scale = 1 / rate)
    inverse Gaussian   IG(mean * dt, shape * dt**2)
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from logger import logger


@dataclass(frozen=True)
class ExponentialJumps:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError(f"Exponential jump mean must be positive, got {self.mean}")


@dataclass(frozen=True)
class ConstantJumps:
    size: float

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError(f"Constant jump size must be positive, got {self.size}")


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    jump: Union[ExponentialJumps, ConstantJumps]

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"Compound Poisson rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class GammaJumps:
    """Gamma process: L_1 ~ Gamma(shape, rate)"""
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError(f"Gamma shape and rate must be positive, got {self.shape}, {self.rate}")


@dataclass(frozen=True)
class InverseGaussianJumps:
    """Inverse Gaussian process: L_1 ~ IG(mean, shape)"""
    mean: float
    shape: float

    def __post_init__(self):
        if not (self.mean > 0 and self.shape > 0):
            raise ValueError(f"Inverse Gaussian mean and shape must be positive, got {self.mean}, {self.shape}")


JumpPart = Union[CompoundPoisson, GammaJumps, InverseGaussianJumps]


@dataclass(frozen=True)
class SubordinatorSpec:
    drift: float = 0.0
    jump_part: Optional[JumpPart] = None

    def __post_init__(self):
        if self.drift < 0:
            raise ValueError(f"Subordinator drift must be non-negative, got {self.drift}")


def mean_rate(s: SubordinatorSpec) -> float:
    """E[L_1]"""
    jp = s.jump_part
    if jp is None:
        return s.drift
    if isinstance(jp, CompoundPoisson):
        jump_mean = jp.jump.mean if isinstance(jp.jump, ExponentialJumps) else jp.jump.size
        return s.drift + jp.rate * jump_mean
    if isinstance(jp, GammaJumps):
        return s.drift + jp.shape / jp.rate
    return s.drift + jp.mean


def variance_rate(s: SubordinatorSpec) -> float:
    """Var[L_1]"""
    jp = s.jump_part
    if jp is None:
        return 0.0
    if isinstance(jp, CompoundPoisson):
        second = 2.0 * jp.jump.mean ** 2 if isinstance(jp.jump, ExponentialJumps) else jp.jump.size ** 2
        return jp.rate * second
    if isinstance(jp, GammaJumps):
        return jp.shape / jp.rate ** 2
    return jp.mean ** 3 / jp.shape


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct stream ids give independent streams"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def sample_increments(
    s: SubordinatorSpec,
    dt: float,
    n: int,
    seed: int,
    stream: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """n i.i.d. non-negative increments L_{t+dt} - L_t"""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    rng = rng or make_rng(seed, stream)
    out = np.full(n, s.drift * dt)
    jp = s.jump_part

    if isinstance(jp, CompoundPoisson):
        counts = rng.poisson(jp.rate * dt, size=n)
        if isinstance(jp.jump, ConstantJumps):
            out += counts * jp.jump.size
        else:
            # a sum of k exponential(mean) jumps is Gamma(k, mean)
            hit = counts > 0
            out[hit] += rng.gamma(counts[hit], jp.jump.mean)
    elif isinstance(jp, GammaJumps):
        out += rng.gamma(jp.shape * dt, 1.0 / jp.rate, size=n)
    elif isinstance(jp, InverseGaussianJumps):
        out += rng.wald(jp.mean * dt, jp.shape * dt ** 2, size=n)

    logger.debug(f"Sampled {n} increments (dt={dt:g}, seed={seed}, stream={stream})")
    return out
