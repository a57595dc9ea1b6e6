import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.levy.subordinator import (
    CompoundPoisson,
    ConstantJumps,
    ExponentialJumps,
    GammaJumps,
    InverseGaussianJumps,
    SubordinatorSpec,
    make_rng,
    mean_rate,
    sample_increments,
    variance_rate,
)

N = 100_000


# -------------------------
# Fixtures
# -------------------------
@pytest.fixture
def gamma_driver():
    return SubordinatorSpec(jump_part=GammaJumps(3.0, 6.0))


@pytest.fixture
def poisson_driver():
    return SubordinatorSpec(jump_part=CompoundPoisson(2.0, ExponentialJumps(1.0)))


@pytest.fixture
def ig_driver():
    return SubordinatorSpec(jump_part=InverseGaussianJumps(1.0, 2.0))


# -------------------------
# Laws
# -------------------------
@pytest.mark.parametrize("spec,mean,variance", [
    (SubordinatorSpec(drift=0.5), 0.5, 0.0),
    (SubordinatorSpec(jump_part=GammaJumps(3.0, 6.0)), 0.5, 3.0 / 36.0),
    (SubordinatorSpec(0.1, CompoundPoisson(2.0, ExponentialJumps(1.5))), 3.1, 2.0 * 2.0 * 1.5 ** 2),
    (SubordinatorSpec(jump_part=CompoundPoisson(1.0, ConstantJumps(2.0))), 2.0, 4.0),
    (SubordinatorSpec(jump_part=InverseGaussianJumps(1.0, 2.0)), 1.0, 0.5),
])
def test_moments(spec, mean, variance):
    assert mean_rate(spec) == pytest.approx(mean)
    assert variance_rate(spec) == pytest.approx(variance)


@pytest.mark.parametrize("build", [
    lambda: SubordinatorSpec(drift=-0.1),
    lambda: ExponentialJumps(0.0),
    lambda: ConstantJumps(-1.0),
    lambda: CompoundPoisson(0.0, ExponentialJumps(1.0)),
    lambda: GammaJumps(1.0, 0.0),
    lambda: InverseGaussianJumps(-1.0, 1.0),
])
def test_invalid_laws(build):
    with pytest.raises(ValueError):
        build()


# -------------------------
# Sampling
# -------------------------
def test_drift_only_increments_are_exact():
    out = sample_increments(SubordinatorSpec(drift=0.5), 0.1, 10, seed=1)
    assert_array_equal(out, np.full(10, 0.05))


def test_zero_increments():
    assert sample_increments(SubordinatorSpec(), 0.1, 5, seed=1).tolist() == [0.0] * 5
    assert len(sample_increments(SubordinatorSpec(drift=1.0), 0.1, 0, seed=1)) == 0


def test_gamma_mean(gamma_driver):
    dt = 0.1
    out = sample_increments(gamma_driver, dt, N, seed=7)
    se = math.sqrt(variance_rate(gamma_driver) * dt / N)
    assert abs(out.mean() - mean_rate(gamma_driver) * dt) < 4 * se


def test_compound_poisson_has_atom_at_zero(poisson_driver):
    out = sample_increments(poisson_driver, 1.0, N, seed=7)
    p0 = math.exp(-2.0)
    assert abs(np.mean(out == 0.0) - p0) < 4 * math.sqrt(p0 * (1 - p0) / N)
    se = math.sqrt(variance_rate(poisson_driver) / N)
    assert abs(out.mean() - 2.0) < 4 * se


def test_constant_jumps_are_multiples_of_the_size():
    spec = SubordinatorSpec(jump_part=CompoundPoisson(3.0, ConstantJumps(0.5)))
    out = sample_increments(spec, 0.5, 1000, seed=3)
    assert_array_equal(out, np.round(out / 0.5) * 0.5)


def test_inverse_gaussian_mean(ig_driver):
    dt = 0.1
    out = sample_increments(ig_driver, dt, N, seed=7)
    se = math.sqrt(variance_rate(ig_driver) * dt / N)
    assert abs(out.mean() - dt) < 4 * se


@pytest.mark.parametrize("spec", [
    SubordinatorSpec(jump_part=GammaJumps(0.5, 2.0)),
    SubordinatorSpec(0.01, CompoundPoisson(5.0, ExponentialJumps(0.1))),
    SubordinatorSpec(jump_part=InverseGaussianJumps(2.0, 0.5)),
])
def test_increments_are_nonnegative(spec):
    out = sample_increments(spec, 0.01, 1_000_000, seed=11)
    assert out.min() >= 0.0
    assert np.all(np.isfinite(out))


def test_same_seed_same_stream_is_reproducible(gamma_driver):
    a = sample_increments(gamma_driver, 0.1, 1000, seed=5)
    b = sample_increments(gamma_driver, 0.1, 1000, seed=5)
    assert_array_equal(a, b)


def test_streams_are_distinct(gamma_driver):
    a = sample_increments(gamma_driver, 0.1, 1000, seed=5, stream=0)
    b = sample_increments(gamma_driver, 0.1, 1000, seed=5, stream=1)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.15


def test_explicit_generator_wins(gamma_driver):
    a = sample_increments(gamma_driver, 0.1, 100, seed=0, rng=make_rng(9))
    b = sample_increments(gamma_driver, 0.1, 100, seed=9)
    assert_array_equal(a, b)


@pytest.mark.parametrize("dt,n", [(0.0, 10), (-0.1, 10), (0.1, -1)])
def test_sampling_arguments(gamma_driver, dt, n):
    with pytest.raises(ValueError):
        sample_increments(gamma_driver, dt, n, seed=0)
