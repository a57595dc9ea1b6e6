import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.errors import LagResolutionError, NonStationaryModelError
from src.kernel.kernel import kernel_fft, kernel_step_method
from src.levy.subordinator import (
    CompoundPoisson,
    ExponentialJumps,
    GammaJumps,
    SubordinatorSpec,
    mean_rate,
    sample_increments,
)
from src.measure.delay_measure import DelayMeasure, ExpPolyTerm
from src.multivar.multivar import MatrixDelayMeasure, matrix_kernel_fft
from src.simulate.simulate import (
    PathMeta,
    PathSample,
    default_burn_in,
    path_stats,
    simulate_euler,
    simulate_ma,
    simulate_ma_multivariate,
)

DT = 0.01


# -------------------------
# Fixtures
# -------------------------
@pytest.fixture
def gamma_driver():
    return SubordinatorSpec(jump_part=GammaJumps(3.0, 6.0))


@pytest.fixture
def ou():
    return DelayMeasure(1.0)


@pytest.fixture
def left_regime():
    return DelayMeasure.discrete_delay(1.0, 0.2, 1.0)


def fft_kernel(phi, horizon=40.0):
    return kernel_fft(phi, horizon, int(round(horizon / DT)))


# -------------------------
# Moving-average scheme
# -------------------------
def test_ou_path_is_nonnegative(ou, gamma_driver):
    path = simulate_ma(fft_kernel(ou), gamma_driver, 50.0, seed=1)
    assert len(path.t) == 5000
    assert path.x.min() >= 0.0
    assert path.meta.scheme == "ma"
    assert path.meta.warnings == ()


def test_delay_path_from_step_kernel_is_nonnegative(left_regime, gamma_driver):
    g = kernel_step_method(left_regime, 40.0, DT)
    path = simulate_ma(g, gamma_driver, 50.0, seed=2)
    assert path.x.min() >= 0.0


def test_zero_driver_gives_zero_path(ou):
    path = simulate_ma(fft_kernel(ou), SubordinatorSpec(), 5.0, seed=0)
    assert_array_equal(path.x, np.zeros(500))


def test_ma_is_reproducible(ou, gamma_driver):
    g = fft_kernel(ou)
    a = simulate_ma(g, gamma_driver, 10.0, seed=3)
    b = simulate_ma(g, gamma_driver, 10.0, seed=3)
    c = simulate_ma(g, gamma_driver, 10.0, seed=4)
    assert_array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_ma_checks_increment_count(ou, gamma_driver):
    g = fft_kernel(ou, 10.0)
    with pytest.raises(ValueError):
        simulate_ma(g, gamma_driver, 1.0, seed=0, increments=np.zeros(10))


def test_ma_rejects_horizon_below_one_step(ou, gamma_driver):
    with pytest.raises(ValueError, match="shorter than one step"):
        simulate_ma(fft_kernel(ou, 10.0), gamma_driver, 0.004, seed=0)


def test_short_horizon_warns(ou, gamma_driver):
    path = simulate_ma(kernel_fft(ou, 2.0, 200), gamma_driver, 1.0, seed=0)
    assert path.meta.warnings
    assert "kernel tail" in path.meta.warnings[0]


@pytest.mark.parametrize("phi,stationary_mean", [
    (DelayMeasure(1.0), 0.5),
    (DelayMeasure.discrete_delay(1.0, 0.2, 1.0), 0.5 / 0.8),
])
def test_long_run_mean(phi, stationary_mean, gamma_driver):
    path = simulate_ma(fft_kernel(phi), gamma_driver, 1000.0, seed=9)
    batches = path.x.reshape(20, -1).mean(axis=1)
    se = batches.std(ddof=1) / np.sqrt(len(batches))
    assert -mean_rate(gamma_driver) / phi.total_mass() == pytest.approx(stationary_mean)
    assert abs(path.x.mean() - stationary_mean) < 4 * se


# -------------------------
# Euler scheme
# -------------------------
@pytest.mark.parametrize("phi", [DelayMeasure(1.0), DelayMeasure.discrete_delay(1.0, 0.2, 1.0)])
def test_euler_matches_ma_with_shared_increments(phi, gamma_driver):
    g = fft_kernel(phi)
    T = 20.0
    n_out = int(round(T / DT))
    increments = sample_increments(gamma_driver, DT, n_out + len(g) - 1, seed=5)
    ma = simulate_ma(g, gamma_driver, T, seed=5, increments=increments)
    euler = simulate_euler(phi, gamma_driver, T, DT, seed=5, increments=increments)
    assert len(ma.x) == len(euler.x) == n_out
    assert np.max(np.abs(ma.x - euler.x)) <= 0.05


def test_euler_zero_driver(left_regime):
    path = simulate_euler(left_regime, SubordinatorSpec(), 5.0, DT, seed=0)
    assert_array_equal(path.x, np.zeros(500))


def test_euler_burn_in(left_regime, gamma_driver):
    assert default_burn_in(left_regime) == pytest.approx(20.0)
    path = simulate_euler(left_regime, gamma_driver, 5.0, DT, seed=0, burn_in=3.0)
    assert path.meta.burn_in == pytest.approx(3.0)
    assert path.meta.scheme == "euler"


def test_euler_with_density(gamma_driver):
    phi = DelayMeasure(1.5, (), (ExpPolyTerm(0.25, -1.5),))
    assert simulate_euler(phi, gamma_driver, 5.0, DT, seed=0).x.min() >= 0.0


def test_euler_snaps_lags(gamma_driver):
    phi = DelayMeasure.discrete_delay(1.0, 0.2, 1.003)
    path = simulate_euler(phi, gamma_driver, 2.0, DT, seed=0)
    assert any("lag snapping" in w for w in path.meta.warnings)


def test_euler_rejects_coarse_steps(gamma_driver):
    with pytest.raises(LagResolutionError):
        simulate_euler(DelayMeasure.discrete_delay(1.0, 0.2, 0.5), gamma_driver, 5.0, 1.0, seed=0)


def test_euler_rejects_nonstationary_model(gamma_driver):
    with pytest.raises(NonStationaryModelError):
        simulate_euler(DelayMeasure(-1.0), gamma_driver, 5.0, DT, seed=0)


def test_euler_rejects_horizon_below_one_step(ou, gamma_driver):
    with pytest.raises(ValueError, match="shorter than one step"):
        simulate_euler(ou, gamma_driver, 0.004, DT, seed=0)


def test_euler_needs_enough_increments(ou, gamma_driver):
    with pytest.raises(ValueError):
        simulate_euler(ou, gamma_driver, 5.0, DT, seed=0, increments=np.zeros(10))


@pytest.mark.slow
def test_right_regime_paths_go_negative():
    phi = DelayMeasure.discrete_delay(1.0, -0.8, 1.0)
    driver = SubordinatorSpec(jump_part=CompoundPoisson(1.0, ExponentialJumps(1.0)))
    negative = sum(
        path_stats(simulate_euler(phi, driver, 200.0, DT, seed=seed)).min < 0 for seed in range(20)
    )
    assert negative >= 18


# -------------------------
# Multivariate
# -------------------------
def test_decoupled_system_matches_univariate_paths(gamma_driver):
    blocks = [DelayMeasure(1.0), DelayMeasure(2.0)]
    kernels = matrix_kernel_fft(MatrixDelayMeasure.from_blocks(blocks), 20.0, 2000)
    drivers = [gamma_driver, SubordinatorSpec(jump_part=GammaJumps(1.0, 1.0))]
    path = simulate_ma_multivariate(kernels, drivers, 10.0, seed=4)
    assert path.dimension == 2
    for k, phi in enumerate(blocks):
        single = simulate_ma(kernel_fft(phi, 20.0, 2000), drivers[k], 10.0, seed=4, stream=k)
        assert_allclose(path.x[:, k], single.x, atol=1e-8)


def test_multivariate_needs_one_driver_per_component(gamma_driver):
    kernels = matrix_kernel_fft(MatrixDelayMeasure.from_blocks([DelayMeasure(1.0)] * 2), 10.0, 1000)
    with pytest.raises(ValueError):
        simulate_ma_multivariate(kernels, [gamma_driver], 1.0, seed=0)


def test_multivariate_rejects_horizon_below_one_step(gamma_driver):
    kernels = matrix_kernel_fft(MatrixDelayMeasure.from_blocks([DelayMeasure(1.0)] * 2), 10.0, 1000)
    with pytest.raises(ValueError, match="shorter than one step"):
        simulate_ma_multivariate(kernels, [gamma_driver] * 2, 0.004, seed=0)


def test_multivariate_csv_header(tmp_path, gamma_driver):
    kernels = matrix_kernel_fft(MatrixDelayMeasure.from_blocks([DelayMeasure(1.0)] * 2), 10.0, 1000)
    path = simulate_ma_multivariate(kernels, [gamma_driver] * 2, 1.0, seed=0)
    lines = path.to_csv(tmp_path / "path.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2"
    assert len(lines) == 101


# -------------------------
# Path statistics
# -------------------------
def test_path_stats():
    meta = PathMeta("ma", 0, 1.0, 0.0)
    stats = path_stats(PathSample(np.arange(4.0), np.array([1.0, -2.0, 3.0, 0.0]), meta))
    assert stats.min == -2.0
    assert stats.argmin == 1
    assert stats.mean == pytest.approx(0.5)
    assert stats.fraction_negative == pytest.approx(0.25)


def test_path_stats_multivariate_argmin_is_a_time_index():
    meta = PathMeta("ma", 0, 1.0, 0.0)
    x = np.array([[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]])
    stats = path_stats(PathSample(np.arange(3.0), x, meta))
    assert stats.min == -1.0
    assert stats.argmin == 1


def test_path_stats_empty():
    with pytest.raises(ValueError):
        path_stats(PathSample(np.array([]), np.array([]), PathMeta("ma", 0, 1.0, 0.0)))


def test_path_csv(tmp_path, ou, gamma_driver):
    path = simulate_ma(fft_kernel(ou, 10.0), gamma_driver, 1.0, seed=0)
    out = path.to_csv(tmp_path / "path.csv")
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert out.read_text().splitlines()[0] == "t,x"
    assert_array_equal(data[:, 1], path.x)
