import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from src.errors import DerivativeOrderError
from src.measure.delay_measure import (
    DelayMeasure,
    ExpPolyTerm,
    GridParams,
    Sign,
    first_moment,
    is_nonneg_on_positive,
    laplace_deriv,
    necessary_mass_check,
    total_mass,
)


# -------------------------
# Fixtures
# -------------------------
@pytest.fixture
def left_regime():
    """-delta_0 + 0.2 delta_1"""
    return DelayMeasure.discrete_delay(1.0, 0.2, 1.0)


@pytest.fixture
def right_regime():
    """-delta_0 - 0.8 delta_1"""
    return DelayMeasure.discrete_delay(1.0, -0.8, 1.0)


def density(*terms):
    return DelayMeasure(0.0, (), tuple(ExpPolyTerm(*t) for t in terms))


# -------------------------
# Construction
# -------------------------
def test_atoms_are_sorted_and_validated():
    phi = DelayMeasure(1.0, ((2.0, 0.1), (1.0, 0.3)))
    assert phi.atoms == ((1.0, 0.3), (2.0, 0.1))
    assert phi.max_lag == 2.0
    with pytest.raises(ValueError):
        DelayMeasure(1.0, ((0.0, 0.1),))
    with pytest.raises(ValueError):
        DelayMeasure(1.0, ((1.0, 0.1), (1.0, 0.2)))


def test_density_terms_need_negative_rates():
    with pytest.raises(ValueError):
        ExpPolyTerm(1.0, 0.0)
    with pytest.raises(ValueError):
        ExpPolyTerm(1.0, -1.0, power=-1)


def test_eta_drops_the_atom_at_zero(left_regime):
    assert left_regime.eta.lambda0 == 0.0
    assert left_regime.eta.atoms == left_regime.atoms


# -------------------------
# Mass conditions
# -------------------------
def test_total_mass(left_regime):
    assert total_mass(left_regime) == pytest.approx(-0.8)
    assert necessary_mass_check(left_regime)


def test_positive_mass_fails_necessary_condition():
    phi = DelayMeasure.discrete_delay(0.5, 1.0, 1.0)
    assert total_mass(phi) == pytest.approx(0.5)
    assert not necessary_mass_check(phi)


def test_density_mass():
    phi = DelayMeasure(1.5, (), (ExpPolyTerm(0.25, -1.5),))
    assert total_mass(phi) == pytest.approx(-1.5 + 0.25 / 1.5)


def test_total_variation_single_sign_is_exact():
    phi = DelayMeasure(1.0, ((1.0, -0.8),), (ExpPolyTerm(2.0, -1.0, 1),))
    assert phi.total_variation() == pytest.approx(1.0 + 0.8 + 2.0)


def test_first_moment(right_regime):
    moment = first_moment(right_regime.eta)
    assert moment.value == pytest.approx(-0.8)
    assert not moment.violates_necessary_condition
    assert first_moment(DelayMeasure.discrete_delay(1.0, -1.5, 1.0)).violates_necessary_condition


# -------------------------
# Laplace transforms
# -------------------------
def test_laplace_of_atom(left_regime):
    assert laplace_deriv(left_regime, 0.0) == pytest.approx(0.2)
    assert laplace_deriv(left_regime, 0.0, 1) == pytest.approx(-0.2)
    assert laplace_deriv(left_regime, 2.0, 2) == pytest.approx(0.2 * math.exp(-2.0))


@pytest.mark.parametrize("x,n", [(0.0, 0), (0.5, 0), (0.5, 1), (1.5, 3)])
def test_laplace_of_density_matches_quadrature(x, n):
    term = ExpPolyTerm(2.0, -1.0, 1)
    expected, _ = quad(lambda t: (-t) ** n * math.exp(-x * t) * term.value(t), 0, np.inf)
    assert laplace_deriv(density((2.0, -1.0, 1)), x, n) == pytest.approx(expected, rel=1e-8)


def test_laplace_ignores_lambda0():
    a = DelayMeasure(5.0, ((1.0, 0.3),))
    b = DelayMeasure(0.0, ((1.0, 0.3),))
    assert laplace_deriv(a, 0.7) == laplace_deriv(b, 0.7)


def test_laplace_conjugate_symmetry():
    phi = DelayMeasure(1.0, ((1.0, 0.3),), (ExpPolyTerm(1.0, -2.0),))
    y = np.array([0.5, 3.0])
    assert_allclose(laplace_deriv(phi, -1j * y), np.conj(laplace_deriv(phi, 1j * y)))


def test_derivative_order_is_bounded(left_regime):
    with pytest.raises(DerivativeOrderError):
        laplace_deriv(left_regime, 0.0, 13)


# -------------------------
# Sign on (0, inf)
# -------------------------
def test_negative_atom_gives_witness(right_regime):
    verdict = is_nonneg_on_positive(right_regime)
    assert verdict.status == Sign.NO
    assert verdict.witness == 1.0


def test_atoms_only_positive(left_regime):
    assert is_nonneg_on_positive(left_regime).is_yes


@pytest.mark.parametrize("terms,expected", [
    ([(0.25, -1.5, 0)], Sign.YES),
    ([(-0.75, -2.5, 0)], Sign.NO),
    ([(1.3125, -2.25, 0), (3.828125, -2.25, 1)], Sign.YES),
    ([(1.0, -1.0, 0), (-1.0, -1.0, 1)], Sign.NO),
    ([(1.0, -1.0, 0), (-0.5, -2.0, 0)], Sign.YES),
    ([(1.0, -1.0, 0), (-2.0, -2.0, 0)], Sign.NO),
    ([(-1.0, -1.0, 0), (3.0, -2.0, 0)], Sign.NO),
])
def test_exact_density_sign(terms, expected):
    phi = density(*terms)
    verdict = is_nonneg_on_positive(phi)
    assert verdict.status == expected
    if expected == Sign.NO:
        assert phi.density_value(verdict.witness) < 0


def test_scan_accepts_positive_three_term_density():
    # e^{-3t} (u^2 - 3u + 3) with u = e^t has no real zero
    phi = density((1.0, -1.0), (-3.0, -2.0), (3.0, -3.0))
    verdict = is_nonneg_on_positive(phi)
    assert verdict.is_yes
    assert verdict.numerically_verified


def test_scan_finds_interior_dip():
    # e^{-3t} (u - 1)(u - 1.5) is negative for t in (0, log 1.5)
    phi = density((1.0, -1.0), (-2.5, -2.0), (1.5, -3.0))
    verdict = is_nonneg_on_positive(phi)
    assert verdict.status == Sign.NO
    assert 0 < verdict.witness < math.log(1.5)
    assert phi.density_value(verdict.witness) < 0


def test_scan_detects_negative_tail():
    phi = density((-1.0, -1.0), (5.0, -2.0), (5.0, -3.0))
    verdict = is_nonneg_on_positive(phi, GridParams(n_points=500))
    assert verdict.status == Sign.NO
    assert phi.density_value(verdict.witness) < 0


def test_negative_tail_witness_past_underflow():
    # -e^{-t} takes over once 1e300 e^{-1.5 t} drops below it, at t = 2 log(1e300)
    phi = density((-1.0, -1.0), (1e300, -1.5), (1.0, -3.0))
    verdict = is_nonneg_on_positive(phi)
    crossing = 2 * math.log(1e300)
    assert verdict.status == Sign.NO
    assert verdict.notes == ("negative at infinity",)
    assert crossing <= verdict.witness < 2 * crossing


@settings(max_examples=40, deadline=None)
@given(st.lists(
    st.tuples(st.floats(0.01, 5.0), st.floats(-4.0, -0.1), st.integers(0, 3)),
    min_size=1, max_size=4,
))
def test_positive_coefficients_are_nonnegative(terms):
    phi = density(*terms)
    assert is_nonneg_on_positive(phi, GridParams(n_points=2000)).is_yes
