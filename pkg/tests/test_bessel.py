import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from obslab.bessel import bessel_j, bessel_j_scaled, first_positive_root

ORDERS = [0, 0.5, 1, 1.5, 2, 2.5, 3, 4.5, 7]


def test_j0_at_zero():
    assert bessel_j(0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert bessel_j(2, 0.0) == 0.0


def test_half_order_closed_form():
    x = math.pi / 2
    assert bessel_j(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x), abs=1e-14)


@pytest.mark.parametrize("nu", ORDERS)
def test_matches_reference_on_0_100(nu):
    x = np.linspace(0.0, 100.0, 4001)
    assert np.max(np.abs(bessel_j(nu, x) - special.jv(nu, x))) <= 1e-10


def test_first_root_of_j1():
    root = first_positive_root(1)
    assert root == pytest.approx(special.jn_zeros(1, 1)[0], abs=1e-12)
    assert abs(bessel_j(1, 3.8317)) < 1e-4
    assert abs(bessel_j(1, root)) < 1e-13


def test_first_root_of_j_three_halves_solves_tan_x_eq_x():
    r = first_positive_root(1.5)
    assert math.tan(r) == pytest.approx(r, rel=1e-10)
    assert r == pytest.approx(4.4934094579, abs=1e-9)


def test_scaled_is_continuous_at_zero():
    # x^{-nu} J_nu(x) -> 1 / (2^nu Gamma(nu+1))
    for nu in (0.5, 1.0, 1.5):
        limit = 1.0 / (2**nu * math.gamma(nu + 1))
        assert bessel_j_scaled(nu, 0.0) == pytest.approx(limit, rel=1e-14)
        assert bessel_j_scaled(nu, 1e-9) == pytest.approx(limit, rel=1e-12)


@pytest.mark.parametrize("bad", [(-0.5, 1.0), (0.3, 1.0), (1.0, -1.0)])
def test_rejects_invalid_input(bad):
    with pytest.raises(ValueError):
        bessel_j(*bad)


@given(st.sampled_from([1, 1.5, 2, 3.5]), st.floats(0.05, 80.0))
def test_three_term_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    assert lhs == pytest.approx(2 * nu / x * bessel_j(nu, x), abs=1e-10 * max(1.0, 2 * nu / x))
