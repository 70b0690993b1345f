import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from todashape.curve import c_coeffs, log_y, n_eval, solve_4d, solve_5d, sqrt_P, y_of_z
from todashape.dtoda import (
    LaurentSeries,
    LaxData,
    WindowError,
    lax_flow_residual,
    lax_from_curve,
    lax_power_parts,
    m_frak_series,
    oddpart,
    oddpart_at_curve_residual,
    poisson_bracket,
    symplectic_check,
    twist_map,
    verify_identification,
)
from todashape.limitshape import w_eval

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=20)
series = st.builds(
    lambda lo, cs: LaurentSeries(lo, tuple(cs)),
    st.integers(-4, 4),
    st.lists(fractions, max_size=5),
)

CURVE_4D = solve_4d(0.0, (0.0, 0.05), 1.0)
CURVE_5D = solve_5d(0.0, (0.05,), 0.3, 1.0)


def test_trimming_and_access():
    s = LaurentSeries(-2, (0, 0, 3, 0, 5, 0))
    assert s.lo == 0 and s.hi == 2 and s.coeffs == (3, 0, 5)
    assert s.coeff(2) == 5 and s.coeff(7) == 0
    assert LaurentSeries(3, (0, 0)).is_zero()
    assert LaurentSeries.from_dict({-1: 2, 1: 4}).terms() == {-1: 2, 0: 0, 1: 4}


@given(series, series, series)
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert (a - a).is_zero()


@given(series, st.integers(0, 4))
def test_power_is_repeated_product(a, k):
    expected = LaurentSeries(0, (Fraction(1),))
    for _ in range(k):
        expected = expected * a
    assert a**k == expected


@given(series)
def test_projections_split_the_series(a):
    assert a.proj("pos") + LaurentSeries(0, (a.coeff(0),)) + a.proj("neg") == a
    assert all(m > 0 for m in a.proj("pos").terms())


def test_projection_window():
    s = LaurentSeries(-1, (1, 2, 3))
    assert s.proj(0, window=(-3, 3)) == 2
    with pytest.raises(WindowError):
        s.proj(5, window=(-3, 3))
    with pytest.raises(ValueError):
        s.proj("middle")


@given(series)
def test_derivative_matches_numeric(a):
    p = 0.7 + 0.4j
    h = 1e-6
    numeric = (a(p + h) - a(p - h)) / (2 * h)
    assert abs(a.derivative()(p) - numeric) <= 1e-5 * max(1.0, abs(numeric))


def test_lax_power_coefficients_are_c_k_exactly():
    rng = random.Random(2)
    for _ in range(20):
        a = Fraction(rng.randint(1, 9), rng.randint(1, 9))
        b = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        c = c_coeffs(b, a, 11)
        for k in range(1, 11):
            _, zero, minus_one = lax_power_parts(LaxData(a, b), k)
            assert zero == c[k]
            assert 2 * minus_one == (c[k + 1] - b * c[k]) / a


def test_lax_power_parts_rejects_zero_power():
    with pytest.raises(ValueError):
        lax_power_parts(LaxData(1, 0), 0)


def test_oddpart_is_antisymmetric_for_symmetric_lax():
    L = LaxData(Fraction(2), Fraction(1, 3)).series()
    odd = oddpart(L**3)
    assert all(odd.coeff(m) == -odd.coeff(-m) for m in range(1, 4))
    assert odd.coeff(0) == 0


@pytest.mark.parametrize("curve", [CURVE_4D, CURVE_5D], ids=["4D", "5D"])
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_oddpart_at_curve(curve, k):
    rng = np.random.default_rng(k)
    z = rng.uniform(-2, 2, 20) + 1j * rng.uniform(0.1, 1.0, 20) * rng.choice([-1, 1], 20)
    assert np.max(oddpart_at_curve_residual(curve, k, z)) <= 1e-11


def test_lax_from_curve_conventions():
    assert lax_from_curve(CURVE_4D) == LaxData(CURVE_4D.lam, CURVE_4D.beta)
    assert lax_from_curve(CURVE_5D) == LaxData(CURVE_5D.R * CURVE_5D.lam, -CURVE_5D.beta)


@pytest.mark.parametrize("curve", [CURVE_4D, CURVE_5D, solve_4d(0.3, (0.02, -0.03, 0.01), 0.8),
                                   solve_5d(0.2, (0.03, -0.02), 0.4, 1.2)], ids=["4D", "5D", "4D-b", "5D-b"])
def test_identification(curve):
    rep = verify_identification(curve)
    assert rep.eq1_residual <= 1e-10
    assert rep.eq2_residual <= 1e-10
    assert rep.m_vs_n_sqrt_p <= 1e-11
    assert rep.w_to_m_residual <= 1e-11
    assert rep.eq2_status == ("string equation" if curve.theory.value == "4D" else "imposed by hand")


def test_5d_relation_sign_is_plus():
    """The opposite sign in the 5D resolvent relation is measurably wrong."""
    curve = CURVE_5D
    z = np.array([0.2 + 0.5j, -0.4 + 1.1j, 1.0 - 0.7j])
    m_at_y = m_frak_series(lax_from_curve(curve), curve.t, curve.theory, curve.R)(y_of_z(z, curve))
    lhs = w_eval(z, curve) + log_y(z, curve) + curve.potential.dV(z) / 2 + curve.R * (z - curve.s) / 2
    assert np.max(np.abs(lhs - m_at_y)) <= 1e-11
    assert np.max(np.abs(lhs + m_at_y)) >= 1e-3
    assert np.max(np.abs(m_at_y - n_eval(z, curve) * sqrt_P(z, curve))) <= 1e-11


def test_poisson_bracket_of_lax_with_itself_vanishes():
    L = LaxData(1.3, 0.2).series()
    Ls = LaxData(0.1, -0.4).series()
    p = np.exp(1j * np.linspace(0, 2 * math.pi, 9))
    assert np.max(np.abs(poisson_bracket(L, Ls, L, Ls, p))) <= 1e-14


@pytest.mark.parametrize("k", [1, 2])
def test_lax_flow_4d(k):
    assert lax_flow_residual(k, 0.0, (0.0, 0.05), 1.0, "4D") <= 1e-5


@pytest.mark.parametrize("k", [1, 2])
def test_lax_flow_5d(k):
    assert lax_flow_residual(k, 0.0, (0.05,), 0.3, "5D", R=1.0) <= 1e-5


@given(st.complex_numbers(min_magnitude=0.3, max_magnitude=3), st.complex_numbers(max_magnitude=3),
       st.floats(0.3, 3.0))
@settings(max_examples=40)
def test_twist_map_is_symplectic(z, w, a0):
    assert symplectic_check(z, w, a0) <= 1e-6


def test_twist_map_satisfies_its_relation():
    z, w, a0 = 1.3 + 0.2j, 0.4 - 0.1j, 0.7
    zb, wb = twist_map(z, w, a0)
    assert zb == pytest.approx(1 / z)
    assert w / z - np.log(z / a0) == pytest.approx(-zb * wb + np.log(1 / (zb * a0)))


def test_symplectic_check_rejects_origin():
    with pytest.raises(ValueError):
        symplectic_check(0, 1, 1.0)
