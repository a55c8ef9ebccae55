from math import comb, factorial, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphtv.wigner import build_delta_table


def d_direct(el, mp, m):
    """Factorial-sum Wigner d^el_{mp,m}(pi/2)."""
    pref = sqrt(factorial(el + mp) * factorial(el - mp) * factorial(el + m) * factorial(el - m))
    total = 0.0
    for k in range(max(0, m - mp), min(el + m, el - mp) + 1):
        den = factorial(el + m - k) * factorial(k) * factorial(mp - m + k) * factorial(el - mp - k)
        total += (-1) ** (mp - m + k) / den
    return pref * total * 2.0 ** (-el)


def test_el0():
    assert build_delta_table(1)(0, 0, 0) == 1.0


def test_el1_values():
    t = build_delta_table(2)
    assert t(1, 0, 0) == pytest.approx(0, abs=1e-15)
    assert t(1, 1, 1) == pytest.approx(0.5)
    assert t(1, 1, 0) == pytest.approx(-1 / sqrt(2))
    assert t(1, 1, -1) == pytest.approx(0.5)


@pytest.mark.parametrize("el", range(11))
def test_matches_factorial_formula(el):
    full = build_delta_table(11).full(el)
    ref = np.array([[d_direct(el, mp, m) for m in range(-el, el + 1)] for mp in range(-el, el + 1)])
    assert np.max(np.abs(full - ref)) <= 1e-12


@pytest.mark.parametrize("L", [1, 8, 64, 128])
def test_orthonormal(L):
    t = build_delta_table(L)
    worst = max(np.max(np.abs(t.full(el).T @ t.full(el) - np.eye(2 * el + 1))) for el in range(L))
    assert worst <= 1e-10


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_symmetries(data):
    el = data.draw(st.integers(0, 40))
    mp = data.draw(st.integers(-el, el))
    m = data.draw(st.integers(-el, el))
    t = build_delta_table(41)
    v = t(el, mp, m)
    sign = (-1) ** ((mp - m) % 2)
    assert t(el, m, mp) == pytest.approx(sign * v, abs=1e-13)
    assert t(el, -mp, -m) == pytest.approx(sign * v, abs=1e-13)


def test_half_storage_shape():
    t = build_delta_table(5)
    for el in range(5):
        assert t.half[el].shape == (el + 1, 2 * el + 1)


def test_rejects_zero():
    with pytest.raises(ValueError):
        build_delta_table(0)


def test_binomial_helper_consistency():
    # d^el_{el,m}(pi/2) = (-1)^(el-m) 2^-el sqrt(C(2el, el+m))
    t = build_delta_table(12)
    for el in range(12):
        for m in range(-el, el + 1):
            ref = (-1) ** (el - m) * 2.0**-el * sqrt(comb(2 * el, el + m))
            assert t(el, el, m) == pytest.approx(ref, abs=1e-13)
