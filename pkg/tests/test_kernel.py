import math

import numpy as np
import pytest

from modules.functional.kernel import (SeriesTruncationError, d2k_dgdl, dk_dg, dk_dl, k_closed_form, k_series,
                                       kernel_inequality)


def test_k_closed_form_values():
    assert k_closed_form(0.3, 0., 2) == 1.
    assert k_closed_form(1., 50., 0) == 1.
    assert k_closed_form(0., 2., 1) == pytest.approx(3. * math.exp(-2.), rel=1e-12)
    assert k_closed_form(0., 2., 1) == pytest.approx(0.406006, abs=1e-6)


def test_k_series_values():
    assert k_series(0.4, 0., 3) == pytest.approx(1., abs=1e-15)
    assert k_series(1., 7., 2) == pytest.approx(1., abs=1e-11)
    poisson_cdf = sum(4. ** i * math.exp(-4.) / math.factorial(i) for i in range(3))
    assert k_series(0., 4., 2) == pytest.approx(poisson_cdf, abs=1e-11)


def test_series_matches_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(60):
        g = float(rng.uniform())
        l = float(10 ** rng.uniform(-2, 3))
        m = int(rng.integers(0, 101))
        assert abs(k_series(g, l, m) - k_closed_form(g, l, m)) < 1e-11


def test_series_loose_tolerance():
    for g, l, m in [(0.2, 30., 5), (0.7, 3., 0), (0.5, 500., 80)]:
        assert abs(k_series(g, l, m, tail_tol=1e-2) - k_closed_form(g, l, m)) < 1e-1


def test_series_truncation_error():
    with pytest.raises(SeriesTruncationError):
        k_series(0.5, 1000., 2, max_terms=50)


def test_argument_checks():
    with pytest.raises(ValueError):
        k_closed_form(1.2, 1., 1)
    with pytest.raises(ValueError):
        k_closed_form(0.5, -1., 1)
    with pytest.raises(ValueError):
        dk_dl(0.5, 1., 1.5)


def test_derivative_values():
    assert dk_dl(1., 3., 2) == 0.
    assert dk_dg(0.3, 0., 2) == 0.
    assert dk_dl(0., 1., 0) == pytest.approx(-math.exp(-1.), rel=1e-14)
    assert dk_dg(0., 1., 0) == pytest.approx(math.exp(-1.), rel=1e-14)


@pytest.mark.parametrize('g,l,m', [(0.1, 0.5, 0), (0.3, 2., 1), (0.6, 8., 5), (0.9, 40., 10), (0.05, 4., 2)])
def test_derivatives_match_finite_differences(g, l, m):
    h = 1e-6 * max(1., l)
    numeric_l = (k_closed_form(g, l + h, m) - k_closed_form(g, l - h, m)) / (2 * h)
    numeric_g = (k_closed_form(g + 1e-6, l, m) - k_closed_form(g - 1e-6, l, m)) / 2e-6
    assert abs(numeric_l - dk_dl(g, l, m)) <= 1e-6 * abs(dk_dl(g, l, m)) + 1e-9
    assert abs(numeric_g - dk_dg(g, l, m)) <= 1e-6 * abs(dk_dg(g, l, m)) + 1e-9
    h = 1e-4
    numeric_gl = (dk_dg(g, l + h, m) - dk_dg(g, l - h, m)) / (2 * h)
    assert d2k_dgdl(g, l, m) == pytest.approx(numeric_gl, rel=1e-6, abs=1e-9)


def test_kernel_monotone():
    ls = np.linspace(0., 20., 41)
    values = [k_closed_form(0.4, l, 3) for l in ls]
    assert all(b <= a for a, b in zip(values, values[1:]))
    gs = np.linspace(0., 1., 41)
    values = [k_closed_form(g, 6., 3) for g in gs]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert all(0. <= v <= 1. for v in values)


def test_kernel_inequality_positive():
    for g in (0.05, 0.3, 0.7, 0.95):
        for l in (0.5, 1., 2., 4., 8.):
            for m in (0, 1, 2, 5, 10):
                assert kernel_inequality(g, l, m) > 0
