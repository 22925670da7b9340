import logging

import numpy as np
from scipy import special
from scipy.stats import poisson

logger = logging.getLogger(__name__)

__all__ = ['SeriesTruncationError', 'k_series', 'k_closed_form', 'dk_dl', 'dk_dg', 'd2k_dgdl', 'kernel_inequality']


class SeriesTruncationError(RuntimeError):
    pass


def _check_args(g, l, m):
    if not 0. <= g <= 1.:
        raise ValueError('g must lie in [0, 1], got %r' % g)
    if l < 0:
        raise ValueError('mean arrivals l must be non-negative, got %r' % l)
    if m < 0 or int(m) != m:
        raise ValueError('surplus deals m must be a non-negative integer, got %r' % m)
    return float(g), float(l), int(m)


def _log_pmf(m, mu):
    """log of mu^m e^-mu / m!, finite at mu = 0 for m = 0."""
    return special.xlogy(m, mu) - mu - special.gammaln(m + 1)


def k_series(g, l, m, tail_tol=1e-12, max_terms=10 ** 6):
    """
    K(g, L) as the literal double sum over the noise-trader count i and the
    number j of estimates below the threshold:

        sum_i L^i e^-L / i! * sum_{j >= i - m} C(i, j) g^j (1 - g)^(i - j)

    The outer sum stops at the first I with P[Poisson(L) > I] < tail_tol; the
    inner factor is a probability, so that tail bounds the neglected mass.
    :param g: probability a noise estimate falls below the threshold
    :param l: mean arrivals L = lambda * delta_t
    :param m: surplus deals M - N_I
    :return: K in [0, 1]
    """
    g, l, m = _check_args(g, l, m)
    if tail_tol <= 0:
        raise ValueError('tail_tol must be positive, got %r' % tail_tol)
    last = max(int(poisson.isf(tail_tol, l)) if l > 0 else 0, m)
    while special.pdtrc(last, l) >= tail_tol:
        last += 1
        if last + 1 > max_terms:
            break
    if last + 1 > max_terms:
        raise SeriesTruncationError(
            'series for K(g=%r, L=%r, m=%d) needs more than max_terms=%d outer terms' % (g, l, m, max_terms))
    logger.debug('k_series g=%.6g L=%.6g m=%d truncated at i=%d', g, l, m, last)

    i = np.arange(last + 1, dtype=np.float64)[:, None]
    k = np.arange(m + 1, dtype=np.float64)[None, :]  # estimates above the threshold
    valid = k <= i
    i_b, k_b = np.broadcast_arrays(i, k)
    k_b = np.where(valid, k_b, 0.)
    # Poisson weight times the binomial term; the i! factors cancel
    log_terms = (special.xlogy(i_b, l) - l - special.gammaln(k_b + 1) - special.gammaln(i_b - k_b + 1)
                 + special.xlogy(i_b - k_b, g) + special.xlogy(k_b, 1. - g))
    terms = np.where(valid, np.exp(log_terms), 0.)
    return float(min(max(terms.sum(), 0.), 1.))


def k_closed_form(g, l, m):
    """Poisson CDF at m with the thinned rate L(1 - g)."""
    g, l, m = _check_args(g, l, m)
    return float(special.pdtr(m, l * (1. - g)))


def dk_dl(g, l, m):
    """dK/dL = -L^m (1 - g)^(m + 1) e^(-L(1 - g)) / m!"""
    g, l, m = _check_args(g, l, m)
    if g == 1.:
        return 0.
    return float(-(1. - g) * np.exp(_log_pmf(m, l * (1. - g))))


def dk_dg(g, l, m):
    """dK/dg = L^(m + 1) (1 - g)^m e^(-L(1 - g)) / m!"""
    g, l, m = _check_args(g, l, m)
    if l == 0.:
        return 0.
    return float(l * np.exp(_log_pmf(m, l * (1. - g))))


def d2k_dgdl(g, l, m):
    g, l, m = _check_args(g, l, m)
    mu = l * (1. - g)
    return float(((m + 1) - mu) * np.exp(_log_pmf(m, mu)))


def kernel_inequality(g, l, m):
    """K * d2K/dgdL - dK/dL * dK/dg; positive wherever g < 1."""
    return k_closed_form(g, l, m) * d2k_dgdl(g, l, m) - dk_dl(g, l, m) * dk_dg(g, l, m)
