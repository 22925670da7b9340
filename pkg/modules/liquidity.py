import logging
import math
from dataclasses import dataclass, replace
from multiprocessing import Pool

import numpy as np

from model.firm import FirmKind, agency_cost_share, agency_cost_slope, derive_x_dynamics, s_bar, share_value
from modules.auction import ValuationContext, simulate_final_prices
from modules.functional.kernel import dk_dg, dk_dl, k_closed_form, k_series, kernel_inequality
from utils.metrics import iterate_in_chunks, sign_with_tolerance

logger = logging.getLogger(__name__)

__all__ = ['ConsistencyError', 'DegenerateStepError', 'LiquidityQuery', 'SeriesControl', 'LiquidityPoint',
           'MonteCarloEstimate', 'SignReport', 'ill_from_f', 'g_s0', 'dg_dcm', 'valuation_context', 'f_s0', 'mc_estimate_f',
           'delta_lambda_ill', 'delta_cm_ill', 'cross_partial_signs']

MC_BLOCK_SIZE = 4096
EXPECTED_SIGNS = (1, -1, -1)


class ConsistencyError(ArithmeticError):
    pass


class DegenerateStepError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LiquidityQuery:
    s0: float

    def __post_init__(self):
        if not 0. <= self.s0 < 1.:
            raise ValueError('s0 must lie in [0, 1), got %r' % self.s0)


@dataclass(frozen=True)
class SeriesControl:
    tail_tol: float = 1e-12
    max_terms: int = 10 ** 6

    def __post_init__(self):
        if self.tail_tol <= 0:
            raise ValueError('tail_tol must be positive, got %r' % self.tail_tol)
        if self.max_terms < 1:
            raise ValueError('max_terms must be positive, got %r' % self.max_terms)


@dataclass(frozen=True)
class LiquidityPoint:
    s0: float
    f_value: float
    ill_value: float
    g: float = 0.
    rho: float = 0.
    s_bar: float = 0.


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    std_error: float
    trials: int
    hits: int


@dataclass(frozen=True)
class SignReport:
    d_ill_d_lambda: float
    d_ill_d_cm: float
    d2_ill_dcm_dlambda: float
    signs: tuple
    noise_floors: tuple
    analytic: tuple

    @property
    def contradicts(self):
        """
        True when a numeric sign differs from (+, -, -). A flat sign is accepted
        only where the closed-form partial is itself within the noise floor.
        """
        for sign, expected, closed, floor in zip(self.signs, EXPECTED_SIGNS, self.analytic, self.noise_floors):
            if sign == expected or (sign == 0 and abs(closed) <= floor):
                continue
            return True
        return False


def ill_from_f(f_value):
    return math.inf if f_value <= 0. else -math.log(f_value)


def g_s0(s0, gov, rho):
    """
    Probability that a noise trader's estimate lies below (1 - s0) V(rho):
    1 - (rho + s0 - s0 rho) / c_m, and 0 once s0 reaches s_bar.
    """
    if gov.c_m == 0:
        return 0.
    if s0 >= s_bar(gov, rho):
        return 0.
    g = 1. - (rho + s0 - s0 * rho) / gov.c_m
    if not -1e-12 <= g <= 1. + 1e-12:
        raise ConsistencyError('g=%r outside [0, 1] for s0=%r, rho=%r, c_m=%r' % (g, s0, rho, gov.c_m))
    # roundoff only
    return min(max(g, 0.), 1.)


def dg_dcm(s0, gov, firm):
    """((1 - s0) G(c_m) + s0) / c_m^2 with G = rho - c_m rho'; rho' = 0 for controlled firms."""
    rho = agency_cost_share(gov, firm)
    if gov.c_m == 0 or s0 >= s_bar(gov, rho):
        return 0.
    big_g = rho - gov.c_m * agency_cost_slope(gov, firm)
    return ((1. - s0) * big_g + s0) / gov.c_m ** 2


def valuation_context(gov, firm):
    dyn = derive_x_dynamics(firm)
    rho = agency_cost_share(gov, firm)
    return ValuationContext(informed_value=share_value(firm, dyn, rho), floor=share_value(firm, dyn, gov.c_m),
                            ceiling=share_value(firm, dyn, 0.), rho=rho)


def f_s0(query, gov, firm, market, ctl=None, method='closed'):
    """
    Probability that the post-sale discount rate exceeds s0, with ILL = -ln F.
    Only the mean arrivals over one interval enter, never the calendar times.
    """
    ctl = ctl or SeriesControl()
    rho = agency_cost_share(gov, firm)
    sb = s_bar(gov, rho)
    if market.n_informed > market.m_deals or query.s0 >= sb:
        return LiquidityPoint(s0=query.s0, f_value=0., ill_value=math.inf, g=0., rho=rho, s_bar=sb)
    g = g_s0(query.s0, gov, rho)
    if method == 'closed':
        f_value = k_closed_form(g, market.mean_arrivals, market.surplus_deals)
    elif method == 'series':
        f_value = k_series(g, market.mean_arrivals, market.surplus_deals, ctl.tail_tol, ctl.max_terms)
    else:
        raise ValueError('unknown method %r' % method)
    f_value = min(max(f_value, 0.), 1.)
    return LiquidityPoint(s0=query.s0, f_value=f_value, ill_value=ill_from_f(f_value), g=g, rho=rho, s_bar=sb)


def _count_block(args):
    context, market, threshold, size, entropy, block = args
    seed = np.random.SeedSequence(entropy, spawn_key=(block,))
    prices = simulate_final_prices(context, market, size, seed)
    return int(np.count_nonzero(prices < threshold))


def mc_estimate_f(query, gov, firm, market, trials, rng_seed, workers=1, block_size=MC_BLOCK_SIZE):
    """
    Monte Carlo frequency of a final price below (1 - s0) V(rho).
    Trials run in fixed blocks seeded from (rng_seed, block index), so the
    estimate does not depend on the worker count.
    :param rng_seed: int or sequence of ints, e.g. (master seed, grid point)
    """
    if trials < 1:
        raise ValueError('trials must be at least 1, got %r' % trials)
    context = valuation_context(gov, firm)
    threshold = (1. - query.s0) * context.informed_value
    entropy = list(rng_seed) if isinstance(rng_seed, (tuple, list)) else rng_seed
    sizes = [len(chunk) for chunk in iterate_in_chunks(range(trials), block_size)]
    jobs = [(context, market, threshold, size, entropy, b) for b, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with Pool(workers) as pool:
            hits = sum(pool.imap(_count_block, jobs))
    else:
        hits = sum(map(_count_block, jobs))
    estimate = hits / trials
    logger.debug('mc s0=%.6g c_m=%.6g lambda=%.6g: %d/%d blocks=%d', query.s0, gov.c_m, market.lam,
                 hits, trials, len(jobs))
    return MonteCarloEstimate(estimate=estimate, std_error=math.sqrt(estimate * (1. - estimate) / trials),
                              trials=trials, hits=hits)


def _ill(query, gov, firm, market, lam=None):
    if lam is not None:
        market = replace(market, lam=lam)
    return f_s0(query, gov, firm, market).ill_value


def delta_lambda_ill(query, gov, firm, market, lambda1, lambda2):
    """ILL(lambda2) - ILL(lambda1) at fixed governance."""
    if not lambda1 < lambda2:
        raise ValueError('need lambda1 < lambda2, got %r >= %r' % (lambda1, lambda2))
    if query.s0 >= s_bar(gov, agency_cost_share(gov, firm)):
        raise ValueError('s0=%r leaves no discount range at c_m=%r' % (query.s0, gov.c_m))
    return _ill(query, gov, firm, market, lambda2) - _ill(query, gov, firm, market, lambda1)


def delta_cm_ill(query, gov_pair, firm, market, lam):
    """
    ILL(c_m2) - ILL(c_m1) for the pair (gov at c_m1, gov at c_m2), c_m2 < c_m1.
    +inf when the better governance already closes the discount range at s0.
    """
    gov_worse, gov_better = gov_pair
    if not gov_better.c_m < gov_worse.c_m:
        raise ValueError('need c_m2 < c_m1, got %r >= %r' % (gov_better.c_m, gov_worse.c_m))
    ill_worse = _ill(query, gov_worse, firm, market, lam)
    ill_better = _ill(query, gov_better, firm, market, lam)
    if math.isinf(ill_worse):
        raise ValueError('s0=%r leaves no discount range at c_m1=%r' % (query.s0, gov_worse.c_m))
    return ill_better - ill_worse


def _noise_floor(values, step):
    return 1e3 * np.finfo(np.float64).eps * (max(abs(v) for v in values) + 1.) / step


def _richardson(derivative, h, order=2):
    coarse, fine = derivative(h), derivative(0.5 * h)
    return (2 ** order * fine - coarse) / (2 ** order - 1)


def cross_partial_signs(query, gov, firm, market, rel_step=1e-4, mixed_rel_step=1e-3):
    """
    Finite-difference derivatives of ILL in lambda and c_m, with the mixed partial,
    at a fixed absolute s0. Controlled firms keep rho0 while c_m moves. A forward
    difference in lambda is used at lambda = 0.
    :return: SignReport, numeric values and signs next to the closed forms
    """
    c_m, lam = gov.c_m, market.lam
    rho = agency_cost_share(gov, firm)
    if not 0. < c_m < 1. or query.s0 >= s_bar(gov, rho):
        raise ValueError('not an interior point: c_m=%r, s0=%r, s_bar=%r' % (c_m, query.s0, s_bar(gov, rho)))
    h_c, h_cm = rel_step * c_m, mixed_rel_step * c_m
    h_l = rel_step * lam if lam > 0 else rel_step / market.delta_t
    h_lm = mixed_rel_step * lam if lam > 0 else mixed_rel_step / market.delta_t
    if min(h_c, h_l) < 1e-12:
        raise DegenerateStepError('finite-difference step underflows at c_m=%r, lambda=%r' % (c_m, lam))
    for c in (c_m - h_cm, c_m + h_cm):
        shifted = gov.with_c_m(c)
        if c >= 1. or query.s0 >= s_bar(shifted, agency_cost_share(shifted, firm)):
            raise DegenerateStepError('c_m step %r crosses the s_bar boundary at s0=%r' % (h_cm, query.s0))
    if gov.kind is FirmKind.CONTROLLED and c_m - h_cm < gov.rho0:
        raise DegenerateStepError('c_m step %r falls below rho0=%r' % (h_cm, gov.rho0))

    def ill(c, l):
        return _ill(query, gov.with_c_m(c), firm, market, l)

    seen = []

    def track(v):
        seen.append(v)
        return v

    if lam > 0:
        def d_lam(h):
            return (track(ill(c_m, lam + h)) - track(ill(c_m, lam - h))) / (2. * h)
        d_l = _richardson(d_lam, h_l)
    else:
        def d_lam(h):
            return (track(ill(c_m, lam + h)) - track(ill(c_m, lam))) / h
        d_l = _richardson(d_lam, h_l, order=1)
    floor_l = _noise_floor(seen, 0.5 * h_l)

    seen.clear()

    def d_cm(h):
        return (track(ill(c_m + h, lam)) - track(ill(c_m - h, lam))) / (2. * h)
    d_c = _richardson(d_cm, h_c)
    floor_c = _noise_floor(seen, 0.5 * h_c)

    seen.clear()
    if lam > 0:
        cross = (track(ill(c_m + h_cm, lam + h_lm)) - track(ill(c_m - h_cm, lam + h_lm))
                 - track(ill(c_m + h_cm, lam - h_lm)) + track(ill(c_m - h_cm, lam - h_lm))) / (4. * h_cm * h_lm)
        floor_x = _noise_floor(seen, h_cm * h_lm)
    else:
        cross = (track(ill(c_m + h_cm, lam + h_lm)) - track(ill(c_m - h_cm, lam + h_lm))
                 - track(ill(c_m + h_cm, lam)) + track(ill(c_m - h_cm, lam))) / (2. * h_cm * h_lm)
        floor_x = _noise_floor(seen, 0.5 * h_cm * h_lm)

    signs = (sign_with_tolerance(d_l, floor_l), sign_with_tolerance(d_c, floor_c), sign_with_tolerance(cross, floor_x))
    report = SignReport(d_ill_d_lambda=d_l, d_ill_d_cm=d_c, d2_ill_dcm_dlambda=cross, signs=signs,
                        noise_floors=(floor_l, floor_c, floor_x), analytic=_analytic_partials(query, gov, firm, market))
    logger.debug('signs at c_m=%.6g lambda=%.6g s0=%.6g: %s', c_m, lam, query.s0, signs)
    return report


def _analytic_partials(query, gov, firm, market):
    rho = agency_cost_share(gov, firm)
    g = g_s0(query.s0, gov, rho)
    l, m, dt = market.mean_arrivals, market.surplus_deals, market.delta_t
    k = k_closed_form(g, l, m)
    slope = dg_dcm(query.s0, gov, firm)
    d_l = -dk_dl(g, l, m) * dt / k
    d_c = -dk_dg(g, l, m) * slope / k
    cross = -slope * dt * kernel_inequality(g, l, m) / k ** 2
    return d_l, d_c, cross

