"""
Open auction of a block of shares sold in M sequential deals.

Each deal goes to the highest remaining bidder, who pays the second highest
remaining bid. A lone remaining bidder pays the seller's ask, the floor value;
with no bidder left an outside noise trader takes the deal at the floor.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from modules.functional.sampling import sample_arrivals, sample_noise_beliefs

logger = logging.getLogger(__name__)

__all__ = ['MarketParams', 'BeliefProfile', 'AuctionOutcome', 'ValuationContext', 'EquilibriumVerdict',
           'OracleScaleError', 'equilibrium_price', 'brute_force_equilibrium_check', 'run_auction_trial',
           'final_prices_from_beliefs', 'simulate_final_prices']

ORACLE_MAX_TRADERS = 8
ORACLE_MAX_DEALS = 6


class OracleScaleError(ValueError):
    pass


@dataclass(frozen=True)
class MarketParams:
    lam: float
    delta_t: float
    n_informed: int
    m_deals: int
    n_shares: int = 1
    # admits M < N_I, where the price never falls below the informed value
    allow_small_pressure: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError('lambda must be non-negative, got %r' % self.lam)
        if self.delta_t <= 0:
            raise ValueError('delta_t must be positive, got %r' % self.delta_t)
        for name in ('n_informed', 'm_deals', 'n_shares'):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError('%s must be a non-negative integer, got %r' % (name, value))
            object.__setattr__(self, name, int(value))
        if self.m_deals < 1:
            raise ValueError('m_deals must be at least 1, got %r' % self.m_deals)
        if self.n_shares < 1:
            raise ValueError('n_shares must be at least 1, got %r' % self.n_shares)
        if self.m_deals < self.n_informed and not self.allow_small_pressure:
            raise ValueError('m_deals=%d must be at least n_informed=%d' % (self.m_deals, self.n_informed))

    @property
    def mean_arrivals(self):
        return self.lam * self.delta_t

    @property
    def surplus_deals(self):
        return self.m_deals - self.n_informed


@dataclass(frozen=True)
class ValuationContext:
    """Informed value V(rho) with the belief interval [floor, ceiling] = [V(c_m), V(0)]."""
    informed_value: float
    floor: float
    ceiling: float
    rho: float = 0.


@dataclass(frozen=True)
class BeliefProfile:
    informed_value: float
    noise_estimates: Tuple[float, ...]
    floor: float
    ceiling: float

    def __post_init__(self):
        noise = tuple(float(v) for v in self.noise_estimates)
        object.__setattr__(self, 'noise_estimates', noise)
        if self.floor > self.ceiling:
            raise ValueError('floor %r exceeds ceiling %r' % (self.floor, self.ceiling))
        if not self.floor <= self.informed_value <= self.ceiling:
            raise ValueError('informed_value %r outside [%r, %r]' % (self.informed_value, self.floor, self.ceiling))
        if noise and not (self.floor <= min(noise) and max(noise) <= self.ceiling):
            raise ValueError('noise_estimates must lie in [%r, %r]' % (self.floor, self.ceiling))

    def estimates(self, n_informed):
        """All trader estimates in non-increasing order."""
        values = np.concatenate([np.full(n_informed, float(self.informed_value)), np.asarray(self.noise_estimates)])
        return -np.sort(-values, kind='stable')


@dataclass(frozen=True)
class AuctionOutcome:
    deal_prices: Tuple[float, ...]
    final_price: float
    floor_triggered: bool
    winners: Tuple[Optional[int], ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class EquilibriumVerdict:
    confirmed: bool
    outcome: AuctionOutcome
    trader: Optional[int] = None
    estimate: Optional[float] = None
    deviation: Optional[float] = None
    gain: float = 0.


def equilibrium_price(beliefs, market):
    """
    Equilibrium deal prices when every trader bids his own estimate.
    Deal k is closed at the (k+1)-th largest estimate while at least two
    bidders remain; the rest close at the floor.
    """
    ordered = beliefs.estimates(market.n_informed)
    n = len(ordered)
    prices = [float(ordered[k]) if k <= n - 1 else float(beliefs.floor) for k in range(1, market.m_deals + 1)]
    return AuctionOutcome(deal_prices=tuple(prices), final_price=prices[-1], floor_triggered=n <= market.m_deals)


def _run_sequential_auction(bids, m_deals, floor):
    """
    :return: (winners, payments), winner None when an outsider bought at the floor
    """
    remaining = list(range(len(bids)))
    winners, payments = [], []
    for _ in range(m_deals):
        if not remaining:
            winners.append(None)
            payments.append(floor)
            continue
        # highest bid first, ties to the lower trader index
        remaining.sort(key=lambda i: (-bids[i], i))
        winner = remaining.pop(0)
        winners.append(winner)
        payments.append(float(bids[remaining[0]]) if remaining else floor)
    return winners, payments


def _profit_by_prefix(trader, estimate, winners, payments, n_shares):
    """Believed profit of one trader had the sale stopped after each deal."""
    profits = np.zeros(len(winners))
    for k, (w, p) in enumerate(zip(winners, payments)):
        if w == trader:
            profits[k:] = n_shares * (estimate - p)
            break
    return profits


def _candidate_bids(estimates, floor, ceiling, step):
    if ceiling == floor:
        return np.array([floor])
    grid = np.arange(floor, ceiling + 0.5 * step, step)
    near = np.concatenate([estimates - step, estimates, estimates + step])
    return np.unique(np.clip(np.concatenate([grid, near]), floor, ceiling))


def brute_force_equilibrium_check(beliefs, market, bid_grid_step, bids=None):
    """
    Scan unilateral bid deviations of every trader over a grid on [floor, ceiling].

    Traders are indexed by rank of estimate. A deviation counts only if it
    strictly raises the trader's believed profit after the M-th deal and lowers
    it after none of the earlier deals, since traders do not know M.
    :param bids: bid profile to test, defaults to truthful bidding
    :return: EquilibriumVerdict, first counterexample in rank order
    """
    if bid_grid_step <= 0:
        raise ValueError('bid_grid_step must be positive, got %r' % bid_grid_step)
    estimates = beliefs.estimates(market.n_informed)
    n = len(estimates)
    if n > ORACLE_MAX_TRADERS or market.m_deals > ORACLE_MAX_DEALS:
        raise OracleScaleError('oracle limited to N <= %d and M <= %d, got N=%d, M=%d'
                               % (ORACLE_MAX_TRADERS, ORACLE_MAX_DEALS, n, market.m_deals))
    bids = estimates.copy() if bids is None else np.asarray(bids, dtype=np.float64)
    if bids.shape != estimates.shape:
        raise ValueError('need one bid per trader (%d), got %d' % (n, len(bids)))

    floor = float(beliefs.floor)
    winners, payments = _run_sequential_auction(bids, market.m_deals, floor)
    outcome = AuctionOutcome(deal_prices=tuple(payments), final_price=payments[-1],
                             floor_triggered=n <= market.m_deals, winners=tuple(winners))
    tol = 1e-12 * max(1., abs(float(beliefs.ceiling)))

    candidates = _candidate_bids(estimates, floor, float(beliefs.ceiling), bid_grid_step)
    for trader in range(n):
        base = _profit_by_prefix(trader, estimates[trader], winners, payments, market.n_shares)
        for b in candidates:
            deviated = bids.copy()
            deviated[trader] = b
            dev_winners, dev_payments = _run_sequential_auction(deviated, market.m_deals, floor)
            profit = _profit_by_prefix(trader, estimates[trader], dev_winners, dev_payments, market.n_shares)
            gain = profit[-1] - base[-1]
            if gain > tol and np.all(profit[:-1] >= base[:-1] - tol):
                logger.debug('deviation found: trader %d (estimate %.6g) bids %.6g for gain %.6g',
                             trader, estimates[trader], b, gain)
                return EquilibriumVerdict(confirmed=False, outcome=outcome, trader=trader,
                                          estimate=float(estimates[trader]), deviation=float(b), gain=float(gain))
    return EquilibriumVerdict(confirmed=True, outcome=outcome)


def _seed_sequence(rng_seed):
    if isinstance(rng_seed, np.random.SeedSequence):
        return rng_seed
    return np.random.SeedSequence(rng_seed)


def run_auction_trial(context, market, rng_seed):
    arrivals_seed, beliefs_seed = _seed_sequence(rng_seed).spawn(2)
    count = sample_arrivals(market, arrivals_seed)
    noise = sample_noise_beliefs(count, context.floor, context.ceiling, beliefs_seed)
    beliefs = BeliefProfile(informed_value=context.informed_value, noise_estimates=tuple(noise),
                            floor=context.floor, ceiling=context.ceiling)
    return equilibrium_price(beliefs, market)


def final_prices_from_beliefs(noise, n_informed, m_deals, informed_value, floor):
    """
    Final price of a block of trials at once
    :param noise: noise estimates, FloatArray[T, W], padded with -inf past each trial's count
    :return: FloatArray[T], the (M+1)-th largest estimate or the floor when N <= M
    """
    noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
    trials = noise.shape[0]
    estimates = np.concatenate([np.full((trials, n_informed), float(informed_value)), noise], axis=1)
    if estimates.shape[1] <= m_deals:
        return np.full(trials, float(floor))
    # ascending partition of the negated values puts the (M+1)-th largest at column M
    kth = -np.partition(-estimates, m_deals, axis=1)[:, m_deals]
    return np.where(np.isfinite(kth), kth, float(floor))


def simulate_final_prices(context, market, trials, rng_seed):
    rng = np.random.default_rng(rng_seed)
    counts = sample_arrivals(market, rng, size=trials)
    width = int(counts.max()) if trials > 0 else 0
    noise = sample_noise_beliefs(trials * width, context.floor, context.ceiling, rng).reshape(trials, width)
    noise[np.arange(width)[None, :] >= counts[:, None]] = -np.inf
    return final_prices_from_beliefs(noise, market.n_informed, market.m_deals, context.informed_value, context.floor)
