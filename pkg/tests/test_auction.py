import numpy as np
import pytest

from metrics.evaluation_metrics import constructed_violation
from modules.auction import (BeliefProfile, MarketParams, OracleScaleError, ValuationContext,
                             brute_force_equilibrium_check, equilibrium_price, final_prices_from_beliefs,
                             run_auction_trial, simulate_final_prices)
from modules.functional.sampling import sample_arrivals, sample_noise_beliefs


def _beliefs(estimates, floor=5., ceiling=10.):
    return BeliefProfile(informed_value=estimates[0], noise_estimates=tuple(estimates[1:]), floor=floor,
                         ceiling=ceiling)


def _market(m_deals, n_informed=1, **kwargs):
    return MarketParams(lam=1., delta_t=1., n_informed=n_informed, m_deals=m_deals, **kwargs)


def test_market_params():
    market = MarketParams(lam=2., delta_t=0.5, n_informed=1, m_deals=3)
    assert market.mean_arrivals == 1.
    assert market.surplus_deals == 2
    with pytest.raises(ValueError):
        MarketParams(lam=1., delta_t=1., n_informed=3, m_deals=2)
    with pytest.raises(ValueError):
        MarketParams(lam=-1., delta_t=1., n_informed=0, m_deals=2)
    with pytest.raises(ValueError):
        MarketParams(lam=1., delta_t=0., n_informed=0, m_deals=2)
    assert MarketParams(lam=1., delta_t=1., n_informed=3, m_deals=2, allow_small_pressure=True).surplus_deals == -1


def test_sample_arrivals():
    assert sample_arrivals(MarketParams(lam=0., delta_t=1., n_informed=0, m_deals=1), 7) == 0
    market = MarketParams(lam=2.5, delta_t=1.2, n_informed=0, m_deals=1)
    draws = sample_arrivals(market, 11, size=10 ** 6)
    mean = market.mean_arrivals
    assert abs(draws.mean() - mean) < 4 * np.sqrt(mean / draws.size)
    # var of the sample variance of a Poisson: mean / n + 2 mean^2 / (n - 1)
    assert abs(draws.var(ddof=1) - mean) < 4 * np.sqrt(mean / draws.size + 2 * mean ** 2 / (draws.size - 1))
    assert sample_arrivals(market, 3) == sample_arrivals(market, 3)


def test_sample_noise_beliefs():
    assert np.all(sample_noise_beliefs(5, 2., 2., 0) == 2.)
    draws = sample_noise_beliefs(10 ** 6, 1., 3., 5)
    assert draws.min() >= 1. and draws.max() <= 3.
    assert abs(draws.mean() - 2.) < 4 * np.sqrt((2. ** 2 / 12) / draws.size)
    np.testing.assert_array_equal(sample_noise_beliefs(4, 1., 3., 9), sample_noise_beliefs(4, 1., 3., 9))
    with pytest.raises(ValueError):
        sample_noise_beliefs(3, 2., 1., 0)


def test_equilibrium_price():
    outcome = equilibrium_price(_beliefs([10., 9., 8., 7.]), _market(2))
    assert outcome.deal_prices == (9., 8.)
    assert outcome.final_price == 8. and not outcome.floor_triggered

    outcome = equilibrium_price(_beliefs([10., 9.]), _market(2))
    assert outcome.deal_prices == (9., 5.)
    assert outcome.final_price == 5. and outcome.floor_triggered

    assert equilibrium_price(_beliefs([10., 9., 9., 7.]), _market(2)).final_price == 9.


def test_equilibrium_price_informed_only():
    beliefs = BeliefProfile(informed_value=8., noise_estimates=(), floor=5., ceiling=10.)
    assert equilibrium_price(beliefs, _market(2, n_informed=2)).final_price == 5.


def test_equilibrium_price_invariants():
    rng = np.random.default_rng(1)
    for _ in range(200):
        noise = rng.uniform(5., 10., rng.integers(0, 9))
        beliefs = BeliefProfile(informed_value=float(rng.uniform(5., 10.)), noise_estimates=tuple(noise),
                                floor=5., ceiling=10.)
        market = _market(int(rng.integers(2, 6)), n_informed=int(rng.integers(0, 3)))
        outcome = equilibrium_price(beliefs, market)
        assert all(b <= a for a, b in zip(outcome.deal_prices, outcome.deal_prices[1:]))
        assert outcome.final_price == outcome.deal_prices[-1]
        assert 5. <= outcome.final_price <= 10.
        shuffled = BeliefProfile(beliefs.informed_value, tuple(rng.permutation(noise)), 5., 10.)
        assert equilibrium_price(shuffled, market) == outcome


def test_small_pressure_price_above_informed_value():
    beliefs = BeliefProfile(informed_value=7., noise_estimates=(6., 9.5), floor=5., ceiling=10.)
    market = MarketParams(lam=1., delta_t=1., n_informed=3, m_deals=2, allow_small_pressure=True)
    assert equilibrium_price(beliefs, market).final_price >= 7.


def test_belief_profile_bounds():
    with pytest.raises(ValueError):
        BeliefProfile(informed_value=11., noise_estimates=(), floor=5., ceiling=10.)
    with pytest.raises(ValueError):
        BeliefProfile(informed_value=7., noise_estimates=(4.,), floor=5., ceiling=10.)


def test_brute_force_confirms_truthful_bidding():
    verdict = brute_force_equilibrium_check(_beliefs([10., 9., 8., 7.]), _market(2), 0.05)
    assert verdict.confirmed
    assert verdict.outcome.deal_prices == (9., 8.)

    single = BeliefProfile(informed_value=8., noise_estimates=(), floor=5., ceiling=10.)
    verdict = brute_force_equilibrium_check(single, _market(1), 0.05)
    assert verdict.confirmed and verdict.outcome.final_price == 5.

    verdict = brute_force_equilibrium_check(_beliefs([10., 9., 9., 7.]), _market(2), 0.05)
    assert verdict.confirmed and verdict.outcome.final_price == 9.


def test_brute_force_matches_equilibrium_price():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n_informed = int(rng.integers(0, 2))
        beliefs = BeliefProfile(informed_value=float(rng.uniform(1., 4.)),
                                noise_estimates=tuple(rng.uniform(1., 4., rng.integers(0, 6 - n_informed))),
                                floor=1., ceiling=4.)
        market = _market(int(rng.integers(max(1, n_informed), 5)), n_informed=n_informed)
        verdict = brute_force_equilibrium_check(beliefs, market, 0.03)
        assert verdict.confirmed
        np.testing.assert_allclose(verdict.outcome.deal_prices, equilibrium_price(beliefs, market).deal_prices)


def test_brute_force_finds_overbidding_trader():
    beliefs, market, bids = constructed_violation()
    verdict = brute_force_equilibrium_check(beliefs, market, 0.05, bids=bids)
    assert not verdict.confirmed
    # the trader ranked third outbids the second bid and takes the last deal
    assert verdict.trader == 2 and verdict.estimate == 8.
    assert 7.5 < verdict.deviation <= 9.
    assert verdict.gain == pytest.approx(0.5)


def test_brute_force_scale_limit():
    beliefs = BeliefProfile(informed_value=8., noise_estimates=tuple(np.linspace(5., 10., 8)), floor=5.,
                            ceiling=10.)
    with pytest.raises(OracleScaleError):
        brute_force_equilibrium_check(beliefs, _market(2), 0.1)
    with pytest.raises(ValueError):
        brute_force_equilibrium_check(_beliefs([10., 9.]), _market(2), 0.)


def test_run_auction_trial():
    context = ValuationContext(informed_value=9., floor=6., ceiling=10.)
    idle = MarketParams(lam=0., delta_t=1., n_informed=1, m_deals=2)
    for seed in range(20):
        assert run_auction_trial(context, idle, seed).final_price == 6.
    busy = MarketParams(lam=5., delta_t=1., n_informed=1, m_deals=2)
    assert run_auction_trial(context, busy, 3) == run_auction_trial(context, busy, 3)
    # c_m = 0 collapses the belief interval
    flat = ValuationContext(informed_value=10., floor=10., ceiling=10.)
    assert {run_auction_trial(flat, busy, s).final_price for s in range(20)} == {10.}


def test_final_prices_from_beliefs():
    noise = np.array([[9., 8., 7., -np.inf],
                      [9., -np.inf, -np.inf, -np.inf]])
    prices = final_prices_from_beliefs(noise, n_informed=1, m_deals=2, informed_value=10., floor=5.)
    np.testing.assert_array_equal(prices, [8., 5.])
    empty = final_prices_from_beliefs(np.empty((3, 0)), n_informed=1, m_deals=1, informed_value=10., floor=5.)
    np.testing.assert_array_equal(empty, [5., 5., 5.])


def test_simulate_final_prices_matches_trials_in_distribution():
    context = ValuationContext(informed_value=9., floor=6., ceiling=10.)
    market = MarketParams(lam=3., delta_t=1., n_informed=1, m_deals=2)
    vectorised = simulate_final_prices(context, market, 20000, 0)
    looped = np.array([run_auction_trial(context, market, (1, k)).final_price for k in range(20000)])
    for threshold in (6.5, 8., 9.):
        p, q = np.mean(vectorised < threshold), np.mean(looped < threshold)
        se = np.sqrt(p * (1 - p) / 20000 + q * (1 - q) / 20000)
        assert abs(p - q) < 5 * max(se, 1e-4)
    np.testing.assert_array_equal(vectorised, simulate_final_prices(context, market, 20000, 0))
