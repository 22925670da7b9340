"""
Property and oracle checks over a run configuration. Each check returns a
CheckResult; run_checks collects them for the validate command.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from tqdm import tqdm

from model.firm import (FirmKind, GovernanceSpec, agency_cost_share, benefit_of_control, controller_objective,
                        derive_x_dynamics, per_share_incomes, share_value, share_value_quadrature)
from modules.auction import BeliefProfile, MarketParams, brute_force_equilibrium_check, equilibrium_price
from modules.functional.kernel import dk_dg, dk_dl, k_closed_form, k_series, kernel_inequality
from modules.liquidity import DegenerateStepError, LiquidityQuery, cross_partial_signs, f_s0
from utils.metrics import relative_error
from utils.sweep import grid_points, simulate_rows

logger = logging.getLogger(__name__)

FD_RTOL = 1e-6
FD_ATOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int
    failures: int = 0
    detail: dict = field(default_factory=dict)


def _result(name, checked, failures, **detail):
    result = CheckResult(name=name, passed=failures == 0 and checked > 0, checked=checked, failures=failures,
                         detail=detail)
    logger.info('%-20s %s  (%d checked, %d failed)', name, 'PASS' if result.passed else 'FAIL', checked, failures)
    return result


def check_series_identity(cfg, count=1000, rng_seed=0):
    """k_series against k_closed_form on random (g, L, m) with L up to 1e3 and m up to 1e2."""
    rng = np.random.default_rng(rng_seed)
    bound = 10. * cfg.series_ctl.tail_tol
    worst, failures = 0., 0
    for _ in tqdm(range(count), desc='series', leave=False):
        g = float(rng.uniform())
        l = float(10 ** rng.uniform(-2, 3))
        m = int(rng.integers(0, 101))
        diff = abs(k_series(g, l, m, cfg.series_ctl.tail_tol, cfg.series_ctl.max_terms) - k_closed_form(g, l, m))
        worst = max(worst, diff)
        failures += diff >= bound
    return _result('series_identity', count, failures, bound=bound, worst=worst)


def _central(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2. * h)


def _interior_triples(cfg):
    """(g, L, m) at every grid point with an open discount range."""
    seen = set()
    for p in grid_points(cfg):
        lp = f_s0(LiquidityQuery(p.s0), p.gov, cfg.firm, p.market, cfg.series_ctl)
        if lp.s_bar > p.s0:
            seen.add((lp.g, p.market.mean_arrivals, p.market.surplus_deals))
    return sorted(seen)


def check_derivatives(cfg, inject_fault=False):
    """
    dK/dL and dK/dg against central differences of the closed form, step
    1e-6 * max(1, L) in L and 1e-6 in g.
    :param inject_fault: flip the sign of dK/dL to exercise the failure path
    """
    d_l = (lambda g, l, m: -dk_dl(g, l, m)) if inject_fault else dk_dl
    checked = failures = 0
    worst = 0.
    for g, l, m in _interior_triples(cfg):
        h = 1e-6 * max(1., l)
        pairs = []
        if l - h >= 0:
            pairs.append((_central(lambda x: k_closed_form(g, x, m), l, h), d_l(g, l, m)))
        if 1e-6 <= g <= 1. - 1e-6:
            pairs.append((_central(lambda x: k_closed_form(x, l, m), g, 1e-6), dk_dg(g, l, m)))
        for numeric, analytic in pairs:
            checked += 1
            err = abs(numeric - analytic)
            worst = max(worst, relative_error(numeric, analytic, abs_floor=FD_ATOL / FD_RTOL))
            if err > FD_RTOL * abs(analytic) + FD_ATOL:
                failures += 1
                logger.debug('derivative mismatch at g=%.6g L=%.6g m=%d: numeric %.10g analytic %.10g',
                             g, l, m, numeric, analytic)
    return _result('derivatives', checked, failures, worst_relative=worst, injected_fault=inject_fault)


def constructed_violation():
    """A bid profile pricing the final deal below the third largest estimate."""
    beliefs = BeliefProfile(informed_value=10., noise_estimates=(9., 8., 7.), floor=5., ceiling=10.)
    market = MarketParams(lam=1., delta_t=1., n_informed=1, m_deals=2)
    return beliefs, market, [10., 7.5, 7.2, 7.]


def check_auction_oracle(count=200, rng_seed=0):
    """
    Truthful bidding survives the deviation scan on random small instances with
    strictly ordered estimates, the scan reproduces equilibrium_price, and the
    constructed violation is caught.
    """
    rng = np.random.default_rng(rng_seed)
    failures = 0
    for _ in tqdm(range(count), desc='auction', leave=False):
        floor = float(rng.uniform(1., 5.))
        ceiling = floor + float(rng.uniform(0.5, 5.))
        n_informed = int(rng.integers(0, 2))
        m_deals = int(rng.integers(max(1, n_informed), 5))
        n_noise = int(rng.integers(0, 7 - n_informed))
        beliefs = BeliefProfile(informed_value=float(rng.uniform(floor, ceiling)),
                                noise_estimates=tuple(rng.uniform(floor, ceiling, n_noise)),
                                floor=floor, ceiling=ceiling)
        market = MarketParams(lam=1., delta_t=1., n_informed=n_informed, m_deals=m_deals)
        verdict = brute_force_equilibrium_check(beliefs, market, (ceiling - floor) / 100.)
        expected = equilibrium_price(beliefs, market)
        agrees = np.allclose(verdict.outcome.deal_prices, expected.deal_prices, rtol=0., atol=1e-12)
        if not (verdict.confirmed and agrees):
            failures += 1
            logger.debug('oracle disagreement: %s vs %s', verdict, expected)
    beliefs, market, bids = constructed_violation()
    caught = brute_force_equilibrium_check(beliefs, market, 0.05, bids=bids)
    failures += int(caught.confirmed)
    return _result('auction_oracle', count + 1, failures, counterexample_trader=caught.trader,
                   counterexample_gain=caught.gain)


def check_mc_agreement(cfg, workers=1, progress=False):
    rows = simulate_rows(grid_points(cfg), cfg, workers=workers, progress=progress)
    flagged = sum(r.flagged for r in rows)
    return _result('mc_agreement', len(rows), flagged, trials=cfg.trials)


def check_firm_model(cfg, count=100, rng_seed=0, grid_step=1e-4):
    """
    Grid argmax of the controller objective against the closed-form agency cost,
    benefit of control against the per-share incomes and monotone in c_m, share
    value against the quadrature oracle.
    """
    rng = np.random.default_rng(rng_seed)
    firm = cfg.firm
    failures = checked = 0
    for _ in range(count):
        theta = float(rng.uniform(0.05, 0.95))
        gov = GovernanceSpec(c_m=float(rng.uniform(0.01, 0.95)), kappa=float(rng.uniform(0.2, 4.)),
                             beta=float(rng.uniform(0.2, 1.)))
        draw = replace(firm, theta=theta)
        rhos = np.append(np.arange(0., gov.c_m, grid_step), gov.c_m)
        values = [controller_objective(r, gov, draw) for r in rhos]
        checked += 1
        failures += abs(rhos[int(np.argmax(values))] - agency_cost_share(gov, draw)) > grid_step

    dyn = derive_x_dynamics(firm)
    general = [t for t in cfg.governance if t.kind is FirmKind.GENERAL]
    template = general[0] if general else None
    if template is not None and firm.theta < 1.:
        c_grid = np.round(np.arange(0.05, 0.951, 0.05), 10)
        dq = [benefit_of_control(firm, template.build(c), dyn) for c in c_grid]
        checked += 1
        failures += any(b < a - 1e-12 * abs(a) for a, b in zip(dq, dq[1:]))
        for c in c_grid:
            gov = template.build(c)
            q_c, q_u = per_share_incomes(firm, gov)
            ref = benefit_of_control(firm, gov, dyn)
            checked += 1
            failures += abs(q_c - q_u - ref) > 1e-12 * max(abs(ref), abs(q_c))

    for template in cfg.governance:
        for c_m in cfg.c_m_grid:
            gov = template.build(c_m)
            for rho_hat in (0., agency_cost_share(gov, firm), c_m):
                checked += 1
                failures += relative_error(share_value_quadrature(firm, dyn, rho_hat),
                                           share_value(firm, dyn, rho_hat)) > 1e-6
    return _result('firm_model', checked, failures)


def check_liquidity_signs(cfg):
    """
    Signs of the ILL partials at interior points against (+, -, -), flat only where
    the closed form is flat; a flat c_m slope at lambda = 0; the kernel inequality
    wherever lambda > 0.
    """
    checked = failures = skipped = 0
    for p in grid_points(cfg):
        lp = f_s0(LiquidityQuery(p.s0), p.gov, cfg.firm, p.market, cfg.series_ctl)
        if p.gov.c_m == 0 or p.s0 >= lp.s_bar:
            continue
        try:
            rep = cross_partial_signs(LiquidityQuery(p.s0), p.gov, cfg.firm, p.market)
        except DegenerateStepError as e:
            skipped += 1
            logger.debug('skipped: %s', e)
            continue
        checked += 1
        if p.market.lam > 0:
            ok = not rep.contradicts and kernel_inequality(lp.g, p.market.mean_arrivals, p.market.surplus_deals) > 0
        else:
            ok = not rep.contradicts and rep.signs[1] == 0
        failures += not ok
    return _result('liquidity_signs', checked, failures, skipped=skipped)


def run_checks(cfg, workers=1, inject_fault=False, series_count=1000, auction_count=200, progress=False):
    checks = [
        check_series_identity(cfg, series_count, cfg.seed),
        check_derivatives(cfg, inject_fault),
        check_auction_oracle(auction_count, cfg.seed),
        check_firm_model(cfg, rng_seed=cfg.seed),
        check_liquidity_signs(cfg),
        check_mc_agreement(cfg, workers, progress),
    ]
    return checks


def summary_json(checks):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return str(v)
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        return v

    payload = {
        'passed': all(c.passed for c in checks),
        'checks': [dict(asdict(c), detail={k: clean(v) for k, v in c.detail.items()}) for c in checks],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
