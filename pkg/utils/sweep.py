"""Grid enumeration and per-point evaluation shared by the sweep commands and the check suite."""
import logging
import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np
import pandas as pd
from tqdm import tqdm

from model.firm import GovernanceSpec, agency_cost_share, s_bar
from modules.auction import MarketParams
from modules.liquidity import (DegenerateStepError, LiquidityQuery, cross_partial_signs, delta_cm_ill,
                               delta_lambda_ill, f_s0, mc_estimate_f)
from utils.export import SweepRow
from utils.file_utils import point_seed
from utils.metrics import agreement_threshold, agreement_z

logger = logging.getLogger(__name__)

# relative tolerance for the synergy orderings; smaller gaps count as ties
ORDER_RTOL = 1e-9


@dataclass(frozen=True)
class GridPoint:
    index: int
    gov: GovernanceSpec
    market: MarketParams
    s0: float

    @property
    def sort_key(self):
        return self.gov.c_m, self.market.lam, self.s0, self.gov.kind.value, self.market.m_deals


def grid_points(cfg):
    """
    Cartesian grid of (c_m, lambda, s0, firm kind, m_deals) in sorted order.
    Fractional s0 values scale s_bar at each point.
    """
    points = []
    for template in cfg.governance:
        for c_m in cfg.c_m_grid:
            gov = template.build(c_m)
            sb = s_bar(gov, agency_cost_share(gov, cfg.firm))
            s0s = [round(f * sb, 15) for f in cfg.s0_values] if cfg.s0_is_fraction else list(cfg.s0_values)
            for lam in cfg.lambda_grid:
                for m in cfg.m_deals_grid:
                    market = cfg.market_at(lam, m)
                    points.extend(GridPoint(-1, gov, market, s0) for s0 in s0s)
    points.sort(key=lambda p: p.sort_key)
    return [GridPoint(i, p.gov, p.market, p.s0) for i, p in enumerate(points)]


def analytic_row(point, cfg):
    lp = f_s0(LiquidityQuery(point.s0), point.gov, cfg.firm, point.market, cfg.series_ctl)
    return SweepRow(c_m=point.gov.c_m, lam=point.market.lam, s0=point.s0, rho=lp.rho, s_bar=lp.s_bar, g=lp.g,
                    f_analytic=lp.f_value, ill_analytic=lp.ill_value, firm_kind=point.gov.kind.value,
                    m_deals=point.market.m_deals)


def _simulate_point(args):
    point, cfg = args
    row = analytic_row(point, cfg)
    est = mc_estimate_f(LiquidityQuery(point.s0), point.gov, cfg.firm, point.market, cfg.trials,
                        point_seed(cfg.seed, point.index))
    row.f_mc, row.f_mc_se = est.estimate, est.std_error
    return row


def simulate_rows(points, cfg, workers=1, progress=True):
    """
    Monte Carlo columns for every point, flagged when outside the Bonferroni
    agreement band around the analytic value.
    """
    jobs = [(p, cfg) for p in points]
    bar = tqdm(total=len(jobs), desc='simulate', disable=not progress)
    rows = []
    if workers > 1:
        with Pool(workers) as pool:
            for row in pool.imap(_simulate_point, jobs):
                rows.append(row)
                bar.update(1)
    else:
        for job in jobs:
            rows.append(_simulate_point(job))
            bar.update(1)
    bar.close()
    z = agreement_z(len(rows))
    for row in rows:
        row.flagged = bool(abs(row.f_mc - row.f_analytic) > agreement_threshold(row.f_analytic, cfg.trials, z))
    logger.info('simulate: %d points, %d trials each, z=%.3f, %d flagged', len(rows), cfg.trials, z,
                sum(r.flagged for r in rows))
    return rows


def _strictly_ordered(values, decreasing):
    """Count adjacent pairs ordered the wrong way beyond the tie tolerance."""
    violations = 0
    finite = [v for v in values if np.isfinite(v)]
    for a, b in zip(finite, finite[1:]):
        tol = ORDER_RTOL * max(abs(a), abs(b)) + 1e-14
        if (b - a > tol) if decreasing else (a - b > tol):
            violations += 1
    return violations


@dataclass
class SynergyReport:
    delta_lambda: pd.DataFrame
    delta_cm: pd.DataFrame
    signs: pd.DataFrame
    order_violations: int
    sign_contradictions: int

    @property
    def failed(self):
        return self.order_violations + self.sign_contradictions > 0


def synergy_s0_values(cfg, govs):
    """Absolute thresholds shared by a whole governance row."""
    if not cfg.s0_is_fraction:
        return list(cfg.s0_values)
    sb_min = min(s_bar(g, agency_cost_share(g, cfg.firm)) for g in govs)
    return sorted(set(round(f * sb_min, 15) for f in cfg.s0_values))


def synergy_report(cfg, progress=True):
    """
    Delta_lambda ILL by c_m (first lambda against each later one), Delta_c ILL by
    lambda (largest c_m against each smaller one) and the sign map of the ILL
    partials at every interior point.
    """
    if len(cfg.c_m_grid) < 2 or len(cfg.lambda_grid) < 2:
        raise ValueError('synergy needs at least two c_m values and two lambda values')
    firm, lams = cfg.firm, cfg.lambda_grid
    dl_records, dc_records, sign_records = [], [], []
    violations = contradictions = 0
    combos = [(t, m) for t in cfg.governance for m in cfg.m_deals_grid]
    for template, m in tqdm(combos, desc='synergy', disable=not progress):
        govs = [template.build(c) for c in cfg.c_m_grid]
        for s0 in synergy_s0_values(cfg, govs):
            query = LiquidityQuery(s0)
            base = dict(firm_kind=template.kind.value, m_deals=m, s0=s0)
            columns = {}
            for gov in govs:
                market = cfg.market_at(lams[0], m)
                open_range = s0 < s_bar(gov, agency_cost_share(gov, firm))
                record = dict(base, c_m=gov.c_m)
                for lam2 in lams[1:]:
                    key = 'lambda %g->%g' % (lams[0], lam2)
                    value = delta_lambda_ill(query, gov, firm, market, lams[0], lam2) if open_range else math.nan
                    record[key] = value
                    columns.setdefault(key, []).append(value)
                dl_records.append(record)
            violations += sum(_strictly_ordered(v, decreasing=True) for v in columns.values())

            columns = {}
            worst = govs[-1]
            if s0 < s_bar(worst, agency_cost_share(worst, firm)):
                for lam in lams:
                    record = dict(base, **{'lambda': lam})
                    for better in govs[:-1]:
                        key = 'c_m %g->%g' % (worst.c_m, better.c_m)
                        value = delta_cm_ill(query, (worst, better), firm, cfg.market_at(lam, m), lam)
                        record[key] = value
                        columns.setdefault(key, []).append(value)
                    dc_records.append(record)
                violations += sum(_strictly_ordered(v, decreasing=False) for v in columns.values())

            for gov in govs:
                if gov.c_m == 0 or s0 >= s_bar(gov, agency_cost_share(gov, firm)):
                    continue
                for lam in lams:
                    record = dict(base, c_m=gov.c_m, **{'lambda': lam})
                    try:
                        rep = cross_partial_signs(query, gov, firm, cfg.market_at(lam, m))
                    except DegenerateStepError as e:
                        logger.warning('skipped sign check: %s', e)
                        record.update(signs='degenerate', contradicts=False)
                    else:
                        record.update(d_ill_d_lambda=rep.d_ill_d_lambda, d_ill_d_cm=rep.d_ill_d_cm,
                                      d2_ill_dcm_dlambda=rep.d2_ill_dcm_dlambda,
                                      signs=''.join({1: '+', -1: '-', 0: '0'}[s] for s in rep.signs),
                                      contradicts=rep.contradicts)
                        contradictions += int(rep.contradicts)
                    sign_records.append(record)

    logger.info('synergy: %d ordering violations, %d sign contradictions', violations, contradictions)
    return SynergyReport(delta_lambda=pd.DataFrame(dl_records), delta_cm=pd.DataFrame(dc_records),
                         signs=pd.DataFrame(sign_records), order_violations=violations,
                         sign_contradictions=contradictions)
