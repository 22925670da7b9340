"""
Run configuration: a flat `key = value` document with dotted section keys.

    firm.alpha = 0.5
    sweep.c_m = 0.1:0.6:0.1      # inclusive range
    query.s0_fraction = 0, 0.25, 0.5, 0.75

The raw document becomes an EasyDict tree, which is then validated into a
RunConfig. Every failure is collected before raising.
"""
import logging
import math
import re
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from easydict import EasyDict

from model.firm import DivergentValuationError, FirmKind, FirmParams, GovernanceSpec, derive_x_dynamics
from modules.auction import MarketParams
from modules.liquidity import SeriesControl

logger = logging.getLogger(__name__)

__all__ = ['ConfigParseError', 'ConfigValidationError', 'GovernanceTemplate', 'RunConfig', 'parse_config',
           'load_config', 'DEFAULT_S0_FRACTIONS']

DEFAULT_S0_FRACTIONS = (0., 0.25, 0.5, 0.75)

_KEY = re.compile(r'^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)+$')
_WORD = re.compile(r'^[A-Za-z_./~][A-Za-z0-9_./~\-]*$')

FIRM_REQUIRED = ('alpha', 'delta', 'r', 'mu_z', 'sigma_z', 'theta', 'gamma', 's_total', 'z0')
KNOWN_KEYS = {
    'firm': FIRM_REQUIRED + ('t_eval', 'w_t'),
    'governance': ('kind', 'c_m', 'kappa', 'beta', 'rho0', 'rho0_ratio'),
    'market': ('lambda', 'delta_t', 'n_informed', 'm_deals', 'n_shares'),
    'sweep': ('c_m', 'lambda', 'm_deals'),
    'query': ('s0', 's0_fraction'),
    'run': ('trials', 'seed', 'output', 'workers'),
    'series': ('tail_tol', 'max_terms'),
}
DEFAULTS = {
    'firm': {'t_eval': 0., 'w_t': 0.},
    'governance': {'kind': 'general', 'kappa': 1., 'beta': 1.},
    'market': {'n_shares': 1},
    'run': {'trials': 100000, 'seed': 0, 'output': 'sweep.csv', 'workers': 1},
    'series': {'tail_tol': 1e-12, 'max_terms': 10 ** 6},
}


class ConfigParseError(ValueError):
    def __init__(self, message, line, column):
        super().__init__('line %d, column %d: %s' % (line, column, message))
        self.line = line
        self.column = column


class ConfigValidationError(ValueError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__('invalid configuration:\n' + '\n'.join('  %s: %s' % f for f in self.failures))


@dataclass(frozen=True)
class GovernanceTemplate:
    """Governance settings without c_m; build() instantiates one grid point."""
    kind: FirmKind
    kappa: float = 1.
    beta: float = 1.
    rho0: Optional[float] = None
    rho0_ratio: Optional[float] = None

    def build(self, c_m):
        if self.kind is FirmKind.GENERAL:
            return GovernanceSpec(c_m=c_m, kind=self.kind, kappa=self.kappa, beta=self.beta)
        rho0 = self.rho0 if self.rho0 is not None else self.rho0_ratio * c_m
        return GovernanceSpec(c_m=c_m, kind=self.kind, rho0=rho0)


@dataclass(frozen=True)
class RunConfig:
    firm: FirmParams
    governance: Tuple[GovernanceTemplate, ...]
    market: MarketParams
    c_m_grid: Tuple[float, ...]
    lambda_grid: Tuple[float, ...]
    m_deals_grid: Tuple[int, ...]
    s0_values: Tuple[float, ...]
    s0_is_fraction: bool
    trials: int
    seed: int
    output_path: str
    workers: int
    series_ctl: SeriesControl

    def market_at(self, lam, m_deals):
        return replace(self.market, lam=lam, m_deals=m_deals)

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _parse_scalar(text, line, column):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if _WORD.match(text):
        return text
    raise ConfigParseError('cannot read value %r' % text, line, column)


def _parse_range(text, line, column):
    parts = [p.strip() for p in text.split(':')]
    if len(parts) != 3:
        raise ConfigParseError('range must read start:stop:step, got %r' % text, line, column)
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigParseError('range bounds must be numbers, got %r' % text, line, column)
    if step <= 0 or stop < start:
        raise ConfigParseError('range %r needs step > 0 and stop >= start' % text, line, column)
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def _parse_value(text, line, column):
    if not text:
        raise ConfigParseError('missing value', line, column)
    if ':' in text:
        return _parse_range(text, line, column)
    if ',' in text:
        items = [t.strip() for t in text.split(',')]
        if any(not t for t in items):
            raise ConfigParseError('empty list item in %r' % text, line, column)
        return [_parse_scalar(t, line, column) for t in items]
    return _parse_scalar(text, line, column)


def parse_document(text):
    """
    :return: EasyDict tree of the raw values, before validation
    """
    raw = EasyDict()
    seen = {}
    for lineno, full_line in enumerate(text.splitlines(), start=1):
        line = full_line.split('#', 1)[0].rstrip()
        if not line.strip():
            continue
        if '=' not in line:
            raise ConfigParseError("expected 'key = value'", lineno, len(line) - len(line.lstrip()) + 1)
        key_part, value_part = line.split('=', 1)
        key = key_part.strip()
        if not _KEY.match(key):
            raise ConfigParseError('bad key %r' % key, lineno, len(key_part) - len(key_part.lstrip()) + 1)
        if key in seen:
            raise ConfigParseError('duplicate key %r (first on line %d)' % (key, seen[key]), lineno, 1)
        seen[key] = lineno
        column = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())
        value = _parse_value(value_part.strip(), lineno, column)
        node = raw
        *sections, leaf = key.split('.')
        for section in sections:
            if section not in node:
                node[section] = EasyDict()
            node = node[section]
            if not isinstance(node, dict):
                raise ConfigParseError('key %r nests under a value' % key, lineno, 1)
        node[leaf] = value
    return raw


def _as_list(value):
    return list(value) if isinstance(value, list) else [value]


class _Collector:
    def __init__(self):
        self.failures = []

    def fail(self, path, reason):
        self.failures.append((path, reason))

    def number(self, node, section, key, integer=False, required=True):
        path = '%s.%s' % (section, key)
        if key not in node:
            if required:
                self.fail(path, 'required')
            return None
        value = node[key]
        if isinstance(value, list) or isinstance(value, str):
            self.fail(path, 'expected a single number, got %r' % (value,))
            return None
        if integer and int(value) != value:
            self.fail(path, 'expected an integer, got %r' % value)
            return None
        return int(value) if integer else float(value)

    def grid(self, raw, sweep_key, section, key, integer=False):
        path = 'sweep.%s' % sweep_key
        values = raw.get('sweep', {}).get(sweep_key)
        if values is None:
            path = '%s.%s' % (section, key)
            values = raw.get(section, {}).get(key)
        if values is None:
            self.fail(path, 'required (or set sweep.%s)' % sweep_key)
            return ()
        values = _as_list(values)
        if any(isinstance(v, str) for v in values):
            self.fail(path, 'expected numbers, got %r' % (values,))
            return ()
        if integer and any(int(v) != v for v in values):
            self.fail(path, 'expected integers, got %r' % (values,))
            return ()
        if any(b <= a for a, b in zip(values, values[1:])):
            self.fail(path, 'grid must be strictly increasing')
        return tuple(int(v) if integer else float(v) for v in values)


def _apply_defaults(raw):
    for section, defaults in DEFAULTS.items():
        if section not in raw:
            raw[section] = EasyDict()
        for key, value in defaults.items():
            if key not in raw[section]:
                raw[section][key] = value
    return raw


def validate(raw):
    """Turn the raw tree into a RunConfig, collecting every failure."""
    raw = _apply_defaults(raw)
    check = _Collector()
    for section, node in raw.items():
        if section not in KNOWN_KEYS or not isinstance(node, dict):
            check.fail(section, 'unknown section')
            continue
        for key in node:
            if key not in KNOWN_KEYS[section]:
                check.fail('%s.%s' % (section, key), 'unknown key')

    firm = None
    firm_values = {k: check.number(raw.firm, 'firm', k) for k in KNOWN_KEYS['firm']}
    if all(v is not None for v in firm_values.values()):
        try:
            firm = FirmParams(**firm_values)
        except ValueError as e:
            check.fail('firm', str(e))
        else:
            try:
                derive_x_dynamics(firm)
            except DivergentValuationError as e:
                check.fail('firm.gamma', 'gamma must exceed the derived drift mu (%s)' % e)

    c_m_grid = check.grid(raw, 'c_m', 'governance', 'c_m')
    lambda_grid = check.grid(raw, 'lambda', 'market', 'lambda')
    m_deals_grid = check.grid(raw, 'm_deals', 'market', 'm_deals', integer=True)

    templates = []
    kinds = _as_list(raw.governance.kind)
    if len(set(kinds)) != len(kinds):
        check.fail('governance.kind', 'duplicate firm kinds %r' % (kinds,))
    for kind in kinds:
        try:
            kind = FirmKind(kind)
        except ValueError:
            check.fail('governance.kind', 'expected general or controlled, got %r' % (kind,))
            continue
        if kind is FirmKind.GENERAL:
            templates.append(GovernanceTemplate(kind=kind, kappa=check.number(raw.governance, 'governance', 'kappa'),
                                                beta=check.number(raw.governance, 'governance', 'beta')))
            continue
        rho0 = check.number(raw.governance, 'governance', 'rho0', required=False)
        ratio = check.number(raw.governance, 'governance', 'rho0_ratio', required=False)
        if (rho0 is None) == (ratio is None):
            check.fail('governance.rho0', 'controlled firms need exactly one of rho0 or rho0_ratio')
            continue
        if ratio is not None and not 0. <= ratio <= 1.:
            check.fail('governance.rho0_ratio', 'must lie in [0, 1], got %r' % ratio)
            continue
        templates.append(GovernanceTemplate(kind=kind, rho0=rho0, rho0_ratio=ratio))

    for template in templates:
        for c_m in c_m_grid:
            try:
                template.build(c_m)
            except ValueError as e:
                check.fail('governance', 'c_m=%r: %s' % (c_m, e))

    market = None
    delta_t = check.number(raw.market, 'market', 'delta_t')
    n_informed = check.number(raw.market, 'market', 'n_informed', integer=True)
    n_shares = check.number(raw.market, 'market', 'n_shares', integer=True)
    if None not in (delta_t, n_informed, n_shares) and lambda_grid and m_deals_grid:
        failed = len(check.failures)
        for lam in lambda_grid:
            for m in m_deals_grid:
                try:
                    market = MarketParams(lam=lam, delta_t=delta_t, n_informed=n_informed, m_deals=m,
                                          n_shares=n_shares)
                except ValueError as e:
                    check.fail('market', 'lambda=%r, m_deals=%r: %s' % (lam, m, e))
        if len(check.failures) == failed:
            market = MarketParams(lam=lambda_grid[0], delta_t=delta_t, n_informed=n_informed,
                                  m_deals=m_deals_grid[0], n_shares=n_shares)

    query = raw.get('query', {})
    if 's0' in query and 's0_fraction' in query:
        check.fail('query', 'set either s0 or s0_fraction, not both')
    s0_is_fraction = 's0' not in query
    s0_values = tuple(_as_list(query.get('s0_fraction', list(DEFAULT_S0_FRACTIONS)))) if s0_is_fraction \
        else tuple(_as_list(query.s0))
    if any(isinstance(v, str) or not 0. <= v < 1. for v in s0_values):
        check.fail('query.s0_fraction' if s0_is_fraction else 'query.s0', 'values must lie in [0, 1)')
    s0_values = tuple(sorted(set(float(v) for v in s0_values if not isinstance(v, str))))

    trials = check.number(raw.run, 'run', 'trials', integer=True)
    if trials is not None and trials < 1:
        check.fail('run.trials', 'must be at least 1')
    seed = check.number(raw.run, 'run', 'seed', integer=True)
    if seed is not None and seed < 0:
        check.fail('run.seed', 'must be non-negative')
    workers = check.number(raw.run, 'run', 'workers', integer=True)
    if workers is not None and workers < 1:
        check.fail('run.workers', 'must be at least 1')
    output_path = str(raw.run.output)

    series_ctl = None
    tail_tol = check.number(raw.series, 'series', 'tail_tol')
    max_terms = check.number(raw.series, 'series', 'max_terms', integer=True)
    if tail_tol is not None and max_terms is not None:
        try:
            series_ctl = SeriesControl(tail_tol=tail_tol, max_terms=max_terms)
        except ValueError as e:
            check.fail('series', str(e))
        if n_informed is not None and any(max_terms < m - n_informed + 1 for m in m_deals_grid):
            check.fail('series.max_terms', 'must be at least m + 1 for every surplus deal count')

    if check.failures:
        raise ConfigValidationError(check.failures)
    return RunConfig(firm=firm, governance=tuple(templates), market=market, c_m_grid=c_m_grid,
                     lambda_grid=lambda_grid, m_deals_grid=m_deals_grid, s0_values=s0_values,
                     s0_is_fraction=s0_is_fraction, trials=trials, seed=seed, output_path=output_path,
                     workers=workers, series_ctl=series_ctl)


def parse_config(text):
    return validate(parse_document(text))


def load_config(path):
    with open(path) as f:
        text = f.read()
    cfg = parse_config(text)
    logger.info('loaded %s: %d c_m x %d lambda x %d m_deals x %d s0, kinds %s', path, len(cfg.c_m_grid),
                len(cfg.lambda_grid), len(cfg.m_deals_grid), len(cfg.s0_values),
                ','.join(t.kind.value for t in cfg.governance))
    return cfg
