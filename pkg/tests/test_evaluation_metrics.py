import json
import math
from dataclasses import replace

import pytest

import modules.liquidity as liquidity
from metrics.evaluation_metrics import (CheckResult, check_auction_oracle, check_derivatives, check_firm_model,
                                        check_liquidity_signs, check_mc_agreement, check_series_identity,
                                        summary_json)
from utils.config import parse_config
from utils.metrics import agreement_threshold, agreement_z, iterate_in_chunks, relative_error, sign_with_tolerance


@pytest.fixture
def cfg(config_text):
    return parse_config(config_text)


def test_agreement_z():
    assert agreement_z(1) == 4.
    assert agreement_z(10 ** 6) > 4.
    assert agreement_threshold(0., 1000, 4.) == pytest.approx(4e-3)
    assert agreement_threshold(0.5, 100, 4.) == pytest.approx(4. * 0.05)


def test_sign_with_tolerance():
    assert sign_with_tolerance(1e-3, 1e-6) == 1
    assert sign_with_tolerance(-1e-3, 1e-6) == -1
    assert sign_with_tolerance(1e-9, 1e-6) == 0
    assert sign_with_tolerance(math.inf, 1.) == 1
    assert sign_with_tolerance(math.nan, 1.) == 0


def test_relative_error():
    assert relative_error(1.1, 1.) == pytest.approx(0.1)
    assert relative_error(1e-12, 0., abs_floor=1e-3) == pytest.approx(1e-9)
    assert relative_error(0., 0.) == 0.
    assert relative_error(1., 0.) == math.inf


def test_iterate_in_chunks():
    assert [len(c) for c in iterate_in_chunks(range(10), 4)] == [4, 4, 2]


def test_series_identity(cfg):
    result = check_series_identity(cfg, count=50)
    assert result.passed and result.checked == 50
    assert result.detail['worst'] < result.detail['bound']


def test_derivatives(cfg):
    assert check_derivatives(cfg).passed
    faulty = check_derivatives(cfg, inject_fault=True)
    assert not faulty.passed and faulty.failures > 0


def test_auction_oracle():
    result = check_auction_oracle(count=20, rng_seed=3)
    assert result.passed and result.checked == 21
    assert result.detail['counterexample_trader'] == 2
    assert result.detail['counterexample_gain'] == pytest.approx(0.5)


def test_firm_model(cfg):
    result = check_firm_model(cfg, count=10)
    assert result.passed and result.failures == 0


def test_liquidity_signs(cfg):
    result = check_liquidity_signs(cfg)
    assert result.passed and result.detail['skipped'] == 0


def test_mc_agreement(config_text):
    small = parse_config(config_text.replace('sweep.lambda = 0, 1, 4', 'sweep.lambda = 2')
                         .replace('sweep.c_m = 0.2, 0.4', 'sweep.c_m = 0.4'))
    result = check_mc_agreement(small)
    assert result.passed and result.checked == 8


def test_summary_json():
    checks = [CheckResult('a', True, 3, 0, {'worst': math.inf}), CheckResult('b', False, 2, 1)]
    payload = json.loads(summary_json(checks))
    assert payload['passed'] is False
    assert [c['name'] for c in payload['checks']] == ['a', 'b']
    assert payload['checks'][0]['detail']['worst'] == 'inf'


def test_liquidity_signs_fail_without_governance_effect(config_text, monkeypatch):
    text = (config_text.replace('governance.kind = general, controlled', 'governance.kind = controlled')
            .replace('sweep.c_m = 0.2, 0.4', 'sweep.c_m = 0.3'))
    cfg = parse_config(text)
    assert check_liquidity_signs(cfg).passed

    g_fixed = liquidity.g_s0

    def frozen(s0, gov, rho):
        return g_fixed(s0, replace(gov, c_m=0.3), rho)

    monkeypatch.setattr(liquidity, 'g_s0', frozen)
    result = check_liquidity_signs(cfg)
    assert not result.passed and result.failures > 0
