import pytest

from model.firm import FirmKind, FirmParams, GovernanceSpec
from modules.auction import MarketParams

BASE_CONFIG = """
firm.alpha = 0.5
firm.delta = 0.05
firm.r = 0.05
firm.mu_z = 0.01
firm.sigma_z = 0.2
firm.theta = 0.5
firm.gamma = 0.1
firm.s_total = 1
firm.z0 = 1

governance.kind = general, controlled
governance.kappa = 1
governance.beta = 0.5
governance.rho0_ratio = 0.5

market.delta_t = 1
market.n_informed = 1

sweep.c_m = 0.2, 0.4
sweep.lambda = 0, 1, 4
sweep.m_deals = 1, 3

query.s0_fraction = 0, 0.5
run.trials = 4000
"""


@pytest.fixture(scope='module')
def firm():
    return FirmParams(alpha=0.5, delta=0.05, r=0.05, mu_z=0.01, sigma_z=0.2, theta=0.5, gamma=0.1,
                      s_total=1., z0=1.)


@pytest.fixture(scope='module')
def general_gov():
    # strictly concave f so that g_s0 moves with c_m even at s0 = 0
    return GovernanceSpec(c_m=0.4, kind=FirmKind.GENERAL, kappa=1., beta=0.5)


@pytest.fixture(scope='module')
def linear_gov():
    return GovernanceSpec(c_m=0.4, kind=FirmKind.GENERAL, kappa=1., beta=1.)


@pytest.fixture(scope='module')
def controlled_gov():
    return GovernanceSpec(c_m=0.4, kind=FirmKind.CONTROLLED, rho0=0.2)


@pytest.fixture(scope='module')
def market():
    return MarketParams(lam=2., delta_t=1., n_informed=1, m_deals=3)


@pytest.fixture
def config_text():
    return BASE_CONFIG
