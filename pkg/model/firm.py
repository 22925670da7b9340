import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

__all__ = ['FirmKind', 'FirmParams', 'GovernanceSpec', 'XDynamics', 'DomainError', 'DivergentValuationError',
           'agency_cost_share', 'agency_cost_slope', 'optimal_capital', 'controller_objective',
           'derive_x_dynamics', 'z_at', 'share_value', 'share_value_quadrature', 'per_share_incomes',
           'benefit_of_control', 's_bar']


class DomainError(ValueError):
    pass


class DivergentValuationError(ValueError):
    """gamma <= mu: the discounted cash-flow integral does not converge."""
    pass


class FirmKind(str, Enum):
    GENERAL = 'general'
    CONTROLLED = 'controlled'


@dataclass(frozen=True)
class FirmParams:
    """
    Production, discount and share parameters of the representative firm.
    w_t is the realized Brownian value at the valuation time t_eval; it is an
    input, never sampled here.
    """
    alpha: float
    delta: float
    r: float
    mu_z: float
    sigma_z: float
    theta: float
    gamma: float
    s_total: float
    z0: float
    t_eval: float = 0.0
    w_t: float = 0.0

    def __post_init__(self):
        if not 0. < self.alpha < 1.:
            raise ValueError('alpha must lie in (0, 1), got %r' % self.alpha)
        if not 0. < self.theta <= 1.:
            raise ValueError('theta must lie in (0, 1], got %r' % self.theta)
        if self.s_total <= 0:
            raise ValueError('s_total must be positive, got %r' % self.s_total)
        if self.z0 <= 0:
            raise ValueError('z0 must be positive, got %r' % self.z0)
        if self.r + self.delta <= 0:
            raise ValueError('r + delta must be positive, got %r' % (self.r + self.delta))
        if self.sigma_z < 0:
            raise ValueError('sigma_z must be non-negative, got %r' % self.sigma_z)

    @property
    def user_cost(self):
        return self.r + self.delta


@dataclass(frozen=True)
class GovernanceSpec:
    """
    Governance bound c_m plus the firm type.

    General firms choose their agency cost against the penalty-scale function
    f(c) = kappa * c**beta (increasing, concave, f(0) = 0). Controlled firms
    carry an exogenous agency cost rho0 <= c_m.
    """
    c_m: float
    kind: FirmKind = FirmKind.GENERAL
    kappa: float = 1.0
    beta: float = 1.0
    rho0: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', FirmKind(self.kind))
        if not 0. <= self.c_m < 1.:
            raise ValueError('c_m must lie in [0, 1), got %r' % self.c_m)
        if self.kind is FirmKind.GENERAL:
            if self.kappa <= 0:
                raise ValueError('kappa must be positive, got %r' % self.kappa)
            if not 0. < self.beta <= 1.:
                raise ValueError('beta must lie in (0, 1] for a concave f, got %r' % self.beta)
        else:
            if self.rho0 is None:
                raise ValueError('controlled firms need rho0')
            if not 0. <= self.rho0 <= self.c_m:
                raise ValueError('rho0 must lie in [0, c_m] (c_m=%r), got %r' % (self.c_m, self.rho0))

    def f(self, c=None):
        c = self.c_m if c is None else c
        return self.kappa * c ** self.beta

    def with_c_m(self, c_m):
        return replace(self, c_m=c_m)


@dataclass(frozen=True)
class XDynamics:
    """Geometric Brownian motion dX = mu X dt + sigma X dW for the per-share cash-flow scale."""
    mu: float
    sigma: float
    x0: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError('sigma must be non-negative, got %r' % self.sigma)
        if self.x0 <= 0:
            raise ValueError('x0 must be positive, got %r' % self.x0)

    def value_at(self, t, w):
        return self.x0 * math.exp((self.mu - 0.5 * self.sigma ** 2) * t + self.sigma * w)


def _require_general(gov, op):
    if gov.kind is not FirmKind.GENERAL:
        raise DomainError('%s is defined for general-type firms only' % op)


def agency_cost_share(gov, firm):
    """
    Agency cost rho chosen by the controlling community.
    General: the first-order solution (1 - theta)/2 * f(c_m), clamped to [0, c_m].
    Controlled: the exogenous rho0.
    """
    if gov.kind is FirmKind.CONTROLLED:
        return float(gov.rho0)
    interior = 0.5 * (1. - firm.theta) * gov.f()
    return float(min(interior, gov.c_m))


def agency_cost_slope(gov, firm):
    """d rho / d c_m. Zero for controlled firms, 1 on the clamp, beta * rho / c_m inside."""
    if gov.kind is FirmKind.CONTROLLED:
        return 0.
    if gov.c_m == 0:
        raise DomainError('rho is not differentiable at c_m = 0 for beta < 1')
    interior = 0.5 * (1. - firm.theta) * gov.f()
    if interior > gov.c_m:
        return 1.
    return gov.beta * interior / gov.c_m


def optimal_capital(firm, z):
    if z < 0:
        raise DomainError('state value z must be non-negative, got %r' % z)
    p = 1. / (1. - firm.alpha)
    return (firm.alpha / firm.user_cost) ** p * z ** p


def controller_objective(rho, gov, firm):
    """rho + (1 - rho) theta - rho^2 / f(c_m), the per-unit-profit take of the controlling community."""
    _require_general(gov, 'controller_objective')
    if not 0. <= rho <= gov.c_m:
        raise DomainError('rho must lie in [0, c_m=%r], got %r' % (gov.c_m, rho))
    f_cm = gov.f()
    if f_cm == 0:
        return firm.theta if rho == 0 else -math.inf
    return rho + (1. - rho) * firm.theta - rho ** 2 / f_cm


def derive_x_dynamics(firm):
    a = firm.alpha
    mu = firm.mu_z / (1. - a) + 0.5 * firm.sigma_z ** 2 * a / (1. - a) ** 2
    sigma = firm.sigma_z / (1. - a)
    if firm.gamma <= mu:
        raise DivergentValuationError(
            'gamma=%r must exceed the derived drift mu=%r for the valuation integral to converge' % (firm.gamma, mu))
    x0 = (1. - a) / firm.s_total * (a / firm.user_cost) ** (a / (1. - a)) * firm.z0 ** (1. / (1. - a))
    return XDynamics(mu=mu, sigma=sigma, x0=x0)


def z_at(firm):
    """Z at the valuation time, from the closed-form solution of dZ = mu_z Z dt + sigma_z Z dW."""
    return firm.z0 * math.exp((firm.mu_z - 0.5 * firm.sigma_z ** 2) * firm.t_eval + firm.sigma_z * firm.w_t)


def share_value(firm, dyn, rho_hat):
    """V(T2, rho_hat) = (1 - rho_hat) / (gamma - mu) * X_T2."""
    if not 0. <= rho_hat < 1.:
        raise DomainError('rho_hat must lie in [0, 1), got %r' % rho_hat)
    if firm.gamma <= dyn.mu:
        raise DivergentValuationError('gamma=%r must exceed mu=%r' % (firm.gamma, dyn.mu))
    return (1. - rho_hat) / (firm.gamma - dyn.mu) * dyn.value_at(firm.t_eval, firm.w_t)


def share_value_quadrature(firm, dyn, rho_hat, horizon=None):
    """
    Finite-horizon quadrature of the discounted expected cash flows of one share.
    Defaults to a horizon of 50 / (gamma - mu), where the neglected tail is e^-50.
    """
    if horizon is None:
        horizon = 50. / (firm.gamma - dyn.mu)
    x_t = dyn.value_at(firm.t_eval, firm.w_t)

    def integrand(u):
        return np.exp(-firm.gamma * u) * (1. - rho_hat) * x_t * np.exp(dyn.mu * u)

    value, abserr = integrate.quad(integrand, 0., horizon, epsabs=0., epsrel=1e-11, limit=200)
    logger.debug('dcf quadrature horizon=%.4g value=%.12g abserr=%.3g', horizon, value, abserr)
    return value


def per_share_incomes(firm, gov):
    """
    Per-share income of the controlling community and of an outside investor at the
    valuation time, rebuilt from Z, the optimal capital and the raw Q_C, Q_U expressions.
    """
    _require_general(gov, 'per_share_incomes')
    if not 0. < firm.theta < 1.:
        raise DomainError('per-share incomes need theta in (0, 1), got %r' % firm.theta)
    rho = agency_cost_share(gov, firm)
    z = z_at(firm)
    k = optimal_capital(firm, z)
    profit = z * k ** firm.alpha - firm.user_cost * k
    f_cm = gov.f()
    penalty = 0. if rho == 0 else rho ** 2 / f_cm
    q_c = (rho + (1. - rho) * firm.theta - penalty) * profit
    q_u = (1. - rho) * (1. - firm.theta) * profit
    return q_c / (firm.theta * firm.s_total), q_u / ((1. - firm.theta) * firm.s_total)


def benefit_of_control(firm, gov, dyn):
    """
    Delta Q at the valuation time: (rho - rho^2 / f(c_m)) / theta * X_T2.
    With an interior rho this equals (1 - theta^2) f(c_m) / (4 theta) * X_T2.
    """
    _require_general(gov, 'benefit_of_control')
    f_cm = gov.f()
    if f_cm == 0:
        return 0.
    rho = agency_cost_share(gov, firm)
    return (rho - rho ** 2 / f_cm) / firm.theta * dyn.value_at(firm.t_eval, firm.w_t)


def s_bar(gov, rho):
    """Largest attainable discount rate, reached when the price falls to the floor."""
    if not 0. <= rho <= gov.c_m:
        raise DomainError('rho must lie in [0, c_m=%r], got %r' % (gov.c_m, rho))
    return (gov.c_m - rho) / (1. - rho)
