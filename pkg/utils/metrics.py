import math

import numpy as np
from scipy.stats import norm


def iterate_in_chunks(l, n):
    '''Yield successive 'n'-sized chunks from iterable 'l'.
    Note: last chunk will be smaller than l if n doesn't divide l perfectly.
    '''
    for i in range(0, len(l), n):
        yield l[i:i + n]


def binomial_std_error(p, trials):
    p = min(max(p, 0.), 1.)
    return math.sqrt(p * (1. - p) / trials)


def agreement_z(points, alpha=0.01, minimum=4.):
    '''Two-sided Bonferroni z for a family of 'points' comparisons at family-wise level 'alpha',
    never below 'minimum'.
    '''
    points = max(int(points), 1)
    return max(minimum, float(norm.isf(alpha / (2. * points))))


def agreement_threshold(f_analytic, trials, z):
    '''Allowed |f_mc - f_analytic|. The 1/trials floor keeps F in {0, 1} from demanding exact equality.'''
    return z * max(binomial_std_error(f_analytic, trials), 1. / trials)


def sign_with_tolerance(value, noise_floor):
    '''Sign of 'value', or 0 when it is within 'noise_floor' of zero.'''
    if not np.isfinite(value):
        return int(np.sign(value)) if not np.isnan(value) else 0
    if abs(value) <= noise_floor:
        return 0
    return 1 if value > 0 else -1


def relative_error(estimate, reference, abs_floor=0.):
    '''|estimate - reference| / max(|reference|, abs_floor).'''
    denom = max(abs(reference), abs_floor)
    if denom == 0:
        return 0. if estimate == reference else math.inf
    return abs(estimate - reference) / denom
