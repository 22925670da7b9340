import numpy as np

__all__ = ['sample_arrivals', 'sample_noise_beliefs']


def sample_arrivals(market, rng_seed, size=None):
    """
    Number of noise traders arriving within one inter-transaction interval
    :param market: MarketParams
    :param rng_seed: seed, SeedSequence or Generator
    :param size: None for a scalar draw, else the output shape
    :return: N_U ~ Poisson(lambda * delta_t)
    """
    rng = np.random.default_rng(rng_seed)
    draws = rng.poisson(market.mean_arrivals, size=size)
    return int(draws) if size is None else draws


def sample_noise_beliefs(count, floor, ceiling, rng_seed):
    """
    Independent uniform estimates of the share value on [floor, ceiling]
    :param count: N_U
    :return: FloatArray[N_U]
    """
    if floor > ceiling:
        raise ValueError('floor %r exceeds ceiling %r' % (floor, ceiling))
    if count < 0:
        raise ValueError('count must be non-negative, got %r' % count)
    rng = np.random.default_rng(rng_seed)
    if floor == ceiling:
        return np.full(int(count), float(floor))
    return rng.uniform(floor, ceiling, size=int(count))
