"""Shared helpers for the test suite: small random scenario builders."""

import numpy as np


def crandn(rng, *shape):
    """Standard complex Gaussian array."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_scenario(seed, num_aps=2, num_users=2, na=2, m=2, scale=1.0):
    """Random equivalent channels plus a feasible power/noise setup."""
    rng = np.random.default_rng(seed)
    n_t = num_aps * na
    e_list = [scale * crandn(rng, m, n_t) for _ in range(num_users)]
    p_ap = np.full(num_aps, 1.0)
    n0 = 0.1
    return e_list, p_ap, n0
