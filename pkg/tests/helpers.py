"""Shared oracles and assertions for the test suite.

The oracles here deliberately use naive loops (itertools tuple
enumeration, per-entry Python arithmetic) so they stay independent of the
vectorized production paths they check.
"""

import itertools
import math
from itertools import permutations

import numpy as np


def rel_err(a, b) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


def brute_force_gf(k, theta_values) -> float:
    """Tuple-enumeration evaluation of the truncated functional."""
    n_sites = k.grid.n_sites
    dx = k.grid.spacing
    total = 0.0
    for n, tensor in enumerate(k.tensors):
        coeff = dx**n / math.factorial(n)
        block = 0.0
        for tup in itertools.product(range(n_sites), repeat=n):
            term = float(tensor[tup])
            for site in tup:
                term *= theta_values[site]
            block += term
        total += coeff * block
    return total


def assert_all_symmetric(k, tol=1e-12):
    for n, tensor in enumerate(k.tensors):
        if n < 2:
            continue
        for perm in permutations(range(n)):
            assert np.max(np.abs(tensor - np.transpose(tensor, perm))) <= tol, (
                "tensor %d not symmetric under %r" % (n, perm)
            )


def lagrange_eval(nodes, values, x) -> float:
    total = 0.0
    for i, (xi, yi) in enumerate(zip(nodes, values)):
        weight = 1.0
        for j, xj in enumerate(nodes):
            if j != i:
                weight *= (x - xj) / (xi - xj)
        total += yi * weight
    return total


def loglog_slope(xs, ys) -> float:
    lx = [math.log(v) for v in xs]
    ly = [math.log(v) for v in ys]
    mx = sum(lx) / len(lx)
    my = sum(ly) / len(ly)
    return sum((a - mx) * (b - my) for a, b in zip(lx, ly)) / sum(
        (a - mx) ** 2 for a in lx
    )
