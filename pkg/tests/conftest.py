import itertools
import math

import numpy as np
import pytest

from ptfcount.polynomials import Polynomial


def random_polynomial(rng, d, n, terms=6, multilinear=False,
                      with_constant=True):
    coeffs = {}
    if with_constant:
        coeffs[()] = float(rng.normal()) * 0.3
    for _ in range(terms):
        q = int(rng.integers(1, d + 1))
        if multilinear:
            q = min(q, n)
            key = tuple(sorted(rng.choice(np.arange(1, n + 1), size=q,
                                          replace=False).tolist()))
        else:
            key = tuple(sorted(rng.integers(1, n + 1, size=q).tolist()))
        coeffs[key] = coeffs.get(key, 0.0) + float(rng.normal())
    coeffs = {k: v for k, v in coeffs.items() if v != 0.0}
    if not any(k for k in coeffs):
        coeffs[(1,)] = 1.0
    return Polynomial(n, coeffs)


def gaussian_raw_moment(p: Polynomial, k: int = 1) -> float:
    """E[p(x)^k] for x ~ N(0,1)^n by direct monomial expansion.

    Independent of the chaos machinery: expands the product and applies
    E[x^m] = (m-1)!! for even m, 0 for odd m, per variable.
    """
    def double_factorial(m):
        out = 1
        while m > 1:
            out *= m
            m -= 2
        return out

    total = 0.0
    items = list(p.coeffs.items())
    for combo in itertools.product(items, repeat=k):
        c = 1.0
        counts = {}
        for key, v in combo:
            c *= v
            for i in key:
                counts[i] = counts.get(i, 0) + 1
        if any(m % 2 for m in counts.values()):
            continue
        for m in counts.values():
            c *= double_factorial(m - 1)
        total += c
    return total


def gaussian_variance_oracle(p: Polynomial) -> float:
    return gaussian_raw_moment(p, 2) - gaussian_raw_moment(p, 1) ** 2


def enum_hypercube_expectation(p: Polynomial, fn=None) -> float:
    n = max(p.support_vars(), default=0)
    idx = np.arange(1 << n, dtype=np.int64)
    x = np.zeros((1 << n, p.dim))
    for j in range(n):
        x[:, j] = 1.0 - 2.0 * ((idx >> j) & 1)
    vals = p.evaluate(x)
    if fn is not None:
        vals = fn(vals)
    return float(np.mean(vals))


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
