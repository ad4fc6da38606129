import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptfcount.polynomials import Polynomial
from ptfcount.chaos import (
    ChaosDecomposition,
    covariance,
    from_chaos,
    hermite_to_monomial,
    ito_multiply,
    monomial_to_hermite,
    single_level,
    to_chaos,
)
from ptfcount.tensors import SymTensor

from conftest import gaussian_raw_moment, gaussian_variance_oracle, \
    random_polynomial


def test_monomial_to_hermite_x2():
    # x^2 = He_2 + 1
    assert monomial_to_hermite(2) == (1.0, 0.0, 1.0)


def test_hermite_to_monomial_he3():
    # He_3 = x^3 - 3x
    assert hermite_to_monomial(3) == (0.0, -3.0, 0.0, 1.0)


def test_round_trip_exact(rng):
    for _ in range(30):
        p = random_polynomial(rng, d=4, n=5)
        back = from_chaos(to_chaos(p))
        diff = p.add(back, -1.0)
        assert max((abs(v) for v in diff.coeffs.values()), default=0.0) \
            <= 1e-10


def test_variance_anchors():
    assert to_chaos(Polynomial(1, {(1, 1): 1.0})).variance() \
        == pytest.approx(2.0)
    assert to_chaos(Polynomial(2, {(1, 2): 1.0})).variance() \
        == pytest.approx(1.0)


def test_variance_matches_oracle(rng):
    for _ in range(25):
        p = random_polynomial(rng, d=3, n=5)
        assert to_chaos(p).variance() == pytest.approx(
            gaussian_variance_oracle(p), rel=1e-9, abs=1e-9)


def test_mean_matches_oracle(rng):
    for _ in range(25):
        p = random_polynomial(rng, d=4, n=4)
        assert to_chaos(p).mean() == pytest.approx(
            gaussian_raw_moment(p, 1), abs=1e-10)


def test_ito_multiply_vs_direct(rng):
    for _ in range(25):
        a = random_polynomial(rng, d=3, n=4, terms=4)
        b = random_polynomial(rng, d=3, n=4, terms=4)
        got = ito_multiply(to_chaos(a), to_chaos(b))
        want = to_chaos(a.mul(b))
        for q in range(max(got.degree(), want.degree()) + 1):
            fa, fb = got.level(q), want.level(q)
            keys = set(fa.coeffs) | set(fb.coeffs)
            for key in keys:
                assert fa.coeffs.get(key, 0.0) == pytest.approx(
                    fb.coeffs.get(key, 0.0), abs=1e-9)


def test_cross_level_orthogonality(rng):
    # E[I_p(f) I_q(g)] = 0 for p != q
    for _ in range(10):
        f = single_level(SymTensor(2, 3, {(1, 2): float(rng.normal())}))
        g = single_level(SymTensor(3, 3, {(1, 2, 3): float(rng.normal())}))
        assert covariance(f, g) == pytest.approx(0.0, abs=1e-12)


def test_covariance_anchor():
    a = to_chaos(Polynomial(3, {(1, 2): 1.0}))
    b = to_chaos(Polynomial(3, {(1, 2): 1.0, (3,): 1.0}))
    assert covariance(a, b) == pytest.approx(1.0)


def test_fourth_moment_of_x1():
    # E[x^4] = 3 via ito multiplication of x^2 with itself
    sq = to_chaos(Polynomial(1, {(1, 1): 1.0}))
    fourth = ito_multiply(sq, sq)
    assert fourth.mean() == pytest.approx(3.0)


def test_multilinear_inputs_stay_multilinear(rng):
    for _ in range(10):
        p = random_polynomial(rng, d=3, n=6, multilinear=True)
        dec = to_chaos(p)
        for q in range(1, dec.degree() + 1):
            assert dec.level(q).is_multilinear()


def test_add_and_scale(rng):
    a = random_polynomial(rng, d=3, n=4)
    b = random_polynomial(rng, d=3, n=4)
    combo = to_chaos(a).add(to_chaos(b), -2.0)
    want = to_chaos(a.add(b, -2.0))
    assert combo.variance() == pytest.approx(want.variance(), rel=1e-9)
    assert combo.mean() == pytest.approx(want.mean(), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=123456))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    p = random_polynomial(rng, d=3, n=4, terms=4)
    back = from_chaos(to_chaos(p))
    diff = p.add(back, -1.0)
    assert max((abs(v) for v in diff.coeffs.values()), default=0.0) <= 1e-9
