import math

import numpy as np
import pytest

from ptfcount.polynomials import Polynomial
from ptfcount.chaos import covariance, single_level, to_chaos
from ptfcount.decomposition import (
    DecompositionConfig,
    decompose_max_iter,
    decompose_one_wiener,
    derandomized_partition,
    make_schedule,
    regularize_one_wiener,
    regularize_poly,
    split_one_wiener,
    var_of,
)
from ptfcount.kwise import KWiseSpace
from ptfcount.tensors import SymTensor, contract_sym, inner

from conftest import random_polynomial


def _random_unit_tensor(rng, q, n, keys=5):
    coeffs = {}
    for _ in range(keys):
        key = tuple(sorted(rng.choice(np.arange(1, n + 1), size=q,
                                      replace=False).tolist()))
        coeffs[key] = float(rng.normal())
    f = SymTensor(q, n, coeffs)
    v = var_of(f)
    return f.scale(1.0 / math.sqrt(v))


def test_split_anchor_x1x2():
    f = SymTensor(2, 2, {(1, 2): 0.5})  # unit variance
    out = split_one_wiener(f, 0.4)
    assert not out.eigenregular
    assert out.c == pytest.approx(1.0)
    assert var_of(out.remainder) == pytest.approx(0.0, abs=1e-12)
    assert out.p.level == 1 and out.q.level == 1


def test_split_eigenregular_contract():
    f = SymTensor(2, 2, {(1, 2): 0.5})
    out = split_one_wiener(f, 0.9)  # lambda = 0.5 < 0.9
    assert out.eigenregular
    assert out.lam == pytest.approx(0.5)


def test_split_c_lower_bound(rng):
    for _ in range(20):
        q = int(rng.integers(2, 5))
        f = _random_unit_tensor(rng, q, 8)
        eta = 0.1
        out = split_one_wiener(f, eta)
        if out.eigenregular:
            continue
        assert out.c >= eta / 2 ** q - 1e-12


def test_split_disjoint_support(rng):
    for _ in range(10):
        f = _random_unit_tensor(rng, 3, 7)
        out = split_one_wiener(f, 0.1)
        if out.eigenregular:
            continue
        sup_p = out.p.tensor.support_vars()
        sup_q = out.q.tensor.support_vars()
        assert not (sup_p & sup_q)


def test_partition_anchor():
    f = SymTensor(2, 2, {(1, 2): 1.0})
    alpha = SymTensor(1, 2, {(1,): 1.0})
    beta = SymTensor(1, 2, {(2,): 1.0})
    a1, a2 = derandomized_partition(f, alpha, beta)
    assert 1 in a1 and 2 in a2
    from ptfcount.decomposition import partition_objective
    assert partition_objective(f, alpha, beta, a1, a2) >= 0.5 - 1e-12


def test_kwise_space_marginals():
    # every pair of coordinates is uniform over the 4 sign patterns
    space = KWiseSpace(5, 2)
    counts = {}
    for seed in range(space.size):
        a = space.assignment(seed)
        for i in range(5):
            for j in range(i + 1, 5):
                key = (i, j, a[i], a[j])
                counts[key] = counts.get(key, 0) + 1
    vals = set(counts.values())
    assert len(vals) == 1


def test_decompose_reconstruction(rng):
    for _ in range(15):
        q = int(rng.integers(2, 5))
        f = _random_unit_tensor(rng, q, 8)
        eta, eps = 0.15, 0.01
        out = decompose_one_wiener(f, eta, eps)
        # reconstruction: f = sum c_j (P_j Q_j tensor) + remainder
        acc = out.remainder.copy()
        pp = out.product_part()
        if pp is not None:
            acc = acc.add(pp, 1.0)
        diff = acc.add(f, -1.0)
        assert var_of(diff) <= 1e-9
        # orthogonality of remainder and product part
        if pp is not None:
            assert abs(math.factorial(q) * inner(pp, out.remainder)) <= 1e-9
        if out.status == "small-remainder":
            assert out.remainder_var <= eps + 1e-12
        else:
            assert out.remainder_eig <= eta + 1e-9
        assert out.m <= decompose_max_iter(q, eta, eps)
        assert out.sum_c_sq() <= (2.0 ** q / eta) ** (4 * max(out.m - 1, 0)) \
            + 1e-9


def test_regularize_exit_contract(rng):
    for _ in range(10):
        q = int(rng.integers(2, 4))
        f = _random_unit_tensor(rng, q, 8)
        schedule = make_schedule(0.01, 1, DecompositionConfig(eta0=0.3))
        out = regularize_one_wiener(f, schedule, 0.01)
        assert out.neg_var <= 0.01 + 1e-9
        if out.reg is not None:
            assert out.reg_eig <= out.eta_next + 1e-9
        # reconstruction through all emitted parts
        acc = out.neg.copy()
        for (a, _, _), u in zip(out.triples, out.products):
            acc = acc.add(u, a)
        if out.reg is not None:
            acc = acc.add(out.reg, out.a_reg)
        assert var_of(acc.add(f, -1.0)) <= 1e-9


def test_regularize_poly_x1x2():
    chaos = to_chaos(Polynomial(2, {(1, 2): 1.0}))
    dec = regularize_poly(chaos, 0.05, DecompositionConfig())
    assert dec.var_gap <= 1e-12
    assert sorted(ip.level for ip in dec.inner) == [1, 1]
    # outer polynomial is the product of its two arguments plus scaling
    assert dec.h.degree() == 2


def test_regularize_poly_x1x2x3_exact():
    chaos = to_chaos(Polynomial(3, {(1, 2, 3): 1.0}))
    dec = regularize_poly(chaos, 0.05, DecompositionConfig())
    assert dec.var_gap <= 1e-9
    assert all(e <= 0.5 for e in dec.eigen)


def test_regularize_poly_var_gap_bound(rng):
    for _ in range(10):
        p = random_polynomial(rng, d=3, n=6, multilinear=True)
        chaos = to_chaos(p)
        var = chaos.variance()
        dec = regularize_poly(chaos.scale(1.0 / math.sqrt(var)), 0.05,
                              DecompositionConfig())
        assert dec.var_gap <= 0.05 + 1e-9
        for ip, e in zip(dec.inner, dec.eigen):
            assert var_of(ip.tensor) == pytest.approx(1.0, rel=1e-9)
            if ip.level <= 1:
                assert e == 0.0


def test_degree_one_passthrough():
    chaos = to_chaos(Polynomial(2, {(1,): 1.0}))
    dec = regularize_poly(chaos, 0.05, DecompositionConfig())
    assert len(dec.inner) == 1
    assert dec.inner[0].level == 1
    assert dec.eigen == [0.0]
    assert dec.var_gap <= 1e-12
