import numpy as np
import pytest

from ptfcount.polynomials import Polynomial
from ptfcount.boolean import (
    BooleanConfig,
    construct_tree,
    count_boolean,
    derive_tau,
    influence,
    influences,
)
from ptfcount.oracles import enumerate_boolean

from conftest import random_polynomial


def test_influence_anchors():
    assert influence(Polynomial(2, {(1, 2): 1.0}), 1) == pytest.approx(1.0)
    p = Polynomial(2, {(1,): 2 ** -0.5, (2,): 2 ** -0.5})
    assert influence(p, 1) == pytest.approx(0.5)
    p = Polynomial(3, {(1, 2): 1.0, (2, 3): 2.0})
    assert influence(p, 2) == pytest.approx(5.0)


def test_influences_sum():
    p = Polynomial(3, {(1, 2): 1.0, (2, 3): 2.0, (): 7.0})
    infs = influences(p)
    assert infs == {1: 1.0, 2: 5.0, 3: 4.0}


def test_anchor_majority_of_three():
    p = Polynomial(3, {(1,): 1.0, (2,): 1.0, (3,): 1.0})
    assert count_boolean(p, 0.05).value == pytest.approx(0.5, abs=1e-12)


def test_anchor_pairs():
    p = Polynomial(3, {(1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0})
    assert count_boolean(p, 0.05).value == pytest.approx(0.25, abs=1e-12)


def test_square_terms_reduce():
    # x^2 = 1 on the hypercube
    p = Polynomial(2, {(1, 1): 1.0, (2,): 1.0, (): -1.5})
    truth = float(enumerate_boolean(p))
    assert count_boolean(p, 0.05).value == pytest.approx(truth, abs=1e-12)


def test_constant():
    assert count_boolean(Polynomial(1, {(): -1.0})).value == 0.0
    assert count_boolean(Polynomial(1, {(): 1.0})).value == 1.0


def test_tree_decided_leaf():
    # large constant dominates: single decided leaf
    p = Polynomial(4, {(): 10.0, (1, 2): 1.0, (3, 4): 1.0})
    tree = construct_tree(p, derive_tau(0.05, 2, "practical"))
    assert len(tree.leaves) == 1
    assert tree.leaves[0].kind == "decided"
    assert tree.leaves[0].value == 1.0


def test_fail_mass_reported():
    rng = np.random.default_rng(0)
    coeffs = {}
    for _ in range(40):
        key = tuple(sorted(rng.choice(np.arange(1, 19), size=2,
                                      replace=False).tolist()))
        coeffs[key] = coeffs.get(key, 0.0) + float(rng.normal())
    p = Polynomial(18, coeffs)
    cfg = BooleanConfig(max_depth=2, enum_vars=2)
    res = count_boolean(p, 0.05, cfg)
    assert res.budget["fail_mass"] > 0.0
    assert res.budget["total"] >= res.budget["fail_mass"]


def test_wide_corpus_vs_enumeration(rng):
    for i in range(12):
        d = [1, 2, 3][i % 3]
        n = int(rng.integers(6, 19))
        p = random_polynomial(rng, d=d, n=n, terms=8, multilinear=True)
        res = count_boolean(p, 0.05)
        truth = float(enumerate_boolean(p))
        assert abs(res.value - truth) <= 0.05


def test_budget_total_bounds_actual_error(rng):
    for i in range(6):
        p = random_polynomial(rng, d=2, n=14, terms=10, multilinear=True)
        res = count_boolean(p, 0.05)
        truth = float(enumerate_boolean(p))
        assert abs(res.value - truth) <= res.budget["total"] + 1e-9
