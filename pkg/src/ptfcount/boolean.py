"""Deterministic counting over the hypercube.

count_boolean computes Pr[p(x) >= 0] for x uniform on {-1,1}^n to additive
accuracy eps.  The polynomial is first made multilinear exactly (x_i^2 = 1),
then a regularity tree is grown: at each node the maximum-influence variable
is restricted until the leaf polynomial is sign-decided, touches few enough
variables to enumerate its subcube exactly, or is tau-regular (all
influences small relative to the variance, in which case the Gaussian
counter applies by the invariance principle).  Leaves hitting the depth or
size budget contribute 1/2 and their mass is reported as error.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .polynomials import Polynomial
from .gaussian import CountConfig, CountResult, count_gaussian


@dataclass
class BooleanConfig:
    mode: str = "practical"      # "practical" | "certified"
    tau: float | None = None     # regularity threshold; None derives from eps
    max_depth: int = 16
    leaf_cap: int = 4096         # undecided nodes processed before giving up
    decided_fail: float | None = None   # per-leaf tail mass; None -> eps/8
    enum_vars: int = 12          # enumerate leaves touching <= this many vars
    gaussian: CountConfig = field(default_factory=CountConfig)


def derive_tau(eps: float, d: int, mode: str) -> float:
    if mode == "certified":
        return (eps / (4.0 * max(d, 1))) ** (4 * d + 1)
    # practical choice: invariance error behaves like d * sqrt(tau) on
    # benign inputs, so aim tau ~ (eps / (2d))^2
    return (eps / (2.0 * max(d, 1))) ** 2


def influence(p: Polynomial, i: int) -> float:
    """Inf_i = sum of squared coefficients of monomials containing x_i."""
    return sum(c * c for k, c in p.coeffs.items() if i in k)


def influences(p: Polynomial) -> dict[int, float]:
    out: dict[int, float] = {}
    for k, c in p.coeffs.items():
        for i in set(k):
            out[i] = out.get(i, 0.0) + c * c
    return out


def _enumerate_support(p: Polynomial) -> float:
    """Exact Pr[p >= 0] over the subcube of the variables p touches."""
    import numpy as np
    sup = sorted(p.support_vars())
    m = len(sup)
    if m == 0:
        return 1.0 if p.constant_term() >= 0.0 else 0.0
    idx = np.arange(1 << m, dtype=np.int64)
    x = np.zeros((1 << m, p.dim))
    for j, v in enumerate(sup):
        x[:, v - 1] = 1.0 - 2.0 * ((idx >> j) & 1)
    vals = p.evaluate(x)
    return float(np.count_nonzero(vals >= 0.0)) / (1 << m)


@dataclass
class Leaf:
    kind: str          # "decided" | "regular" | "fail" | "constant"
    depth: int
    mass: float        # 2^{-depth}
    value: float       # contribution in [0, 1]
    error: float       # per-leaf error bound, already mass-weighted


@dataclass
class RegularityTree:
    leaves: list[Leaf]
    depth: int
    fail_mass: float
    num_gaussian_leaves: int


def _variance(p: Polynomial) -> float:
    return sum(c * c for k, c in p.coeffs.items() if k)


def construct_tree(p: Polynomial, tau: float,
                   config: BooleanConfig | None = None,
                   eps: float = 0.05) -> RegularityTree:
    """Grow the restriction tree for a multilinear hypercube polynomial."""
    if config is None:
        config = BooleanConfig()
    d = max(p.degree(), 1)
    fail_p = config.decided_fail if config.decided_fail is not None \
        else eps / 8.0
    chern = math.log(2.0 / fail_p) ** (d / 2.0)

    leaves: list[Leaf] = []
    max_depth_seen = 0
    fail_mass = 0.0
    n_gauss = 0
    processed = 0
    queue: deque[tuple[Polynomial, int]] = deque([(p, 0)])
    while queue:
        node, depth = queue.popleft()
        mass = 2.0 ** (-depth)
        max_depth_seen = max(max_depth_seen, depth)
        mean = node.constant_term()
        var = _variance(node)
        if var == 0.0:
            leaves.append(Leaf("constant", depth, mass,
                               1.0 if mean >= 0.0 else 0.0, 0.0))
            continue
        fluct = node.l1_norm() - abs(mean)
        if abs(mean) > fluct:
            # the sign cannot flip on any point of the subcube
            leaves.append(Leaf("decided", depth, mass,
                               1.0 if mean > 0.0 else 0.0, 0.0))
            continue
        if abs(mean) >= chern * math.sqrt(var):
            # sign decided up to the concentration tail
            leaves.append(Leaf("decided", depth, mass,
                               1.0 if mean > 0.0 else 0.0, mass * fail_p))
            continue
        if len(node.support_vars()) <= config.enum_vars:
            leaves.append(Leaf("enumerated", depth, mass,
                               _enumerate_support(node), 0.0))
            continue
        infs = influences(node)
        top_var, top_inf = max(infs.items(), key=lambda kv: (kv[1], -kv[0]))
        if top_inf <= tau * var:
            res = count_gaussian(node, eps / 2.0, config.gaussian)
            n_gauss += 1
            inv_err = min(1.0, d * math.sqrt(tau))
            leaves.append(Leaf("regular", depth, mass, res.value,
                               mass * (inv_err + eps / 2.0)))
            continue
        processed += 1
        if depth >= config.max_depth or processed > config.leaf_cap:
            leaves.append(Leaf("fail", depth, mass, 0.5, mass * 0.5))
            fail_mass += mass
            continue
        queue.append((node.restrict(top_var, 1.0), depth + 1))
        queue.append((node.restrict(top_var, -1.0), depth + 1))
    return RegularityTree(leaves, max_depth_seen, fail_mass, n_gauss)


def count_boolean(p: Polynomial, eps: float = 0.05,
                  config: BooleanConfig | None = None) -> CountResult:
    if config is None:
        config = BooleanConfig()
    work = p.hypercube_reduce()
    d = work.degree()
    if d == 0:
        return CountResult(1.0 if work.constant_term() >= 0.0 else 0.0,
                           eps, "constant", {"total": 0.0}, {})
    tau = config.tau if config.tau is not None \
        else derive_tau(eps, d, config.mode)
    tree = construct_tree(work, tau, config, eps)
    value = sum(leaf.mass * leaf.value for leaf in tree.leaves)
    budget = {
        "fail_mass": tree.fail_mass,
        "leaf_errors": sum(leaf.error for leaf in tree.leaves
                           if leaf.kind != "fail"),
    }
    budget["total"] = budget["fail_mass"] + budget["leaf_errors"]
    diag = {
        "tau": tau,
        "depth": tree.depth,
        "leaves": len(tree.leaves),
        "leaf_kinds": {k: sum(1 for l in tree.leaves if l.kind == k)
                       for k in ("constant", "decided", "enumerated",
                                 "regular", "fail")},
        "gaussian_leaves": tree.num_gaussian_leaves,
    }
    return CountResult(float(min(max(value, 0.0), 1.0)), eps, "tree",
                       budget, diag)
