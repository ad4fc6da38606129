"""Decomposition of Gaussian polynomials into products of simpler pieces.

The end product (regularize_poly) rewrites a degree-d polynomial p as

    p(x) ~= h(A_1(x), ..., A_r(x))

where h is a multilinear "outer" polynomial, each inner A_i lives in a
single Wiener chaos with unit variance, and every A_i is either degree <= 1
(exactly Gaussian) or eigenregular.  The construction works level by level:
split_one_wiener peels one product pair off a single chaos element,
decompose_one_wiener iterates that with projections, the (multi)
regularize routines drive decompose across a decreasing schedule of
eigenregularity thresholds, and multi_regularize_many_wieners recurses over
chaos levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .polynomials import Polynomial
from .tensors import (
    SymTensor,
    contract_sym,
    inner,
    lambda_max,
    orbit_size,
    sub_multisets,
)
from .chaos import ChaosDecomposition, single_level, ito_multiply_levels

# Exhaustive partition search is used when at most this many variables are
# relevant; beyond it, greedy conditional-expectation assignment takes over.
EXHAUSTIVE_PARTITION_VARS = 16
EXHAUSTIVE_PARTITION_WORK = 5 * 10 ** 7

# Constant in the iteration bound m <= M_SLACK * (4^q / eta^2) * log(1/eps)
# for decompose_one_wiener.
M_SLACK = 8


@dataclass
class DecompositionConfig:
    mode: str = "practical"   # "practical" | "certified"
    eta0: float = 0.2
    eta_ratio: float = 0.5
    eta_min: float = 0.05
    schedule_len: int | None = None
    schedule: list[float] | None = None  # explicit user schedule wins
    # certified-mode constants (absolute constants in the schedule formulas)
    C: float = 1.0
    C_prime: float = 1.0


def var_of(t: SymTensor) -> float:
    """Var[I_q(f)] = q! ||f||^2 (0 for order 0)."""
    if t.order == 0:
        return 0.0
    return math.factorial(t.order) * t.norm_sq()


@dataclass
class InnerPoly:
    """A unit-variance element of a single Wiener chaos."""
    level: int
    tensor: SymTensor

    def eigenregularity(self) -> float:
        if self.level <= 1:
            return 0.0
        return lambda_max(self.tensor).value / math.sqrt(var_of(self.tensor))


def make_schedule(eps: float, r: int,
                  config: DecompositionConfig) -> list[float]:
    """Decreasing eigenregularity thresholds eta_1 >= ... >= eta_K.

    K is large enough that the variance decay (1-eps)^i forces an exit
    before exhaustion; after eta_min is reached the schedule stays flat.
    """
    if config.schedule is not None:
        return list(config.schedule)
    K = config.schedule_len
    if K is None:
        K = max(4, math.ceil(max(r, 1) / eps * math.log(1.0 / eps)) + 1)
        K = min(K, 4000)
    out = []
    eta = config.eta0
    for _ in range(K):
        out.append(eta)
        eta = max(config.eta_min, eta * config.eta_ratio)
    return out


def certified_eta_schedule_d2(k: int, eps: float, beta,
                              config: DecompositionConfig) -> list[float]:
    """Literal threshold recursion for the degree-2 stage.

    eta_{t+1} = beta(C k^2/eps (1/eta_t^2) log^2(1/eps)
                     + C' k^3 (4/eta_t)^{C' (1/eta_t^2) log(1/eps)}).

    The values shrink astronomically fast; this is exposed for
    documentation and certified-mode reporting, not routine use.
    """
    K = max(4, math.ceil(k / eps * math.log(1.0 / eps)) + 1)
    K = min(K, 64)
    etas = []
    eta = 1.0
    log1e = math.log(1.0 / eps)
    for _ in range(K):
        expo = config.C_prime * (1.0 / eta ** 2) * log1e
        # guard against overflow; beyond ~1e300 the argument saturates
        try:
            coeff_term = config.C_prime * k ** 3 * (4.0 / eta) ** min(expo, 900.0)
        except OverflowError:
            coeff_term = float("inf")
        arg = (config.C * k * k / eps * (1.0 / eta ** 2) * log1e ** 2
               + coeff_term)
        eta = beta(arg) if math.isfinite(arg) else 0.0
        etas.append(eta)
        if eta == 0.0:
            break
    return etas


# ---------------------------------------------------------------------------
# split one wiener
# ---------------------------------------------------------------------------

@dataclass
class SplitOutcome:
    eigenregular: bool
    lam: float                       # lambda_max of the input
    split_at: int = 0
    c: float = 0.0
    p: InnerPoly | None = None
    q: InnerPoly | None = None
    remainder: SymTensor | None = None
    product: SymTensor | None = None  # tensor of P*Q (unit variance)
    partition: tuple[frozenset, frozenset] | None = None
    objective: float = 0.0


def _partition_terms(f: SymTensor, alpha: SymTensor, beta: SymTensor):
    """Objective terms for the partition search.

    <f, (alpha|A1) (x) (beta|A2)> = sum over canonical keys kf and splits
    (s,t) of orbit(s) orbit(t) f[kf] alpha[s] beta[t] [vars(s) in A1]
    [vars(t) in A2].  Terms whose s and t parts share a variable can never
    fire and are dropped.
    """
    q1 = alpha.order
    terms = []
    for kf, vf in f.coeffs.items():
        for s, t in sub_multisets(kf, q1):
            a = alpha.coeffs.get(s)
            if a is None:
                continue
            b = beta.coeffs.get(t)
            if b is None:
                continue
            vs, vt = frozenset(s), frozenset(t)
            if vs & vt:
                continue
            w = orbit_size(s) * orbit_size(t) * vf * a * b
            if w != 0.0:
                terms.append((w, vs, vt))
    return terms


def derandomized_partition(f: SymTensor, alpha: SymTensor,
                           beta: SymTensor) -> tuple[set[int], set[int]]:
    """Deterministic variable partition (A1, A2) maximizing
    <f, alpha|A1 (x) beta|A2>.

    Small instances are solved exhaustively; larger ones by the method of
    conditional expectations over independent coin flips, which attains at
    least the sample-space average.
    """
    terms = _partition_terms(f, alpha, beta)
    vars_all = sorted(set().union(*[vs | vt for _, vs, vt in terms])
                      if terms else set())
    support = f.support_vars() | alpha.support_vars() | beta.support_vars()
    if not terms:
        return set(support), set()

    nv = len(vars_all)
    if (nv <= EXHAUSTIVE_PARTITION_VARS
            and (1 << nv) * len(terms) <= EXHAUSTIVE_PARTITION_WORK):
        pos = {v: i for i, v in enumerate(vars_all)}
        masks = [(w,
                  sum(1 << pos[v] for v in vs),
                  sum(1 << pos[v] for v in vt)) for w, vs, vt in terms]
        best_val, best_mask = -math.inf, 0
        for assign in range(1 << nv):
            val = 0.0
            for w, ms, mt in masks:
                if (assign & ms) == ms and (assign & mt) == 0:
                    val += w
            if val > best_val:
                best_val, best_mask = val, assign
        a1 = {v for v in vars_all if best_mask & (1 << pos[v])}
    else:
        # greedy conditional expectations; unresolved vars are coins
        by_var: dict[int, list[int]] = {}
        for idx, (_, vs, vt) in enumerate(terms):
            for v in vs | vt:
                by_var.setdefault(v, []).append(idx)
        state = [(w, vs, vt, 0.5 ** len(vs | vt), True)
                 for w, vs, vt in terms]
        expect = sum(w * pr for w, _, _, pr, _ in state)
        a1 = set()
        for v in vars_all:
            delta1 = 0.0  # change in E if v -> A1
            delta2 = 0.0
            for idx in by_var[v]:
                w, vs, vt, pr, alive = state[idx]
                if not alive:
                    continue
                if v in vs:
                    delta1 += w * pr      # prob factor 1/2 -> 1
                    delta2 -= w * pr      # term dies
                else:
                    delta1 -= w * pr
                    delta2 += w * pr
            to_a1 = delta1 >= delta2
            if to_a1:
                a1.add(v)
            for idx in by_var[v]:
                w, vs, vt, pr, alive = state[idx]
                if not alive:
                    continue
                in_s = v in vs
                if in_s == to_a1:
                    state[idx] = (w, vs, vt, pr * 2.0, True)
                else:
                    state[idx] = (w, vs, vt, 0.0, False)
    a2 = set(support) - a1
    return a1, a2 | (set(vars_all) - a1)


def partition_objective(f: SymTensor, alpha: SymTensor, beta: SymTensor,
                        a1: set[int], a2: set[int]) -> float:
    tot = 0.0
    for w, vs, vt in _partition_terms(f, alpha, beta):
        if vs <= a1 and vt <= a2:
            tot += w
    return tot


def split_one_wiener(f: SymTensor, eta: float) -> SplitOutcome:
    """Peel one product of lower-order chaos elements off I_q(f).

    Input must have Var[I_q(f)] = 1.  Either reports eigenregularity
    (lambda_max(f) < eta) or returns c, P, Q, R with
    I_q(f) = c P Q + I_q(R), Var[P] = Var[Q] = Var[PQ] = 1, P and Q over
    disjoint variables, c >= eta/2^q, and Var[R] = 1 - c^2.
    """
    q = f.order
    rep = lambda_max(f)
    if rep.value < eta:
        return SplitOutcome(True, rep.value)
    alpha, beta = rep.left, rep.right
    if f.is_multilinear():
        # witnesses can be taken multilinear without shrinking the objective
        alpha = alpha.zero_diagonal()
        beta = beta.zero_diagonal()
        na, nb = math.sqrt(alpha.norm_sq()), math.sqrt(beta.norm_sq())
        if na == 0.0 or nb == 0.0:
            return SplitOutcome(True, rep.value)
        alpha, beta = alpha.scale(1 / na), beta.scale(1 / nb)
    a1, a2 = derandomized_partition(f, alpha, beta)
    nu1 = alpha.restrict_vars(a1)
    nu2 = beta.restrict_vars(a2)
    n1, n2 = math.sqrt(nu1.norm_sq()), math.sqrt(nu2.norm_sq())
    if n1 == 0.0 or n2 == 0.0:
        return SplitOutcome(True, rep.value)
    q1, q2 = alpha.order, beta.order
    g1 = nu1.scale(1.0 / (math.sqrt(math.factorial(q1)) * n1))
    g2 = nu2.scale(1.0 / (math.sqrt(math.factorial(q2)) * n2))
    u = contract_sym(g1, g2, 0)  # tensor of P*Q, unit variance
    c = math.factorial(q) * inner(f, u)
    r = f.add(u, -c)
    obj = partition_objective(f, alpha, beta, a1, a2)
    return SplitOutcome(False, rep.value, rep.split_at, c,
                        InnerPoly(q1, g1), InnerPoly(q2, g2), r, u,
                        (frozenset(a1), frozenset(a2)), obj)


# ---------------------------------------------------------------------------
# decompose one wiener
# ---------------------------------------------------------------------------

@dataclass
class DecomposeOutcome:
    status: str  # "small-remainder" | "eigenregular"
    triples: list[tuple[float, InnerPoly, InnerPoly]]
    products: list[SymTensor]   # unit-variance tensors of P_j Q_j
    remainder: SymTensor
    remainder_var: float
    remainder_eig: float        # lambda_max of normalized remainder
    m: int
    eta: float
    eps: float

    def product_part(self) -> SymTensor | None:
        out = None
        for (c, _, _), u in zip(self.triples, self.products):
            out = u.scale(c) if out is None else out.add(u, c)
        return out

    def sum_c_sq(self) -> float:
        return sum(c * c for c, _, _ in self.triples)


def decompose_max_iter(q: int, eta: float, eps: float) -> int:
    return max(1, math.ceil(M_SLACK * (4.0 ** q / eta ** 2)
                            * math.log(1.0 / eps)))


def decompose_one_wiener(f: SymTensor, eta: float,
                         eps: float) -> DecomposeOutcome:
    """Iterated splitting with reprojection.

    Input has Var[I_q(f)] = 1.  Returns triples (c_j, P_j, Q_j) and a
    remainder g with I_q(f) = sum c_j P_j Q_j + I_q(g), where g is
    orthogonal to every P_j Q_j, and either Var[g] <= eps
    ("small remainder") or g/sd(g) is eta-eigenregular ("eigenregular").
    """
    q = f.order
    m_max = decompose_max_iter(q, eta, eps)
    products: list[SymTensor] = []
    pq: list[tuple[InnerPoly, InnerPoly]] = []
    g = f.copy()
    coeffs: list[float] = []
    while True:
        varg = var_of(g)
        if varg <= eps:
            return DecomposeOutcome(
                "small-remainder",
                [(c, p_, q_) for c, (p_, q_) in zip(coeffs, pq)],
                products, g, varg, 0.0, len(products), eta, eps)
        ghat = g.scale(1.0 / math.sqrt(varg))
        out = split_one_wiener(ghat, eta)
        if out.eigenregular:
            return DecomposeOutcome(
                "eigenregular",
                [(c, p_, q_) for c, (p_, q_) in zip(coeffs, pq)],
                products, g, varg, out.lam, len(products), eta, eps)
        products.append(out.product)
        pq.append((out.p, out.q))
        if len(products) > m_max:
            raise RuntimeError(
                f"decompose_one_wiener exceeded its iteration bound {m_max}")
        # reproject I_q(f) onto span{P_j Q_j}
        mdim = len(products)
        gram = np.empty((mdim, mdim))
        rhs = np.empty(mdim)
        fq = math.factorial(q)
        for i in range(mdim):
            rhs[i] = fq * inner(f, products[i])
            for j in range(i, mdim):
                gram[i, j] = gram[j, i] = fq * inner(products[i], products[j])
        try:
            coeffs = list(np.linalg.solve(gram, rhs))
        except np.linalg.LinAlgError:
            coeffs = list(np.linalg.lstsq(gram, rhs, rcond=None)[0])
        g = f.copy()
        for c, u in zip(coeffs, products):
            g = g.add(u, -c)


# ---------------------------------------------------------------------------
# regularize one wiener
# ---------------------------------------------------------------------------

@dataclass
class StageRecord:
    index: int          # 1-based schedule position
    eta: float
    m: int
    sum_c_sq: float


@dataclass
class RegularizeOutcome:
    """I_q(f) = sum_j a_j P_j Q_j + a_reg R_reg + R_neg."""
    triples: list[tuple[float, InnerPoly, InnerPoly]]
    products: list[SymTensor]
    neg: SymTensor
    neg_var: float
    a_reg: float
    reg: SymTensor | None       # unit variance when present
    reg_eig: float              # achieved lambda_max ratio of R_reg
    level: int                  # schedule level "ell"
    eta_next: float             # eta_{ell+1} promised for R_reg
    exit_reason: str
    stages: list[StageRecord] = field(default_factory=list)


def _scaled_triples(dec: DecomposeOutcome, lam_inv: float):
    return [(c * lam_inv, p_, q_) for c, p_, q_ in dec.triples]


def regularize_one_wiener(f: SymTensor, schedule: list[float],
                          eps: float) -> RegularizeOutcome:
    """Schedule-driven decomposition of a unit-variance I_q(f)."""
    q = f.order
    triples: list[tuple[float, InnerPoly, InnerPoly]] = []
    products: list[SymTensor] = []
    stages: list[StageRecord] = []
    g = f.copy()
    for i, eta_i in enumerate(schedule, start=1):
        varg = var_of(g)
        if varg <= eps:
            return RegularizeOutcome(
                triples, products, g, varg, 0.0, None, 0.0, i - 1,
                eta_i, "small-var", stages)
        lam_inv = math.sqrt(varg)  # g = lam_inv * ghat
        ghat = g.scale(1.0 / lam_inv)
        dec = decompose_one_wiener(ghat, eta_i, eps)
        stages.append(StageRecord(i, eta_i, dec.m, dec.sum_c_sq()))
        if dec.status == "small-remainder":
            triples = triples + _scaled_triples(dec, lam_inv)
            products = products + dec.products
            neg = dec.remainder.scale(lam_inv)
            return RegularizeOutcome(
                triples, products, neg, var_of(neg), 0.0, None, 0.0, i,
                schedule[i] if i < len(schedule) else 0.0,
                "small-remainder", stages)
        prod_part = dec.product_part()
        prod_var = var_of(prod_part.scale(lam_inv)) if prod_part is not None \
            else 0.0
        if prod_var <= eps:
            neg = prod_part.scale(lam_inv) if prod_part is not None \
                else SymTensor(q, f.dim, {})
            rr = dec.remainder.scale(lam_inv)
            a_reg = math.sqrt(var_of(rr))
            reg = rr.scale(1.0 / a_reg) if a_reg > 0 else None
            return RegularizeOutcome(
                triples, products, neg, var_of(neg), a_reg, reg,
                dec.remainder_eig, i - 1, eta_i, "eigenregular", stages)
        triples = triples + _scaled_triples(dec, lam_inv)
        products = products + dec.products
        g = dec.remainder.scale(lam_inv)
    raise RuntimeError("regularize_one_wiener exhausted its schedule")


# ---------------------------------------------------------------------------
# multi regularize one wiener
# ---------------------------------------------------------------------------

@dataclass
class MultiOutcome:
    per_input: list[RegularizeOutcome]
    t: int
    eta_next: float


def multi_regularize_one_wiener(fs: list[SymTensor], schedule: list[float],
                                eps: float) -> MultiOutcome:
    """Simultaneous schedule-driven decomposition of unit-variance inputs.

    All inputs share the schedule index, so the products collected for every
    input are controlled by the same eta_t while every surviving remainder
    is eta_{t+1}-eigenregular.
    """
    r = len(fs)
    if r == 0:
        return MultiOutcome([], 0, 1.0)
    q = fs[0].order
    live = set(range(r))
    g = [f.copy() for f in fs]
    triples: list[list] = [[] for _ in range(r)]
    products: list[list] = [[] for _ in range(r)]
    stages: list[list[StageRecord]] = [[] for _ in range(r)]
    result: list[RegularizeOutcome | None] = [None] * r
    t_exit = 0
    for i, eta_i in enumerate(schedule, start=1):
        for s in sorted(live):
            varg = var_of(g[s])
            if varg <= eps:
                result[s] = RegularizeOutcome(
                    triples[s], products[s], g[s], varg, 0.0, None, 0.0,
                    i - 1, eta_i, "small-var", stages[s])
                live.discard(s)
        if not live:
            return MultiOutcome([r_ for r_ in result], t_exit,
                                eta_i)
        decs: dict[int, tuple[DecomposeOutcome, float]] = {}
        for s in sorted(live):
            lam_inv = math.sqrt(var_of(g[s]))
            decs[s] = (decompose_one_wiener(g[s].scale(1.0 / lam_inv),
                                            eta_i, eps), lam_inv)
            stages[s].append(StageRecord(i, eta_i, decs[s][0].m,
                                         decs[s][0].sum_c_sq()))
        for s in sorted(live):
            dec, lam_inv = decs[s]
            if dec.status == "small-remainder":
                triples[s] = triples[s] + _scaled_triples(dec, lam_inv)
                products[s] = products[s] + dec.products
                neg = dec.remainder.scale(lam_inv)
                result[s] = RegularizeOutcome(
                    triples[s], products[s], neg, var_of(neg), 0.0, None,
                    0.0, i, schedule[i] if i < len(schedule) else 0.0,
                    "small-remainder", stages[s])
                live.discard(s)
        if not live:
            return MultiOutcome([r_ for r_ in result], t_exit,
                                schedule[i] if i < len(schedule) else 0.0)
        prod_vars = {}
        for s in sorted(live):
            dec, lam_inv = decs[s]
            pp = dec.product_part()
            prod_vars[s] = var_of(pp.scale(lam_inv)) if pp is not None else 0.0
        if all(pv <= eps for pv in prod_vars.values()):
            for s in sorted(live):
                dec, lam_inv = decs[s]
                pp = dec.product_part()
                neg = pp.scale(lam_inv) if pp is not None \
                    else SymTensor(q, fs[s].dim, {})
                rr = dec.remainder.scale(lam_inv)
                a_reg = math.sqrt(var_of(rr))
                reg = rr.scale(1.0 / a_reg) if a_reg > 0 else None
                result[s] = RegularizeOutcome(
                    triples[s], products[s], neg, var_of(neg), a_reg, reg,
                    dec.remainder_eig, i - 1, eta_i, "eigenregular",
                    stages[s])
            return MultiOutcome([r_ for r_ in result], i - 1, eta_i)
        for s in sorted(live):
            dec, lam_inv = decs[s]
            if prod_vars[s] > eps:
                triples[s] = triples[s] + _scaled_triples(dec, lam_inv)
                products[s] = products[s] + dec.products
                g[s] = dec.remainder.scale(lam_inv)
                t_exit = i
            # inputs with small product variance keep their g and retry
    raise RuntimeError("multi_regularize_one_wiener exhausted its schedule")


# ---------------------------------------------------------------------------
# multi regularize many wieners (recursion over chaos levels)
# ---------------------------------------------------------------------------

class ArgPool:
    """Global registry of inner polynomials, keyed by 1-based argument id."""

    def __init__(self):
        self.items: dict[int, InnerPoly] = {}

    def add(self, ip: InnerPoly) -> int:
        idx = len(self.items) + 1
        self.items[idx] = ip
        return idx


@dataclass
class MRMWResult:
    """Per input s and level q, an outer polynomial over pooled argument ids.

    p~_{s,q} = slices[s][q] evaluated at the pool's inner polynomials; the
    discarded R_neg variance for each decomposed slice is in neg_var.
    """
    slices: list[dict[int, Polynomial]]
    pool: ArgPool
    neg_var: list[dict[int, float]]
    num: int
    coeff: float
    eta_next: float
    diagnostics: dict


def multi_regularize_many_wieners(
        inputs: list[ChaosDecomposition], d: int, tau: float,
        config: DecompositionConfig | None = None,
        pool: ArgPool | None = None) -> MRMWResult:
    """Decompose every level of every input into products of inner polys.

    Each input is a chaos decomposition whose nonzero levels 1..d have unit
    variance.  Levels 0 and 1 pass through unchanged; each level q >= 2 is
    rewritten as a multilinear combination of products of unit-variance
    inner polynomials that are either degree <= 1 or eigenregular, plus a
    discarded part of variance at most ~tau (reported exactly).
    """
    if config is None:
        config = DecompositionConfig()
    if pool is None:
        pool = ArgPool()
    k = len(inputs)
    slices: list[dict[int, Polynomial]] = [dict() for _ in range(k)]
    neg_var: list[dict[int, float]] = [dict() for _ in range(k)]
    diagnostics: dict = {"d": d, "tau": tau}

    # levels 0 and 1: identity
    for s, inp in enumerate(inputs):
        mu = inp.mean()
        slices[s][0] = Polynomial(0, {(): mu} if mu != 0.0 else {})
        f1 = inp.level(1)
        v1 = var_of(f1)
        if v1 > 0.0:
            aid = pool.add(InnerPoly(1, f1.scale(1.0 / math.sqrt(v1))))
            slices[s][1] = Polynomial(aid, {(aid,): math.sqrt(v1)})
        else:
            slices[s][1] = Polynomial(0, {})
    if d <= 1:
        num = sum(len(_poly_args(slices[s][q]))
                  for s in range(k) for q in slices[s])
        coeff = sum(slices[s][q].l1_norm() for s in range(k)
                    for q in slices[s])
        return MRMWResult(slices, pool, neg_var, num, coeff, 1.0,
                          diagnostics)

    eps = tau if d == 2 else tau / 8.0

    # top-level slices with nonzero mass
    top_idx: list[int] = []
    top_scale: list[float] = []
    top_f: list[SymTensor] = []
    for s, inp in enumerate(inputs):
        fd = inp.level(d)
        vd = var_of(fd)
        if vd <= eps:
            # whole slice is negligible
            slices[s][d] = Polynomial(0, {})
            neg_var[s][d] = vd
            continue
        top_idx.append(s)
        top_scale.append(math.sqrt(vd))
        top_f.append(fd.scale(1.0 / math.sqrt(vd)))

    multi = None
    if top_f:
        schedule = make_schedule(eps, len(top_f), config)
        multi = multi_regularize_one_wiener(top_f, schedule, eps)
        diagnostics["t"] = multi.t
        diagnostics["eta_next"] = multi.eta_next

    if d == 2:
        if multi is not None:
            for pos, s in enumerate(top_idx):
                outc = multi.per_input[pos]
                sc = top_scale[pos]
                poly = Polynomial(0, {})
                for a, p_, q_ in outc.triples:
                    pid = pool.add(p_)
                    qid = pool.add(q_)
                    poly = poly.add(
                        Polynomial(max(pid, qid),
                                   {tuple(sorted((pid, qid))): a * sc}))
                if outc.a_reg > 0.0 and outc.reg is not None:
                    rid = pool.add(InnerPoly(2, outc.reg))
                    poly = poly.add(
                        Polynomial(rid, {(rid,): outc.a_reg * sc}))
                slices[s][2] = poly
                neg_var[s][2] = outc.neg_var * sc * sc
    else:
        # recursion inputs: original truncations, then each P and Q
        rec_inputs: list[ChaosDecomposition] = []
        for inp in inputs:
            tr = ChaosDecomposition(inp.dim)
            for q_, t_ in inp.tensors.items():
                if q_ <= d - 1:
                    tr.set_level(q_, t_.copy())
            rec_inputs.append(tr)
        pq_index: dict[int, int] = {}  # id(InnerPoly) -> recursion input idx
        total_abs = 0.0
        if multi is not None:
            for pos, s in enumerate(top_idx):
                outc = multi.per_input[pos]
                total_abs += sum(abs(a) for a, _, _ in outc.triples) \
                    * top_scale[pos]
                for _, p_, q_ in outc.triples:
                    for ip in (p_, q_):
                        pq_index[id(ip)] = len(rec_inputs)
                        rec_inputs.append(single_level(ip.tensor))
        tau_rec = tau / (8.0 * max(1.0, total_abs) ** 2)
        sub = multi_regularize_many_wieners(rec_inputs, d - 1, tau_rec,
                                            config, pool)
        diagnostics["recursion"] = sub.diagnostics
        # lower levels of the originals come straight from the recursion
        for s in range(k):
            for q_ in range(0, d):
                slices[s][q_] = sub.slices[s].get(q_, Polynomial(0, {}))
                if q_ in sub.neg_var[s]:
                    neg_var[s][q_] = sub.neg_var[s][q_]
        # level d: compose the triples through their recursive approximators
        if multi is not None:
            for pos, s in enumerate(top_idx):
                outc = multi.per_input[pos]
                sc = top_scale[pos]
                poly = Polynomial(0, {})
                for a, p_, q_ in outc.triples:
                    out_p = sub.slices[pq_index[id(p_)]][p_.level]
                    out_q = sub.slices[pq_index[id(q_)]][q_.level]
                    poly = poly.add(out_p.mul(out_q).scale(a * sc))
                if outc.a_reg > 0.0 and outc.reg is not None:
                    rid = pool.add(InnerPoly(d, outc.reg))
                    poly = poly.add(
                        Polynomial(rid, {(rid,): outc.a_reg * sc}))
                slices[s][d] = poly
                neg_var[s][d] = outc.neg_var * sc * sc

    used: set[int] = set()
    for s in range(k):
        for q_, poly in slices[s].items():
            used.update(_poly_args(poly))
    num = len(used)
    coeff = sum(poly.l1_norm() for s in range(k)
                for poly in slices[s].values())
    eta_next = diagnostics.get("eta_next", 1.0)
    if "recursion" in diagnostics:
        eta_next = min(eta_next,
                       diagnostics["recursion"].get("eta_next", 1.0))
    return MRMWResult(slices, pool, neg_var, num, coeff, eta_next,
                      diagnostics)


def _poly_args(p: Polynomial) -> set[int]:
    return p.support_vars()


# ---------------------------------------------------------------------------
# regularize poly
# ---------------------------------------------------------------------------

@dataclass
class DecompositionResult:
    """p(x) ~= h(A_1(x), ..., A_r(x)) with Var[p - h(A)] = var_gap."""
    h: Polynomial                 # outer polynomial over args 1..r
    inner: list[InnerPoly]        # the A_i, unit variance each
    var_gap: float
    eigen: list[float]            # achieved eigenregularity per inner poly
    approx: ChaosDecomposition    # chaos decomposition of h(A)
    diagnostics: dict


def reconstruct(h: Polynomial,
                inner: list[InnerPoly]) -> ChaosDecomposition:
    """Exact chaos decomposition of h(A_1..A_r).

    Every monomial of h multiplies inner polynomials with pairwise disjoint
    variable supports, so each product stays inside a single chaos level.
    """
    dim = max((ip.tensor.dim for ip in inner), default=0)
    out = ChaosDecomposition(dim)
    for mono, c in h.coeffs.items():
        if not mono:
            lvl0 = out.level(0).add(SymTensor(0, dim, {(): c}))
            out.set_level(0, lvl0)
            continue
        t = inner[mono[0] - 1].tensor
        for aid in mono[1:]:
            t = contract_sym(t, inner[aid - 1].tensor, 0)
        lvl = out.level(t.order).add(t, c)
        out.set_level(t.order, lvl)
    return out


def regularize_poly(p, tau: float,
                    config: DecompositionConfig | None = None
                    ) -> DecompositionResult:
    """Rewrite a polynomial over inner polynomials that are each exactly
    Gaussian (degree <= 1) or eigenregular, discarding only ~tau variance.
    """
    from .chaos import to_chaos
    if config is None:
        config = DecompositionConfig()
    chaos = to_chaos(p) if isinstance(p, Polynomial) else p
    d = chaos.degree()
    mu = chaos.mean()
    if config.mode == "certified" and d >= 1:
        tau_inner = (1.0 / d) * (tau / d) ** (3 * d)
    else:
        tau_inner = tau

    if d == 0:
        h = Polynomial(0, {(): mu} if mu != 0.0 else {})
        return DecompositionResult(h, [], 0.0, [],
                                   chaos, {"trivial": True})

    # normalize each level; remember the scale
    normed = ChaosDecomposition(chaos.dim)
    scales: dict[int, float] = {}
    for q in range(1, d + 1):
        fq = chaos.level(q)
        vq = var_of(fq)
        if vq > 0.0:
            scales[q] = math.sqrt(vq)
            normed.set_level(q, fq.scale(1.0 / math.sqrt(vq)))
    res = multi_regularize_many_wieners([normed], d, tau_inner, config)

    h_global = Polynomial(0, {(): mu} if mu != 0.0 else {})
    for q, sc in scales.items():
        h_global = h_global.add(res.slices[0][q].scale(sc))

    # compact the argument ids
    used = sorted(h_global.support_vars())
    remap = {old: new + 1 for new, old in enumerate(used)}
    h = Polynomial(len(used),
                   {tuple(sorted(remap[i] for i in k_)): v
                    for k_, v in h_global.coeffs.items()})
    inner = [res.pool.items[old] for old in used]

    approx = reconstruct(h, inner)
    diff = chaos.add(approx, -1.0)
    var_gap = diff.variance()
    eigen = [ip.eigenregularity() for ip in inner]
    diag = dict(res.diagnostics)
    diag.update({
        "num": res.num,
        "coeff": res.coeff,
        "eta_next": res.eta_next,
        "neg_var": res.neg_var[0],
        "tau_inner": tau_inner,
    })
    return DecompositionResult(h, inner, var_gap, eigen, approx, diag)
