"""Seeded small-instance generator and brute-force verification of the claims.

The checks here recompute SDF tables, opponent sets and dominance by direct
enumeration; they share only net gains and hierarchy-order classification
(via the ladders) with the modules they test. Each ``verify_*`` function
returns a list of :class:`Verdict` records; :func:`run_suite` aggregates them
into a :class:`VerdictReport`.

Verdict statuses: ``pass``, ``fail``, ``vacuous`` (antecedent false),
``gap`` (between the necessary and sufficient conditions; never a failure)
``skipped`` (a precondition such as the eductive assumption fails) and
``note`` (an observation, such as a tatonnement cycle, that is not a claim).
"""

from __future__ import annotations

import itertools
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from hierarb.aggregation import (
    ConstantMap,
    DemandImpactMap,
    InjectiveMap,
    Responsiveness,
    TabularMap,
    compare_responsiveness,
    insert,
)
from hierarb.dominance import (
    DominanceLadder,
    HierarchyOrder,
    classify_order,
    compute_ladders,
    dominated_wrtp_at,
)
from hierarb.errors import ConfigError, DomainError, PreconditionError, ValidationError
from hierarb.market import (
    ArbitragePortfolio,
    AssetSet,
    Sdf,
    StateSpace,
    classical_arbitrage_check,
    find_arbitrage,
    grid_arbitrage_search,
    price_assets,
    rational,
    verify_certificate,
)
from hierarb.scenario import Agent, MarketScenario, build_arbitrage_portfolio, is_tradeable_arbitrage
from hierarb.tatonnement import (
    CYCLE_DETECTED,
    INFINITE,
    NO_ARBITRAGE,
    WITHIN_GRID,
    annotate_prop6,
    run,
)

PASS, FAIL, VACUOUS, GAP, SKIPPED, NOTE = "pass", "fail", "vacuous", "gap", "skipped", "note"
STATUSES = (PASS, FAIL, VACUOUS, GAP, SKIPPED, NOTE)
KINDS = ("constant", "injective", "demand_impact", "tabular")

THREADS_ENV = "HIERARCHY_ARB_THREADS"


@dataclass(frozen=True)
class InstanceBounds:
    """Generator bounds. Pools hold exact rational strings or integers.

    ``prob_weights`` are non-negative integers; each state draws one and the
    draws are normalized, so any pool with a positive entry is feasible.
    """

    max_states: int = 3
    max_assets: int = 3
    max_agents: int = 3
    max_grid: int = 4
    payoff_pool: tuple[str, ...] = ("0", "1", "2")
    prob_weights: tuple[int, ...] = (0, 1, 1, 2, 3)
    strategy_pool: tuple[str, ...] = ("-1", "0", "1")
    sdf_pool: tuple[str, ...] = ("1/2", "1", "3/2", "2")
    rate_pool: tuple[str, ...] = ("1", "5/4")
    kinds: tuple[str, ...] = KINDS
    seed: int = 0
    count: int = 500

    def __post_init__(self):
        for name in ("max_states", "max_assets", "max_agents", "max_grid", "count", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if name != "seed" and value < 1:
                raise ConfigError(f"{name} must be at least 1")
        for name in ("payoff_pool", "prob_weights", "strategy_pool", "sdf_pool", "rate_pool", "kinds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if any(isinstance(w, bool) or not isinstance(w, int) for w in self.prob_weights):
            raise ConfigError("prob_weights must be integers")
        for name in ("payoff_pool", "strategy_pool", "sdf_pool", "rate_pool"):
            for v in getattr(self, name):
                try:
                    rational(v)
                except ValidationError:
                    raise ConfigError(f"{name} entry {v!r} is not an exact rational") from None
        if any(w < 0 for w in self.prob_weights) or max(self.prob_weights) <= 0:
            raise ConfigError("prob_weights admit no probability vector")
        if any(Fraction(v) <= 0 for v in self.sdf_pool):
            raise ConfigError("sdf_pool entries must be positive")
        if any(Fraction(v) <= 0 for v in self.rate_pool):
            raise ConfigError("rate_pool entries must be positive")
        if any(Fraction(v) < 0 for v in self.payoff_pool):
            raise ConfigError("payoff_pool entries must be non-negative")
        if unknown := set(self.kinds) - set(KINDS):
            raise ConfigError(f"unknown aggregation kind {sorted(unknown)[0]!r}")

    @classmethod
    def minimal(cls, **kw) -> "InstanceBounds":
        return cls(max_states=1, max_assets=1, max_agents=1, max_grid=1, **kw)


def _rng(bounds: InstanceBounds, index: int) -> random.Random:
    return random.Random(f"hierarb:{bounds.seed}:{index}")


def generate_scenario(bounds: InstanceBounds, index: int) -> MarketScenario:
    """Scenario number ``index`` of the stream; independent of other indices."""
    rng = _rng(bounds, index)
    F = Fraction
    n_states = rng.randint(1, bounds.max_states)
    weights = [rng.choice(bounds.prob_weights) for _ in range(n_states)]
    if sum(weights) == 0:
        weights[rng.randrange(n_states)] = max(bounds.prob_weights)
    total = sum(weights)
    space = StateSpace(tuple(f"s{k}" for k in range(n_states)), tuple(F(w, total) for w in weights))
    n_assets = rng.randint(1, bounds.max_assets)
    payoff = [(F(1),) * n_states] + [
        tuple(F(rng.choice(bounds.payoff_pool)) for _ in range(n_states)) for _ in range(n_assets - 1)
    ]
    assets = AssetSet(tuple(payoff), 0, F(rng.choice(bounds.rate_pool)))
    n_agents = rng.randint(1, bounds.max_agents)
    all_strats = list(itertools.product(bounds.strategy_pool, repeat=n_assets))
    agents = []
    for j in range(n_agents):
        size = min(rng.randint(1, bounds.max_grid), len(all_strats))
        picks = rng.sample(all_strats, size)
        agents.append(Agent(f"agent{j}", tuple(tuple(F(v) for v in s) for s in picks)))
    agents = tuple(agents)
    grids = tuple(a.strategies for a in agents)
    kind = rng.choice(bounds.kinds)

    def sdf():
        return Sdf(tuple(F(rng.choice(bounds.sdf_pool)) for _ in range(n_states)))

    support = space.support
    if kind == "constant":
        agg = ConstantMap(sdf())
    elif kind == "injective":
        agg = InjectiveMap(sdf(), rng.choice(support), F(rng.choice((1, 2, 4)), 4))
    elif kind == "tabular":
        pool = [sdf() for _ in range(rng.randint(1, 3))]
        agg = TabularMap(tuple((p, rng.choice(pool)) for p in itertools.product(*(range(len(g)) for g in grids))))
    else:
        agg = None
        for _ in range(20):
            cand = DemandImpactMap(sdf(), tuple(
                tuple(F(rng.choice((-1, 0, 0, 1)), 8) for _ in range(n_assets)) for _ in range(n_states)))
            try:
                cand.validate(space, grids)
            except ValidationError:
                continue
            agg = cand
            break
        if agg is None:
            agg = DemandImpactMap(sdf(), tuple((F(0),) * n_assets for _ in range(n_states)))
    return MarketScenario(space, assets, agents, agg)


def enumerate_scenarios(bounds: InstanceBounds) -> Iterator[MarketScenario]:
    """Deterministic stream of ``bounds.count`` scenarios."""
    for k in range(bounds.count):
        yield generate_scenario(bounds, k)


# independent recomputation -------------------------------------------------


class BruteForce:
    """Direct-enumeration view of a scenario used by every check."""

    def __init__(self, sc: MarketScenario):
        self.sc = sc
        self.grids = sc.grids
        self.n = sc.n_agents
        self.sup = sc.space.support
        self.profiles = list(itertools.product(*(range(len(g)) for g in self.grids)))
        self.m = {p: sc.aggregation.sdf(self.grids, p) for p in self.profiles}

    def opps(self, i):
        return itertools.product(*(range(len(g)) for j, g in enumerate(self.grids) if j != i))

    def fiber(self, i, p) -> set:
        return {o for o in self.opps(i) if self.m[insert(i, p[i], o)] == self.m[p]}

    def better(self, i, b, a, o) -> bool:
        gb = self.sc.gain(i, insert(i, b, o))
        ga = self.sc.gain(i, insert(i, a, o))
        return all(gb[s] >= ga[s] for s in self.sup) and any(gb[s] > ga[s] for s in self.sup)

    def improvers(self, i, p, against=None) -> list[int]:
        opps = self.fiber(i, p) if against is None else against
        if not opps:
            return []
        return [b for b in range(len(self.grids[i]))
                if b != p[i] and all(self.better(i, b, p[i], o) for o in opps)]

    def arbitrageurs(self, p) -> list[int]:
        return [i for i in range(self.n) if self.improvers(i, p)]

    @staticmethod
    def product(ladders, i, k) -> set:
        sets = [sorted(lad.ud(k)) for j, lad in enumerate(ladders) if j != i]
        return set(itertools.product(*sets))


@dataclass(frozen=True)
class Verdict:
    claim: str
    status: str
    detail: dict = field(default_factory=dict, compare=False)


def _v(claim, status, **detail) -> Verdict:
    return Verdict(claim, status, detail)


def _orders(ladders, p):
    return [classify_order(p[i], ladders[i]) for i in range(len(p))]


def verify_prop1_corollary1(sc: MarketScenario, profile: Sequence[int], brute: BruteForce | None = None) -> Verdict:
    """Dominated-wrtp somewhere iff an appendix trade plan is a tradeable arbitrage."""
    b = brute or BruteForce(sc)
    p = tuple(profile)
    lhs = {}
    for i in range(b.n):
        a_star = dominated_wrtp_at(i, p, sc)
        if a_star is not None:
            lhs[i] = a_star
    rhs = {}
    for i in range(b.n):
        fib = sorted(b.fiber(i, p))
        for a_star in range(len(b.grids[i])):
            if a_star == p[i]:
                continue
            ok = True
            for o in fib:
                cost, pay = _plan_by_hand(b, i, p[i], a_star, o)
                if not (cost <= 0 and all(pay[s] >= 0 for s in b.sup) and any(pay[s] > 0 for s in b.sup)):
                    ok = False
                    break
            if ok:
                rhs.setdefault(i, a_star)
    if set(lhs) != set(rhs) or any(lhs[i] != rhs[i] for i in lhs):
        return _v("prop1_corollary1", FAIL, profile=list(p), module=_keys(lhs), brute=_keys(rhs))
    for i, a_star in lhs.items():
        for o in sorted(b.fiber(i, p)):
            plan = build_arbitrage_portfolio(i, a_star, p, sc, opponents=o)
            if plan.cost != 0 or not is_tradeable_arbitrage(plan, sc.space):
                return _v("prop1_corollary1", FAIL, profile=list(p), agent=i, reason="plan not tradeable")
    return _v("prop1_corollary1", PASS if lhs else VACUOUS, profile=list(p))


def _keys(d):
    return {str(k): v for k, v in sorted(d.items())}


def _plan_by_hand(b: BruteForce, i, a_i, a_star, o):
    sc = b.sc
    new, old = insert(i, a_star, o), insert(i, a_i, o)
    q_new = price_assets(b.m[new], sc.assets, sc.space)
    q_old = price_assets(b.m[old], sc.assets, sc.space)
    x_new, x_old = sc.grids[i][a_star], sc.grids[i][a_i]
    c_new = sum(w * q for w, q in zip(x_new, q_new))
    c_old = sum(w * q for w, q in zip(x_old, q_old))
    fund_new = -c_new / sc.rf_discount(-c_new)
    fund_old = c_old / sc.rf_discount(-c_old)
    cost = c_new - c_old + (-c_new) + c_old
    pay = []
    for s in range(sc.space.size):
        long_ = sum(w * sc.assets.payoff[n][s] for n, w in enumerate(x_new))
        short = sum(w * sc.assets.payoff[n][s] for n, w in enumerate(x_old))
        pay.append(long_ - short + fund_new + fund_old)
    return cost, pay


def _valid_levels(order: HierarchyOrder, K: int) -> list[int]:
    top = K if order.is_infinite else order.k
    return list(range(1, top + 1))


def verify_theorem1(sc, profile, ladders, brute=None) -> list[Verdict]:
    """Arbitrage only if some agent finds her opponent set strictly inside ``prod UD^{k-1}``.

    Every level assignment consistent with the eductive assumption
    (``k_i >= 1`` and the strategy in ``UD^{k_i}``) is checked. A second
    verdict records the weaker form the argument actually delivers: the
    arbitrageur's opponent set never contains ``prod UD^{k-1}``.
    """
    b = brute or BruteForce(sc)
    p = tuple(profile)
    arbs = b.arbitrageurs(p)
    if not arbs:
        return [_v("theorem1", VACUOUS), _v("theorem1_not_superset", VACUOUS)]
    orders = _orders(ladders, p)
    K = ladders[0].stabilization
    levels = [_valid_levels(o, K) for o in orders]
    if any(not lv for lv in levels):
        reason = "an agent holds an order-0 strategy, so no level k>=1 fits"
        return [_v("theorem1", SKIPPED, reason=reason), _v("theorem1_not_superset", SKIPPED, reason=reason)]
    fibers = [b.fiber(i, p) for i in range(b.n)]
    holds = any(all(fibers[i] < b.product(ladders, i, k - 1) for k in levels[i]) for i in range(b.n))
    out = [_v("theorem1", PASS if holds else FAIL, profile=list(p), arbitrageurs=arbs,
              orders=[str(o) for o in orders])]
    weak = all(not fibers[i] >= b.product(ladders, i, k - 1) for i in arbs for k in levels[i])
    out.append(_v("theorem1_not_superset", PASS if weak else FAIL, profile=list(p), arbitrageurs=arbs))
    return out


def verify_theorem2(sc, profile, ladders, brute=None) -> Verdict:
    """An agent in ``D^{k+1}`` whose opponent set sits inside ``prod UD^k`` can arbitrage."""
    b = brute or BruteForce(sc)
    p = tuple(profile)
    applicable = []
    for i, o in enumerate(_orders(ladders, p)):
        if o.is_infinite:
            continue
        if b.fiber(i, p) <= b.product(ladders, i, o.k):
            applicable.append(i)
    if not applicable:
        return _v("theorem2", VACUOUS)
    missing = [i for i in applicable if not b.improvers(i, p)]
    if missing:
        return _v("theorem2", FAIL, profile=list(p), agents=missing)
    return _v("theorem2", PASS, profile=list(p))


def _cond_sufficient(b, ladders, i, p, o) -> bool:
    if o.is_infinite:
        return True
    return o.k >= 1 and b.fiber(i, p) >= b.product(ladders, i, o.k - 1)


def _cond_necessary(b, ladders, i, p, o) -> bool:
    if o.is_infinite:
        return True
    return b.fiber(i, p) > b.product(ladders, i, o.k)


def verify_theorem3(sc, terminal_profiles, ladders, brute=None) -> list[Verdict]:
    """Both directions of the no-arbitrage characterization, plus gap reporting.

    A profile is a gap case when every agent meets the necessary condition
    but some agent misses the sufficient one.
    """
    b = brute or BruteForce(sc)
    out = []
    for p in terminal_profiles:
        p = tuple(p)
        orders = _orders(ladders, p)
        noarb = not b.arbitrageurs(p)
        suff = all(_cond_sufficient(b, ladders, i, p, o) for i, o in enumerate(orders))
        nec = all(_cond_necessary(b, ladders, i, p, o) for i, o in enumerate(orders))
        info = dict(profile=list(p), orders=[str(o) for o in orders])
        if suff:
            out.append(_v("theorem3_i", PASS if noarb else FAIL, **info))
        else:
            out.append(_v("theorem3_i", VACUOUS))
        if noarb:
            out.append(_v("theorem3_ii", PASS if nec else FAIL, **info))
        else:
            out.append(_v("theorem3_ii", VACUOUS))
        out.append(_v("theorem3_gap", GAP if nec and not suff else VACUOUS, **(info if nec and not suff else {})))
    return out


def verify_prop4(sc: MarketScenario, ladders, brute=None) -> Verdict:
    """Under an injective map: no arbitrage at a profile iff every agent is stabilized.

    Raises:
        DomainError: the map is not injective on the profile space.
    """
    b = brute or BruteForce(sc)
    if len(set(b.m.values())) != len(b.profiles):
        raise DomainError("map is not injective on this scenario")
    bad = []
    for p in b.profiles:
        noarb = not b.arbitrageurs(p)
        stable = all(o.is_infinite for o in _orders(ladders, p))
        if noarb != stable:
            bad.append({"profile": list(p), "noArbitrage": noarb, "allStabilized": stable})
    if bad:
        return _v("prop4", FAIL, cases=bad[:3], count=len(bad))
    return _v("prop4", PASS)


def minimal_order(fib: set, ladders, i) -> int | None:
    K = ladders[0].stabilization
    for k in range(K + 1):
        if fib > BruteForce.product(ladders, i, k):
            return k
    return None


def verify_prop5(f1, f2, sc: MarketScenario, ladders=None) -> Verdict:
    """Minimal orders weakly rise when moving to a more responsive map.

    The ladder is held fixed at the one computed for ``sc`` (``ladders``
    defaults to it), so only the opponent sets change between the maps.
    """
    rel = compare_responsiveness(f1, f2, sc.grids)
    if rel not in (Responsiveness.F2_AT_LEAST_F1, Responsiveness.EQUAL):
        return _v("prop5", SKIPPED, reason=f"maps are {rel.value}")
    ladders = ladders or compute_ladders(sc)
    b1, b2 = BruteForce(sc.with_aggregation(f1)), BruteForce(sc.with_aggregation(f2))
    for p in b1.profiles:
        for i in range(b1.n):
            k1 = minimal_order(b1.fiber(i, p), ladders, i)
            k2 = minimal_order(b2.fiber(i, p), ladders, i)
            inf = ladders[0].stabilization + 1
            if (inf if k2 is None else k2) < (inf if k1 is None else k1):
                return _v("prop5", FAIL, profile=list(p), agent=i, k1=k1, k2=k2)
    return _v("prop5", PASS)


def coarsenings(sc: MarketScenario, rng: random.Random) -> list:
    """Maps that the scenario's own map refines: constant, and one class merge."""
    b = BruteForce(sc)
    first = b.m[b.profiles[0]]
    out = [ConstantMap(first)]
    values = sorted(set(b.m.values()), key=lambda m: m.values)
    if len(values) >= 2:
        x, y = rng.sample(values, 2)
        out.append(TabularMap(tuple((p, x if b.m[p] == y else b.m[p]) for p in b.profiles)))
    return out


def verify_prop6(sc: MarketScenario, trace, ladders) -> list[Verdict]:
    """Order jumps along a trace: non-negative, plus the two set findings per step.

    Raises:
        DomainError: the trace does not chain through ``sc``'s profile space.
    """
    if trace.steps and trace.steps[0].profile_before != tuple(trace.initial):
        raise DomainError("trace does not start at its initial profile")
    annotated = annotate_prop6(trace, ladders, sc)
    out = []
    if not annotated.steps:
        return [_v("prop6_alpha", VACUOUS), _v("prop6_conditions", VACUOUS)]
    for st in annotated.steps:
        info = dict(initial=list(trace.initial), round=st.round, agent=st.agent, old=st.old, new=st.new,
                    orders=[str(st.order_before), str(st.order_after)], alpha=st.alpha)
        if st.alpha == WITHIN_GRID:
            out.append(_v("prop6_alpha", GAP, **info))
            out.append(_v("prop6_conditions", GAP, **info))
            continue
        ok = st.alpha == INFINITE or (isinstance(st.alpha, int) and st.alpha >= 0)
        out.append(_v("prop6_alpha", PASS if ok else FAIL, **info))
        if st.old_strict_subset is None:
            out.append(_v("prop6_conditions", SKIPPED, reason="old order is 0 or stabilized", **info))
        else:
            good = st.old_strict_subset and st.new_superset
            out.append(_v("prop6_conditions", PASS if good else FAIL,
                          oldStrictSubset=st.old_strict_subset, newSuperset=st.new_superset, **info))
    return out


def verify_tatonnement_terminal(sc, trace, brute=None) -> Verdict:
    """A concluded run ends with nobody able to improve; steps chain and match the map."""
    b = brute or BruteForce(sc)
    cur = tuple(trace.initial)
    for st in trace.steps:
        if st.profile_before != cur and st.profile_after != cur:
            return _v("tatonnement_trace", FAIL, reason="steps do not chain", initial=list(trace.initial))
        if b.m[st.profile_after] != st.sdf_after or b.m[st.profile_before] != st.sdf_before:
            return _v("tatonnement_trace", FAIL, reason="SDF mismatch", initial=list(trace.initial))
        cur = st.profile_after
    if cur != tuple(trace.final):
        return _v("tatonnement_trace", FAIL, reason="final profile mismatch", initial=list(trace.initial))
    if trace.status == NO_ARBITRAGE and b.arbitrageurs(cur):
        return _v("tatonnement_trace", FAIL, reason="arbitrage left at conclusion", initial=list(trace.initial))
    return _v("tatonnement_trace", PASS)


def verify_ladder_structure(sc, ladders) -> Verdict:
    """Nestedness, partition identities and the lockstep stabilization bound.

    Each non-final round removes at least one strategy from some agent, so K
    never exceeds the total number of removable strategies plus one.
    """
    bound = sum(len(g) - 1 for g in sc.grids) + 1
    for lad, g in zip(ladders, sc.grids):
        lv, dom = lad.levels, lad.dominated
        if lv[0] != frozenset(range(len(g))):
            return _v("ladder_structure", FAIL, reason="UD^0 is not the grid", agent=lad.agent)
        if len(lv) != lad.stabilization + 1 or len(dom) != lad.stabilization:
            return _v("ladder_structure", FAIL, reason="level count", agent=lad.agent)
        for k in range(1, len(lv)):
            d = dom[k - 1]
            if not lv[k] <= lv[k - 1] or d | lv[k] != lv[k - 1] or d & lv[k]:
                return _v("ladder_structure", FAIL, reason=f"partition at level {k}", agent=lad.agent)
        if dom[-1]:
            return _v("ladder_structure", FAIL, reason="last round removed strategies", agent=lad.agent)
        covered = frozenset().union(*dom) | lad.stable
        if covered != lv[0] or sum(len(d) for d in dom) + len(lad.stable) != len(g):
            return _v("ladder_structure", FAIL, reason="partition of the grid", agent=lad.agent)
        if lad.stabilization > bound:
            return _v("ladder_structure", FAIL, reason="stabilization bound", agent=lad.agent)
    return _v("ladder_structure", PASS)


def verify_stabilization_bound(sc, ladders) -> Verdict:
    """The per-agent bound K <= |A_i|.

    Lockstep rounds can stall for one agent while another is still pruning,
    so this can fail where :func:`verify_ladder_structure` passes.
    """
    over = [lad.agent for lad, g in zip(ladders, sc.grids) if lad.stabilization > len(g)]
    if over:
        return _v("stabilization_bound", FAIL, agents=over, K=ladders[0].stabilization,
                  grids=[len(g) for g in sc.grids])
    return _v("stabilization_bound", PASS)


def verify_inversion(sc, brute=None) -> Verdict:
    """Round-trip membership, disjoint fibers and their union being the product."""
    from hierarb.aggregation import invert

    b = brute or BruteForce(sc)
    for i in range(b.n):
        for a_i in range(len(b.grids[i])):
            seen = set()
            values = {b.m[insert(i, a_i, o)] for o in b.opps(i)}
            for m in sorted(values, key=lambda v: v.values):
                inv = set(invert(sc.aggregation, m, i, a_i, sc.grids).profiles)
                if inv & seen:
                    return _v("inversion", FAIL, reason="fibers overlap", agent=i)
                seen |= inv
            if seen != set(b.opps(i)):
                return _v("inversion", FAIL, reason="fibers miss profiles", agent=i)
    for p in b.profiles:
        for i in range(b.n):
            if p[:i] + p[i + 1:] not in sc.fiber(i, p):
                return _v("inversion", FAIL, reason="round trip", profile=list(p), agent=i)
    return _v("inversion", PASS)


def verify_find_arbitrage(sc, rng: random.Random, bound: int = 2) -> list[Verdict]:
    """Exactly one branch validates, on the scenario's own prices and on perturbed ones."""
    out = []
    b = BruteForce(sc)
    q0 = price_assets(b.m[b.profiles[0]], sc.assets, sc.space)
    tries = [q0, tuple(q + Fraction(rng.choice((-1, 0, 1)), 2) for q in q0)]
    for q in tries:
        res = find_arbitrage(q, sc.assets, sc.space)
        if isinstance(res, ArbitragePortfolio):
            ok = classical_arbitrage_check(res.theta, q, sc.assets, sc.space)
        else:
            ok = verify_certificate(res, q, sc.assets, sc.space) and \
                grid_arbitrage_search(q, sc.assets, sc.space, bound) is None
        out.append(_v("find_arbitrage", PASS if ok else FAIL, prices=[str(v) for v in q]))
    return out


# suite ---------------------------------------------------------------------


@dataclass
class Tally:
    passed: int = 0
    failed: int = 0
    vacuous: int = 0
    gap: int = 0
    skipped: int = 0
    noted: int = 0

    def add(self, status: str):
        name = {PASS: "passed", FAIL: "failed", VACUOUS: "vacuous", GAP: "gap", SKIPPED: "skipped",
                NOTE: "noted"}[status]
        setattr(self, name, getattr(self, name) + 1)

    def as_dict(self):
        return {"pass": self.passed, "fail": self.failed, "vacuous": self.vacuous,
                "gap": self.gap, "skipped": self.skipped, "note": self.noted}


@dataclass
class VerdictReport:
    """Per-claim tallies plus replayable counterexamples.

    Only the first ``keep`` counterexamples per claim are stored; the tally
    counts all of them.
    """

    scenarios: int = 0
    claims: dict[str, Tally] = field(default_factory=dict)
    counterexamples: list[dict] = field(default_factory=list)
    keep: int = 3
    wall_time: float | None = None

    def record(self, verdict: Verdict, scenario_doc: dict | None, label: str):
        tally = self.claims.setdefault(verdict.claim, Tally())
        tally.add(verdict.status)
        if verdict.status == FAIL and tally.failed <= self.keep:
            self.counterexamples.append(
                {"claim": verdict.claim, "source": label, "detail": verdict.detail, "scenario": scenario_doc}
            )

    @property
    def failures(self) -> int:
        return sum(t.failed for t in self.claims.values())

    def failures_for(self, *claims: str) -> int:
        return sum(self.claims[c].failed for c in claims if c in self.claims)

    def as_dict(self, timing: bool = False) -> dict:
        doc = {
            "scenarios": self.scenarios,
            "claims": {k: v.as_dict() for k, v in sorted(self.claims.items())},
            "counterexamples": sorted(self.counterexamples, key=lambda c: (c["claim"], c["source"])),
            "failures": self.failures,
        }
        if timing and self.wall_time is not None:
            doc["wallTime"] = round(self.wall_time, 3)
        return doc


def check_scenario(sc: MarketScenario, label: str = "", seed: int = 0, max_steps: int = 50) -> list[Verdict]:
    """Every claim on one scenario, in a fixed order."""
    from hierarb.errors import LadderError

    rng = random.Random(f"check:{seed}:{label}")
    b = BruteForce(sc)
    out: list[Verdict] = []
    try:
        ladders = compute_ladders(sc)
    except LadderError as exc:
        return [_v("ladder_structure", FAIL, reason=str(exc))]
    out.append(verify_ladder_structure(sc, ladders))
    out.append(verify_stabilization_bound(sc, ladders))
    out.append(verify_inversion(sc, b))
    out.extend(verify_find_arbitrage(sc, rng))
    for p in b.profiles:
        out.append(verify_prop1_corollary1(sc, p, b))
        out.extend(verify_theorem1(sc, p, ladders, b))
        out.append(verify_theorem2(sc, p, ladders, b))
    out.extend(verify_theorem3(sc, b.profiles, ladders, b))
    if isinstance(sc.aggregation, InjectiveMap):
        out.append(verify_prop4(sc, ladders, b))
    for f1 in coarsenings(sc, rng):
        out.append(verify_prop5(f1, sc.aggregation, sc, ladders))
    for p in b.profiles:
        trace = run(sc, p, max_steps)
        out.append(verify_tatonnement_terminal(sc, trace, b))
        out.extend(verify_prop6(sc, trace, ladders))
        if trace.status == CYCLE_DETECTED:
            out.append(_v("tatonnement_cycle", NOTE, initial=list(p)))
    return out


def _check_index(args):
    bounds, k = args
    sc = generate_scenario(bounds, k)
    return k, check_scenario(sc, f"seed={bounds.seed}#{k}", bounds.seed)


def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def run_suite(
    bounds: InstanceBounds,
    threads: int | None = None,
    extra: Sequence[tuple[str, MarketScenario]] = (),
) -> VerdictReport:
    """Check every generated scenario (plus ``extra`` named scenarios).

    Work fans out over ``threads`` processes; results are merged in scenario
    order, so the report does not depend on scheduling.
    """
    import time

    from hierarb.io import scenario_doc

    t0 = time.perf_counter()
    report = VerdictReport()
    n = thread_count(threads)
    jobs = [(bounds, k) for k in range(bounds.count)]
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_check_index, jobs, chunksize=max(1, len(jobs) // (4 * n))))
    else:
        results = [_check_index(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    for k, verdicts in results:
        report.scenarios += 1
        doc = None
        for v in verdicts:
            if v.status == FAIL and doc is None:
                doc = scenario_doc(generate_scenario(bounds, k))
            report.record(v, doc, f"seed={bounds.seed}#{k}")
    for label, sc in extra:
        report.scenarios += 1
        doc = scenario_doc(sc)
        for v in check_scenario(sc, label, bounds.seed):
            report.record(v, doc, label)
    report.wall_time = time.perf_counter() - t0
    return report
