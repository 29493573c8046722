"""Market scenario: states, assets, agents, aggregation map and derived tables.

Net gain of agent ``i`` holding ``a`` at profile ``p``::

    g(s) = a . x(s) - (a . q_a) / D_rf(-a . q_a)

where ``q_a`` are the prices backed out of ``f(p)`` and ``D_rf`` is the
discount factor of the risk-free SDF for the funding amount. Utility is the
net gain itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from hierarb.aggregation import (
    AggregationMap,
    Grids,
    OpponentSet,
    Profile,
    check_profile,
    insert,
    opponent_profiles,
    profiles,
)
from hierarb.errors import PreconditionError, ValidationError
from hierarb.market import AssetSet, Portfolio, Sdf, StateSpace

GainProfile = tuple[Fraction, ...]

UNIFORM = "uniform"
POINTWISE = "pointwise"
MODES = (UNIFORM, POINTWISE)

LOWEST_INDEX = "lowest-index"
SIMULTANEOUS = "simultaneous"
POLICIES = (LOWEST_INDEX, SIMULTANEOUS)


@dataclass(frozen=True)
class Agent:
    name: str
    strategies: tuple[Portfolio, ...]

    def __post_init__(self):
        if not self.strategies:
            raise ValidationError(f"agent {self.name!r} has an empty strategy grid")


@dataclass(frozen=True)
class Flags:
    """Run-time switches carried by a scenario document."""

    mode: str = UNIFORM
    max_steps: int = 100
    tie_break: str = LOWEST_INDEX
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown quantifier mode {self.mode!r}")
        if self.tie_break not in POLICIES:
            raise ValidationError(f"unknown tie-break policy {self.tie_break!r}")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be at least 1")


@dataclass(frozen=True)
class MarketScenario:
    """The market tuple with all derived tables cached on first use.

    Args:
        space: States and physical probabilities.
        assets: Payoff matrix, risk-free index and gross rate.
        agents: Agents with their finite strategy grids.
        aggregation: Map from profiles to SDFs.
        rf_discounts: Optional ``(funding amount, discount factor)`` overrides
            for the risk-free SDF; any other amount discounts at ``1/R``.
        flags: Run-time switches.
    """

    space: StateSpace
    assets: AssetSet
    agents: tuple[Agent, ...]
    aggregation: AggregationMap
    rf_discounts: tuple[tuple[Fraction, Fraction], ...] = ()
    flags: Flags = field(default_factory=Flags)

    def __post_init__(self):
        if not self.agents:
            raise ValidationError("at least one agent required")
        self.assets.check(self.space)
        for agent in self.agents:
            for a in agent.strategies:
                if len(a) != self.assets.count:
                    raise ValidationError(
                        f"agent {agent.name!r} strategy {a} needs {self.assets.count} weights"
                    )
        amounts = [w for w, _ in self.rf_discounts]
        if len(set(amounts)) != len(amounts):
            raise ValidationError("risk-free discount table lists an amount twice")
        if any(d <= 0 for _, d in self.rf_discounts):
            raise ValidationError("risk-free discount factors must be positive")
        self.aggregation.validate(self.space, self.grids)

    @property
    def grids(self) -> Grids:
        return tuple(agent.strategies for agent in self.agents)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def profiles(self) -> list[Profile]:
        return self._profiles

    @cached_property
    def _profiles(self) -> list[Profile]:
        return list(profiles(self.grids))

    def opponent_profiles(self, i: int) -> list[Profile]:
        return self._opponents[i]

    @cached_property
    def _opponents(self) -> tuple[list[Profile], ...]:
        return tuple(list(opponent_profiles(self.grids, i)) for i in range(self.n_agents))

    def check_profile(self, profile: Sequence[int]) -> Profile:
        return check_profile(self.grids, profile)

    def rf_discount(self, amount: Fraction) -> Fraction:
        """Discount factor of the risk-free SDF for funding ``amount``."""
        for w, d in self.rf_discounts:
            if w == amount:
                return d
        return 1 / self.assets.gross_rate

    @cached_property
    def _sdf_table(self) -> dict[Profile, Sdf]:
        return {p: self.aggregation.sdf(self.grids, p) for p in self._profiles}

    def sdf(self, profile: Sequence[int]) -> Sdf:
        return self._sdf_table[self.check_profile(profile)]

    @cached_property
    def _payouts(self) -> tuple[tuple[tuple[Fraction, ...], ...], ...]:
        return tuple(tuple(self.assets.payout(a) for a in g) for g in self.grids)

    def payout(self, i: int, k: int) -> tuple[Fraction, ...]:
        """State payout of agent ``i``'s strategy ``k``."""
        return self._payouts[i][k]

    def cost(self, i: int, k: int, m: Sdf) -> Fraction:
        """Ex-ante price ``a . q`` of agent ``i``'s strategy ``k`` under ``m``."""
        pay = self._payouts[i][k]
        return sum((m.values[s] * pay[s] * self.space.prob[s] for s in range(self.space.size)), Fraction(0))

    def gain_with(self, i: int, k: int, m: Sdf) -> GainProfile:
        """Net gain of strategy ``k`` for agent ``i`` when the market SDF is ``m``."""
        c = self.cost(i, k, m)
        funded = c / self.rf_discount(-c)
        return tuple(v - funded for v in self._payouts[i][k])

    @cached_property
    def _gain_table(self) -> dict[tuple[int, Profile], GainProfile]:
        table = {}
        for p in self._profiles:
            m = self._sdf_table[p]
            for i in range(self.n_agents):
                table[i, p] = self.gain_with(i, p[i], m)
        return table

    def gain(self, i: int, profile: Profile) -> GainProfile:
        """Cached net gain of agent ``i`` at a full profile."""
        return self._gain_table[i, profile]

    @cached_property
    def _fiber_table(self) -> dict[tuple[int, Profile], tuple[Profile, ...]]:
        by_key: dict[tuple[int, int, Sdf], list[Profile]] = {}
        for p in self._profiles:
            m = self._sdf_table[p]
            for i in range(self.n_agents):
                by_key.setdefault((i, p[i], m), []).append(p[:i] + p[i + 1:])
        return {
            (i, p): tuple(by_key[i, p[i], self._sdf_table[p]])
            for p in self._profiles
            for i in range(self.n_agents)
        }

    def fiber(self, i: int, profile: Sequence[int]) -> OpponentSet:
        """Opponent profiles consistent with the SDF observed at ``profile``."""
        p = self.check_profile(profile)
        return OpponentSet(i, p[i], self._sdf_table[p], self._fiber_table[i, p])

    def with_aggregation(self, f: AggregationMap) -> "MarketScenario":
        return MarketScenario(self.space, self.assets, self.agents, f, self.rf_discounts, self.flags)


def net_gain(i: int, profile: Sequence[int], scenario: MarketScenario) -> GainProfile:
    """Net gain of agent ``i`` at ``profile`` (domain error outside the grids)."""
    p = scenario.check_profile(profile)
    return scenario.gain(i, p)


def utility(i: int, profile: Sequence[int], s: int, scenario: MarketScenario) -> Fraction:
    """Utility in state ``s``; the identity transform of the net gain."""
    return net_gain(i, profile, scenario)[s]


@dataclass(frozen=True)
class Leg:
    """One leg of a trade plan.

    ``price`` is what the leg costs today and ``payout`` what it delivers in
    each state. Asset legs carry their portfolio; funding legs hold
    ``units`` of the risk-free asset.
    """

    label: str
    holdings: Portfolio
    price: Fraction
    payout: tuple[Fraction, ...]


@dataclass(frozen=True)
class TradePlan:
    agent: int
    current: int
    target: int
    opponents: Profile
    legs: tuple[Leg, ...]

    @property
    def cost(self) -> Fraction:
        return sum((leg.price for leg in self.legs), Fraction(0))

    @property
    def payout(self) -> tuple[Fraction, ...]:
        return tuple(sum(col, Fraction(0)) for col in zip(*(leg.payout for leg in self.legs)))


def is_tradeable_arbitrage(plan: TradePlan, space: StateSpace) -> bool:
    """Zero-or-negative cost, never-negative payout, strictly positive somewhere."""
    pay = plan.payout
    sup = space.support
    return plan.cost <= 0 and all(pay[s] >= 0 for s in sup) and any(pay[s] > 0 for s in sup)


def _improves(better: GainProfile, worse: GainProfile, support) -> tuple[bool, int | None]:
    bad = next((s for s in support if better[s] < worse[s]), None)
    if bad is not None:
        return False, bad
    return any(better[s] > worse[s] for s in support), None


def build_arbitrage_portfolio(
    i: int, a_star: int, profile: Sequence[int], scenario: MarketScenario, opponents: Profile | None = None
) -> TradePlan:
    """Long ``a_star``, short the current strategy, fund both legs risk-free.

    The improvement condition is checked against every opponent profile
    consistent with the observed SDF before anything is built. The plan is
    then evaluated at ``opponents`` (default: the true opponents in
    ``profile``), where its cost is exactly zero and its state payout equals
    the gain difference.

    Raises:
        PreconditionError: ``a_star`` does not improve on the current
            strategy against some consistent opponent profile. ``details``
            names the profile and the failing state.
    """
    p = scenario.check_profile(profile)
    if not 0 <= a_star < len(scenario.grids[i]):
        raise PreconditionError(f"strategy {a_star} is not in agent {i}'s grid")
    a_i = p[i]
    sup = scenario.space.support
    fib = scenario.fiber(i, p)
    for opp in fib.profiles:
        ok, state = _improves(scenario.gain_with(i, a_star, scenario.sdf(insert(i, a_star, opp))),
                              scenario.gain(i, insert(i, a_i, opp)), sup)
        if not ok:
            raise PreconditionError(
                "no unequivocal improvement",
                {"agent": i, "current": a_i, "target": a_star, "opponents": list(opp),
                 "state": None if state is None else scenario.space.states[state]},
            )
    opp = p[:i] + p[i + 1:] if opponents is None else tuple(opponents)
    if opp not in fib:
        raise PreconditionError("opponents are inconsistent with the observed SDF", {"opponents": list(opp)})
    m_old = scenario.sdf(insert(i, a_i, opp))
    m_new = scenario.sdf(insert(i, a_star, opp))
    rf = scenario.assets.risk_free
    x_rf = scenario.assets.payoff[rf][sup[0]]
    d = scenario.assets.count
    c_new = scenario.cost(i, a_star, m_new)
    c_old = scenario.cost(i, a_i, m_old)
    d_new = scenario.rf_discount(-c_new)
    d_old = scenario.rf_discount(-c_old)
    pay_new = scenario.payout(i, a_star)
    pay_old = scenario.payout(i, a_i)

    def bond(amount):
        units = [Fraction(0)] * d
        units[rf] = amount / x_rf
        return tuple(units)

    legs = (
        Leg("long", scenario.grids[i][a_star], c_new, pay_new),
        Leg("short", tuple(-w for w in scenario.grids[i][a_i]), -c_old, tuple(-v for v in pay_old)),
        Leg("fund-long", bond(-c_new / d_new), -c_new, (-c_new / d_new,) * scenario.space.size),
        Leg("fund-short", bond(c_old / d_old), c_old, (c_old / d_old,) * scenario.space.size),
    )
    return TradePlan(i, a_i, a_star, tuple(opp), legs)

