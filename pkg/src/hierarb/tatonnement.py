"""Sequential strategy revision until no agent holds a dominated-wrtp response.

Each step lets one agent (the lowest-indexed one holding a dominated-wrtp
response) switch to the smallest strategy that dominates her current one
against the opponent set she infers from the SDF and that is itself
undominated-wrtp at the SDF her switch produces. When no dominator passes
that second test she takes the smallest dominator.

A ``simultaneous`` policy, in which every dominated-wrtp agent revises in
the same round, is available for experiments; it carries no guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from hierarb.aggregation import Profile, insert
from hierarb.dominance import (
    DominanceLadder,
    HierarchyOrder,
    classify_order,
    dominated_wrtp_at,
    dominators,
    opponent_product,
)
from hierarb.errors import DomainError
from hierarb.market import Sdf
from hierarb.scenario import LOWEST_INDEX, POLICIES, MarketScenario

NO_ARBITRAGE = "NoArbitrage"
MAX_STEPS_EXCEEDED = "MaxStepsExceeded"
CYCLE_DETECTED = "CycleDetected"

WITHIN_GRID = "WithinGrid"
INFINITE = "Infinite"
NEG_INFINITE = "NegInfinite"


@dataclass(frozen=True)
class TatonnementState:
    step: int
    profile: Profile
    sdf: Sdf
    dominated_agents: tuple[int, ...]


@dataclass(frozen=True)
class Concluded:
    """Terminal marker: no agent holds a dominated-wrtp response."""

    state: TatonnementState


@dataclass(frozen=True)
class Step:
    """One strategy revision.

    ``alpha`` is ``None`` until :func:`annotate_prop6` fills it with an
    integer jump, ``WithinGrid``, ``Infinite`` or the violation marker
    ``NegInfinite``.
    """

    round: int
    agent: int
    old: int
    new: int
    profile_before: Profile
    profile_after: Profile
    sdf_before: Sdf
    sdf_after: Sdf
    order_before: HierarchyOrder | None = None
    order_after: HierarchyOrder | None = None
    alpha: int | str | None = None
    old_strict_subset: bool | None = None
    new_superset: bool | None = None


@dataclass(frozen=True)
class TatonnementTrace:
    initial: Profile
    steps: tuple[Step, ...]
    status: str
    final: Profile
    policy: str = LOWEST_INDEX

    @property
    def alpha_violations(self) -> tuple[Step, ...]:
        return tuple(
            s for s in self.steps
            if s.alpha == NEG_INFINITE or (isinstance(s.alpha, int) and s.alpha < 0)
        )


def make_state(scenario: MarketScenario, profile: Sequence[int], step: int = 0) -> TatonnementState:
    p = scenario.check_profile(profile)
    bad = tuple(i for i in range(scenario.n_agents) if dominated_wrtp_at(i, p, scenario) is not None)
    return TatonnementState(step, p, scenario.sdf(p), bad)


def choose_switch(i: int, profile: Profile, scenario: MarketScenario) -> int | None:
    """The strategy agent ``i`` moves to, or ``None`` if she is not dominated-wrtp."""
    opps = scenario.fiber(i, profile).profiles
    cands = dominators(i, profile[i], opps, scenario)
    if not cands:
        return None
    for b in cands:
        if dominated_wrtp_at(i, insert(i, b, profile[:i] + profile[i + 1:]), scenario) is None:
            return b
    return cands[0]


def step(state: TatonnementState, scenario: MarketScenario, policy: str = LOWEST_INDEX):
    """Advance one round; returns ``(next_state, steps)`` or :class:`Concluded`."""
    if policy not in POLICIES:
        raise DomainError(f"unknown policy {policy!r}")
    if not state.dominated_agents:
        return Concluded(state)
    p = state.profile
    movers = state.dominated_agents[:1] if policy == LOWEST_INDEX else state.dominated_agents
    moves = {i: choose_switch(i, p, scenario) for i in movers}
    after = list(p)
    for i, b in moves.items():
        after[i] = b
    after = tuple(after)
    m_after = scenario.sdf(after)
    records = tuple(
        Step(state.step + 1, i, p[i], b, p, after, state.sdf, m_after) for i, b in moves.items()
    )
    return make_state(scenario, after, state.step + 1), records


def run(
    scenario: MarketScenario,
    initial_profile: Sequence[int],
    max_steps: int,
    policy: str = LOWEST_INDEX,
) -> TatonnementTrace:
    """Iterate :func:`step` until no arbitrage, a revisited profile or the step cap.

    Raises:
        DomainError: ``max_steps < 1`` or the profile is outside the grids.
    """
    if isinstance(max_steps, bool) or not isinstance(max_steps, int) or max_steps < 1:
        raise DomainError("max_steps must be a positive integer")
    state = make_state(scenario, initial_profile)
    seen = {state.profile}
    steps: list[Step] = []
    while True:
        out = step(state, scenario, policy)
        if isinstance(out, Concluded):
            return TatonnementTrace(tuple(initial_profile), tuple(steps), NO_ARBITRAGE, state.profile, policy)
        if state.step >= max_steps:
            return TatonnementTrace(tuple(initial_profile), tuple(steps), MAX_STEPS_EXCEEDED, state.profile, policy)
        state, records = out
        steps.extend(records)
        if state.profile in seen:
            return TatonnementTrace(tuple(initial_profile), tuple(steps), CYCLE_DETECTED, state.profile, policy)
        seen.add(state.profile)


def alpha_of(before: HierarchyOrder, after: HierarchyOrder) -> int | str:
    """Order jump across one revision.

    Same cell gives ``WithinGrid``; finite to stabilized gives ``Infinite``;
    stabilized to finite gives the violation marker ``NegInfinite``.
    """
    if before == after:
        return WITHIN_GRID
    if before.is_infinite:
        return NEG_INFINITE
    if after.is_infinite:
        return INFINITE
    return after.k - before.k


def _product_set(ladders, i, k) -> set[Profile]:
    return set(opponent_product([lad.ud(k) for lad in ladders], i))


def annotate_prop6(
    trace: TatonnementTrace, ladders: Sequence[DominanceLadder], scenario: MarketScenario
) -> TatonnementTrace:
    """Attach hierarchy orders, the jump alpha and the set findings to each step.

    ``old_strict_subset`` records whether the opponent set seen before the
    switch is a strict subset of the opponents' ``UD^{k-1}`` product (``None``
    when the old order is 0 or stabilized). ``new_superset`` records whether
    the set seen after the switch strictly contains the product at the new
    order, and is ``True`` for a stabilized new strategy.

    Raises:
        DomainError: the ladders do not belong to ``scenario``.
    """
    if len(ladders) != scenario.n_agents or any(
        lad.levels[0] != frozenset(range(len(g))) for lad, g in zip(ladders, scenario.grids)
    ):
        raise DomainError("ladders do not match the scenario")
    out = []
    for st in trace.steps:
        lad = ladders[st.agent]
        ob, oa = classify_order(st.old, lad), classify_order(st.new, lad)
        i = st.agent
        strict = None
        if not ob.is_infinite and ob.k >= 1:
            before = set(scenario.fiber(i, st.profile_before).profiles)
            strict = before < _product_set(ladders, i, ob.k - 1)
        if oa.is_infinite:
            sup = True
        else:
            after = set(scenario.fiber(i, st.profile_after).profiles)
            sup = after > _product_set(ladders, i, oa.k)
        out.append(replace(st, order_before=ob, order_after=oa, alpha=alpha_of(ob, oa),
                           old_strict_subset=strict, new_superset=sup))
    return replace(trace, steps=tuple(out))
