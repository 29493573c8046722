"""State-wise dominance, the iterated elimination ladder and dominated-wrtp tests.

Strategies are referred to by their index in the agent's grid. Dominance
compares net gains state by state over the support: ``a_star`` dominates
``a`` against a set of opponent profiles when, at every profile in the set,
it is never worse and is strictly better in at least one support state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from hierarb.aggregation import Profile, insert
from hierarb.errors import DomainError, LadderError
from hierarb.market import Sdf
from hierarb.scenario import POINTWISE, UNIFORM, MarketScenario


def _improves(better, worse, support) -> bool:
    strict = False
    for s in support:
        if better[s] < worse[s]:
            return False
        if better[s] > worse[s]:
            strict = True
    return strict


def dominates(
    i: int,
    a_star: int,
    a: int,
    opponent_set: Iterable[Profile],
    scenario: MarketScenario,
    mode: str = UNIFORM,
) -> bool:
    """Uniform dominance of ``a_star`` over ``a`` for agent ``i``.

    Each opponent profile fixes the market SDF through the aggregation map,
    so both strategies are evaluated at their own full profile.

    Raises:
        DomainError: ``opponent_set`` is empty, or ``mode`` is not uniform.
    """
    if mode != UNIFORM:
        raise DomainError("pairwise dominance is defined in uniform mode only")
    opps = tuple(opponent_set)
    if not opps:
        raise DomainError("dominance against an empty opponent set is undefined")
    sup = scenario.space.support
    return all(
        _improves(scenario.gain(i, insert(i, a_star, opp)), scenario.gain(i, insert(i, a, opp)), sup)
        for opp in opps
    )


def dominators(i: int, a: int, opponent_set: Sequence[Profile], scenario: MarketScenario) -> list[int]:
    """All strategies in agent ``i``'s full grid that uniformly dominate ``a``."""
    return [b for b in range(len(scenario.grids[i])) if b != a and dominates(i, b, a, opponent_set, scenario)]


def dominated_set(
    i: int,
    opponent_set: Iterable[Profile],
    candidate_set: Iterable[int],
    scenario: MarketScenario,
    mode: str = UNIFORM,
) -> frozenset[int]:
    """Candidates that some strategy from the full grid improves upon.

    ``uniform`` asks for one improving strategy that works at every opponent
    profile. ``pointwise`` lets the improving strategy depend on the profile.
    """
    opps = tuple(opponent_set)
    if not opps:
        raise DomainError("dominance against an empty opponent set is undefined")
    grid = range(len(scenario.grids[i]))
    sup = scenario.space.support
    out = set()
    for a in candidate_set:
        if mode == UNIFORM:
            hit = any(b != a and dominates(i, b, a, opps, scenario) for b in grid)
        elif mode == POINTWISE:
            hit = all(
                any(_improves(scenario.gain(i, insert(i, b, opp)), scenario.gain(i, insert(i, a, opp)), sup)
                    for b in grid)
                for opp in opps
            )
        else:
            raise DomainError(f"unknown mode {mode!r}")
        if hit:
            out.add(a)
    return frozenset(out)


def _product(sets: Sequence[Iterable[int]]) -> list[Profile]:
    out: list[Profile] = [()]
    for s in sets:
        out = [p + (k,) for p in out for k in sorted(s)]
    return out


def opponent_product(levels: Sequence[frozenset[int]], i: int) -> list[Profile]:
    """Canonically ordered product of every other agent's strategy set."""
    return _product([s for j, s in enumerate(levels) if j != i])


@dataclass(frozen=True)
class DominanceLadder:
    """Nested undominated sets for one agent.

    Attributes:
        agent: Agent index.
        levels: ``UD^0 .. UD^K``; ``UD^0`` is the full grid.
        dominated: ``D^1 .. D^K``; the last entry is empty by construction.
        stabilization: ``K``, the first round that removed nothing for anyone.
    """

    agent: int
    levels: tuple[frozenset[int], ...]
    dominated: tuple[frozenset[int], ...]
    stabilization: int

    def ud(self, k: int) -> frozenset[int]:
        """``UD^k``; rounds past ``K`` return the stabilized set."""
        if k < 0:
            raise DomainError("negative ladder level")
        return self.levels[min(k, self.stabilization)]

    @property
    def stable(self) -> frozenset[int]:
        return self.levels[-1]


@dataclass(frozen=True, order=True)
class HierarchyOrder:
    """Partition cell of a strategy: ``Finite(k)`` or ``Infinite``."""

    k: int | None

    @classmethod
    def finite(cls, k: int) -> "HierarchyOrder":
        return cls(k)

    @classmethod
    def infinite(cls) -> "HierarchyOrder":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.k is None

    def __str__(self):
        return "Infinite" if self.k is None else f"Finite({self.k})"


def compute_ladders(scenario: MarketScenario, mode: str = UNIFORM) -> tuple[DominanceLadder, ...]:
    """Lockstep iterated elimination for every agent.

    Round ``k`` removes from each ``UD_i^{k-1}`` the strategies dominated
    against the product of the other agents' ``UD^{k-1}``. The loop stops at
    the first round that removes nothing for anyone.

    Raises:
        LadderError: an agent's undominated set became empty.
    """
    n = scenario.n_agents
    current = [frozenset(range(len(g))) for g in scenario.grids]
    levels = [[c] for c in current]
    dropped: list[list[frozenset[int]]] = [[] for _ in range(n)]
    while True:
        removed = [
            dominated_set(i, opponent_product(current, i), current[i], scenario, mode) for i in range(n)
        ]
        for i in range(n):
            dropped[i].append(removed[i])
        if not any(removed):
            break
        current = [current[i] - removed[i] for i in range(n)]
        for i in range(n):
            if not current[i]:
                raise LadderError(f"agent {i} has no undominated strategy after round {len(dropped[i])}")
            levels[i].append(current[i])
    K = len(dropped[0])
    for i in range(n):
        levels[i].append(current[i])
    return tuple(DominanceLadder(i, tuple(levels[i]), tuple(dropped[i]), K) for i in range(n))


def classify_order(a: int, ladder: DominanceLadder) -> HierarchyOrder:
    """``Finite(k)`` when ``a`` was removed in round ``k+1``, else ``Infinite``."""
    for k, d in enumerate(ladder.dominated):
        if a in d:
            return HierarchyOrder.finite(k)
    if a in ladder.stable:
        return HierarchyOrder.infinite()
    raise DomainError(f"strategy {a} is not in agent {ladder.agent}'s grid")


def dominated_wrtp(i: int, a_i: int, m: Sdf, scenario: MarketScenario) -> int | None:
    """Smallest strategy improving on ``a_i`` against every profile consistent with ``m``.

    Raises:
        DomainError: ``m`` is not attained while agent ``i`` holds ``a_i``.
    """
    opps = [
        opp for opp in scenario.opponent_profiles(i)
        if scenario._sdf_table[insert(i, a_i, opp)] == m
    ]
    if not opps:
        raise DomainError(f"SDF {m} is not attained with agent {i} holding strategy {a_i}")
    return _first_dominator(i, a_i, opps, scenario)


def dominated_wrtp_at(i: int, profile: Sequence[int], scenario: MarketScenario) -> int | None:
    """:func:`dominated_wrtp` anchored at the SDF the market forms at ``profile``."""
    p = scenario.check_profile(profile)
    return _first_dominator(i, p[i], scenario.fiber(i, p).profiles, scenario)


def _first_dominator(i, a_i, opps, scenario) -> int | None:
    for b in range(len(scenario.grids[i])):
        if b != a_i and dominates(i, b, a_i, opps, scenario):
            return b
    return None
