"""Aggregation maps from strategy profiles to SDFs, inversion and responsiveness.

A *profile* is a tuple of strategy indices, one per agent, into the agents'
declared grids. Canonical profile order is the lexicographic order produced
by :func:`itertools.product` over the grids, and every set-valued result in
this module is returned in that order.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from hierarb.errors import DomainError, ValidationError
from hierarb.market import Portfolio, Sdf, StateSpace, discount_factor

Profile = tuple[int, ...]
Grids = tuple[tuple[Portfolio, ...], ...]


def profiles(grids: Grids) -> Iterator[Profile]:
    """All strategy profiles in canonical order."""
    return itertools.product(*(range(len(g)) for g in grids))


def opponent_profiles(grids: Grids, i: int) -> Iterator[Profile]:
    """All opponent profiles of agent ``i`` (agent ``i`` removed), canonical order."""
    return itertools.product(*(range(len(g)) for j, g in enumerate(grids) if j != i))


def insert(i: int, a_i: int, opp: Profile) -> Profile:
    """Rebuild a full profile from agent ``i``'s index and an opponent profile."""
    return opp[:i] + (a_i,) + opp[i:]


def remove(i: int, profile: Profile) -> Profile:
    return profile[:i] + profile[i + 1:]


def check_profile(grids: Grids, profile: Sequence[int]) -> Profile:
    profile = tuple(profile)
    if len(profile) != len(grids):
        raise DomainError(f"profile needs {len(grids)} entries, got {len(profile)}")
    for j, (k, g) in enumerate(zip(profile, grids)):
        if not isinstance(k, int) or not 0 <= k < len(g):
            raise DomainError(f"strategy index {k!r} outside agent {j}'s grid of size {len(g)}")
    return profile


class AggregationMap:
    """Base class; subclasses are frozen dataclasses."""

    kind = "abstract"

    def sdf(self, grids: Grids, profile: Profile) -> Sdf:  # pragma: no cover
        raise NotImplementedError

    def validate(self, space: StateSpace, grids: Grids) -> None:
        """Check every reachable output against the Sdf invariant."""
        for p in profiles(grids):
            m = self.sdf(grids, p)
            if len(m.values) != space.size:
                raise ValidationError(f"SDF at profile {p} has the wrong number of states")
            if discount_factor(m, space) <= 0:
                raise ValidationError(f"SDF at profile {p} has a non-positive discount factor")


@dataclass(frozen=True)
class ConstantMap(AggregationMap):
    """Every profile maps to the same SDF."""

    base: Sdf
    kind = "constant"

    def sdf(self, grids, profile):
        return self.base


@dataclass(frozen=True)
class InjectiveMap(AggregationMap):
    """Base SDF shifted by ``step * index(profile)`` in one designated state.

    ``index`` is the mixed-radix rank of the profile in canonical order, so
    distinct profiles always land on distinct SDFs when ``step > 0``.
    """

    base: Sdf
    state: int
    step: Fraction
    kind = "injective"

    def sdf(self, grids, profile):
        index = 0
        for k, g in zip(profile, grids):
            index = index * len(g) + k
        values = list(self.base.values)
        values[self.state] += self.step * index
        return Sdf(tuple(values))

    def validate(self, space, grids):
        if self.step <= 0:
            raise ValidationError("injective step must be strictly positive")
        if not 0 <= self.state < space.size or space.prob[self.state] == 0:
            raise ValidationError("injective map needs a designated support state")
        super().validate(space, grids)
        seen = {}
        for p in profiles(grids):
            m = self.sdf(grids, p)
            if m in seen:
                raise ValidationError(f"profiles {seen[m]} and {p} share an SDF")
            seen[m] = p


@dataclass(frozen=True)
class DemandImpactMap(AggregationMap):
    """``m(s) = base(s) * (1 + sum_n coeff[s][n] * demand_n)``.

    ``demand_n`` is the aggregate holding of asset ``n`` across agents.
    Parameterizations producing a negative state value or a non-positive
    discount factor at any profile are rejected at validation.
    """

    base: Sdf
    coeff: tuple[tuple[Fraction, ...], ...]
    kind = "demand_impact"

    def sdf(self, grids, profile):
        d = len(self.coeff[0]) if self.coeff else 0
        demand = [Fraction(0)] * d
        for k, g in zip(profile, grids):
            for n in range(d):
                demand[n] += g[k][n]
        return Sdf(tuple(
            b * (1 + sum((c * dn for c, dn in zip(row, demand)), Fraction(0)))
            for b, row in zip(self.base.values, self.coeff)
        ))

    def validate(self, space, grids):
        if len(self.coeff) != space.size:
            raise ValidationError("impact coefficients need one row per state")
        width = len(grids[0][0]) if grids and grids[0] else 0
        if any(len(row) != width for row in self.coeff):
            raise ValidationError("impact coefficients need one entry per asset")
        for p in profiles(grids):
            if any(v < 0 for v in self.sdf(grids, p).values):
                raise ValidationError(f"demand impact drives the SDF negative at profile {p}")
        super().validate(space, grids)


@dataclass(frozen=True)
class TabularMap(AggregationMap):
    """Explicit table of ``(profile, Sdf)`` pairs; must cover every profile."""

    table: tuple[tuple[Profile, Sdf], ...]
    kind = "tabular"

    def sdf(self, grids, profile):
        for p, m in self.table:
            if p == profile:
                return m
        raise DomainError(f"profile {profile} missing from table")

    def validate(self, space, grids):
        keys = [p for p, _ in self.table]
        if len(set(keys)) != len(keys):
            raise ValidationError("tabular map lists a profile twice")
        missing = set(profiles(grids)) - set(keys)
        if missing:
            raise ValidationError(f"tabular map misses profile {min(missing)}")
        extra = set(keys) - set(profiles(grids))
        if extra:
            raise ValidationError(f"tabular map has out-of-grid profile {min(extra)}")
        super().validate(space, grids)


def aggregate(f: AggregationMap, grids: Grids, profile: Sequence[int]) -> Sdf:
    """The SDF the market forms at ``profile``."""
    return f.sdf(grids, check_profile(grids, profile))


@dataclass(frozen=True)
class OpponentSet:
    """Opponent profiles consistent with observing ``sdf`` while holding ``anchor``."""

    agent: int
    anchor: int
    sdf: Sdf
    profiles: tuple[Profile, ...]

    def __len__(self):
        return len(self.profiles)

    def __contains__(self, opp):
        return tuple(opp) in set(self.profiles)


def invert(f: AggregationMap, m: Sdf, i: int, a_i: int, grids: Grids) -> OpponentSet:
    """All opponent profiles ``p`` with ``f(a_i, p) == m`` exactly; may be empty."""
    if not 0 <= i < len(grids) or not 0 <= a_i < len(grids[i]):
        raise DomainError(f"strategy {a_i} of agent {i} is not in the grid")
    found = tuple(opp for opp in opponent_profiles(grids, i) if f.sdf(grids, insert(i, a_i, opp)) == m)
    return OpponentSet(i, a_i, m, found)


def fiber(f: AggregationMap, grids: Grids, i: int, profile: Profile) -> OpponentSet:
    """Opponent set anchored at the SDF the map actually produces at ``profile``."""
    return invert(f, f.sdf(grids, profile), i, profile[i], grids)


class Responsiveness(enum.Enum):
    F2_AT_LEAST_F1 = "f2_at_least_f1"
    F1_AT_LEAST_F2 = "f1_at_least_f2"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def _refines(fine: AggregationMap, coarse: AggregationMap, grids: Grids) -> bool:
    for p in profiles(grids):
        mf, mc = fine.sdf(grids, p), coarse.sdf(grids, p)
        for i in range(len(grids)):
            for opp in opponent_profiles(grids, i):
                q = insert(i, p[i], opp)
                if fine.sdf(grids, q) == mf and coarse.sdf(grids, q) != mc:
                    return False
    return True


def compare_responsiveness(f1: AggregationMap, f2: AggregationMap, grids: Grids) -> Responsiveness:
    """Compare two maps by inclusion of their opponent sets.

    ``f2`` is at least as responsive as ``f1`` when, for every agent and
    every profile, the opponent set ``f2`` reveals (anchored at the SDF
    ``f2`` forms there) is contained in the one ``f1`` reveals (anchored at
    ``f1``'s own SDF there).
    """
    a = _refines(f2, f1, grids)
    b = _refines(f1, f2, grids)
    if a and b:
        return Responsiveness.EQUAL
    if a:
        return Responsiveness.F2_AT_LEAST_F1
    if b:
        return Responsiveness.F1_AT_LEAST_F2
    return Responsiveness.INCOMPARABLE
