"""States, assets and SDF pricing, plus classical arbitrage detection.

All quantities are exact :class:`~fractions.Fraction` values. Almost-sure
comparisons quantify over the support of the physical measure only; states
with zero probability never influence a verdict.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from hierarb import lp
from hierarb.errors import ValidationError

Portfolio = tuple[Fraction, ...]
PriceVector = tuple[Fraction, ...]

_RATIONAL = re.compile(r"^\s*-?\d+(\s*/\s*\d+)?\s*$")


def rational(value) -> Fraction:
    """Coerce ``value`` to a Fraction, refusing floats and decimal strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"exact rational required, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str) and _RATIONAL.match(value):
        try:
            return Fraction(value.replace(" ", ""))
        except ZeroDivisionError:
            raise ValidationError(f"zero denominator in {value!r}") from None
    raise ValidationError(f"exact rational required, got {value!r}")


def fmt(value: Fraction) -> str:
    """Canonical ``p/q`` string (integers print without a denominator)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def portfolio(values: Iterable) -> Portfolio:
    return tuple(rational(v) for v in values)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


@dataclass(frozen=True)
class StateSpace:
    """Finite state space with an exact physical probability measure."""

    states: tuple[str, ...]
    prob: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.states) != len(self.prob):
            raise ValidationError("one probability per state required")
        if len(set(self.states)) != len(self.states):
            raise ValidationError("state labels must be unique")
        if not self.states:
            raise ValidationError("at least one state required")
        if any(p < 0 for p in self.prob):
            raise ValidationError("probabilities must be non-negative")
        if sum(self.prob) != 1:
            raise ValidationError("probabilities must sum to exactly 1")

    @classmethod
    def uniform(cls, n: int) -> "StateSpace":
        return cls(tuple(f"s{k}" for k in range(n)), (Fraction(1, n),) * n)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def support(self) -> tuple[int, ...]:
        """Indices of states with strictly positive probability."""
        return tuple(k for k, p in enumerate(self.prob) if p > 0)

    def expectation(self, values: Sequence[Fraction]) -> Fraction:
        return dot(values, self.prob)


@dataclass(frozen=True)
class AssetSet:
    """Payoff matrix (asset x state), risk-free asset index and gross rate."""

    payoff: tuple[tuple[Fraction, ...], ...]
    risk_free: int
    gross_rate: Fraction

    def __post_init__(self):
        if not self.payoff:
            raise ValidationError("at least one asset required")
        width = len(self.payoff[0])
        if any(len(row) != width for row in self.payoff):
            raise ValidationError("payoff rows must have equal length")
        if any(v < 0 for row in self.payoff for v in row):
            raise ValidationError("payoffs must be non-negative")
        if not 0 <= self.risk_free < len(self.payoff):
            raise ValidationError("risk-free index out of range")
        if self.gross_rate <= 0:
            raise ValidationError("gross rate must be positive")

    @property
    def count(self) -> int:
        return len(self.payoff)

    def check(self, space: StateSpace) -> None:
        """Validate the payoff matrix against a state space."""
        if len(self.payoff[0]) != space.size:
            raise ValidationError("payoff rows must cover every state")
        rf = {self.payoff[self.risk_free][s] for s in space.support}
        if len(rf) != 1 or next(iter(rf)) <= 0:
            raise ValidationError("risk-free payoff must be one positive constant on the support")

    def payout(self, theta: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """State-by-state payout of holding ``theta``."""
        if len(theta) != self.count:
            raise ValidationError(f"portfolio needs {self.count} weights, got {len(theta)}")
        return tuple(
            sum((theta[n] * self.payoff[n][s] for n in range(self.count)), Fraction(0))
            for s in range(len(self.payoff[0]))
        )


@dataclass(frozen=True)
class Sdf:
    """State-indexed stochastic discount factor values.

    Build through :meth:`on` to have the positivity invariant checked.
    """

    values: tuple[Fraction, ...]

    @classmethod
    def on(cls, space: StateSpace, values: Iterable) -> "Sdf":
        m = cls(tuple(rational(v) for v in values))
        if len(m.values) != space.size:
            raise ValidationError("SDF must assign a value to every state")
        if discount_factor(m, space) <= 0:
            raise ValidationError("SDF discount factor must be strictly positive")
        return m

    def __str__(self):
        return "(" + ", ".join(fmt(v) for v in self.values) + ")"


def discount_factor(m: Sdf, space: StateSpace) -> Fraction:
    """Price of a sure unit payout: the probability-weighted sum of ``m``."""
    return space.expectation(m.values)


def price_assets(m: Sdf, assets: AssetSet, space: StateSpace) -> PriceVector:
    """Prices backed out of ``m``: ``q[n] = sum_s m(s) x_n(s) P(s)``."""
    return tuple(
        sum((m.values[s] * row[s] * space.prob[s] for s in range(space.size)), Fraction(0))
        for row in assets.payoff
    )


def classical_arbitrage_check(
    theta: Sequence[Fraction], q: Sequence[Fraction], assets: AssetSet, space: StateSpace
) -> bool:
    """True iff ``theta`` costs at most zero, never loses and sometimes gains."""
    if dot(theta, q) > 0:
        return False
    pay = assets.payout(theta)
    support = space.support
    return all(pay[s] >= 0 for s in support) and any(pay[s] > 0 for s in support)


@dataclass(frozen=True)
class ArbitragePortfolio:
    """Witness branch of :func:`find_arbitrage`."""

    theta: Portfolio


@dataclass(frozen=True)
class PositiveSdfCertificate:
    """Certificate branch: strictly positive state prices that reprice ``q``."""

    sdf: Sdf


def verify_certificate(cert: PositiveSdfCertificate, q, assets: AssetSet, space: StateSpace) -> bool:
    support = space.support
    if any(cert.sdf.values[s] <= 0 for s in support):
        return False
    return price_assets(cert.sdf, assets, space) == tuple(q)


def find_arbitrage(q: Sequence[Fraction], assets: AssetSet, space: StateSpace):
    """Return an arbitrage portfolio or a strictly positive repricing SDF.

    The two outcomes are exclusive alternatives (Stiemke), and both are
    checkable by exact arithmetic.
    """
    q = tuple(rational(v) for v in q)
    if len(q) != assets.count:
        raise ValidationError("price vector length must equal the asset count")
    support = space.support
    d = assets.count
    S = len(support)

    # Certificate LP: maximise t with m_s >= t on the support, t <= 1.
    # variables: m_s (S), t, slack_s (S), u
    nv = 2 * S + 2
    A, b = [], []
    for n in range(d):
        row = [Fraction(0)] * nv
        for k, s in enumerate(support):
            row[k] = space.prob[s] * assets.payoff[n][s]
        A.append(row)
        b.append(q[n])
    for k in range(S):
        row = [Fraction(0)] * nv
        row[k] = Fraction(1)
        row[S] = Fraction(-1)
        row[S + 1 + k] = Fraction(-1)
        A.append(row)
        b.append(Fraction(0))
    row = [Fraction(0)] * nv
    row[S] = Fraction(1)
    row[-1] = Fraction(1)
    A.append(row)
    b.append(Fraction(1))
    c = [Fraction(0)] * nv
    c[S] = Fraction(1)
    res = lp.maximize(c, A, b)
    if res.status == lp.OPTIMAL and res.value > 0:
        values = [Fraction(1)] * space.size
        for k, s in enumerate(support):
            values[s] = res.x[k]
        return PositiveSdfCertificate(Sdf(tuple(values)))

    # Portfolio LP: theta = tp - tn, y_s = theta.x(s) >= 0, z = -theta.q >= 0,
    # maximise sum(y) + z with each capped at 1.
    nv = 2 * d + S + 1 + S + 1
    A, b = [], []
    for k, s in enumerate(support):
        row = [Fraction(0)] * nv
        for n in range(d):
            row[n] = assets.payoff[n][s]
            row[d + n] = -assets.payoff[n][s]
        row[2 * d + k] = Fraction(-1)
        A.append(row)
        b.append(Fraction(0))
    row = [Fraction(0)] * nv
    for n in range(d):
        row[n] = -q[n]
        row[d + n] = q[n]
    row[2 * d + S] = Fraction(-1)
    A.append(row)
    b.append(Fraction(0))
    for k in range(S + 1):
        row = [Fraction(0)] * nv
        row[2 * d + k] = Fraction(1)
        row[2 * d + S + 1 + k] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    c = [Fraction(0)] * nv
    for k in range(S + 1):
        c[2 * d + k] = Fraction(1)
    res = lp.maximize(c, A, b)
    if res.status != lp.OPTIMAL or res.value <= 0:
        raise ArithmeticError("neither alternative found; LP solver inconsistency")
    theta = [res.x[n] - res.x[d + n] for n in range(d)]
    pay = assets.payout(theta)
    if all(pay[s] == 0 for s in support):
        # strictly negative cost but zero payout: top up with the risk-free asset
        cost = dot(theta, q)
        rf = assets.risk_free
        eps = -cost / q[rf] if q[rf] > 0 else Fraction(1)
        theta[rf] += eps
    return ArbitragePortfolio(tuple(theta))


def grid_arbitrage_search(
    q: Sequence[Fraction], assets: AssetSet, space: StateSpace, bound: int
) -> Portfolio | None:
    """Brute-force the integer grid ``[-bound, bound]^d`` for an arbitrage."""
    for theta in itertools.product(range(-bound, bound + 1), repeat=assets.count):
        theta = tuple(Fraction(t) for t in theta)
        if classical_arbitrage_check(theta, q, assets, space):
            return theta
    return None
