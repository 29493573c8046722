from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierarb.errors import ValidationError
from hierarb.market import (
    ArbitragePortfolio,
    AssetSet,
    PositiveSdfCertificate,
    Sdf,
    StateSpace,
    classical_arbitrage_check,
    discount_factor,
    find_arbitrage,
    grid_arbitrage_search,
    price_assets,
    rational,
    verify_certificate,
)

HALF = StateSpace(("up", "down"), (F(1, 2), F(1, 2)))
RISKY = AssetSet(((F(1), F(1)), (F(2), F(0))), 0, F(1))


def test_state_space_invariants():
    with pytest.raises(ValidationError):
        StateSpace(("a", "b"), (F(1, 2), F(1, 3)))
    with pytest.raises(ValidationError):
        StateSpace(("a", "b"), (F(3, 2), F(-1, 2)))
    with pytest.raises(ValidationError):
        StateSpace((), ())
    assert StateSpace(("a", "b"), (F(1), F(0))).support == (0,)


def test_asset_invariants():
    with pytest.raises(ValidationError):
        AssetSet(((F(1), F(-1)),), 0, F(1))
    with pytest.raises(ValidationError):
        AssetSet(((F(1),),), 0, F(0))
    with pytest.raises(ValidationError):
        AssetSet(((F(1), F(2)),), 0, F(1)).check(HALF)


def test_risk_free_constant_only_on_support():
    space = StateSpace(("a", "b"), (F(1), F(0)))
    AssetSet(((F(1), F(5)),), 0, F(1)).check(space)


def test_sdf_rejects_zero_discount():
    with pytest.raises(ValidationError):
        Sdf.on(HALF, [0, 0])
    with pytest.raises(ValidationError):
        Sdf.on(HALF, [1, -1])
    assert Sdf.on(HALF, [2, -1]).values == (F(2), F(-1))


def test_rationals_refuse_floats():
    with pytest.raises(ValidationError):
        rational(0.5)
    with pytest.raises(ValidationError):
        rational("0.5")
    assert rational("3/4") == F(3, 4)
    assert rational(-2) == F(-2)


def test_price_examples():
    one = Sdf.on(HALF, [1, 1])
    assert price_assets(one, RISKY, HALF) == (F(1), F(1))
    assert price_assets(Sdf.on(HALF, ["1/2", "1/2"]), RISKY, HALF)[1] == F(1, 2)


def test_discount_factor_examples():
    assert discount_factor(Sdf.on(HALF, [1, 1]), HALF) == 1
    assert discount_factor(Sdf.on(HALF, [2, 0]), HALF) == 1
    assert discount_factor(Sdf.on(HALF, ["1/3", "1/3"]), HALF) == F(1, 3)


def test_classical_check_examples():
    q = (F(1), F(0))
    assert not classical_arbitrage_check((F(0), F(0)), q, RISKY, HALF)
    assert classical_arbitrage_check((F(0), F(1)), q, RISKY, HALF)
    assert not classical_arbitrage_check((F(1), F(0)), (F(1), F(1)), RISKY, HALF)


def test_classical_check_ignores_null_states():
    space = StateSpace(("a", "b"), (F(1), F(0)))
    assets = AssetSet(((F(1), F(1)), (F(0), F(1))), 0, F(1))
    # pays only in the null state: not an arbitrage
    assert not classical_arbitrage_check((F(0), F(1)), (F(1), F(0)), assets, space)


def test_find_arbitrage_certificate_for_fair_prices():
    res = find_arbitrage((F(1), F(1)), RISKY, HALF)
    assert isinstance(res, PositiveSdfCertificate)
    assert res.sdf.values == (F(1), F(1))


def test_find_arbitrage_free_asset():
    res = find_arbitrage((F(1), F(0)), RISKY, HALF)
    assert isinstance(res, ArbitragePortfolio)
    assert classical_arbitrage_check(res.theta, (F(1), F(0)), RISKY, HALF)


def test_find_arbitrage_law_of_one_price():
    assets = AssetSet(((F(1), F(1)), (F(2), F(0)), (F(0), F(2))), 0, F(1))
    q = (F(1), F(1), F(3, 2))
    res = find_arbitrage(q, assets, HALF)
    assert isinstance(res, ArbitragePortfolio)
    assert classical_arbitrage_check(res.theta, q, assets, HALF)
    # brute force agrees once the grid is wide enough
    assert grid_arbitrage_search(q, assets, HALF, 5) is not None


def test_find_arbitrage_zero_payout_negative_cost_is_topped_up():
    # a redundant asset that is cheap relative to its replica
    assets = AssetSet(((F(1), F(1)), (F(1), F(1))), 0, F(1))
    q = (F(1), F(1, 2))
    res = find_arbitrage(q, assets, HALF)
    assert isinstance(res, ArbitragePortfolio)
    assert classical_arbitrage_check(res.theta, q, assets, HALF)


POOL = st.sampled_from([F(0), F(1), F(2), F(1, 2)])


@st.composite
def markets(draw):
    n = draw(st.integers(1, 3))
    d = draw(st.integers(1, 3))
    weights = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n).filter(lambda w: sum(w) > 0))
    total = sum(weights)
    space = StateSpace(tuple(f"s{k}" for k in range(n)), tuple(F(w, total) for w in weights))
    rows = [(F(1),) * n] + [tuple(draw(POOL) for _ in range(n)) for _ in range(d - 1)]
    q = tuple(draw(st.sampled_from([F(-1, 2), F(0), F(1, 2), F(1), F(3, 2)])) for _ in range(d))
    return space, AssetSet(tuple(rows), 0, F(1)), q


@settings(max_examples=150, deadline=None)
@given(markets())
def test_find_arbitrage_branches_are_sound_and_exclusive(market):
    space, assets, q = market
    res = find_arbitrage(q, assets, space)
    if isinstance(res, ArbitragePortfolio):
        assert classical_arbitrage_check(res.theta, q, assets, space)
    else:
        assert verify_certificate(res, q, assets, space)
        assert grid_arbitrage_search(q, assets, space, 2) is None


@settings(max_examples=100, deadline=None)
@given(st.lists(POOL, min_size=2, max_size=2), st.lists(POOL, min_size=2, max_size=2), POOL)
def test_pricing_is_linear_in_sdf(u, v, c):
    if sum(u) == 0 or sum(v) == 0:
        return
    m1, m2 = Sdf(tuple(u)), Sdf(tuple(v))
    mix = Sdf(tuple(a + c * b for a, b in zip(u, v)))
    q1, q2 = price_assets(m1, RISKY, HALF), price_assets(m2, RISKY, HALF)
    assert price_assets(mix, RISKY, HALF) == tuple(a + c * b for a, b in zip(q1, q2))


def test_zero_portfolio_never_arbitrage():
    for q in [(F(0), F(0)), (F(-1), F(-1)), (F(1), F(2))]:
        assert not classical_arbitrage_check((F(0), F(0)), q, RISKY, HALF)
