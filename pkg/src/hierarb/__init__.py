"""Arbitrage as a belief-hierarchy phenomenon on finite markets.

Exact-rational toolkit: SDF pricing through an aggregation map, classical
and dominated-wrtp arbitrage, iterated dominance ladders, tatonnement, and a
brute-force oracle that checks the characterization results on small
instances.
"""

from hierarb.aggregation import (
    ConstantMap,
    DemandImpactMap,
    InjectiveMap,
    OpponentSet,
    Responsiveness,
    TabularMap,
    aggregate,
    compare_responsiveness,
    invert,
)
from hierarb.dominance import (
    DominanceLadder,
    HierarchyOrder,
    classify_order,
    compute_ladders,
    dominated_set,
    dominated_wrtp,
    dominates,
)
from hierarb.errors import (
    ConfigError,
    DomainError,
    HierarbError,
    LadderError,
    PreconditionError,
    ScenarioError,
    ValidationError,
)
from hierarb.market import (
    ArbitragePortfolio,
    AssetSet,
    PositiveSdfCertificate,
    Sdf,
    StateSpace,
    classical_arbitrage_check,
    discount_factor,
    find_arbitrage,
    price_assets,
)
from hierarb.scenario import (
    Agent,
    Flags,
    MarketScenario,
    TradePlan,
    build_arbitrage_portfolio,
    is_tradeable_arbitrage,
    net_gain,
    utility,
)
from hierarb.tatonnement import TatonnementTrace, annotate_prop6, run, step

__version__ = "0.1.0"
