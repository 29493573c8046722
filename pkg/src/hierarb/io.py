"""JSON scenario documents, trace/report serialization and sweep CSV.

Rationals travel as ``"p/q"`` strings (JSON integers are also accepted);
JSON floats and decimal strings are rejected so that no rounding can reach a
dominance or inversion test. All writers emit canonical JSON: sorted keys,
two-space indent and a trailing newline.
"""

from __future__ import annotations

import csv
import io as _io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from hierarb.aggregation import (
    AggregationMap,
    ConstantMap,
    DemandImpactMap,
    InjectiveMap,
    TabularMap,
)
from hierarb.errors import HierarbError, ScenarioError, ValidationError
from hierarb.market import AssetSet, Sdf, StateSpace, fmt, rational
from hierarb.scenario import Agent, Flags, MarketScenario

VERSION = "1"


class _Float(str):
    """Raw token of a JSON float, kept so errors can point at it."""


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _locate(text: str, token: str) -> int | None:
    pos = text.find(token)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, message: str, token: Any = None):
        line = None
        if isinstance(token, _Float):
            line = _locate(self.text, str(token))
        elif token is not None:
            line = _locate(self.text, json.dumps(token))
        raise ScenarioError(message, line)

    def rat(self, value) -> Fraction:
        if isinstance(value, _Float) or isinstance(value, bool):
            self.fail(f"exact rational required, got {value}", value)
        if isinstance(value, int):
            return Fraction(value)
        if not isinstance(value, str):
            self.fail(f"exact rational required, got {value!r}", value)
        try:
            return rational(value)
        except ValidationError:
            self.fail(f"exact rational required, got {value!r}", value)

    def int(self, value, what: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(f"{what} must be an integer, got {value!r}", value)
        return value

    def obj(self, value, what: str, required: set[str], optional: set[str] = frozenset()) -> dict:
        if not isinstance(value, dict):
            self.fail(f"{what} must be an object")
        unknown = set(value) - required - set(optional)
        if unknown:
            key = sorted(unknown)[0]
            self.fail(f"unknown field {key!r} in {what}", key)
        missing = required - set(value)
        if missing:
            self.fail(f"missing field {sorted(missing)[0]!r} in {what}")
        return value

    def vec(self, value, what: str) -> tuple[Fraction, ...]:
        if not isinstance(value, list):
            self.fail(f"{what} must be a list")
        return tuple(self.rat(v) for v in value)


def _aggregation(r: _Reader, doc, space: StateSpace) -> AggregationMap:
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "constant":
        r.obj(doc, "aggregation", {"kind", "sdf"})
        return ConstantMap(Sdf(r.vec(doc["sdf"], "sdf")))
    if kind == "injective":
        r.obj(doc, "aggregation", {"kind", "base", "state", "step"})
        return InjectiveMap(Sdf(r.vec(doc["base"], "base")), r.int(doc["state"], "state"), r.rat(doc["step"]))
    if kind == "demand_impact":
        r.obj(doc, "aggregation", {"kind", "base", "coefficients"})
        if not isinstance(doc["coefficients"], list):
            r.fail("coefficients must be a list of rows")
        return DemandImpactMap(
            Sdf(r.vec(doc["base"], "base")),
            tuple(r.vec(row, "coefficients row") for row in doc["coefficients"]),
        )
    if kind == "tabular":
        r.obj(doc, "aggregation", {"kind", "table"})
        if not isinstance(doc["table"], list):
            r.fail("table must be a list")
        rows = []
        for entry in doc["table"]:
            r.obj(entry, "table entry", {"profile", "sdf"})
            if not isinstance(entry["profile"], list):
                r.fail("profile must be a list of strategy indices")
            prof = tuple(r.int(k, "profile entry") for k in entry["profile"])
            rows.append((prof, Sdf(r.vec(entry["sdf"], "sdf"))))
        return TabularMap(tuple(rows))
    r.fail(f"unknown aggregation kind {kind!r}", kind)


def parse_scenario(text: str) -> MarketScenario:
    """Parse and validate a scenario document.

    Raises:
        ScenarioError: malformed JSON, schema violations or failed invariants.
    """
    try:
        doc = json.loads(text, parse_float=_Float)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, exc.lineno) from None
    r = _Reader(text)
    r.obj(doc, "document", {"version", "states", "assets", "agents", "aggregation"}, {"flags"})
    if doc["version"] != VERSION:
        r.fail(f"unsupported version {doc['version']!r}", doc["version"])
    try:
        if not isinstance(doc["states"], list):
            r.fail("states must be a list")
        labels, probs = [], []
        for st in doc["states"]:
            r.obj(st, "state", {"label", "prob"})
            if not isinstance(st["label"], str):
                r.fail("state label must be a string")
            labels.append(st["label"])
            probs.append(r.rat(st["prob"]))
        space = StateSpace(tuple(labels), tuple(probs))
        a = r.obj(doc["assets"], "assets", {"payoffs", "riskFreeIndex", "grossRate"}, {"riskFreeDiscounts"})
        if not isinstance(a["payoffs"], list):
            r.fail("payoffs must be a list of rows")
        assets = AssetSet(
            tuple(r.vec(row, "payoff row") for row in a["payoffs"]),
            r.int(a["riskFreeIndex"], "riskFreeIndex"),
            r.rat(a["grossRate"]),
        )
        rf = []
        for entry in a.get("riskFreeDiscounts", []):
            r.obj(entry, "riskFreeDiscounts entry", {"amount", "discount"})
            rf.append((r.rat(entry["amount"]), r.rat(entry["discount"])))
        if not isinstance(doc["agents"], list):
            r.fail("agents must be a list")
        agents = []
        for ag in doc["agents"]:
            r.obj(ag, "agent", {"name", "strategies"})
            if not isinstance(ag["strategies"], list):
                r.fail("strategies must be a list")
            agents.append(Agent(str(ag["name"]), tuple(r.vec(s, "strategy") for s in ag["strategies"])))
        agg = _aggregation(r, doc["aggregation"], space)
        flags = Flags()
        if "flags" in doc:
            fl = r.obj(doc["flags"], "flags", set(), {"mode", "maxSteps", "tieBreak", "seed"})
            flags = Flags(
                fl.get("mode", flags.mode),
                r.int(fl.get("maxSteps", flags.max_steps), "maxSteps"),
                fl.get("tieBreak", flags.tie_break),
                r.int(fl.get("seed", flags.seed), "seed"),
            )
        return MarketScenario(space, assets, tuple(agents), agg, tuple(rf), flags)
    except ScenarioError:
        raise
    except HierarbError as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario(path: str | Path) -> MarketScenario:
    return parse_scenario(Path(path).read_text())


def _vec(values) -> list[str]:
    return [fmt(v) for v in values]


def aggregation_doc(f: AggregationMap) -> dict:
    if isinstance(f, ConstantMap):
        return {"kind": "constant", "sdf": _vec(f.base.values)}
    if isinstance(f, InjectiveMap):
        return {"kind": "injective", "base": _vec(f.base.values), "state": f.state, "step": fmt(f.step)}
    if isinstance(f, DemandImpactMap):
        return {"kind": "demand_impact", "base": _vec(f.base.values),
                "coefficients": [_vec(row) for row in f.coeff]}
    if isinstance(f, TabularMap):
        return {"kind": "tabular",
                "table": [{"profile": list(p), "sdf": _vec(m.values)} for p, m in f.table]}
    raise ValidationError(f"cannot serialize aggregation {type(f).__name__}")


def scenario_doc(sc: MarketScenario) -> dict:
    assets = {
        "payoffs": [_vec(row) for row in sc.assets.payoff],
        "riskFreeIndex": sc.assets.risk_free,
        "grossRate": fmt(sc.assets.gross_rate),
    }
    if sc.rf_discounts:
        assets["riskFreeDiscounts"] = [{"amount": fmt(w), "discount": fmt(d)} for w, d in sc.rf_discounts]
    return {
        "version": VERSION,
        "states": [{"label": lab, "prob": fmt(p)} for lab, p in zip(sc.space.states, sc.space.prob)],
        "assets": assets,
        "agents": [{"name": a.name, "strategies": [_vec(s) for s in a.strategies]} for a in sc.agents],
        "aggregation": aggregation_doc(sc.aggregation),
        "flags": {"mode": sc.flags.mode, "maxSteps": sc.flags.max_steps,
                  "tieBreak": sc.flags.tie_break, "seed": sc.flags.seed},
    }


def dump_scenario(sc: MarketScenario) -> str:
    return dumps(scenario_doc(sc))


def ladder_doc(sc: MarketScenario, ladders, mode: str) -> dict:
    from hierarb.dominance import classify_order

    return {
        "mode": mode,
        "agents": [
            {
                "agent": lad.agent,
                "name": sc.agents[lad.agent].name,
                "stabilization": lad.stabilization,
                "levels": [sorted(s) for s in lad.levels],
                "dominated": [sorted(s) for s in lad.dominated],
                "orders": [str(classify_order(a, lad)) for a in range(len(sc.grids[lad.agent]))],
            }
            for lad in ladders
        ],
    }


def trace_doc(trace) -> dict:
    def order(o):
        return None if o is None else str(o)

    return {
        "initial": list(trace.initial),
        "final": list(trace.final),
        "status": trace.status,
        "policy": trace.policy,
        "alphaViolations": len(trace.alpha_violations),
        "steps": [
            {
                "round": s.round,
                "agent": s.agent,
                "old": s.old,
                "new": s.new,
                "profileBefore": list(s.profile_before),
                "profileAfter": list(s.profile_after),
                "sdfBefore": _vec(s.sdf_before.values),
                "sdfAfter": _vec(s.sdf_after.values),
                "orderBefore": order(s.order_before),
                "orderAfter": order(s.order_after),
                "alpha": s.alpha,
                "oldStrictSubset": s.old_strict_subset,
                "newSuperset": s.new_superset,
            }
            for s in trace.steps
        ],
    }


def plan_doc(plan) -> dict:
    return {
        "agent": plan.agent,
        "current": plan.current,
        "target": plan.target,
        "opponents": list(plan.opponents),
        "legs": [
            {"label": leg.label, "holdings": _vec(leg.holdings), "price": fmt(leg.price),
             "payout": _vec(leg.payout)}
            for leg in plan.legs
        ],
        "cost": fmt(plan.cost),
        "payout": _vec(plan.payout),
    }


def parse_variants(text: str, sc: MarketScenario) -> list[tuple[str, AggregationMap]]:
    """Named aggregation maps from a ``{"variants": [{name, aggregation}]}`` document."""
    try:
        doc = json.loads(text, parse_float=_Float)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, exc.lineno) from None
    r = _Reader(text)
    r.obj(doc, "variants document", {"variants"})
    if not isinstance(doc["variants"], list):
        r.fail("variants must be a list")
    out = []
    for entry in doc["variants"]:
        r.obj(entry, "variant", {"name", "aggregation"})
        f = _aggregation(r, entry["aggregation"], sc.space)
        try:
            f.validate(sc.space, sc.grids)
        except HierarbError as exc:
            raise ScenarioError(f"variant {entry['name']!r}: {exc}") from None
        out.append((str(entry["name"]), f))
    if len({name for name, _ in out}) != len(out):
        raise ScenarioError("variant names must be unique")
    return out


def sweep_csv(rows: list[dict]) -> str:
    """Render sweep rows; column order is fixed, line endings are ``\\n``."""
    cols = ["rank", "variant", "kind", "agent", "k_min", "at_least_as_responsive_as", "monotone"]
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: row.get(c, "") for c in cols})
    return buf.getvalue()
