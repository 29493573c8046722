"""Command-line entry point: ``hierarb {ladder,arbitrage,tatonnement,verify,sweep}``.

Exit codes: 0 success, 2 input error, 3 tatonnement cycle, 4 step cap,
5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from hierarb import io
from hierarb.aggregation import Responsiveness, compare_responsiveness, insert
from hierarb.dominance import compute_ladders, dominated_wrtp
from hierarb.errors import HierarbError, ScenarioError
from hierarb.market import ArbitragePortfolio, Sdf, fmt, find_arbitrage, price_assets, rational
from hierarb.oracle import BruteForce, InstanceBounds, minimal_order, run_suite
from hierarb.scenario import MODES, POLICIES, build_arbitrage_portfolio, is_tradeable_arbitrage
from hierarb.tatonnement import CYCLE_DETECTED, MAX_STEPS_EXCEEDED, annotate_prop6, run

EXIT_OK, EXIT_INPUT, EXIT_CYCLE, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4, 5

_BOUNDS_FIELDS = {
    "maxStates": "max_states", "maxAssets": "max_assets", "maxAgents": "max_agents",
    "maxGrid": "max_grid", "payoffPool": "payoff_pool", "probWeights": "prob_weights",
    "strategyPool": "strategy_pool", "sdfPool": "sdf_pool", "ratePool": "rate_pool",
    "kinds": "kinds", "seed": "seed", "count": "count",
}


class InputError(HierarbError):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _profile(arg: str | None, sc) -> tuple[int, ...]:
    if arg is None:
        return (0,) * sc.n_agents
    try:
        p = tuple(int(v) for v in arg.split(","))
    except ValueError:
        raise InputError(f"profile must be comma-separated strategy indices, got {arg!r}") from None
    return sc.check_profile(p)


def _vec(values):
    return [fmt(v) for v in values]


def cmd_ladder(args) -> int:
    sc = io.load_scenario(args.scenario)
    mode = args.mode or sc.flags.mode
    ladders = compute_ladders(sc, mode)
    _emit(io.dumps(io.ladder_doc(sc, ladders, mode)), args.out)
    return EXIT_OK


def cmd_arbitrage(args) -> int:
    sc = io.load_scenario(args.scenario)
    p = _profile(args.profile, sc)
    if args.sdf:
        m = Sdf.on(sc.space, [rational(v) for v in args.sdf.split(",")])
    else:
        m = sc.sdf(p)
    q = price_assets(m, sc.assets, sc.space)
    classical = find_arbitrage(q, sc.assets, sc.space)
    if isinstance(classical, ArbitragePortfolio):
        classical_doc = {"branch": "portfolio", "theta": _vec(classical.theta)}
    else:
        classical_doc = {"branch": "certificate", "sdf": _vec(classical.sdf.values)}
    witnesses = []
    for i in range(sc.n_agents):
        a_star = dominated_wrtp(i, p[i], m, sc)
        if a_star is None:
            continue
        opps = [o for o in sc.opponent_profiles(i) if sc.sdf(insert(i, p[i], o)) == m]
        anchor = insert(i, p[i], opps[0])
        plans = [build_arbitrage_portfolio(i, a_star, anchor, sc, opponents=o) for o in opps]
        witnesses.append({
            "agent": i,
            "name": sc.agents[i].name,
            "current": p[i],
            "target": a_star,
            "opponents": [list(o) for o in opps],
            "plans": [io.plan_doc(plan) for plan in plans],
            "tradeable": all(is_tradeable_arbitrage(plan, sc.space) for plan in plans),
        })
    doc = {
        "profile": list(p),
        "sdf": _vec(m.values),
        "prices": _vec(q),
        "classical": classical_doc,
        "verdict": "arbitrage" if witnesses else "none",
        "witnesses": witnesses,
    }
    _emit(io.dumps(doc), args.out)
    return EXIT_OK


def cmd_tatonnement(args) -> int:
    sc = io.load_scenario(args.scenario)
    p = _profile(args.profile, sc)
    max_steps = args.max_steps if args.max_steps is not None else sc.flags.max_steps
    if max_steps < 1:
        raise InputError("--max-steps must be at least 1")
    policy = args.policy or sc.flags.tie_break
    trace = run(sc, p, max_steps, policy)
    trace = annotate_prop6(trace, compute_ladders(sc), sc)
    _emit(io.dumps(io.trace_doc(trace)), args.out)
    if trace.status == CYCLE_DETECTED:
        return EXIT_CYCLE
    if trace.status == MAX_STEPS_EXCEEDED:
        return EXIT_CAP
    return EXIT_OK


def load_bounds(path: str | None, seed: int | None = None, count: int | None = None) -> InstanceBounds:
    kw = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(exc.msg, exc.lineno) from None
        if not isinstance(doc, dict):
            raise InputError("bounds document must be an object")
        unknown = set(doc) - set(_BOUNDS_FIELDS)
        if unknown:
            raise InputError(f"unknown bounds field {sorted(unknown)[0]!r}")
        for key, value in doc.items():
            if isinstance(value, float):
                raise InputError(f"exact rational required in {key!r}")
            kw[_BOUNDS_FIELDS[key]] = tuple(value) if isinstance(value, list) else value
    if seed is not None:
        kw["seed"] = seed
    if count is not None:
        kw["count"] = count
    try:
        return InstanceBounds(**kw)
    except TypeError as exc:
        raise InputError(str(exc)) from None


def cmd_verify(args) -> int:
    bounds = load_bounds(args.bounds, args.seed, args.count)
    extra = [(str(path), io.load_scenario(path)) for path in args.scenario or ()]
    report = run_suite(bounds, args.threads, extra)
    doc = report.as_dict(timing=args.timing)
    if args.replay_dir and report.counterexamples:
        out = Path(args.replay_dir)
        out.mkdir(parents=True, exist_ok=True)
        for n, cex in enumerate(doc["counterexamples"]):
            path = out / f"{n:03d}-{cex['claim']}.json"
            path.write_text(io.dumps(cex["scenario"]))
            cex["replay"] = str(path)
    _emit(io.dumps(doc), args.out)
    if args.timing and report.wall_time is not None:
        print(f"wall time {report.wall_time:.2f}s", file=sys.stderr)
    if report.failures:
        for cex in doc["counterexamples"]:
            where = cex.get("replay", "embedded in report")
            print(f"FAIL {cex['claim']} ({cex['source']}): replay {where}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = io.load_scenario(args.scenario)
    p = _profile(args.profile, sc)
    variants = io.parse_variants(Path(args.variants).read_text(), sc)
    ladders = compute_ladders(sc)
    inf = ladders[0].stabilization + 1
    kmin = {}
    for name, f in variants:
        b = BruteForce(sc.with_aggregation(f))
        for i in range(sc.n_agents):
            kmin[name, i] = minimal_order(b.fiber(i, p), ladders, i)
    below = {name: [] for name, _ in variants}
    for n2, f2 in variants:
        for n1, f1 in variants:
            if n1 != n2 and compare_responsiveness(f1, f2, sc.grids) in (
                Responsiveness.F2_AT_LEAST_F1, Responsiveness.EQUAL
            ):
                below[n2].append(n1)
    order = sorted(variants, key=lambda v: (len(below[v[0]]), v[0]))
    rows, violations = [], 0
    comparable = {name for name in below if below[name]} | {n for v in below.values() for n in v}
    for name, f in order:
        rank = len(below[name])
        for i in range(sc.n_agents):
            k = kmin[name, i]
            if name not in comparable:
                mono = "incomparable"
            else:
                bad = [
                    n1 for n1 in below[name]
                    if (inf if k is None else k) < (inf if kmin[n1, i] is None else kmin[n1, i])
                ]
                violations += bool(bad)
                mono = "violation" if bad else "ok"
            rows.append({
                "rank": rank, "variant": name, "kind": f.kind, "agent": i,
                "k_min": "inf" if k is None else k,
                "at_least_as_responsive_as": ";".join(sorted(below[name])),
                "monotone": mono,
            })
    _emit(io.sweep_csv(rows), args.out)
    return EXIT_VERIFY if violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierarb",
        description="Arbitrage, dominance ladders and tatonnement on finite markets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON document")
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("ladder", help="iterated dominance ladder per agent")
    common(p)
    p.add_argument("--mode", choices=MODES, help="quantifier mode (default: scenario flag)")
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("arbitrage", help="dominated-wrtp witnesses and trade plans at a profile")
    common(p)
    p.add_argument("--profile", help="comma-separated strategy indices (default: all zeros)")
    p.add_argument("--sdf", help="anchoring SDF as comma-separated rationals (default: the market's)")
    p.set_defaults(func=cmd_arbitrage)

    p = sub.add_parser("tatonnement", help="run the adjustment process and annotate order jumps")
    common(p)
    p.add_argument("--profile", help="initial profile (default: all zeros)")
    p.add_argument("--max-steps", type=int, help="step cap (default: scenario flag)")
    p.add_argument("--policy", choices=POLICIES, help="acting-agent policy (default: scenario flag)")
    p.set_defaults(func=cmd_tatonnement)

    p = sub.add_parser("verify", help="check every claim over generated scenarios")
    common(p, scenario=False)
    p.add_argument("--bounds", help="generator bounds JSON (default: built-in bounds)")
    p.add_argument("--scenario", action="append", help="extra scenario file to check; repeatable")
    p.add_argument("--seed", type=int, help="override the bounds seed")
    p.add_argument("--count", type=int, help="override the number of generated scenarios")
    p.add_argument("--threads", type=int, help="worker processes (default: $HIERARCHY_ARB_THREADS or 1)")
    p.add_argument("--replay-dir", help="write each stored counterexample scenario here")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="minimal orders across aggregation-map variants (CSV)")
    common(p)
    p.add_argument("--variants", required=True, help="JSON with a list of named aggregation specs")
    p.add_argument("--profile", help="anchoring profile (default: all zeros)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_steps", None) is not None and args.max_steps < 1:
        print("error: --max-steps must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (HierarbError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
