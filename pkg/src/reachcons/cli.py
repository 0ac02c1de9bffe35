"""Command line entry point.

Subcommands: check (graph conditions), run (one scenario), gen (graph
generators), audit (condition cross-check), sweep (one scenario across many
seeds).  Exit codes: 0 ok, 1 invariant violation, 2 input error, 3 budget
error.  The REACHCONS_SEED environment variable overrides the config seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import adversary, conditions, generate, simnet
from .errors import BudgetError, InvalidArgumentError, ReachconsError
from .graph import DiGraph, format_edge_list, parse_edge_list

CONDITIONS = ("1reach", "2reach", "3reach", "ccs", "cca", "bcs", "audit")


@dataclass
class ScenarioConfig:
    graph: str  # path to an edge-list file, or "builtin:<name>"
    f: int
    inputs: list
    K: float = 1.0
    eps: float = 0.25
    plan: dict = field(default_factory=dict)  # {"name": ...} or explicit spec
    delay: dict = field(default_factory=lambda: {"kind": "uniform"})
    seed: int = 0
    out: Optional[str] = None
    trace: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2,
                          sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"bad scenario config: {e}") from e
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise InvalidArgumentError(
                f"unknown config keys: {sorted(unknown)}")
        missing = {"graph", "f", "inputs"} - set(raw)
        if missing:
            raise InvalidArgumentError(
                f"config is missing keys: {sorted(missing)}")
        return cls(**raw)


BUILTIN_GRAPHS = {
    "k4": lambda: generate.clique(4),
    "k7": lambda: generate.clique(7),
    "two-cliques-7-8": lambda: generate.two_cliques(7, 8, seed=11),
}

BUILTIN_SCENARIOS = {
    "k4-crash": ScenarioConfig(
        graph="builtin:k4", f=1, inputs=[0.0, 1.0, 1.0, 0.0],
        plan={"name": "crash-min"}, delay={"kind": "uniform"}, seed=7),
    "two-cliques-f2": ScenarioConfig(
        graph="builtin:two-cliques-7-8", f=2,
        inputs=[0.0, 1.0] * 7,
        plan={"name": "crash-max"}, delay={"kind": "uniform"}, seed=7),
}


def load_graph(ref: str) -> DiGraph:
    if ref.startswith("builtin:"):
        name = ref[len("builtin:"):]
        maker = BUILTIN_GRAPHS.get(name)
        if maker is None:
            raise InvalidArgumentError(
                f"unknown builtin graph {name!r}; "
                f"have {sorted(BUILTIN_GRAPHS)}")
        return maker()
    try:
        with open(ref) as fh:
            return parse_edge_list(fh.read())
    except OSError as e:
        raise InvalidArgumentError(f"cannot read graph {ref!r}: {e}") from e


def build_plan(spec: dict, g: DiGraph, f: int, K: float) -> adversary.FaultPlan:
    """A plan spec is either {"name": builtin} or an explicit behavior map:
    {"name": ..., "behaviors": {"3": {"kind": "crash", "after": 0}, ...}}."""
    if "behaviors" not in spec:
        name = spec.get("name", "crash-min")
        plans = adversary.builtin_plans(g, f, K)
        if name not in plans:
            raise InvalidArgumentError(
                f"unknown builtin plan {name!r}; have {sorted(plans)}")
        return plans[name]
    behaviors = {}
    for node_s, b in spec["behaviors"].items():
        node = int(node_s)
        kind = b.get("kind")
        if kind == "crash":
            behaviors[node] = adversary.Crash(int(b.get("after", 0)))
        elif kind == "silent":
            behaviors[node] = adversary.Silent()
        elif kind == "equivocate":
            vals = tuple(sorted((int(w), float(x))
                                for w, x in b["values"].items()))
            behaviors[node] = adversary.Equivocate(vals)
        elif kind == "tamper":
            behaviors[node] = adversary.TamperForward(
                float(b.get("value_delta", 0.0)))
        elif kind == "forge":
            behaviors[node] = adversary.ForgeComplete(
                claimed=frozenset(b.get("claimed", [])),
                omit=int(b["omit"]),
                forged_value=float(b.get("forged_value", 0.5)),
                forward=bool(b.get("forward", False)))
        else:
            raise InvalidArgumentError(f"unknown behavior kind {kind!r}")
    return adversary.make_plan(spec.get("name", "custom"), behaviors)


def build_delay(spec: dict, seed: int):
    kind = spec.get("kind", "uniform")
    lo = int(spec.get("lo", 1))
    hi = int(spec.get("hi", 4))
    if kind == "uniform":
        return simnet.UniformDelay(seed, lo, hi)
    if kind == "targeted-slow":
        victims = frozenset((int(a), int(b))
                            for a, b in spec.get("victims", []))
        return simnet.TargetedSlowDelay(seed, victims,
                                        int(spec.get("factor", 5)), lo, hi)
    if kind == "round-skew":
        offsets = {int(v): int(o)
                   for v, o in spec.get("offsets", {}).items()}
        return simnet.RoundSkewDelay(seed, offsets, lo,
                                     int(spec.get("hi", 2)))
    raise InvalidArgumentError(f"unknown delay kind {kind!r}")


def metrics_csv(metrics: simnet.RunMetrics) -> str:
    lines = ["round,U,mu,spread"]
    for r in range(len(metrics.U)):
        u, m = metrics.U[r], metrics.mu[r]
        if u is None or m is None:
            lines.append(f"{r},,,")
        else:
            lines.append(f"{r},{u!r},{m!r},{u - m!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands


def cmd_check(args) -> int:
    g = load_graph(args.graph)
    cond = args.condition
    if cond == "audit":
        report = conditions.equivalence_audit(args.f, args.n_max)
        print(f"audit: {report.graphs_checked} graphs checked, "
              f"{len(report.mismatches)} mismatches"
              + (" (sampled)" if report.sampled else ""))
        return 0 if report.ok else 1
    if cond.endswith("reach"):
        verdict = conditions.check_k_reach(g, args.f, int(cond[0]))
    else:
        verdict = conditions.check_partition_condition(g, args.f, cond)
    if verdict.holds:
        print(f"{cond} holds for f={args.f}")
        return 0
    print(f"{cond} fails for f={args.f}")
    print(f"witness: {verdict.witness}")
    return 1


def _execute(config: ScenarioConfig, seed: int, force: bool,
             budgets: simnet.Budgets):
    g = load_graph(config.graph)
    plan = build_plan(config.plan, g, config.f, config.K)
    delay = build_delay(config.delay, seed)
    metrics = simnet.run(g, config.inputs, config.f, plan, delay,
                         config.K, config.eps, budgets=budgets,
                         collect_trace=config.trace is not None)
    if metrics.three_reach is False and not force:
        raise InvalidArgumentError(
            "graph fails the 3-reach condition for this f; "
            "rerun with --force to proceed with guarantees void")
    return metrics


def _emit_run(metrics: simnet.RunMetrics, config: ScenarioConfig,
              out_path: Optional[str]) -> int:
    csv = metrics_csv(metrics)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    if config.trace is not None and metrics.trace is not None:
        with open(config.trace, "w") as fh:
            for rec in metrics.trace:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if metrics.three_reach is False:
        print("warning: 3-reach fails; guarantees void", file=sys.stderr)
    report = simnet.assert_round_invariants(metrics)
    for v in report.violations:
        print(f"invariant violation: {v}", file=sys.stderr)
    return 0 if report.ok else 1


def _load_config(args) -> ScenarioConfig:
    if args.scenario in BUILTIN_SCENARIOS:
        return dataclasses.replace(BUILTIN_SCENARIOS[args.scenario])
    try:
        with open(args.scenario) as fh:
            return ScenarioConfig.from_json(fh.read())
    except OSError as e:
        raise InvalidArgumentError(
            f"no builtin scenario or readable config {args.scenario!r}: {e}"
        ) from e


def _budgets(args) -> simnet.Budgets:
    kw = {}
    if getattr(args, "max_n", None) is not None:
        kw["max_n"] = args.max_n
    if getattr(args, "max_threads", None) is not None:
        kw["max_threads"] = args.max_threads
    return simnet.Budgets(**kw)


def _seed_of(config: ScenarioConfig) -> int:
    env = os.environ.get("REACHCONS_SEED")
    return int(env) if env else config.seed


def cmd_run(args) -> int:
    config = _load_config(args)
    if args.out:
        config.out = args.out
    metrics = _execute(config, _seed_of(config), args.force, _budgets(args))
    return _emit_run(metrics, config, config.out)


def cmd_sweep(args) -> int:
    config = _load_config(args)
    budgets = _budgets(args)
    base = config.out or "sweep"
    worst = 0
    for seed in args.seeds:
        metrics = _execute(config, seed, args.force, budgets)
        path = f"{base}-{seed}.csv"
        with open(path, "w") as fh:
            fh.write(metrics_csv(metrics))
        report = simnet.assert_round_invariants(metrics)
        status = "ok" if report.ok else "VIOLATIONS"
        print(f"seed {seed}: {status} -> {path}")
        for v in report.violations:
            print(f"  {v}", file=sys.stderr)
        if not report.ok:
            worst = 1
    return worst


def cmd_gen(args) -> int:
    if args.kind == "clique":
        g = generate.clique(args.n)
    elif args.kind == "random":
        g = generate.random_digraph(args.n, args.p, args.seed)
    else:
        g = generate.two_cliques(args.n, args.bridges, args.seed)
    text = format_edge_list(g)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_audit(args) -> int:
    if args.selftest:
        # Inject a deliberately broken partition comparator; the audit must
        # notice, proving the cross-check is not vacuous.
        def broken(g, f, which):
            v = conditions.check_partition_condition(g, f, which)
            if g.n == 2 and v.holds:
                return conditions.ConditionVerdict(
                    False, conditions.PartitionViolation(
                        which, 1, frozenset(), frozenset({0}),
                        frozenset(), frozenset({1})))
            return v

        report = conditions.equivalence_audit(args.f, args.n_max,
                                              _partition_check=broken)
        print(f"selftest: {len(report.mismatches)} mismatches "
              f"(expected nonzero)")
        return 0 if report.mismatches else 1
    report = conditions.equivalence_audit(args.f, args.n_max,
                                          seed=args.seed,
                                          samples=args.samples)
    print(f"audit: {report.graphs_checked} graphs checked, "
          f"{len(report.mismatches)} mismatches"
          + (" (sampled)" if report.sampled else ""))
    for m in report.mismatches[:20]:
        print(f"  mismatch: {m}")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reachcons")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="decide a graph condition")
    c.add_argument("--graph", required=True)
    c.add_argument("--f", type=int, required=True)
    c.add_argument("--condition", required=True, choices=CONDITIONS)
    c.add_argument("--n-max", type=int, default=4,
                   help="audit size bound (condition=audit only)")
    c.set_defaults(fn=cmd_check)

    r = sub.add_parser("run", help="execute one scenario")
    r.add_argument("scenario",
                   help="builtin scenario name or config file path")
    r.add_argument("--out", help="metrics CSV path (default stdout)")
    r.add_argument("--force", action="store_true",
                   help="run even if 3-reach fails")
    r.add_argument("--max-n", type=int, default=None)
    r.add_argument("--max-threads", type=int, default=None)
    r.set_defaults(fn=cmd_run)

    w = sub.add_parser("sweep", help="run one scenario across many seeds")
    w.add_argument("scenario")
    w.add_argument("--seeds", type=int, nargs="+", required=True)
    w.add_argument("--force", action="store_true")
    w.add_argument("--max-n", type=int, default=None)
    w.add_argument("--max-threads", type=int, default=None)
    w.set_defaults(fn=cmd_sweep)

    g = sub.add_parser("gen", help="emit a generated graph")
    g.add_argument("kind", choices=("clique", "random", "two-cliques"))
    g.add_argument("--n", type=int, required=True,
                   help="node count (clique size for two-cliques)")
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--bridges", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gen)

    a = sub.add_parser("audit", help="cross-check condition equivalences")
    a.add_argument("--f", type=int, default=1)
    a.add_argument("--n-max", type=int, default=4)
    a.add_argument("--seed", type=int, default=2026)
    a.add_argument("--samples", type=int, default=1000)
    a.add_argument("--selftest", action="store_true",
                   help="inject a broken comparator; expect mismatches")
    a.set_defaults(fn=cmd_audit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return 3
    except (InvalidArgumentError, ReachconsError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
