"""Fault plans: behaviors bound to faulty nodes, applied as send interceptors.

Faulty nodes run the honest runtime internally; every outgoing message passes
through the plan, which may drop, mutate, or multiply it.  No behavior may
emit a path whose last hop is not the sender itself; that rule is enforced
structurally on every emission.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

from .errors import InvalidArgumentError
from .graph import DiGraph, mask_of
from .protocol import COMP_T, VAL_T, PayloadView


@dataclass(frozen=True)
class Crash:
    """Allow the first `after` sends, then drop everything."""

    after: int = 0


@dataclass(frozen=True)
class Silent:
    """Never send anything."""


@dataclass(frozen=True)
class Equivocate:
    """Send a per-neighbor value at round start; never forward anything.

    values is a sorted tuple of (destination, value) pairs.
    """

    values: tuple


@dataclass(frozen=True)
class TamperForward:
    """Forward values mutated by a constant offset; initiate honestly."""

    value_delta: float = 0.0


@dataclass(frozen=True)
class ForgeComplete:
    """Initiate honestly and additionally flood one forged COMPLETE per round.

    The forged announcement claims the given fault set and carries a
    fabricated value map that omits one node, so receivers evaluating it see
    a missing source-component value.  When forward is true the node
    otherwise behaves honestly (needed for the forgery to reach verification
    on small graphs); when false it forwards nothing.
    """

    claimed: frozenset
    omit: int
    forged_value: float = 0.5
    forward: bool = False


@dataclass(frozen=True)
class FaultPlan:
    name: str
    behaviors: tuple  # sorted tuple of (node, behavior)

    @property
    def faulty(self) -> frozenset:
        return frozenset(v for v, _ in self.behaviors)

    def behavior_of(self, v: int):
        for node, b in self.behaviors:
            if node == v:
                return b
        return None


def make_plan(name: str, behaviors: Dict[int, object]) -> FaultPlan:
    return FaultPlan(name, tuple(sorted(behaviors.items(),
                                        key=lambda kv: kv[0])))


class PlanRuntime:
    """Per-run mutable adversary state (send counters, forged payloads)."""

    def __init__(self, plan: FaultPlan, g: DiGraph):
        self.plan = plan
        self.g = g
        self.sent = {v: 0 for v in plan.faulty}
        self._behaviors = dict(plan.behaviors)
        self.forged = {}  # (node, round) -> (counter, payload)
        self.equiv_maps = {
            v: dict(b.values) for v, b in plan.behaviors
            if isinstance(b, Equivocate)
        }

    def intercept(self, sender: int, dest: int, wire: tuple, node) -> list:
        out = self._apply(sender, dest, wire, node)
        for m in out:
            path = m[3] if m[0] == VAL_T else m[5]
            if path[-1] != sender:
                raise InvalidArgumentError(
                    "adversary emitted a path not ending at the sender")
        return out

    def _apply(self, sender: int, dest: int, wire: tuple, node) -> list:
        b = self._behaviors.get(sender)
        if isinstance(b, Silent):
            return []
        if isinstance(b, Crash):
            idx = self.sent[sender]
            self.sent[sender] += 1
            return [wire] if idx < b.after else []
        tag = wire[0]
        if isinstance(b, Equivocate):
            if tag == VAL_T and len(wire[3]) == 1:
                x = self.equiv_maps[sender].get(dest, wire[2])
                return [(VAL_T, wire[1], x) + wire[3:]]
            return []
        if isinstance(b, TamperForward):
            if tag == VAL_T and len(wire[3]) > 1:
                return [(VAL_T, wire[1], wire[2] + b.value_delta)
                        + wire[3:]]
            return [wire]
        if isinstance(b, ForgeComplete):
            return self._forge(sender, dest, wire, node, b)
        return [wire]

    def _forge(self, sender, dest, wire, node, b: ForgeComplete) -> list:
        tag = wire[0]
        if tag == VAL_T and len(wire[3]) == 1:
            rnd = wire[1]
            key = (sender, rnd)
            if key not in self.forged:
                node.fifo_sent += 1
                excluded = set(b.claimed) | {b.omit}
                values = tuple(sorted(
                    (q, b.forged_value) for q in range(self.g.n)
                    if q not in excluded))
                payload = PayloadView(rnd, mask_of(b.claimed), values)
                self.forged[key] = (node.fifo_sent, payload)
            k, payload = self.forged[key]
            return [wire, (COMP_T, rnd, sender, k, payload, (sender,))]
        if b.forward:
            return [wire]
        # Non-forwarding mode: keep only own honest announcements out too,
        # dropped along with forwarded traffic to bound flood volume.
        return []


def builtin_plans(g: DiGraph, f: int, K: float = 1.0) -> Dict[str, FaultPlan]:
    """The named stock fault plans, bound to a graph and fault budget.

    Faulty nodes are always the highest-id ones so plans are deterministic.
    With f = 0 every plan is fault-free.
    """
    n = g.n
    plans: Dict[str, FaultPlan] = {}
    if f <= 0 or n < 2:
        for name in ("crash-min", "crash-max", "equivocator", "forger",
                     "split-brain"):
            plans[name] = make_plan(name, {})
        return plans

    def top(k: int) -> list:
        return list(range(n - k, n))

    plans["crash-min"] = make_plan("crash-min", {n - 1: Crash(0)})
    plans["crash-max"] = make_plan(
        "crash-max", {v: Crash(0) for v in top(f)})
    even_odd = tuple(sorted(
        (w, 0.0 if w % 2 == 0 else K) for w in g.out_neighbors(n - 1)))
    plans["equivocator"] = make_plan(
        "equivocator", {n - 1: Equivocate(even_odd)})
    if n >= 3:
        plans["forger"] = make_plan("forger", {
            n - 1: ForgeComplete(claimed=frozenset({0}), omit=1,
                                 forged_value=K / 2.0, forward=n <= 5)})
    else:
        plans["forger"] = make_plan("forger", {n - 1: Crash(0)})
    split = {}
    for v in top(f):
        vals = tuple(sorted(
            (w, 0.0 if w < n / 2 else K) for w in g.out_neighbors(v)))
        split[v] = Equivocate(vals)
    plans["split-brain"] = make_plan("split-brain", split)
    return plans
