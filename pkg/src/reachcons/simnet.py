"""Deterministic discrete-event network simulator.

Logical time is an integer clock; every send is scheduled with a policy-drawn
positive delay and delivered in (time, sequence) order, which makes runs
bit-for-bit reproducible from (graph, inputs, plan, policy).  Links are
reliable but unordered; ordering guarantees come only from the protocol's
own counters.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional

from .adversary import FaultPlan, PlanRuntime
from .conditions import check_k_reach
from .errors import BudgetError, InvalidArgumentError
from .graph import DiGraph, _source_component_mask, mask_of, set_of
from .protocol import COMP_T, VAL_T, Node


# ---------------------------------------------------------------------------
# Delay policies


class UniformDelay:
    """Independent uniform integer delay on every send."""

    def __init__(self, seed: int, lo: int = 1, hi: int = 4):
        if lo < 1 or hi < lo:
            raise InvalidArgumentError("delays must be positive, lo <= hi")
        self.seed, self.lo, self.hi = seed, lo, hi
        self._random = random.Random(seed).random
        self._span = hi - lo + 1

    def delay(self, sender: int, dest: int) -> int:
        return self.lo + int(self._random() * self._span)


class TargetedSlowDelay:
    """Uniform base delay, multiplied on a chosen set of victim edges."""

    def __init__(self, seed: int, victims: frozenset, factor: int = 5,
                 lo: int = 1, hi: int = 4):
        if lo < 1 or hi < lo or factor < 1:
            raise InvalidArgumentError("delays must stay positive")
        self.seed, self.victims, self.factor = seed, frozenset(victims), factor
        self.lo, self.hi = lo, hi
        self._rng = random.Random(seed)

    def delay(self, sender: int, dest: int) -> int:
        base = self.lo + int(self._rng.random() * (self.hi - self.lo + 1))
        if (sender, dest) in self.victims:
            return base * self.factor
        return base


class RoundSkewDelay:
    """Uniform base delay plus a fixed per-sender offset."""

    def __init__(self, seed: int, offsets: Dict[int, int],
                 lo: int = 1, hi: int = 2):
        if lo < 1 or hi < lo or any(o < 0 for o in offsets.values()):
            raise InvalidArgumentError("delays must stay positive")
        self.seed, self.offsets = seed, dict(offsets)
        self.lo, self.hi = lo, hi
        self._rng = random.Random(seed)

    def delay(self, sender: int, dest: int) -> int:
        base = self.lo + int(self._rng.random() * (self.hi - self.lo + 1))
        return base + self.offsets.get(sender, 0)


# ---------------------------------------------------------------------------
# Budgets and metrics


@dataclass(frozen=True)
class Budgets:
    max_n: int = 10
    max_threads: int = 2000
    max_deliveries: int = 30_000_000


@dataclass
class RunMetrics:
    g: DiGraph
    f: int
    K: float
    eps: float
    r_out: int
    faulty: frozenset
    inputs: list
    U: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    fa_records: dict = field(default_factory=dict)  # (node, round) -> FARecord
    latches: dict = field(default_factory=dict)  # (node, round, fv) -> payload
    stalled: bool = False
    three_reach: Optional[bool] = None
    deliveries: int = 0
    trace: Optional[list] = None

    @property
    def honest(self) -> list:
        return [v for v in range(self.g.n) if v not in self.faulty]

    def spread(self, r: int) -> Optional[float]:
        if self.U[r] is None or self.mu[r] is None:
            return None
        return self.U[r] - self.mu[r]


# ---------------------------------------------------------------------------
# The event loop


class SimWorld:
    def __init__(self, g: DiGraph, f: int, r_out: int, plan: FaultPlan,
                 delay, budgets: Budgets, collect_trace: bool):
        self.g = g
        self.f = f
        self.r_out = r_out
        self.plan = plan
        self.plan_rt = PlanRuntime(plan, g)
        self._faulty = plan.faulty
        self.delay = delay
        self._delay = delay.delay
        self.budgets = budgets
        self.time = 0
        self.seq = 0
        self.heap: list = []
        self.deliveries = 0
        self.pending_honest = 0
        self.trace: Optional[list] = [] if collect_trace else None
        self._cover_cands: dict = {}
        cands = [0]
        for size in range(1, f + 1):
            for combo in combinations(range(g.n), size):
                cands.append(mask_of(combo))
        self.all_candidate_masks = tuple(sorted(cands))
        self.nodes: List[Node] = []

    def cover_cands(self, universe_mask: int) -> tuple:
        cached = self._cover_cands.get(universe_mask)
        if cached is None:
            members = sorted(set_of(universe_mask))
            out = []
            for size in range(1, self.f + 1):
                for combo in combinations(members, size):
                    out.append(mask_of(combo))
            cached = self._cover_cands[universe_mask] = tuple(out)
        return cached

    def note_done(self):
        self.pending_honest -= 1

    def send(self, sender: int, dest: int, wire: tuple):
        # Heap keys pack (deliver_at, seq) into one int for cheap compares.
        if sender in self._faulty:
            for m in self.plan_rt.intercept(sender, dest, wire,
                                            self.nodes[sender]):
                self.seq += 1
                key = (self.time + self._delay(sender, dest)) << 32 | self.seq
                heapq.heappush(self.heap,
                               (key, sender, dest, m, self.time))
            return
        self.seq += 1
        key = (self.time + self._delay(sender, dest)) << 32 | self.seq
        heapq.heappush(self.heap, (key, sender, dest, wire, self.time))

    def send_flood(self, sender: int, dests, wire: tuple):
        """Send one wire message to several destinations."""
        if sender in self._faulty:
            for dest in dests:
                self.send(sender, dest, wire)
            return
        t = self.time
        seq = self.seq
        heap = self.heap
        delay = self._delay
        push = heapq.heappush
        for dest in dests:
            seq += 1
            push(heap, ((t + delay(sender, dest)) << 32 | seq,
                        sender, dest, wire, t))
        self.seq = seq

    def run_loop(self, budget: int):
        nodes = self.nodes
        heap = self.heap
        pop = heapq.heappop
        delivered = 0
        trace = self.trace
        while heap and self.pending_honest > 0:
            key, sender, dest, m, sent_at = pop(heap)
            self.time = t = key >> 32
            delivered += 1
            if delivered > budget:
                self.deliveries = delivered
                raise BudgetError(
                    f"delivery budget of {budget} exceeded; the flood on "
                    f"this graph is too large for explicit simulation")
            if trace is not None:
                trace.append(self._trace_record(sender, dest, m, sent_at, t))
            nodes[dest].on_deliver(sender, m)
        self.deliveries = delivered

    @staticmethod
    def _trace_record(sender, dest, m, sent_at, t) -> dict:
        if m[0] == VAL_T:
            _, rnd, x, p = m[:4]
            return {"round": rnd, "kind": "value", "value": x,
                    "path": list(p), "sender": sender, "receiver": dest,
                    "send_time": sent_at, "deliver_time": t}
        _, rnd, init, k, payload, p = m
        return {"round": rnd, "kind": "complete", "init": init,
                "fifo_counter": k, "claimed": sorted(set_of(
                    payload.claimed_mask)), "path": list(p),
                "sender": sender, "receiver": dest,
                "send_time": sent_at, "deliver_time": t}


def thread_count(n: int, f: int) -> int:
    total = 0
    for size in range(0, f + 1):
        total += math.comb(n - 1, size)
    return total


def rounds_to_output(K: float, eps: float) -> int:
    return math.floor(math.log2(K / eps) + 1e-12) + 1


def run(g: DiGraph, inputs: list, f: int, plan: FaultPlan, delay,
        K: float, eps: float, *, budgets: Optional[Budgets] = None,
        check_condition: bool = True,
        collect_trace: bool = False) -> RunMetrics:
    """Execute a full multi-round consensus run and collect metrics."""
    budgets = budgets or Budgets()
    if len(inputs) != g.n:
        raise InvalidArgumentError(
            f"need {g.n} inputs, got {len(inputs)}")
    if eps <= 0 or K < eps:
        raise InvalidArgumentError("require K >= eps > 0")
    if any(x < 0 or x > K for x in inputs):
        raise InvalidArgumentError(f"inputs must lie within [0, {K}]")
    if budgets.max_n is not None and g.n > budgets.max_n:
        raise BudgetError(
            f"graph has {g.n} nodes, over the budget of {budgets.max_n}; "
            f"flood volume grows exponentially with n")
    tc = thread_count(g.n, f)
    if tc > budgets.max_threads:
        raise BudgetError(
            f"{tc} candidate threads per node exceed the budget of "
            f"{budgets.max_threads}")
    r_out = rounds_to_output(K, eps)
    metrics = RunMetrics(g=g, f=f, K=K, eps=eps, r_out=r_out,
                         faulty=plan.faulty, inputs=list(inputs))
    if check_condition:
        metrics.three_reach = check_k_reach(g, f, 3).holds

    world = SimWorld(g, f, r_out, plan, delay, budgets, collect_trace)
    world.nodes = [Node(world, v, float(inputs[v])) for v in range(g.n)]
    world.pending_honest = len(metrics.honest)
    for v in range(g.n):
        world.nodes[v].start_round(0)
    world.run_loop(budgets.max_deliveries)

    metrics.deliveries = world.deliveries
    metrics.stalled = world.pending_honest > 0
    honest = metrics.honest
    for r in range(r_out + 1):
        xs = [world.nodes[v].x[r] for v in honest
              if len(world.nodes[v].x) > r]
        if len(xs) == len(honest):
            metrics.U.append(max(xs))
            metrics.mu.append(min(xs))
        else:
            metrics.U.append(None)
            metrics.mu.append(None)
    for v in honest:
        node = world.nodes[v]
        metrics.outputs[v] = node.output
        for r, rstate in node.rounds.items():
            if rstate.fa_record is not None:
                metrics.fa_records[(v, r)] = rstate.fa_record
            for fv, payload in rstate.latch_values.items():
                metrics.latches[(v, r, fv)] = payload
    metrics.trace = world.trace
    return metrics


# ---------------------------------------------------------------------------
# Invariant checking


@dataclass
class InvariantReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def assert_round_invariants(metrics: RunMetrics,
                            tol: float = 1e-12) -> InvariantReport:
    """Scan a finished run for violations of the per-round guarantees:
    advancement, range halving, validity, trimmed-vector overlap, and
    cross-node agreement on latched and advanced values."""
    rep = InvariantReport()
    g, f = metrics.g, metrics.f
    honest = metrics.honest
    r_out = metrics.r_out

    if metrics.stalled:
        rep.violations.append("run stalled: event queue drained before "
                              "every nonfaulty node produced an output")
    for v in honest:
        for r in range(r_out):
            if (v, r) not in metrics.fa_records:
                rep.violations.append(
                    f"node {v} round {r}: no filter-and-average execution")

    for r in range(r_out):
        s0, s1 = metrics.spread(r), metrics.spread(r + 1)
        if s0 is not None and s1 is not None and s1 > s0 / 2.0 + tol:
            rep.violations.append(
                f"round {r + 1}: spread {s1} exceeds half of {s0}")
    u0, m0 = metrics.U[0], metrics.mu[0]
    for r in range(1, r_out + 1):
        if metrics.U[r] is not None and metrics.U[r] > u0 + tol:
            rep.violations.append(
                f"round {r}: max {metrics.U[r]} above initial max {u0}")
        if metrics.mu[r] is not None and metrics.mu[r] < m0 - tol:
            rep.violations.append(
                f"round {r}: min {metrics.mu[r]} below initial min {m0}")

    for r in range(r_out):
        for i, v in enumerate(honest):
            rv = metrics.fa_records.get((v, r))
            if rv is None:
                continue
            for u in honest[i + 1:]:
                ru = metrics.fa_records.get((u, r))
                if ru is None:
                    continue
                if not rv.survivors & ru.survivors:
                    rep.violations.append(
                        f"round {r}: trimmed vectors of nodes {v} and {u} "
                        f"share no (value, origin) entry")

    _check_latch_agreement(metrics, rep)
    _check_common_values(metrics, rep)
    return rep


def _candidate_masks(g: DiGraph, f: int) -> list:
    out = [0]
    for size in range(1, f + 1):
        for combo in combinations(range(g.n), size):
            out.append(mask_of(combo))
    return out


def _check_latch_agreement(metrics: RunMetrics, rep: InvariantReport):
    """Two nonfaulty nodes latching the same fault set must agree on every
    source-component value."""
    g, f = metrics.g, metrics.f
    honest = set(metrics.honest)
    by_key: dict = {}
    for (v, r, fv), payload in metrics.latches.items():
        if v in honest:
            by_key.setdefault((r, fv), []).append((v, payload))
    fw_masks = _candidate_masks(g, f)
    for (r, fv), entries in sorted(by_key.items(),
                                   key=lambda kv: (kv[0][0],
                                                   sorted(kv[0][1]))):
        if len(entries) < 2:
            continue
        fvmask = mask_of(fv)
        base_v, base_p = entries[0]
        for v, payload in entries[1:]:
            for fwmask in fw_masks:
                smask = _source_component_mask(g, fvmask | fwmask)
                for q in sorted(set_of(smask)):
                    a, b = base_p.value_for(q), payload.value_for(q)
                    if a is None or b is None or a != b:
                        rep.violations.append(
                            f"round {r}: nodes {base_v} and {v} latched "
                            f"{sorted(fv)} with differing values for "
                            f"node {q}")
                        return


def _check_common_values(metrics: RunMetrics, rep: InvariantReport):
    """Every advancing nonfaulty pair must share, for one of their chosen
    fault sets, a common received value on every source-component node."""
    g, f = metrics.g, metrics.f
    honest = metrics.honest
    fw_masks = _candidate_masks(g, f)

    def informed_pair_ok(rec_a, rec_b, fvmask) -> bool:
        for fwmask in fw_masks:
            if fwmask == fvmask:
                continue
            smask = _source_component_mask(g, fvmask | fwmask)
            for q in set_of(smask):
                va = rec_a.init_values.get(q, frozenset())
                vb = rec_b.init_values.get(q, frozenset())
                if not va & vb:
                    return False
        return True

    for r in range(metrics.r_out):
        for i, v in enumerate(honest):
            rv = metrics.fa_records.get((v, r))
            if rv is None:
                continue
            for u in honest[i + 1:]:
                ru = metrics.fa_records.get((u, r))
                if ru is None:
                    continue
                if not (informed_pair_ok(rv, ru, mask_of(rv.fv))
                        or informed_pair_ok(rv, ru, mask_of(ru.fv))):
                    rep.violations.append(
                        f"round {r}: nodes {v} and {u} advanced without a "
                        f"common fault set giving shared source values")
