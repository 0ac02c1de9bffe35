"""Per-node consensus state machine.

Each node runs one logical thread per candidate fault set.  A thread latches
once its excluded message history is consistent and full, then floods a
COMPLETE announcement; a thread whose announcements have been FIFO-received
from its whole in-reach set and whose qualifying announcements all pass the
completeness check may advance the round through filter-and-average.

The engine works on lightweight wire tuples and bitmask indexes so floods on
six- and seven-node graphs stay tractable; the module-level completeness and
filter_and_average functions are straightforward reference implementations
over MessageSet used for unit-level cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ProtocolIntegrityError
from .graph import (DiGraph, _walk_state, count_redundant_paths,
                    count_simple_paths, has_f_cover, mask_of, set_of,
                    source_component, _source_component_mask, _reach_mask)
from .messaging import MessageSet

# Wire tags.  VALUE: (VAL_T, round, value, path, phase, m1, m2) where
# (phase, m1, m2) is the walk state of the path: phase 1 while the walk is
# still simple with visited-mask m1, phase 2 once the second segment is open
# with visited-mask m2.  Receivers verify that m1|m2 matches the path's node
# set and extend the state in constant time; a forged state can only make a
# faulty sender's own paths misbehave, and those paths carry the sender's id.
# COMPLETE: (COMP_T, round, init, counter, payload, path).
VAL_T = 0
COMP_T = 1


@dataclass(frozen=True)
class PayloadView:
    """The observable content of a COMPLETE announcement's message set.

    Downstream checks read an announcement only through per-initiator values
    and a consistency bit, so the carried copy is stored at that granularity.
    values is a sorted tuple of (initiator, value) pairs.
    """

    round: int
    claimed_mask: int
    values: tuple
    consistent: bool = True

    def __post_init__(self):
        object.__setattr__(self, "_map", dict(self.values))

    def value_for(self, q: int):
        return self._map.get(q)


@dataclass
class FARecord:
    """Per-round filter-and-average trace record for one node."""

    fv: frozenset
    total: int
    lo_trim: int
    hi_trim: int
    lo_value: float
    hi_value: float
    survivors: frozenset  # of (value, initiator)
    init_values: dict  # initiator -> frozenset of values seen in M


class Thread:
    """One candidate-fault-set logical thread for a single round."""

    __slots__ = ("idx", "fvset", "fvmask", "reach_mask", "universe_total",
                 "latched", "consistent", "vals", "latch_at", "remaining",
                 "fra_counts", "fra_full", "fra_ok_mask", "qual")

    def __init__(self, idx, fvset, fvmask, reach_mask, universe_total):
        self.idx = idx
        self.fvset = fvset
        self.fvmask = fvmask
        self.reach_mask = reach_mask
        self.universe_total = universe_total
        self.latched = False
        self.consistent = True
        self.vals = {}  # initiator -> value, restricted to F_v-avoiding paths
        self.latch_at = universe_total  # earliest total path count for latch
        self.remaining = None  # compatible paths still missing (watch mode)
        self.fra_counts = {}  # (init, counter, payload) -> paths received
        self.fra_full = {}  # init -> list of (counter, payload) fully covered
        self.fra_ok_mask = 0
        self.qual = set()  # (init, counter, payload) delivered inside reach


class RoundState:
    """A node's message history and threads for one round, kept alive so
    past-round traffic is still recorded and forwarded after advancing."""

    __slots__ = ("r", "path_first", "extras", "by_init_value",
                 "iv_threadmark", "threads", "nextround", "comp_paths",
                 "watched", "qual_threads", "dirty", "fa_record",
                 "latch_values", "comp_cache", "clause_true", "class_counts",
                 "total_paths", "next_latch_check", "near_full")

    def __init__(self, r, threads):
        self.r = r
        self.path_first = {}  # path -> (first value received on it, node mask)
        self.class_counts = {}  # node mask -> distinct paths with that mask
        self.total_paths = 0
        self.next_latch_check = min(
            (t.latch_at for t in threads), default=0)
        self.near_full = []  # threads watching for their last few paths
        self.extras = set()  # duplicate-path (value, path) pairs
        self.by_init_value = {}  # (init, value) -> set of path masks
        self.iv_threadmark = {}  # (init, value) -> bitmask of marked threads
        self.threads = threads
        self.nextround = False
        self.comp_paths = {}  # (init, counter, payload) -> set of paths
        self.watched = set()  # (init, value) pairs blocking some verify
        self.qual_threads = set()
        self.dirty = set()
        self.fa_record: Optional[FARecord] = None
        self.latch_values = {}  # fvset -> PayloadView
        self.comp_cache = {}  # payload -> True / False (permanent only)
        self.clause_true = set()  # (source mask, q, value)


def candidate_sets(n: int, me: int, f: int) -> list:
    """Candidate fault sets for a node, in lexicographic order."""
    from itertools import combinations
    pool = [v for v in range(n) if v != me]
    sets = [frozenset()]
    for size in range(1, f + 1):
        sets.extend(frozenset(c) for c in combinations(pool, size))
    return sorted(sets, key=lambda s: tuple(sorted(s)))


class Node:
    """Single-reactor node runtime driven by a delivery loop."""

    def __init__(self, world, me: int, x0: float):
        self.world = world
        self.g: DiGraph = world.g
        self.me = me
        self.x = [x0]
        self.round = -1
        self.done = False
        self.output = None
        self.dropped = 0
        self.fifo_sent = 0
        self.frontier = {}  # initiator -> max contiguous counter received
        self.got = {}  # initiator -> counters received beyond the frontier
        self.future = {}  # round -> buffered (sender, wire) arrivals
        self.rounds = {}
        g = self.g
        self.out_list = g.out_neighbors(me)
        self._templates = []
        for idx, fv in enumerate(candidate_sets(g.n, me, world.f)):
            fvmask = mask_of(fv)
            self._templates.append(
                (idx, fv, fvmask, _reach_mask(g, me, fvmask),
                 count_redundant_paths(g, fvmask)[me]))
        self._avoid_cache = {}  # path mask -> (thread idx list, thread bitmask)
        full = g.full_mask & ~(1 << me)
        self._fa_cands = world.cover_cands(full)

    # -- helpers -----------------------------------------------------------

    def _avoid_threads(self, qmask: int):
        cached = self._avoid_cache.get(qmask)
        if cached is None:
            idxs = tuple(i for i, _, m, _, _ in self._templates
                         if not m & qmask)
            bits = 0
            for i in idxs:
                bits |= 1 << i
            cached = self._avoid_cache[qmask] = (idxs, bits)
        return cached

    def _note_counter(self, init: int, k: int) -> bool:
        """Record raw receipt of a FIFO counter; True if the frontier moved."""
        fr = self.frontier.get(init, 0)
        if k <= fr:
            return False
        pend = self.got.setdefault(init, set())
        if k in pend:
            return False
        pend.add(k)
        moved = False
        while fr + 1 in pend:
            pend.discard(fr + 1)
            fr += 1
            moved = True
        if moved:
            self.frontier[init] = fr
        return moved

    def _wake_all(self):
        for rstate in self.rounds.values():
            if not rstate.nextround:
                rstate.dirty.update(range(len(rstate.threads)))
                self._sweep(rstate)

    # -- round lifecycle ---------------------------------------------------

    def start_round(self, r: int):
        assert r == self.round + 1
        self.round = r
        threads = [Thread(*tpl) for tpl in self._templates]
        rstate = RoundState(r, threads)
        self.rounds[r] = rstate
        x = self.x[r]
        me = self.me
        # Self-delivery of the single-node path, then the value flood.
        self._receive_value(rstate, x, (me,), 1 << me, 1, 1 << me, 0,
                            forward=False)
        wire = (VAL_T, r, x, (me,), 1, 1 << me, 0)
        self.world.send_flood(me, self.out_list, wire)
        self._sweep(rstate)
        for sender, msg in self.future.pop(r, ()):
            self.on_deliver(sender, msg)

    # -- delivery dispatch -------------------------------------------------

    def on_deliver(self, sender: int, msg: tuple):
        if msg[0] == VAL_T:
            _, rnd, x, p, phase, m1, m2 = msg
            if p[-1] != sender:
                self.dropped += 1
                return
            if rnd > self.round:
                self.future.setdefault(rnd, []).append((sender, msg))
                return
            rstate = self.rounds.get(rnd)
            if rstate is None:
                self.dropped += 1
                return
            # Extend the walk state by one hop.  The last-hop edge and the
            # sender's presence in the claimed node mask are checked here;
            # everything upstream was checked by the honest nodes that
            # appended themselves.  A faulty sender understating the mask of
            # its own fabricated prefix is indistinguishable from it
            # fabricating a different prefix outright, which the model
            # permits anyway; either way its own id stays in the mask.
            me = self.me
            qm = m1 | m2
            if (qm >> self.g.n or not qm >> sender & 1
                    or not self.g.out_masks[sender] >> me & 1):
                self.dropped += 1
                return
            bit = 1 << me
            if phase == 1:
                if m1 & bit:
                    phase = 2
                    m2 = (1 << sender) | bit
                else:
                    m1 |= bit
            else:
                if m2 & bit:
                    self.dropped += 1
                    return
                m2 |= bit
            self._receive_value(rstate, x, p + (me,), qm | bit, phase,
                                m1, m2, forward=True)
            if rstate.dirty and not rstate.nextround:
                self._sweep(rstate)
        else:
            _, rnd, init, k, payload, p = msg
            if p[-1] != sender or p[0] != init:
                self.dropped += 1
                return
            if self._note_counter(init, k):
                self._wake_all()
            if self.me in p:
                return
            if rnd > self.round:
                self.future.setdefault(rnd, []).append((sender, msg))
                return
            rstate = self.rounds.get(rnd)
            if rstate is None:
                self.dropped += 1
                return
            q = p + (self.me,)
            if self._receive_complete(rstate, q, init, k, payload):
                qset = set(q)
                wire = (COMP_T, rnd, init, k, payload, q)
                self.world.send_flood(
                    self.me, [w for w in self.out_list if w not in qset],
                    wire)
            if rstate.dirty and not rstate.nextround:
                self._sweep(rstate)

    # -- value recording ---------------------------------------------------

    def _receive_value(self, rstate, x, q, qmask, phase, m1, m2, forward):
        pf = rstate.path_first
        prior = pf.get(q)
        if prior is not None:
            if prior[0] == x or (x, q) in rstate.extras:
                return
            rstate.extras.add((x, q))
            self._mark_value(rstate, q[0], x, qmask)
            return
        pf[q] = (x, qmask)
        if forward:
            wire = (VAL_T, rstate.r, x, q, phase, m1, m2)
            if phase == 1:
                self.world.send_flood(self.me, self.out_list, wire)
            else:
                self.world.send_flood(
                    self.me,
                    [w for w in self.out_list if not m2 >> w & 1], wire)
        key = (q[0], x)
        bucket = rstate.by_init_value.get(key)
        if bucket is None or qmask not in bucket:
            self._mark_value(rstate, q[0], x, qmask)
        cc = rstate.class_counts
        cc[qmask] = cc.get(qmask, 0) + 1
        rstate.total_paths += 1
        for t in rstate.near_full:
            if not qmask & t.fvmask and not t.latched:
                t.remaining -= 1
                if t.remaining <= 0 and t.consistent:
                    self._latch(rstate, t)
        if rstate.total_paths >= rstate.next_latch_check:
            self._latch_scan(rstate)

    _WATCH_LIMIT = 32

    def _latch_scan(self, rstate):
        """Latch every thread whose distinct-path count has reached its
        universe.  A thread still missing d paths cannot become full before
        d more arrive, so it is rescheduled d deliveries ahead; once d is
        small the thread instead watches every arrival, which keeps the scan
        from rerunning per delivery while a straggler path is in flight."""
        cc = rstate.class_counts
        tp = rstate.total_paths
        nxt = None
        for t in rstate.threads:
            if t.latched or not t.consistent or t.remaining is not None:
                continue
            at = t.latch_at
            if at > tp:
                if nxt is None or at < nxt:
                    nxt = at
                continue
            fv = t.fvmask
            full = 0
            for qm, c in cc.items():
                if not qm & fv:
                    full += c
            d = t.universe_total - full
            if d <= 0:
                self._latch(rstate, t)
            elif d <= self._WATCH_LIMIT:
                t.remaining = d
                rstate.near_full.append(t)
            else:
                t.latch_at = at = tp + d
                if nxt is None or at < nxt:
                    nxt = at
        rstate.next_latch_check = nxt if nxt is not None else (1 << 62)

    def _mark_value(self, rstate, init, x, qmask):
        key = (init, x)
        bucket = rstate.by_init_value.get(key)
        if bucket is None:
            bucket = rstate.by_init_value[key] = set()
        if qmask in bucket:
            return
        bucket.add(qmask)
        if key in rstate.watched:
            rstate.dirty.update(rstate.qual_threads)
        _, tbits = self._avoid_threads(qmask)
        marked = rstate.iv_threadmark.get(key, 0)
        new = tbits & ~marked
        if not new:
            return
        rstate.iv_threadmark[key] = marked | new
        threads = rstate.threads
        ti = 0
        while new:
            if new & 1:
                t = threads[ti]
                prior = t.vals.get(init)
                if prior is None:
                    t.vals[init] = x
                elif prior != x:
                    t.consistent = False
            new >>= 1
            ti += 1

    # -- announcements -----------------------------------------------------

    def _latch(self, rstate, t: Thread):
        """First-time maximal consistency: flood the COMPLETE announcement."""
        t.latched = True
        payload = PayloadView(rstate.r, t.fvmask,
                              tuple(sorted(t.vals.items())))
        rstate.latch_values[t.fvset] = payload
        self.fifo_sent += 1
        k = self.fifo_sent
        me = self.me
        if self._note_counter(me, k):
            self._wake_all()
        self._receive_complete(rstate, (me,), me, k, payload)
        wire = (COMP_T, rstate.r, me, k, payload, (me,))
        self.world.send_flood(me, self.out_list, wire)

    def _receive_complete(self, rstate, q, init, k, payload) -> bool:
        key = (init, k, payload)
        seen = rstate.comp_paths.setdefault(key, set())
        if q in seen:
            return False
        seen.add(q)
        qmask = mask_of(q)
        g = self.g
        me = self.me
        for t in rstate.threads:
            if qmask & ~t.reach_mask:
                continue
            if key not in t.qual:
                t.qual.add(key)
                rstate.qual_threads.add(t.idx)
                rstate.dirty.add(t.idx)
            if payload.claimed_mask == t.fvmask:
                c = t.fra_counts.get(key, 0) + 1
                t.fra_counts[key] = c
                if c == count_simple_paths(g, init, me, t.reach_mask):
                    t.fra_full.setdefault(init, []).append((k, payload))
                    rstate.dirty.add(t.idx)
        return True

    # -- verification and advancement ---------------------------------------

    def _sweep(self, rstate):
        if rstate.nextround or not rstate.dirty:
            return
        order = sorted(rstate.dirty)
        rstate.dirty.clear()
        for ti in order:
            t = rstate.threads[ti]
            if self._verify(rstate, t):
                self._advance(rstate, t)
                return

    def _verify(self, rstate, t: Thread) -> bool:
        frontier = self.frontier
        remaining = t.reach_mask & ~t.fra_ok_mask
        c = 0
        while remaining:
            if remaining & 1:
                for k, _payload in t.fra_full.get(c, ()):
                    if frontier.get(c, 0) >= k - 1:
                        t.fra_ok_mask |= 1 << c
                        break
                else:
                    return False
            remaining >>= 1
            c += 1
        for init, k, payload in t.qual:
            if frontier.get(init, 0) < k - 1:
                continue  # not yet FIFO-received
            if not payload.consistent:
                continue
            if not self._completeness(rstate, payload):
                return False
        return True

    def _completeness(self, rstate, payload: PayloadView) -> bool:
        cached = rstate.comp_cache.get(payload)
        if cached is not None:
            return cached
        g = self.g
        me_bit = 1 << self.me
        full = g.full_mask
        fumask = payload.claimed_mask
        clause_true = rstate.clause_true
        by_iv = rstate.by_init_value
        for fwmask in self.world.all_candidate_masks:
            if fwmask == fumask:
                continue
            smask = _source_component_mask(g, fumask | fwmask)
            rest = smask
            q = 0
            while rest:
                if rest & 1:
                    val = payload.value_for(q)
                    if val is None:
                        # A genuine announcement always carries every
                        # source-component value; permanent failure.
                        rstate.comp_cache[payload] = False
                        return False
                    ck = (smask, q, val)
                    if ck not in clause_true:
                        masks = by_iv.get((q, val))
                        if not masks:
                            rstate.watched.add((q, val))
                            return False
                        universe = full & ~smask & ~me_bit
                        covered = False
                        for cm in self.world.cover_cands(universe):
                            if all(m & cm for m in masks):
                                covered = True
                                break
                        if covered:
                            rstate.watched.add((q, val))
                            return False
                        clause_true.add(ck)
                rest >>= 1
                q += 1
        rstate.comp_cache[payload] = True
        return True

    def _advance(self, rstate, t: Thread):
        xn, record = self._filter_and_average(rstate, t)
        rstate.nextround = True
        rstate.fa_record = record
        assert len(self.x) == rstate.r + 1
        self.x.append(xn)
        if rstate.r + 1 >= self.world.r_out:
            self.done = True
            self.output = xn
            self.world.note_done()
        else:
            self.start_round(rstate.r + 1)

    # -- filter and average --------------------------------------------------

    def _filter_and_average(self, rstate, t: Thread):
        pf = rstate.path_first
        # Bucket (path, mask) pairs by value; within a bucket paths are
        # unique, so only the two boundary buckets ever need path order.
        groups: dict = {}
        for p, (v, m) in pf.items():
            gr = groups.get(v)
            if gr is None:
                groups[v] = [(p, m)]
            else:
                gr.append((p, m))
        for v, p in rstate.extras:
            groups.setdefault(v, []).append((p, mask_of(p)))
        if not groups:
            raise ProtocolIntegrityError("empty message history at advance")
        vals = sorted(groups)
        group_masks = [frozenset(m for _, m in groups[v]) for v in vals]
        cands = self._fa_cands
        glo, alive_lo = self._trim_scan(group_masks, cands, range(len(vals)))
        ghi, alive_hi = self._trim_scan(group_masks, cands,
                                        range(len(vals) - 1, -1, -1))
        if glo is None or ghi is None or glo > ghi:
            raise ProtocolIntegrityError(
                "filter-and-average trimmed the whole vector")
        lo_val, hi_val = vals[glo], vals[ghi]
        lo_items = sorted(groups[lo_val])
        hi_items = lo_items if glo == ghi else sorted(groups[hi_val])
        p_rel = self._prefix_cut(lo_items, alive_lo)
        s_rel = self._suffix_cut(hi_items, alive_hi)
        if glo == ghi and p_rel + s_rel >= len(lo_items):
            raise ProtocolIntegrityError(
                "filter-and-average trims overlap")
        survivors = set()
        if glo == ghi:
            for p, _ in lo_items[p_rel:len(lo_items) - s_rel]:
                survivors.add((lo_val, p[0]))
        else:
            for p, _ in lo_items[p_rel:]:
                survivors.add((lo_val, p[0]))
            for p, _ in hi_items[:len(hi_items) - s_rel]:
                survivors.add((hi_val, p[0]))
            for gi in range(glo + 1, ghi):
                v = vals[gi]
                for p, _ in groups[v]:
                    survivors.add((v, p[0]))
        init_values = {}
        for (init, val) in rstate.by_init_value:
            init_values.setdefault(init, set()).add(val)
        total = sum(len(gr) for gr in groups.values())
        lo_trim = sum(len(groups[vals[gi]]) for gi in range(glo)) + p_rel
        hi_trim = sum(len(groups[vals[gi]])
                      for gi in range(ghi + 1, len(vals))) + s_rel
        record = FARecord(
            fv=t.fvset, total=total,
            lo_trim=lo_trim, hi_trim=hi_trim,
            lo_value=lo_val, hi_value=hi_val,
            survivors=frozenset(survivors),
            init_values={q: frozenset(vs) for q, vs in init_values.items()})
        return (lo_val + hi_val) / 2.0, record

    @staticmethod
    def _trim_scan(group_masks, cands, order):
        """First group (in scan order) not fully coverable by a surviving
        cover candidate, plus the candidates alive just before it."""
        alive = list(cands)
        for gi in order:
            ms = group_masks[gi]
            nxt = [c for c in alive if all(m & c for m in ms)]
            if not nxt:
                return gi, alive
            alive = nxt
        return None, alive

    @staticmethod
    def _prefix_cut(items, alive):
        """Messages of the path-sorted boundary group eaten by the prefix
        trim: the longest coverable prefix over the surviving candidates."""
        first = {}
        for i, (_, m) in enumerate(items):
            first.setdefault(m, i)
        best = 0
        for c in alive:
            miss = min(idx for m, idx in first.items() if not m & c)
            if miss > best:
                best = miss
        return best

    @staticmethod
    def _suffix_cut(items, alive):
        last = {}
        for i, (_, m) in enumerate(items):
            last[m] = i
        size = len(items)
        best = 0
        for c in alive:
            miss = max(idx for m, idx in last.items() if not m & c)
            cut = size - 1 - miss
            if cut > best:
                best = cut
        return best


# ---------------------------------------------------------------------------
# Reference implementations over MessageSet, for unit-level cross-checks.


def completeness(M_v: MessageSet, M_c: MessageSet, F_u: frozenset,
                 g: DiGraph, f: int, me: int) -> bool:
    """True iff every source-component value in M_c is confirmed by paths in
    M_v that no small cover outside the source component can explain away."""
    from .conditions import subsets_upto
    for F_w in subsets_upto(range(g.n), f):
        if F_w == F_u:
            continue
        S = source_component(g, F_u, F_w)
        universe = frozenset(range(g.n)) - S - {me}
        for q in sorted(S):
            val = M_c.value_of(q)
            if val is None:
                return False
            paths = [m.path for m in M_v
                     if m.kind == "value" and m.init == q and m.value == val]
            if has_f_cover(paths, universe, f) is not None:
                return False
    return True


def filter_and_average(M: MessageSet, f: int, me: int, g: DiGraph) -> float:
    """Sort by (value, path), trim the longest coverable prefix and suffix,
    return the midpoint of the remaining extremes."""
    msgs = sorted(((m.value, m.path) for m in M if m.kind == "value"))
    if not msgs:
        raise ProtocolIntegrityError("empty message set")
    universe = frozenset(range(g.n)) - {me}
    lo = 0
    for k in range(len(msgs), -1, -1):
        if has_f_cover([p for _, p in msgs[:k]], universe, f) is not None:
            lo = k
            break
    hi = 0
    for k in range(len(msgs), -1, -1):
        if has_f_cover([p for _, p in msgs[len(msgs) - k:]], universe,
                       f) is not None:
            hi = k
            break
    kept = msgs[lo:len(msgs) - hi]
    if not kept:
        raise ProtocolIntegrityError("trims removed every message")
    return (kept[0][0] + kept[-1][0]) / 2.0
