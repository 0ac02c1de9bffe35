"""Directed-graph representation and combinatorial primitives.

Node sets are exposed as frozensets of small integers; internally most
routines work on bitmasks (bit i set means node i is a member).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from .errors import BudgetError, GraphFormatError, InvalidArgumentError

NodeId = int
NodeSet = frozenset  # of NodeId
SimplePath = tuple  # of NodeId

# Redundant-path enumeration is exponential; refuse graphs above this size.
DEFAULT_ENUM_CAP = 12


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def set_of(mask: int) -> frozenset:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return frozenset(out)


@dataclass(frozen=True)
class DiGraph:
    """Simple directed graph on nodes 0..n-1, no self-loops."""

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 0:
            raise InvalidArgumentError("node count must be nonnegative")
        object.__setattr__(self, "edges", frozenset(self.edges))
        out_masks = [0] * self.n
        in_masks = [0] * self.n
        for e in self.edges:
            u, v = e
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidArgumentError(f"edge {e} out of range")
            if u == v:
                raise InvalidArgumentError(f"self-loop {e} not allowed")
            out_masks[u] |= 1 << v
            in_masks[v] |= 1 << u
        object.__setattr__(self, "out_masks", tuple(out_masks))
        object.__setattr__(self, "in_masks", tuple(in_masks))
        object.__setattr__(self, "full_mask", (1 << self.n) - 1)
        object.__setattr__(self, "_memo", {})

    @property
    def nodes(self) -> range:
        return range(self.n)

    def out_neighbors(self, u: int) -> tuple:
        return tuple(sorted(set_of(self.out_masks[u])))

    def in_neighbors(self, v: int) -> tuple:
        return tuple(sorted(set_of(self.in_masks[v])))

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges


def parse_edge_list(text: str) -> DiGraph:
    """Parse the edge-list format: header "n <count>", then "u v" lines.

    Lines starting with '#' are comments.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GraphFormatError("empty graph file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n":
        raise GraphFormatError(f"bad header line: {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise GraphFormatError(f"bad node count: {head[1]!r}") from None
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphFormatError(f"bad edge line: {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"bad edge line: {ln!r}") from None
        edges.append((u, v))
    try:
        return DiGraph(n, frozenset(edges))
    except InvalidArgumentError as exc:
        raise GraphFormatError(str(exc)) from None


def format_edge_list(g: DiGraph) -> str:
    lines = [f"n {g.n}"]
    for u, v in sorted(g.edges):
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Reach sets


def _reach_mask(g: DiGraph, v: int, avoid_mask: int) -> int:
    """Bitmask of nodes outside avoid_mask with a path to v avoiding it."""
    key = ("reach", v, avoid_mask)
    memo = g._memo
    cached = memo.get(key)
    if cached is not None:
        return cached
    cur = 1 << v
    out_masks = g.out_masks
    changed = True
    while changed:
        changed = False
        for u in range(g.n):
            bit = 1 << u
            if cur & bit or avoid_mask & bit:
                continue
            if out_masks[u] & cur:
                cur |= bit
                changed = True
    memo[key] = cur
    return cur


def reach_set(g: DiGraph, v: int, F: frozenset) -> frozenset:
    """Nodes outside F that reach v in the subgraph induced by V minus F."""
    fmask = mask_of(F)
    if fmask >> v & 1:
        raise InvalidArgumentError(f"node {v} is in the excluded set")
    return set_of(_reach_mask(g, v, fmask))


# ---------------------------------------------------------------------------
# Redundant paths
#
# A redundant path is a walk decomposing into two simple segments that share
# their junction node; either segment may be degenerate, so every simple path
# and the single-node path <v> qualify.  Every redundant walk has a unique
# canonical decomposition where the first segment is the maximal simple
# prefix; enumeration and counting both follow that canonical parse, so each
# node sequence is produced exactly once.


@dataclass(frozen=True)
class RedundantPath:
    """A redundant walk; split is the junction index of the canonical parse.

    The first simple segment is nodes[:split+1] and the second is
    nodes[split:]; split == len(nodes)-1 means the second segment is
    degenerate (the walk itself is simple).
    """

    nodes: tuple
    split: int = field(compare=False)

    def __len__(self):
        return len(self.nodes)


def _walk_state(g: DiGraph, seq: tuple) -> Optional[tuple]:
    """Greedy-parse a node sequence; returns (phase, m1, m2, split) or None.

    phase 1 means the walk is still a simple path; phase 2 means the second
    segment is open with visited-mask m2.  None means the sequence is not a
    redundant path in g.
    """
    if not seq:
        return None
    prev = seq[0]
    if not 0 <= prev < g.n:
        return None
    m1 = 1 << prev
    m2 = 0
    phase = 1
    split = len(seq) - 1
    for i in range(1, len(seq)):
        w = seq[i]
        if not (0 <= w < g.n) or not g.out_masks[prev] >> w & 1:
            return None
        bit = 1 << w
        if phase == 1:
            if m1 & bit:
                phase = 2
                split = i - 1
                m2 = (1 << prev) | bit
            else:
                m1 |= bit
        else:
            if m2 & bit:
                return None
            m2 |= bit
        prev = w
    return phase, m1, m2, split


def is_redundant_path(g: DiGraph, seq: tuple) -> bool:
    return _walk_state(g, seq) is not None


def make_redundant_path(g: DiGraph, seq: tuple) -> RedundantPath:
    state = _walk_state(g, seq)
    if state is None:
        raise InvalidArgumentError(f"{seq} is not a redundant path")
    return RedundantPath(tuple(seq), state[3])


def _redundant_by_terminal(g: DiGraph, excluded_mask: int) -> dict:
    """All redundant paths avoiding excluded_mask, grouped by terminal."""
    key = ("redundant", excluded_mask)
    memo = g._memo
    cached = memo.get(key)
    if cached is not None:
        return cached
    allowed = [v for v in range(g.n) if not excluded_mask >> v & 1]
    by_term: dict = {v: [] for v in allowed}
    out_masks = g.out_masks
    # DFS over canonical parses: (path, phase, m1, m2, split).
    stack = [((s,), 1, 1 << s, 0, 0) for s in reversed(allowed)]
    while stack:
        path, phase, m1, m2, split = stack.pop()
        last = path[-1]
        if phase == 1:
            split = len(path) - 1
        by_term[last].append(RedundantPath(path, split))
        succ = out_masks[last] & ~excluded_mask
        for w in allowed:
            bit = 1 << w
            if not succ & bit:
                continue
            if phase == 1:
                if m1 & bit:
                    stack.append((path + (w,), 2, m1, (1 << last) | bit,
                                  len(path) - 1))
                else:
                    stack.append((path + (w,), 1, m1 | bit, 0, 0))
            elif not m2 & bit:
                stack.append((path + (w,), 2, m1, m2 | bit, split))
    result = {v: frozenset(paths) for v, paths in by_term.items()}
    memo[key] = result
    return result


def enumerate_redundant_paths(g: DiGraph, excluded: frozenset, v: int,
                              max_nodes: int = DEFAULT_ENUM_CAP) -> frozenset:
    """All redundant paths ending at v inside the subgraph avoiding excluded."""
    emask = mask_of(excluded)
    if emask >> v & 1:
        raise InvalidArgumentError(f"terminal {v} is in the excluded set")
    if g.n > max_nodes:
        raise BudgetError(
            f"redundant-path enumeration capped at {max_nodes} nodes "
            f"(graph has {g.n})")
    return _redundant_by_terminal(g, emask)[v]


def count_redundant_paths(g: DiGraph, excluded: frozenset | int) -> dict:
    """Count of redundant paths per terminal, avoiding the excluded set.

    Counts by distinct node sequence; agrees with enumeration but needs no
    per-path storage, so it scales to graphs where enumeration does not.
    """
    emask = excluded if isinstance(excluded, int) else mask_of(excluded)
    key = ("redcount", emask)
    memo = g._memo
    cached = memo.get(key)
    if cached is not None:
        return cached
    allowed = [v for v in range(g.n) if not emask >> v & 1]
    out_masks = g.out_masks
    totals = {v: 0 for v in allowed}
    ph1 = {}
    for s in allowed:
        ph1[(s, 1 << s)] = 1
        totals[s] += 1
    ph2: dict = {}
    while ph1 or ph2:
        nxt1: dict = {}
        nxt2: dict = {}
        for (last, m1), c in ph1.items():
            succ = out_masks[last] & ~emask
            for w in allowed:
                bit = 1 << w
                if not succ & bit:
                    continue
                if m1 & bit:
                    k = (w, (1 << last) | bit)
                    nxt2[k] = nxt2.get(k, 0) + c
                else:
                    k = (w, m1 | bit)
                    nxt1[k] = nxt1.get(k, 0) + c
                totals[w] += c
        for (last, m2), c in ph2.items():
            succ = out_masks[last] & ~emask & ~m2
            for w in allowed:
                if succ >> w & 1:
                    k = (w, m2 | (1 << w))
                    nxt2[k] = nxt2.get(k, 0) + c
                    totals[w] += c
        ph1, ph2 = nxt1, nxt2
    memo[key] = totals
    return totals


# ---------------------------------------------------------------------------
# Simple paths


def count_simple_paths(g: DiGraph, c: int, v: int, within_mask: int) -> int:
    """Number of simple (c,v)-paths whose nodes all lie inside within_mask."""
    if not within_mask >> c & 1 or not within_mask >> v & 1:
        return 0
    memo = g._memo

    def walk(u: int, visited: int) -> int:
        if u == v:
            return 1
        key = ("spcount", v, within_mask, u, visited)
        cached = memo.get(key)
        if cached is not None:
            return cached
        total = 0
        succ = g.out_masks[u] & within_mask & ~visited
        w = 0
        rest = succ
        while rest:
            if rest & 1:
                total += walk(w, visited | (1 << w))
            rest >>= 1
            w += 1
        memo[key] = total
        return total

    return walk(c, 1 << c)


def enumerate_simple_paths(g: DiGraph, c: int, v: int,
                           within_mask: int) -> list:
    """All simple (c,v)-paths inside within_mask, as node tuples."""
    if not within_mask >> c & 1 or not within_mask >> v & 1:
        return []
    out = []
    stack = [((c,), 1 << c)]
    while stack:
        path, visited = stack.pop()
        last = path[-1]
        if last == v:
            out.append(path)
            continue
        succ = g.out_masks[last] & within_mask & ~visited
        w = 0
        rest = succ
        while rest:
            if rest & 1:
                stack.append((path + (w,), visited | (1 << w)))
            rest >>= 1
            w += 1
    return out


# ---------------------------------------------------------------------------
# f-covers


def _path_nodes(p) -> tuple:
    return p.nodes if isinstance(p, RedundantPath) else tuple(p)


def has_f_cover(paths: Iterable, universe: frozenset, f: int):
    """Smallest (by size, then lexicographic) cover of the paths, or None.

    A cover is a subset of universe, size at most f, hitting every path.
    The empty path set is covered by the empty set.
    """
    masks = {mask_of(_path_nodes(p)) for p in paths}
    if not masks:
        return frozenset()
    umask = mask_of(universe)
    if any(m & umask == 0 for m in masks):
        return None
    pool_mask = 0
    for m in masks:
        pool_mask |= m
    pool = sorted(set_of(pool_mask & umask))
    for size in range(0, f + 1):
        for combo in combinations(pool, size):
            cmask = mask_of(combo)
            if all(m & cmask for m in masks):
                return frozenset(combo)
    return None


def covers_all(cover_mask: int, path_masks: Iterable[int]) -> bool:
    return all(m & cover_mask for m in path_masks)


# ---------------------------------------------------------------------------
# Reduced graphs and source components


@dataclass(frozen=True)
class ReducedGraph:
    """Base graph with all outgoing edges of F1 union F2 removed."""

    base: DiGraph
    F1: frozenset
    F2: frozenset

    @property
    def graph(self) -> DiGraph:
        removed = self.F1 | self.F2
        edges = frozenset((u, v) for u, v in self.base.edges
                          if u not in removed)
        return DiGraph(self.base.n, edges)


def reduced_graph(g: DiGraph, F1: frozenset, F2: frozenset,
                  f: int | None = None) -> ReducedGraph:
    if f is not None and (len(F1) > f or len(F2) > f):
        raise InvalidArgumentError(
            f"fault sets exceed the bound f={f}: |F1|={len(F1)}, "
            f"|F2|={len(F2)}")
    return ReducedGraph(g, frozenset(F1), frozenset(F2))


def _reduced_out_masks(g: DiGraph, removed_mask: int) -> list:
    return [0 if removed_mask >> u & 1 else g.out_masks[u]
            for u in range(g.n)]


def _source_component_mask(g: DiGraph, removed_mask: int) -> int:
    key = ("source", removed_mask)
    memo = g._memo
    cached = memo.get(key)
    if cached is not None:
        return cached
    out_masks = _reduced_out_masks(g, removed_mask)
    n = g.n
    # Tarjan strongly connected components, iterative.
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp_of = [-1] * n
    scc_stack: list = []
    comps: list = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(sorted(set_of(out_masks[root]))))]
        index[root] = low[root] = counter
        counter += 1
        scc_stack.append(root)
        on_stack[root] = True
        while work:
            u, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    scc_stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(sorted(set_of(out_masks[w])))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[u] = min(low[u], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[u])
            if low[u] == index[u]:
                members = 0
                while True:
                    w = scc_stack.pop()
                    on_stack[w] = False
                    comp_of[w] = len(comps)
                    members |= 1 << w
                    if w == u:
                        break
                comps.append(members)
    # Condensation reachability: node mask reachable from each component.
    k = len(comps)
    comp_succ = [set() for _ in range(k)]
    for u in range(n):
        rest = out_masks[u]
        w = 0
        while rest:
            if rest & 1 and comp_of[u] != comp_of[w]:
                comp_succ[comp_of[u]].add(comp_of[w])
            rest >>= 1
            w += 1
    reach = [0] * k
    # Tarjan emits components in reverse topological order, so a single
    # forward pass accumulates full reachability.
    for ci in range(k):
        m = comps[ci]
        for cj in comp_succ[ci]:
            m |= reach[cj]
        reach[ci] = m
    full = g.full_mask
    result = 0
    for ci in range(k):
        if reach[ci] == full:
            result |= comps[ci]
    memo[key] = result
    return result


def source_component(g: DiGraph, F1: frozenset, F2: frozenset,
                     f: int | None = None) -> frozenset:
    """Nodes of the reduced graph with directed paths to every node of V.

    Symmetric in (F1, F2) since only the union matters; may be empty.
    """
    if f is not None and (len(F1) > f or len(F2) > f):
        raise InvalidArgumentError(
            f"fault sets exceed the bound f={f}")
    removed = mask_of(F1) | mask_of(F2)
    return set_of(_source_component_mask(g, removed))


# ---------------------------------------------------------------------------
# Node-disjoint paths and the propagate relation


def count_disjoint_paths(g: DiGraph, C: frozenset, A: frozenset,
                         b: int) -> int:
    """Max internally node-disjoint (A,b)-paths inside the subgraph on C.

    Paths may share only the target b, so every node except b has
    capacity 1 in the node-splitting max flow network.
    """
    C = frozenset(C)
    A = frozenset(A)
    if not A <= C or b not in C or b in A:
        raise InvalidArgumentError(
            "require A within C, target in C, target not in A")
    cmask = mask_of(C)
    n = g.n
    INF = n + 1
    # Flow network nodes: 2*u = u_in, 2*u+1 = u_out, source = 2*n.
    SRC = 2 * n
    SINK = 2 * b
    cap: dict = {}

    def add(u, v, c):
        cap[(u, v)] = cap.get((u, v), 0) + c
        cap.setdefault((v, u), 0)

    adj: dict = {}

    def link(u, v, c):
        add(u, v, c)
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    for u in C:
        link(2 * u, 2 * u + 1, INF if u == b else 1)
        rest = g.out_masks[u] & cmask
        w = 0
        while rest:
            if rest & 1:
                link(2 * u + 1, 2 * w, INF)
            rest >>= 1
            w += 1
    for a in A:
        link(SRC, 2 * a, INF)

    flow = 0
    while True:
        # BFS for an augmenting path in the residual network.
        parent = {SRC: None}
        queue = [SRC]
        qi = 0
        while qi < len(queue) and SINK not in parent:
            u = queue[qi]
            qi += 1
            for v in sorted(adj.get(u, ())):
                if v not in parent and cap.get((u, v), 0) > 0:
                    parent[v] = u
                    queue.append(v)
        if SINK not in parent:
            return flow
        # Unit capacities on internal nodes make each augmentation worth 1.
        bottleneck = INF
        v = SINK
        while parent[v] is not None:
            u = parent[v]
            bottleneck = min(bottleneck, cap[(u, v)])
            v = u
        v = SINK
        while parent[v] is not None:
            u = parent[v]
            cap[(u, v)] -= bottleneck
            cap[(v, u)] += bottleneck
            v = u
        flow += bottleneck
        if flow > n:
            raise AssertionError("flow exceeded node count")


def propagates(g: DiGraph, A: frozenset, B: frozenset, C: frozenset,
               f: int) -> bool:
    """True iff B is empty or every b in B has f+1 disjoint (A,b)-paths in C."""
    A = frozenset(A)
    B = frozenset(B)
    C = frozenset(C)
    if A & B or not B <= C or not A <= C:
        raise InvalidArgumentError(
            "require A,B disjoint and both inside C")
    return all(count_disjoint_paths(g, C, A, b) >= f + 1 for b in sorted(B))
