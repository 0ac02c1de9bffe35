"""Graph generators and small-graph enumeration."""

from __future__ import annotations

import random
from itertools import permutations

from .errors import InvalidArgumentError
from .graph import DiGraph


def clique(n: int) -> DiGraph:
    """Complete digraph: every ordered pair is an edge."""
    if n < 1:
        raise InvalidArgumentError("clique size must be positive")
    return DiGraph(n, frozenset((u, v) for u, v in permutations(range(n), 2)))


def random_digraph(n: int, p: float, seed: int) -> DiGraph:
    """Each ordered pair is an edge independently with probability p."""
    if n < 1 or not 0.0 <= p <= 1.0:
        raise InvalidArgumentError("need n >= 1 and 0 <= p <= 1")
    rng = random.Random(seed)
    edges = [(u, v) for u, v in permutations(range(n), 2)
             if rng.random() < p]
    return DiGraph(n, frozenset(edges))


def two_cliques(k: int, bridges: int, seed: int) -> DiGraph:
    """Two k-cliques joined by the given number of bridge edges.

    Nodes 0..k-1 form one clique and k..2k-1 the other, with bridges split
    half per direction (the extra one, if bridges is odd, goes left to
    right).  When each direction fits in a matching the bridge endpoints are
    seeded shuffles arranged so the two directions form vertex-disjoint
    matchings sharing only one reversed pair; that spreads the crossing
    capacity as widely as the edge budget allows.  Larger budgets fall back
    to seeded sampling.  The generator makes no connectivity promise by
    itself; validate the output with the condition checker.
    """
    if k < 1 or bridges < 0:
        raise InvalidArgumentError("need k >= 1 and bridges >= 0")
    if bridges > 2 * k * k:
        raise InvalidArgumentError("more bridges than available node pairs")
    rng = random.Random(seed)
    edges = set()
    for part in (range(k), range(k, 2 * k)):
        for u in part:
            for v in part:
                if u != v:
                    edges.add((u, v))
    left = list(range(k))
    right = list(range(k, 2 * k))
    n_lr = bridges - bridges // 2
    n_rl = bridges // 2
    if n_lr <= k and n_rl <= k:
        rng.shuffle(left)
        rng.shuffle(right)
        for i in range(n_lr):
            edges.add((left[i], right[i]))
        # Start the reverse matching at the last forward pair so the two
        # directions overlap on a single reversed bridge, not on endpoints
        # spread over several bridges.
        base = max(n_lr - 1, 0)
        for j in range(n_rl):
            edges.add((right[(base + j) % k], left[(base + j) % k]))
    else:
        lr = [(u, v) for u in left for v in right]
        rl = [(u, v) for u in right for v in left]
        edges.update(rng.sample(lr, n_lr))
        edges.update(rng.sample(rl, n_rl))
    return DiGraph(2 * k, frozenset(edges))


def all_digraphs(n: int):
    """Yield every labeled simple digraph on n nodes (no self-loops)."""
    pairs = [(u, v) for u, v in permutations(range(n), 2)]
    for code in range(1 << len(pairs)):
        edges = frozenset(p for i, p in enumerate(pairs) if code >> i & 1)
        yield DiGraph(n, edges)
