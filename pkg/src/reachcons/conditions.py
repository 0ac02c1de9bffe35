"""Reachability and partition conditions with violation witnesses.

The k-reach family quantifies reach-set intersections over suspected fault
sets; the CCS/CCA/BCS conditions quantify a point-to-point degree test over
vertex partitions.  Both sides are decided by brute-force enumeration, and
the audit cross-checks their equivalence on small graphs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional

from . import generate
from .errors import InvalidArgumentError
from .graph import DiGraph, _reach_mask, mask_of, reach_set, set_of

CCS = "ccs"
CCA = "cca"
BCS = "bcs"


def subsets_upto(pool, limit: int):
    """Subsets of the pool with size <= limit, ordered by (size, lex)."""
    pool = sorted(pool)
    for size in range(0, limit + 1):
        for combo in combinations(pool, size):
            yield frozenset(combo)


@dataclass(frozen=True)
class ReachViolation:
    """A quantifier assignment falsifying a k-reach predicate."""

    k: int
    F: frozenset
    F_v: frozenset
    F_u: frozenset
    v: int
    u: int

    def violates(self, g: DiGraph) -> bool:
        rv = reach_set(g, self.v, self.F | self.F_v)
        ru = reach_set(g, self.u, self.F | self.F_u)
        return not rv & ru


@dataclass(frozen=True)
class PartitionViolation:
    """A partition falsifying a CCS/CCA/BCS disjunction at threshold t."""

    which: str
    t: int
    F: frozenset
    L: frozenset
    C: frozenset
    R: frozenset

    def violates(self, g: DiGraph) -> bool:
        return (not _point(g, self.L | self.C, self.R, self.t)
                and not _point(g, self.R | self.C, self.L, self.t))


@dataclass(frozen=True)
class ConditionVerdict:
    holds: bool
    witness: Optional[object] = None

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise InvalidArgumentError("false verdicts need a witness")


def _kreach_bounds(k: int, f: int) -> tuple:
    """(common-set bound, private-set bound) for the k-reach predicate.

    Odd k uses one common suspected set of size at most f plus (k-1)/2
    private sets per node; even k uses k/2 private sets per node.  A node's
    private sets collapse to a single set of size at most (count * f), since
    only the union enters the reach computation.
    """
    if k < 1:
        raise InvalidArgumentError("k must be at least 1")
    if k % 2:
        return f, (k - 1) // 2 * f
    return 0, k // 2 * f


def check_k_reach(g: DiGraph, f: int, k: int) -> ConditionVerdict:
    """Decide the k-reach condition; k in {1,2,3} are the standard forms."""
    if f < 0:
        raise InvalidArgumentError("f must be nonnegative")
    common_bound, private_bound = _kreach_bounds(k, f)
    nodes = list(range(g.n))
    for F in subsets_upto(nodes, common_bound):
        fmask = mask_of(F)
        # Fast path: collect the distinct reach masks over all admissible
        # (node, private set) combinations; the predicate holds for this F
        # iff they pairwise intersect.
        masks = set()
        for v in nodes:
            if fmask >> v & 1:
                continue
            for Fp in subsets_upto(nodes, private_bound):
                avoid = fmask | mask_of(Fp)
                if avoid >> v & 1:
                    continue
                masks.add(_reach_mask(g, v, avoid))
        ok = True
        mlist = sorted(masks)
        for i, m1 in enumerate(mlist):
            for m2 in mlist[i:]:
                if not m1 & m2:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            continue
        # Slow path, only on failure: first witness in enumeration order.
        for F_v in subsets_upto(nodes, private_bound):
            av = fmask | mask_of(F_v)
            for F_u in subsets_upto(nodes, private_bound):
                au = fmask | mask_of(F_u)
                for v in nodes:
                    if av >> v & 1:
                        continue
                    rv = _reach_mask(g, v, av)
                    for u in nodes:
                        if au >> u & 1:
                            continue
                        if not rv & _reach_mask(g, u, au):
                            return ConditionVerdict(
                                False,
                                ReachViolation(k, F, F_v, F_u, v, u))
        raise AssertionError("mask scan found a violation the ordered "
                             "scan did not")
    return ConditionVerdict(True)


def _point(g: DiGraph, A, B, x: int) -> bool:
    amask = A if isinstance(A, int) else mask_of(A)
    bmask = B if isinstance(B, int) else mask_of(B)
    count = 0
    u = 0
    rest = amask
    while rest:
        if rest & 1 and g.out_masks[u] & bmask:
            count += 1
            if count >= x:
                return True
        rest >>= 1
        u += 1
    return count >= x


def check_point(g: DiGraph, A: frozenset, B: frozenset, x: int) -> bool:
    """True iff B has at least x distinct incoming neighbors inside A."""
    A = frozenset(A)
    B = frozenset(B)
    if A & B:
        raise InvalidArgumentError("A and B must be disjoint")
    if not B:
        raise InvalidArgumentError("B must be nonempty")
    return _point(g, A, B, x)


def check_partition_condition(g: DiGraph, f: int,
                              which: str) -> ConditionVerdict:
    """Decide CCS, CCA, or BCS by enumerating all admissible partitions.

    CCS/BCS partition V into F, L, C, R with |F| <= f; CCA partitions V into
    L, C, R.  L and R must be nonempty.  Each partition must satisfy
    point(L|C -> R, t) or point(R|C -> L, t) with t = 1 for CCS and t = f+1
    for CCA/BCS.
    """
    if f < 0:
        raise InvalidArgumentError("f must be nonnegative")
    which = which.lower()
    if which not in (CCS, CCA, BCS):
        raise InvalidArgumentError(f"unknown condition {which!r}")
    t = 1 if which == CCS else f + 1
    nodes = list(range(g.n))
    fault_sets = (subsets_upto(nodes, f) if which in (CCS, BCS)
                  else [frozenset()])
    for F in fault_sets:
        rest = [v for v in nodes if v not in F]
        for labels in product("LCR", repeat=len(rest)):
            lmask = cmask = rmask = 0
            for v, lab in zip(rest, labels):
                if lab == "L":
                    lmask |= 1 << v
                elif lab == "C":
                    cmask |= 1 << v
                else:
                    rmask |= 1 << v
            if not lmask or not rmask:
                continue
            if _point(g, lmask | cmask, rmask, t):
                continue
            if _point(g, rmask | cmask, lmask, t):
                continue
            return ConditionVerdict(
                False,
                PartitionViolation(which, t, F, set_of(lmask),
                                   set_of(cmask), set_of(rmask)))
    return ConditionVerdict(True)


_MATCHING = {1: CCS, 2: CCA, 3: BCS}


@dataclass(frozen=True)
class Mismatch:
    n: int
    edges: frozenset
    k: int
    which: str
    k_reach_holds: bool
    partition_holds: bool


@dataclass
class AuditReport:
    f: int
    n_max: int
    graphs_checked: int = 0
    mismatches: list = field(default_factory=list)
    sampled: bool = False
    seed: Optional[int] = None

    @property
    def ok(self) -> bool:
        return not self.mismatches


EXHAUSTIVE_AUDIT_N = 4


def equivalence_audit(f: int, n_max: int, seed: int = 2026,
                      samples: int = 1000,
                      _partition_check=check_partition_condition
                      ) -> AuditReport:
    """Cross-check k-reach against CCS/CCA/BCS for k = 1, 2, 3.

    Exhaustive over all labeled digraphs up to EXHAUSTIVE_AUDIT_N nodes;
    above that, a seeded random sample is used and flagged in the report.
    """
    if n_max > 6:
        raise InvalidArgumentError("audit budget is n_max <= 6")
    report = AuditReport(f=f, n_max=n_max)

    def check(g: DiGraph):
        report.graphs_checked += 1
        for k, which in sorted(_MATCHING.items()):
            a = check_k_reach(g, f, k).holds
            b = _partition_check(g, f, which).holds
            if a != b:
                report.mismatches.append(
                    Mismatch(g.n, g.edges, k, which, a, b))

    for n in range(1, min(n_max, EXHAUSTIVE_AUDIT_N) + 1):
        for g in generate.all_digraphs(n):
            check(g)
    if n_max > EXHAUSTIVE_AUDIT_N:
        report.sampled = True
        report.seed = seed
        rng = random.Random(seed)
        sizes = list(range(EXHAUSTIVE_AUDIT_N + 1, n_max + 1))
        for _ in range(samples):
            n = rng.choice(sizes)
            p = rng.uniform(0.1, 0.9)
            g = generate.random_digraph(n, p, rng.randrange(2 ** 31))
            check(g)
    return report
