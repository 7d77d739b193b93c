"""Equality saturation over backbone shapes.

The single rewrite is associativity of the group operator,

    (o (o x y) z)  <=>  (o x (o y z)),

which preserves the bit range of every term, so each e-class corresponds to
one contiguous bit range and the saturated e-graph of an n-bit backbone
compactly encodes all Catalan(n-1) tree shapes.  Extraction runs a
bottom-up dynamic program under the tree cost model; a seeded perturbed
variant draws diverse low-cost shapes from the same e-graph.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from random import Random
from typing import Iterable, Union

from .backbone import Backbone, complete, find_candidates, init_serial, regroup
from .graph import Node
from .lang import BackboneExpr, Group, Leaf, expr_to_backbone, expr_width
from .timing import ArrivalProfile, DelayModel

__all__ = [
    "ENode",
    "EGraph",
    "SaturationLimits",
    "RegroupTrace",
    "TraceError",
    "saturate",
    "count_trees",
    "extract_optimal",
    "extract_perturbed",
    "derive_trace",
    "filter_low_deficiency",
    "catalan",
    "design_space_log10",
]


@dataclass(frozen=True)
class ENode:
    """Either a leaf (``bit >= 0``) or a group of two e-class ids."""

    bit: int = -1
    low: int = -1
    high: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.bit >= 0

    @staticmethod
    def leaf(bit: int) -> ENode:
        return ENode(bit=bit)

    @staticmethod
    def group(low: int, high: int) -> ENode:
        return ENode(low=low, high=high)


@dataclass(frozen=True)
class SaturationLimits:
    max_iterations: int = 64
    max_enodes: int = 500_000


class EGraph:
    """Union-find backed e-graph specialized to the backbone language."""

    def __init__(self, width: int) -> None:
        self.width = width
        self._uf: list[int] = []
        self.classes: dict[int, set[ENode]] = {}
        self.hashcons: dict[ENode, int] = {}
        self.ranges: dict[int, tuple[int, int]] = {}
        self.root: int = -1
        self.saturated = False

    # -- union-find --------------------------------------------------------

    def find(self, cid: int) -> int:
        while self._uf[cid] != cid:
            self._uf[cid] = self._uf[self._uf[cid]]
            cid = self._uf[cid]
        return cid

    def _canon(self, enode: ENode) -> ENode:
        if enode.is_leaf:
            return enode
        return ENode.group(self.find(enode.low), self.find(enode.high))

    def add(self, enode: ENode) -> int:
        enode = self._canon(enode)
        existing = self.hashcons.get(enode)
        if existing is not None:
            return self.find(existing)
        cid = len(self._uf)
        self._uf.append(cid)
        self.classes[cid] = {enode}
        self.hashcons[enode] = cid
        if enode.is_leaf:
            self.ranges[cid] = (enode.bit, enode.bit)
        else:
            lo = self.ranges[self.find(enode.low)][0]
            hi = self.ranges[self.find(enode.high)][1]
            self.ranges[cid] = (lo, hi)
        return cid

    def merge(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.ranges[ra] != self.ranges[rb]:
            raise AssertionError(
                "attempted to merge classes with different bit ranges"
            )
        if len(self.classes[ra]) < len(self.classes[rb]):
            ra, rb = rb, ra
        self._uf[rb] = ra
        self.classes[ra] |= self.classes.pop(rb)
        return ra

    def rebuild(self) -> None:
        """Re-canonicalize every e-node and fold congruent duplicates."""
        changed = True
        while changed:
            changed = False
            for cid in list(self.classes):
                if self.find(cid) != cid:
                    continue
                for enode in list(self.classes[cid]):
                    canon = self._canon(enode)
                    if canon != enode:
                        self.classes[cid].discard(enode)
                        self.classes[cid].add(canon)
                    owner = self.hashcons.get(canon)
                    if owner is None:
                        self.hashcons[canon] = cid
                    elif self.find(owner) != cid:
                        self.merge(owner, cid)
                        changed = True
                        break
        # drop hashcons entries left stale by merges
        self.hashcons = {
            enode: cid for cid, members in self.classes.items() for enode in members
        }

    # -- views ---------------------------------------------------------------

    @property
    def n_enodes(self) -> int:
        return sum(len(v) for v in self.classes.values())

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_ids(self) -> list[int]:
        """Canonical class ids ordered by (span, lsb)."""
        ids = [cid for cid in self.classes if self.find(cid) == cid]
        ids.sort(key=lambda c: (self.ranges[c][1] - self.ranges[c][0], self.ranges[c][0]))
        return ids

    def enodes(self, cid: int) -> list[ENode]:
        def key(e: ENode) -> tuple[int, int]:
            if e.is_leaf:
                return (-1, -1)
            return (self.ranges[self.find(e.high)][0], 0)

        return sorted(self.classes[self.find(cid)], key=key)


def _insert_expr(eg: EGraph, expr: BackboneExpr) -> int:
    if isinstance(expr, Leaf):
        return eg.add(ENode.leaf(expr.bit))
    low = _insert_expr(eg, expr.low)
    high = _insert_expr(eg, expr.high)
    return eg.add(ENode.group(low, high))


def saturate(
    expr: BackboneExpr, limits: SaturationLimits = SaturationLimits()
) -> EGraph:
    """Close the e-graph of ``expr`` under associativity.

    Stops early (flagging the result unsaturated) when the iteration or
    e-node budget is exhausted.
    """
    eg = EGraph(expr_width(expr))
    eg.root = _insert_expr(eg, expr)
    for _ in range(limits.max_iterations):
        before = (eg.n_enodes, eg.n_classes)
        for cid in eg.class_ids():
            for enode in eg.enodes(cid):
                if enode.is_leaf:
                    continue
                low, high = eg.find(enode.low), eg.find(enode.high)
                # (o (o x y) z) => (o x (o y z))
                for inner in eg.enodes(low):
                    if inner.is_leaf:
                        continue
                    yz = eg.add(ENode.group(inner.high, high))
                    eg.merge(cid, eg.add(ENode.group(inner.low, yz)))
                # (o x (o y z)) => (o (o x y) z)
                for inner in eg.enodes(high):
                    if inner.is_leaf:
                        continue
                    xy = eg.add(ENode.group(low, inner.low))
                    eg.merge(cid, eg.add(ENode.group(xy, inner.high)))
                # len(hashcons) tracks live e-nodes between rebuilds
                if len(eg.hashcons) > limits.max_enodes:
                    eg.rebuild()
                    eg.saturated = False
                    return eg
        eg.rebuild()
        if (eg.n_enodes, eg.n_classes) == before:
            eg.saturated = True
            break
    eg.root = eg.find(eg.root)
    return eg


def count_trees(eg: EGraph, cid: int | None = None) -> int:
    """Number of distinct trees extractable from a class (default: root)."""
    memo: dict[int, int] = {}

    def count(c: int) -> int:
        c = eg.find(c)
        if c in memo:
            return memo[c]
        total = 0
        for enode in eg.enodes(c):
            if enode.is_leaf:
                total += 1
            else:
                total += count(enode.low) * count(enode.high)
        memo[c] = total
        return total

    return count(eg.root if cid is None else cid)


def _extract(
    eg: EGraph,
    profile: ArrivalProfile,
    model: DelayModel,
    noise: dict[tuple[int, ENode], float] | None,
) -> BackboneExpr:
    if not eg.saturated:
        warnings.warn("extracting from an unsaturated e-graph", RuntimeWarning)
    best_cost: dict[int, float] = {}
    best_node: dict[int, ENode] = {}
    for cid in eg.class_ids():
        chosen: tuple[float, float, int] | None = None
        for enode in eg.enodes(cid):
            if enode.is_leaf:
                cost = profile[enode.bit]
                key = (cost, math.inf, -1)
            else:
                low, high = eg.find(enode.low), eg.find(enode.high)
                cost = max(best_cost[low], best_cost[high]) + model.step
                key = (cost, best_cost[high], eg.ranges[high][0])
            if noise is not None:
                cost += noise[(cid, enode)]
                key = (cost, key[1], key[2])
            if chosen is None or key < chosen:
                chosen = key
                best_cost[cid] = cost
                best_node[cid] = enode

    def build(cid: int) -> BackboneExpr:
        enode = best_node[eg.find(cid)]
        if enode.is_leaf:
            return Leaf(enode.bit)
        return Group(low=build(enode.low), high=build(enode.high))

    return build(eg.root)


def extract_optimal(
    eg: EGraph, profile: ArrivalProfile, model: DelayModel
) -> BackboneExpr:
    """Minimum-cost tree under the backbone cost model.

    Ties prefer the candidate whose higher-significance operand is cheaper,
    then the smaller split point.
    """
    return _extract(eg, profile, model, noise=None)


def extract_perturbed(
    eg: EGraph,
    profile: ArrivalProfile,
    model: DelayModel,
    seed: int,
    eps_scale: float = 1.0,
) -> BackboneExpr:
    """Extraction with seeded per-e-node noise in ``[0, eps_scale * step]``.

    ``eps_scale=0`` reproduces :func:`extract_optimal` exactly.
    """
    if eps_scale < 0:
        raise ValueError("eps_scale must be >= 0")
    rng = Random(seed)
    noise: dict[tuple[int, ENode], float] = {}
    for cid in eg.class_ids():
        for enode in eg.enodes(cid):
            noise[(cid, enode)] = rng.uniform(0.0, eps_scale * model.step)
    return _extract(eg, profile, model, noise)


@dataclass(frozen=True)
class RegroupTrace:
    """An ordered regroup schedule, replayable from the serial backbone."""

    width: int
    steps: tuple[tuple[Node, Node], ...]

    def replay(self) -> Backbone:
        bb = init_serial(self.width)
        for a, b in self.steps:
            bb = regroup(bb, a, b)
        return bb

    def to_text(self) -> str:
        return "".join(
            f"regroup {a.msb} {a.lsb} {b.msb} {b.lsb}\n" for a, b in self.steps
        )

    @classmethod
    def from_text(cls, width: int, text: str) -> RegroupTrace:
        steps: list[tuple[Node, Node]] = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] in ("finish1", "finish2"):
                break
            if parts[0] != "regroup" or len(parts) != 5:
                raise TraceError(f"line {lineno}: expected 'regroup a.msb a.lsb b.msb b.lsb'")
            try:
                nums = [int(p) for p in parts[1:]]
            except ValueError as exc:
                raise TraceError(f"line {lineno}: {exc}") from exc
            steps.append((Node(nums[0], nums[1]), Node(nums[2], nums[3])))
        return cls(width, tuple(steps))


class TraceError(Exception):
    """A trace that cannot be parsed or replayed."""


def derive_trace(target: Union[BackboneExpr, Backbone]) -> RegroupTrace:
    """Compute a regroup schedule that rebuilds ``target`` from the serial
    backbone.

    Greedy: at every step apply the lowest-column candidate whose created
    node belongs to the target and whose removed ridge node does not.
    """
    bb_target = target if isinstance(target, Backbone) else expr_to_backbone(target)
    wanted = bb_target.nodes
    bb = init_serial(bb_target.width)
    steps: list[tuple[Node, Node]] = []
    limit = len(wanted - bb.nodes)
    while bb != bb_target:
        applicable = [
            (a, b)
            for a, b in find_candidates(bb)
            if Node(a.msb, b.lsb) in wanted and Node(b.msb, 0) not in wanted
        ]
        if not applicable or len(steps) >= limit:
            raise TraceError(
                "internal error: no applicable regroup towards target"
            )
        a, b = min(applicable, key=lambda ab: (ab[0].msb, ab[1].msb))
        bb = regroup(bb, a, b)
        steps.append((a, b))
    return RegroupTrace(bb_target.width, tuple(steps))


def filter_low_deficiency(
    candidates: Iterable[BackboneExpr], threshold: int = 0
) -> list[BackboneExpr]:
    """Keep shapes whose completed adder stays within ``threshold`` levels
    of the backbone level (threshold 0 keeps exactly the zero-deficiency
    completions)."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    kept: list[BackboneExpr] = []
    for expr in candidates:
        bb = expr_to_backbone(expr)
        if complete(bb).depth - bb.level <= threshold:
            kept.append(expr)
    return kept


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def design_space_log10(width: int) -> tuple[float, float]:
    """log10 sizes of the full design space (product of Catalan numbers over
    all group sizes) and of the backbone shape space alone."""
    product = 1
    for i in range(1, width):
        product *= catalan(i)
    return (math.log10(product), math.log10(catalan(width - 1)))
