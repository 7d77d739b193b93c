"""Reference prefix-adder structures (serial, Sklansky, Kogge-Stone,
Brent-Kung) used as baselines, test fixtures, and demo material."""
from __future__ import annotations

from .graph import Node, PrefixGraph

__all__ = [
    "serial_graph",
    "sklansky_graph",
    "kogge_stone_graph",
    "brent_kung_graph",
]


def _check_width(width: int) -> None:
    if width < 2:
        raise ValueError(f"width must be >= 2, got {width}")


def serial_graph(width: int) -> PrefixGraph:
    """Ripple chain: (m,0) = group((m,m), (m-1,0)); depth n-1, size n-1."""
    _check_width(width)
    parents = {
        Node(m, 0): (Node(m, m), Node(m - 1, 0)) for m in range(1, width)
    }
    return PrefixGraph(width, parents)


def sklansky_graph(width: int) -> PrefixGraph:
    """Divide-and-conquer tree: minimal depth, high fanout on block roots."""
    _check_width(width)
    parents: dict[Node, tuple[Node, Node]] = {}

    def build(lo: int, hi: int) -> None:
        if lo >= hi:
            return
        span = hi - lo + 1
        half = 1 << (span - 1).bit_length() - 1
        mid = lo + half - 1
        build(lo, mid)
        build(mid + 1, hi)
        for i in range(mid + 1, hi + 1):
            parents[Node(i, lo)] = (Node(i, mid + 1), Node(mid, lo))

    build(0, width - 1)
    return PrefixGraph(width, parents)


def kogge_stone_graph(width: int) -> PrefixGraph:
    """Recursive doubling: minimal depth at maximal node count."""
    _check_width(width)
    parents: dict[Node, tuple[Node, Node]] = {}
    step = 1
    while step < width:
        for i in range(step, width):
            lsb = max(0, i - 2 * step + 1)
            node = Node(i, lsb)
            up = Node(i, max(0, i - step + 1))
            lp = Node(i - step, lsb)
            if node != up:
                parents[node] = (up, lp)
        step *= 2
    return PrefixGraph(width, parents)


def brent_kung_graph(width: int) -> PrefixGraph:
    """Up-sweep/down-sweep tree: near-minimal size at roughly double depth."""
    _check_width(width)
    parents: dict[Node, tuple[Node, Node]] = {}
    step = 1
    while step < width:
        for i in range(2 * step - 1, width, 2 * step):
            parents[Node(i, i - 2 * step + 1)] = (
                Node(i, i - step + 1),
                Node(i - step, i - 2 * step + 1),
            )
        step *= 2
    step //= 2
    while step >= 1:
        for i in range(3 * step - 1, width, 2 * step):
            node = Node(i, 0)
            if node not in parents:
                parents[node] = (Node(i, i - step + 1), Node(i - step, 0))
        step //= 2
    return PrefixGraph(width, parents)
