"""Build the four classic prefix structures and compare their shape.

Every structure is verified exhaustively as an adder at width 8, then the
usual size/depth/fanout trade-offs are printed for width 16.
"""

from __future__ import annotations

from prefixsynth.graph import exhaustive_addition_check, validate
from prefixsynth.structures import (
    brent_kung_graph,
    kogge_stone_graph,
    serial_graph,
    sklansky_graph,
)

BUILDERS = {
    "serial": serial_graph,
    "sklansky": sklansky_graph,
    "kogge-stone": kogge_stone_graph,
    "brent-kung": brent_kung_graph,
}


def main() -> None:
    print("Exhaustive addition check at width 8:")
    for name, make in BUILDERS.items():
        graph = make(8)
        exhaustive_addition_check(graph)
        report = validate(graph)
        print(f"  {name:<12} ok (validate: {report.ok})")

    print("\nStructure statistics at width 16:")
    print(f"  {'structure':<12} {'size':>4} {'depth':>5} {'max fanout':>10}")
    for name, make in BUILDERS.items():
        graph = make(16)
        print(
            f"  {name:<12} {graph.size:>4} {graph.depth:>5} {graph.max_fanout():>10}"
        )


if __name__ == "__main__":
    main()
