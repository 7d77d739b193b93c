"""Top-level acceptance checks.

Each test covers one release criterion, enforces its runtime budget, and
prints a single ``[PASS]``/``[FAIL]`` line (visible with ``pytest -s`` or on
failure).  Oracles come from :mod:`oracles`: column-parallel ripple-carry
addition, independent tree enumeration, and direct cost recursion.
"""

from __future__ import annotations

import random
import time

from prefixsynth.backbone import (
    balanced_backbone,
    complete,
    find_candidates,
    init_serial,
    to_timed_sexpr,
)
from prefixsynth.epr import critical_path, render_epr
from prefixsynth.esat import (
    catalan,
    count_trees,
    derive_trace,
    design_space_log10,
    extract_optimal,
    extract_perturbed,
    filter_low_deficiency,
    saturate,
)
from prefixsynth.graph import Node, validate
from prefixsynth.lang import backbone_to_expr, expr_to_backbone
from prefixsynth.policy import (
    CriticalPathRefinePolicy,
    GreedyBackbonePolicy,
    run_phase1,
    run_phase2,
)
from prefixsynth.refine import RefinementError, fanout_opt, level_opt, node_clone
from prefixsynth.structures import (
    brent_kung_graph,
    kogge_stone_graph,
    serial_graph,
    sklansky_graph,
)
from prefixsynth.timing import (
    ArrivalProfile,
    DelayModel,
    backbone_cost,
    graph_arrivals,
    pareto_sweep,
)
from prefixsynth.dataio import parse_samples, emit_samples, synthesize_samples

from oracles import (
    all_shapes,
    catalan_ref,
    count_addition_mismatch_lanes,
    exhaustive_columns,
    random_columns,
    random_shape,
    shape_cost,
    shape_to_expr,
)

MODEL = DelayModel()
STRUCTURES = (serial_graph, sklansky_graph, kogge_stone_graph, brent_kung_graph)


def _report(num: int, label: str, ok: bool, elapsed: float, budget: float) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {num}: {label} ({elapsed:.2f}s / budget {budget:.0f}s)")
    assert ok, f"criterion {num} ({label}) failed"
    assert elapsed < budget, (
        f"criterion {num} exceeded runtime budget: {elapsed:.2f}s >= {budget:.0f}s"
    )


def _pipeline_graphs(width: int) -> list:
    """Graphs from each pipeline stage at the given width."""
    profile = ArrivalProfile.preset("random", width, MODEL, seed=width)
    graphs = [make(width) for make in STRUCTURES]
    p1 = run_phase1(width, profile, None, 64, GreedyBackbonePolicy(), MODEL)
    completed = complete(p1.backbone)
    graphs.append(completed)
    tight = graph_arrivals(sklansky_graph(width), profile, MODEL).delay
    p2 = run_phase2(completed, tight, 32, CriticalPathRefinePolicy(), profile, MODEL)
    graphs.append(p2.graph)
    eg = saturate(backbone_to_expr(balanced_backbone(width)))
    graphs.append(complete(expr_to_backbone(extract_optimal(eg, profile, MODEL))))
    return graphs


def test_criterion_01_functional_correctness() -> None:
    t0 = time.perf_counter()
    bad = 0
    for width in range(2, 9):
        acols, bcols, lanes = exhaustive_columns(width)
        for make in STRUCTURES:
            bad += count_addition_mismatch_lanes(make(width), acols, bcols, lanes)
        for bb in (init_serial(width), balanced_backbone(width)):
            bad += count_addition_mismatch_lanes(complete(bb), acols, bcols, lanes)
    p2_graph = None
    for width in (16, 32, 64):
        acols, bcols, lanes = random_columns(width, 100_000, seed=width)
        for graph in _pipeline_graphs(width):
            bad += count_addition_mismatch_lanes(graph, acols, bcols, lanes)
    _report(
        1,
        "all pipeline-stage graphs implement addition",
        bad == 0,
        time.perf_counter() - t0,
        30.0,
    )


def test_criterion_02_zero_deficiency_completion() -> None:
    t0 = time.perf_counter()
    ok = True
    for width in range(2, 9):
        shapes = list(all_shapes(width - 1, 0))
        ok = ok and len(shapes) == catalan_ref(width - 1)
        for shape in shapes:
            bb = expr_to_backbone(shape_to_expr(shape))
            g = complete(bb)
            aux = g.size - (width - 1)
            ok = ok and aux == width - 1 - bb.level
            ok = ok and validate(g).ok and g.is_complete
            if g.depth == bb.level:
                ok = ok and g.size + g.depth == 2 * width - 2
    _report(
        2,
        "completion inserts exactly N-1-L_B auxiliaries (Snir bound when L=L_B)",
        ok,
        time.perf_counter() - t0,
        10.0,
    )


def test_criterion_03_saturation_counts() -> None:
    t0 = time.perf_counter()
    expected = {3: 2, 4: 5, 5: 14, 6: 42, 7: 132, 8: 429}
    ok = True
    for width, count in expected.items():
        eg = saturate(backbone_to_expr(init_serial(width)))
        ok = ok and eg.saturated and count_trees(eg) == count == catalan_ref(width - 1)
    _report(
        3,
        "saturated e-graph holds all Catalan(N-1) trees",
        ok,
        time.perf_counter() - t0,
        20.0,
    )


def test_criterion_04_extraction_optimality() -> None:
    t0 = time.perf_counter()
    ok = True
    for width in range(2, 11):
        shapes = list(all_shapes(width - 1, 0))
        eg = saturate(backbone_to_expr(init_serial(width)))
        for seed in range(50):
            profile = ArrivalProfile.randomized(width, seed=seed, high=0.2)
            got = backbone_cost(extract_optimal(eg, profile, MODEL), profile, MODEL)
            best = min(
                shape_cost(s, list(profile.times), MODEL.step) for s in shapes
            )
            ok = ok and abs(got - best) < 1e-12
    _report(
        4,
        "extraction matches brute-force minimum over all trees",
        ok,
        time.perf_counter() - t0,
        60.0,
    )


def test_criterion_05_trace_soundness() -> None:
    t0 = time.perf_counter()
    ok = True
    for width in range(2, 9):
        for shape in all_shapes(width - 1, 0):
            target = expr_to_backbone(shape_to_expr(shape))
            ok = ok and derive_trace(target).replay().nodes == target.nodes
    rng = random.Random(20260825)
    for _ in range(100):
        width = rng.randint(2, 12)
        target = expr_to_backbone(shape_to_expr(random_shape(width - 1, 0, rng)))
        ok = ok and derive_trace(target).replay().nodes == target.nodes
    _report(
        5,
        "derived traces replay to their targets",
        ok,
        time.perf_counter() - t0,
        30.0,
    )


def test_criterion_06_design_space_magnitude() -> None:
    t0 = time.perf_counter()
    total, single = design_space_log10(16)
    ok = 48.0 <= total <= 50.0 and 6.0 <= single <= 7.1
    ok = ok and catalan(15) == catalan_ref(15)
    _report(
        6,
        "design-space magnitudes (product and single Catalan)",
        ok,
        time.perf_counter() - t0,
        1.0,
    )


TIMED_SEXPR_GOLDEN = """\
(3,0) [arrival=0.1050]
group(
  (3,2) [arrival=0.0600] =
  group(
    input (3,3) [arrival=0.0150],
    input (2,2) [arrival=0.0250]
  ),
  (1,0) [arrival=0.0700] =
  group(
    input (1,1) [arrival=0.0350],
    input (0,0) [arrival=0.0350]))"""

EPR_GOLDEN = """\
Bitwidth: 4
Non-input nodes: 3
Max level: 3
Max fanout: 1

Input nodes:
(0,0), tf: [], ntf: [(1,0)]
(1,1), tf: [(1,0)], ntf: []
(2,2), tf: [(2,0)], ntf: []
(3,3), tf: [(3,0)], ntf: []

Non-input nodes:
(3,0),lvl:3,up:(3,3),lp:(2,0),tf:[],ntf: []
(2,0),lvl:2,up:(2,2),lp:(1,0),tf:[],ntf: [(3,0)]
(1,0),lvl:1,up:(1,1),lp:(0,0),tf:[],ntf: [(2,0)]
"""

CRITICAL_GOLDEN = """\
Lvl 0: (0,0), [INPUT] tf: [], ntf: [(1,0)]
Lvl 1:(1,0),up:(1,1),lp:(0,0), tf:[], ntf:[(2,0)]
Lvl 2:(2,0),up:(2,2),lp:(1,0), tf:[], ntf:[(3,0)]
Lvl 3:(3,0),up:(3,3),lp:(2,0), tf:[], ntf:[]

- Lvl efficiency:2/3(theoretical min:2, actual:3)"""


def test_criterion_07_format_goldens() -> None:
    t0 = time.perf_counter()
    profile = ArrivalProfile((0.0350, 0.0350, 0.0250, 0.0150))
    sexpr = to_timed_sexpr(balanced_backbone(4), profile, MODEL)
    serial4 = complete(init_serial(4))
    epr = render_epr(serial4)
    report = graph_arrivals(serial4, profile, MODEL)
    chain = critical_path(serial4, report.arrivals, Node(0, 0), Node(3, 0))
    ok = (
        sexpr == TIMED_SEXPR_GOLDEN
        and epr == EPR_GOLDEN
        and chain.render() == CRITICAL_GOLDEN
    )
    _report(
        7,
        "timed s-expression, EPR, and critical-path blocks byte-exact",
        ok,
        time.perf_counter() - t0,
        1.0,
    )


def test_criterion_08_refinement_contracts() -> None:
    t0 = time.perf_counter()
    rng = random.Random(0xC0FFEE)
    applied = {"level_opt": 0, "fanout_opt": 0, "node_clone": 0}
    ok = True
    graph = None
    while sum(applied.values()) < 1000:
        if graph is None or rng.random() < 0.35:
            width = rng.randint(4, 12)
            graph = complete(
                expr_to_backbone(shape_to_expr(random_shape(width - 1, 0, rng)))
            )
        tool = rng.choice(list(applied))
        nodes = list(graph.internal_nodes)
        rng.shuffle(nodes)
        for target in nodes:
            try:
                if tool == "level_opt":
                    before = graph.level(target)
                    new_graph = level_opt(graph, target)
                    ok = ok and new_graph.level(target) < before
                elif tool == "node_clone":
                    before = graph.fanout(target)
                    new_graph = node_clone(graph, target)
                    ok = ok and new_graph.fanout(target) < before
                else:
                    consumers = graph.ntf(target)
                    if not consumers:
                        continue
                    before = graph.fanout(target)
                    new_graph = fanout_opt(graph, target, rng.choice(consumers))
                    ok = ok and new_graph.fanout(target) < before
            except RefinementError:
                continue
            ok = ok and validate(new_graph).ok
            acols, bcols, lanes = random_columns(
                new_graph.width, 256, seed=sum(applied.values())
            )
            ok = ok and count_addition_mismatch_lanes(
                new_graph, acols, bcols, lanes
            ) == 0
            applied[tool] += 1
            graph = new_graph
            break
        else:
            graph = None  # no applicable target; draw a fresh graph
    ok = ok and all(v > 0 for v in applied.values())
    _report(
        8,
        "1000 randomized tool applications honor their contracts",
        ok,
        time.perf_counter() - t0,
        60.0,
    )


def test_criterion_09_end_to_end_sweep() -> None:
    t0 = time.perf_counter()
    ok = True
    for width in (16, 32, 64):
        profile = ArrivalProfile.preset("random", width, MODEL, seed=width)
        d_fast = graph_arrivals(sklansky_graph(width), profile, MODEL).delay
        d_slow = graph_arrivals(complete(init_serial(width)), profile, MODEL).delay
        targets = [d_fast + (d_slow - d_fast) * i / 5 for i in range(6)]
        design_times: list[float] = []

        def synth(target: float):
            start = time.perf_counter()
            p1 = run_phase1(width, profile, target, 64, GreedyBackbonePolicy(), MODEL)
            g = complete(p1.backbone)
            p2 = run_phase2(
                g, target, 64, CriticalPathRefinePolicy(), profile, MODEL
            )
            design_times.append(time.perf_counter() - start)
            return p2.graph

        rows = pareto_sweep(synth, targets, profile, MODEL)
        ok = ok and max(design_times) < 5.0
        points = sorted({(r.delay, r.area) for r in rows})
        for (d1, a1) in points:
            for (d2, a2) in points:
                if (d1, a1) == (d2, a2):
                    continue
                dominated = d2 <= d1 and a2 <= a1 and (d2 < d1 or a2 < a1)
                ok = ok and not dominated

        eg = saturate(backbone_to_expr(balanced_backbone(width)))
        ok = ok and eg.saturated
        for seed in range(5):
            rprof = ArrivalProfile.randomized(
                width, seed=1000 + seed, high=(width / 8) * MODEL.step
            )
            opt = backbone_cost(extract_optimal(eg, rprof, MODEL), rprof, MODEL)
            ok = ok and opt <= backbone_cost(init_serial(width), rprof, MODEL) + 1e-12
            ok = ok and opt <= backbone_cost(balanced_backbone(width), rprof, MODEL) + 1e-12
    _report(
        9,
        "greedy sweep under 5s/design, non-dominated set, extraction beats baselines",
        ok,
        time.perf_counter() - t0,
        120.0,
    )


def test_criterion_10_datagen_filter() -> None:
    t0 = time.perf_counter()
    ok = True
    total = 0
    for width in (4, 6, 8):
        profile = ArrivalProfile.uniform(width)
        eg = saturate(backbone_to_expr(init_serial(width)))
        exprs = [
            extract_perturbed(eg, profile, MODEL, seed=i, eps_scale=1.0)
            for i in range(32)
        ]
        kept = filter_low_deficiency(list(dict.fromkeys(exprs)), threshold=0)
        traces = [derive_trace(e) for e in kept]
        samples, diagnostics = synthesize_samples(traces, width, profile, MODEL)
        ok = ok and not diagnostics
        total += len(samples)
        for sample in samples:
            bb = init_serial(width)
            from prefixsynth.backbone import regroup
            from prefixsynth.graph import parse_node_token

            for turn in sample.turns:
                if turn.call["tool"] != "regroup":
                    continue
                a = parse_node_token(turn.call["args"]["a"])
                b = parse_node_token(turn.call["args"]["b"])
                bb = regroup(bb, a, b)
            g = complete(bb)
            ok = ok and g.depth == bb.level
        ok = ok and parse_samples(emit_samples(samples)) == samples
    ok = ok and total > 0
    _report(
        10,
        "threshold-0 datagen emits only zero-deficiency-completable samples",
        ok,
        time.perf_counter() - t0,
        30.0,
    )
