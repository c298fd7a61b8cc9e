import random

import pytest

from reconfigsim import operators as ops
from reconfigsim.errors import (
    CombinationalCycle, ControlStatusMismatch, DanglingReference, DuplicateId,
    SharedMemoryShapeMismatch, UnboundPort, UnknownConfiguration, WidthMismatch,
    WidthOutOfRange, MissingStartNode,
)
from reconfigsim.generate import DatapathBuilder, FsmBuilder, configuration, random_configuration
from reconfigsim.model import (
    RtgEdge, RtgNode, RtgSpec, SharedMemory, SignalRef, Value, check_rtg, elaborate,
    elaborate_datapath,
)


def _fsm(outputs=(), inputs=()):
    f = FsmBuilder("f", "S0")
    for name, w in outputs:
        f.output(name, w)
    for name, w in inputs:
        f.input(name, w)
    f.state("S0", final=0)
    return f


def test_value_range():
    assert Value(255, 8).bits == 255
    with pytest.raises(Exception):
        Value(256, 8)


def test_signal_ref_parse():
    assert SignalRef.parse("cnt.q") == SignalRef("cnt", "q")
    assert SignalRef.parse("cnt") == SignalRef("cnt", "")
    assert str(SignalRef("a", "out")) == "a.out"


def test_const_into_reg_levels():
    b = DatapathBuilder("d")
    c = b.const(8, 5)
    b.op("reg", 8, c, id="r")
    levels, order, signals, _ = elaborate_datapath(b.build())
    assert levels == {c: 1}
    assert order == [c]
    assert signals == {f"{c}.out": 8, "r.q": 8}


def test_self_loop_is_cycle():
    b = DatapathBuilder("d")
    b.op("add", 8, "x", "x", id="x")
    with pytest.raises(CombinationalCycle) as exc:
        elaborate_datapath(b.build())
    assert exc.value.members == ["x"]


def test_two_node_cycle_members():
    b = DatapathBuilder("d")
    b.op("not", 4, "y", id="x")
    b.op("not", 4, "x", id="y")
    with pytest.raises(CombinationalCycle) as exc:
        elaborate_datapath(b.build())
    assert sorted(exc.value.members) == ["x", "y"]


def test_cycle_broken_by_register():
    b = DatapathBuilder("d")
    b.op("reg", 4, "x", id="r")
    b.op("not", 4, "r", id="x")
    levels, _, _, _ = elaborate_datapath(b.build())
    assert levels == {"x": 1}


def test_latency1_memory_breaks_cycle_latency0_does_not():
    for latency, ok in ((1, True), (0, False)):
        b = DatapathBuilder("d")
        b.op("mem", 2, "m", id="m", depth=4, latency=latency)
        dp = b.build()
        if ok:
            elaborate_datapath(dp)
        else:
            with pytest.raises(CombinationalCycle):
                elaborate_datapath(dp)


def test_width_mismatch():
    b = DatapathBuilder("d")
    a = b.const(8, 1)
    c = b.const(4, 1)
    b.op("add", 8, a, c, id="s")
    with pytest.raises(WidthMismatch) as exc:
        elaborate_datapath(b.build())
    e = exc.value
    assert (e.source, e.sink, e.source_width, e.sink_width) == (f"{c}.out", "s.b", 4, 8)


def test_width_out_of_range():
    b = DatapathBuilder("d")
    b.const(65, 0)
    with pytest.raises(WidthOutOfRange):
        elaborate_datapath(b.build())


def test_unbound_port():
    b = DatapathBuilder("d")
    b.op("add", 8, b.const(8, 1), id="s")
    with pytest.raises(UnboundPort):
        elaborate_datapath(b.build())


def test_dangling_reference():
    b = DatapathBuilder("d")
    b.op("not", 8, "nowhere", id="s")
    with pytest.raises(DanglingReference):
        elaborate_datapath(b.build())


def test_duplicate_name_across_namespaces():
    b = DatapathBuilder("d")
    b.control("x", 1)
    b.op("const", 1, id="x", value=0)
    with pytest.raises(DuplicateId):
        elaborate_datapath(b.build())


def test_control_status_mismatch():
    b = DatapathBuilder("d")
    b.control("go", 1)
    with pytest.raises(ControlStatusMismatch):
        elaborate(configuration("c", b, _fsm(outputs=[("go", 2)])))
    b2 = DatapathBuilder("d")
    b2.status("done", 1, b2.const(1, 1))
    with pytest.raises(ControlStatusMismatch):
        elaborate(configuration("c", b2, _fsm()))
    elaborate(configuration("c", b2, _fsm(inputs=[("done", 1)])))


def test_default_port_resolution(design):
    d = design("counter")
    assert d.resolve(SignalRef("cnt")) == "cnt.q"
    assert d.resolve("cnt") == "cnt.q"
    assert d.resolve("last") == "last.out"


def test_levelization_is_deterministic():
    rng = random.Random(7)
    config = random_configuration(rng, max_ops=40)
    first = elaborate(config)
    for _ in range(3):
        again = elaborate(config)
        assert again.order == first.order and again.levels == first.levels


@pytest.mark.parametrize("seed", range(50))
def test_levels_respect_combinational_edges(seed):
    d = elaborate(random_configuration(random.Random(seed), max_ops=40))
    dp = d.datapath
    for op in dp.operators:
        if ops.is_sequential(op.kind, op.attrs):
            assert op.id not in d.levels
            continue
        sig = ops.signature(op.kind, op.attrs)
        for port in ops.comb_inputs(op.kind, op.attrs, sig.inputs):
            src = op.inputs[port].owner
            if src in d.levels:
                assert d.levels[src] < d.levels[op.id]
    pos = {n: i for i, n in enumerate(d.order)}
    for n in d.order:
        for other in d.order:
            if d.levels[n] < d.levels[other]:
                assert pos[n] < pos[other]


# -- RTG checks ----------------------------------------------------------------

def _mem_design(cid, width=8, depth=4):
    b = DatapathBuilder(cid)
    b.op("mem", width, b.const(2 if depth == 4 else 3, 0), id="m", depth=depth)
    return elaborate(configuration(cid, b, _fsm()))


def test_check_rtg_ok():
    designs = {"a": _mem_design("a"), "b": _mem_design("b")}
    rtg = RtgSpec("g", "a", [RtgNode("a", "", ""), RtgNode("b", "", "")],
                  [RtgEdge("a", "b", None, None)],
                  [SharedMemory("s", 8, 4, {"a": "m", "b": "m"})])
    v = check_rtg(rtg, designs)
    assert [e.target for e in v.outgoing("a")] == ["b"]
    assert v.outgoing("b") == []


def test_check_rtg_errors():
    designs = {"a": _mem_design("a"), "b": _mem_design("b", depth=8)}
    nodes = [RtgNode("a", "", ""), RtgNode("b", "", "")]
    with pytest.raises(MissingStartNode):
        check_rtg(RtgSpec("g", "z", nodes, [], []), designs)
    with pytest.raises(UnknownConfiguration):
        check_rtg(RtgSpec("g", "a", nodes, [RtgEdge("a", "q", None, None)], []), designs)
    with pytest.raises(SharedMemoryShapeMismatch):
        check_rtg(RtgSpec("g", "a", nodes, [], [SharedMemory("s", 8, 4, {"a": "m", "b": "m"})]),
                  designs)
    with pytest.raises(DanglingReference):
        check_rtg(RtgSpec("g", "a", nodes, [], [SharedMemory("s", 8, 4, {"a": "nope"})]), designs)


def test_latency0_memory_writing_its_own_output_is_not_a_loop():
    b = DatapathBuilder("d")
    m = b.op("mem", 4, b.const(1, 0), None, None, id="m", depth=2, latency=0)
    b.bind(m, "din", m)
    levels, _, _, _ = elaborate_datapath(b.build())
    assert levels == {"c1_0": 1, "m": 2}
