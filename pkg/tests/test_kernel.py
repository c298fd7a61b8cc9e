import csv
import io
import random

import pytest

from reconfigsim.errors import DanglingReference, ShapeMismatch
from reconfigsim.expr import parse_expr
from reconfigsim.generate import (
    DatapathBuilder, FsmBuilder, configuration, random_configuration, random_memory_init,
)
from reconfigsim.kernel import (
    AlwaysAssertion, AssertionFailed, CycleAssertion, Finished, MaxCyclesReached,
    RuntimeFault, SimOptions, Simulation, parse_assertions, run,
)
from reconfigsim.memimage import MemoryImage
from reconfigsim.model import elaborate


def _loop_fsm(outputs=(), inputs=(), assigns=None):
    f = FsmBuilder("f", "S0")
    for name, w in outputs:
        f.output(name, w)
    for name, w in inputs:
        f.input(name, w)
    f.state("S0", assigns or {}, [(None, "S0")])
    return f


def test_counter_finishes_in_11_cycles(design):
    res = run(design("counter"))
    assert res.status == Finished(0)
    assert res.cycles == 11


def test_counter_probe_values(design):
    res = run(design("counter"), opts=SimOptions(probes=["cnt", "last", "en"]))
    assert res.trace.column("cnt.q") == list(range(11))
    assert res.trace.column("last.out") == [0] * 9 + [1, 0]
    assert res.trace.column("en.out") == [1] * 10 + [0]


def test_max_cycles(design):
    res = run(design("counter_free"), opts=SimOptions(max_cycles=100))
    assert res.status == MaxCyclesReached()
    assert res.cycles == 100


def test_cycle_assertion_pass_and_fail(design):
    ok = run(design("counter"), opts=SimOptions(assertions=[CycleAssertion(5, "cnt.q", 5)]))
    assert ok.status == Finished(0)
    bad = run(design("counter"), opts=SimOptions(assertions=[CycleAssertion(5, "cnt.q", 6)]))
    assert isinstance(bad.status, AssertionFailed)
    assert bad.status.cycle == 5
    assert bad.cycles == 6


def test_always_assertion_fails_at_cycle_11(design):
    opts = SimOptions(assertions=[AlwaysAssertion(parse_expr("cnt <= 10"), "cnt <= 10")])
    res = run(design("counter_free"), opts=opts)
    assert isinstance(res.status, AssertionFailed)
    assert res.status.cycle == 11


def test_parse_assertions():
    got = parse_assertions("# header\nat 5 cnt.q 0x5\nalways cnt <= 10  # c\n\n")
    assert got == [CycleAssertion(5, "cnt.q", 5),
                   AlwaysAssertion(parse_expr("cnt <= 10"), "cnt <= 10")]
    with pytest.raises(Exception):
        parse_assertions("at five cnt 1")


def test_guard_sees_same_cycle_status(design):
    sim = Simulation(design("counter"), opts=SimOptions(probes=["cnt", "last"]))
    for _ in range(9):
        assert sim.step() is None
        assert sim.state_name == "RUN"
    assert sim.step() is None  # cycle 9: last is 1 and the transition fires
    assert sim.trace.rows[-1] == (9, 9, 1)
    assert sim.state_name == "DONE"
    assert sim.step() == Finished(0)
    assert sim.value("cnt") == 10


def test_register_swap_is_atomic():
    b = DatapathBuilder("swap")
    b.op("reg", 8, "y", id="x", init=1)
    b.op("reg", 8, "x", id="y", init=2)
    d = elaborate(configuration("swap", b, _loop_fsm()))
    res = run(d, opts=SimOptions(max_cycles=4, probes=["x", "y"]))
    assert res.trace.rows == [(0, 1, 2), (1, 2, 1), (2, 1, 2), (3, 2, 1)]


def test_register_enable_holds():
    b = DatapathBuilder("hold")
    b.control("en", 1)
    r = b.op("reg", 4, None, "en", id="r", init=3)
    b.bind(r, "d", b.op("add", 4, r, b.const(4, 1)))
    for en, expected in ((0, [3, 3, 3]), (1, [3, 4, 5])):
        d = elaborate(configuration("hold", b, _loop_fsm([("en", 1)], assigns={"en": en})))
        res = run(d, opts=SimOptions(max_cycles=3, probes=["r"]))
        assert res.trace.column("r.q") == expected


def _mem_design(latency):
    # address counter walks 0..3; writes addr+10 while reading
    b = DatapathBuilder("memt")
    b.control("we", 1)
    a = b.op("reg", 2, None, id="a")
    b.bind(a, "d", b.op("add", 2, a, b.const(2, 1)))
    din = b.op("add", 8, b.const(8, 10), b.const(8, 0))
    b.op("mem", 8, a, din, "we", id="m", depth=4, latency=latency)
    return elaborate(configuration("memt", b, _loop_fsm([("we", 1)], assigns={"we": 1})))


def test_memory_latency0_read_first():
    init = {"m": MemoryImage(8, 4, [1, 2, 3, 4])}
    res = run(_mem_design(0), init, SimOptions(max_cycles=6, probes=["m"]))
    assert res.trace.column("m.dout") == [1, 2, 3, 4, 10, 10]
    assert res.final_memories["m"].words == [10, 10, 10, 10]


def test_memory_latency1_registered():
    init = {"m": MemoryImage(8, 4, [1, 2, 3, 4])}
    res = run(_mem_design(1), init, SimOptions(max_cycles=6, probes=["m"]))
    # dout shows the previous cycle's address, read before that cycle's write
    assert res.trace.column("m.dout") == [0, 1, 2, 3, 4, 10]


def test_divide_by_zero_fault():
    b = DatapathBuilder("dz")
    b.op("reg", 8, b.op("div", 8, b.const(8, 1), b.const(8, 0)), id="r")
    res = run(elaborate(configuration("dz", b, _loop_fsm())))
    assert isinstance(res.status, RuntimeFault)
    assert res.status.cycle == 0 and res.status.kind == "DivideByZero"


def test_mux_fault_when_select_exceeds_arity():
    b = DatapathBuilder("mx")
    k = b.const(8, 1)
    b.op("reg", 8, b.op("mux", 8, b.const(2, 3), k, k, k, arity=3), id="r")
    res = run(elaborate(configuration("mx", b, _loop_fsm())))
    assert res.status.kind == "MuxIndexOutOfRange"


def test_address_out_of_range_fault():
    b = DatapathBuilder("ao")
    a = b.op("reg", 3, None, id="a")
    b.bind(a, "d", b.op("add", 3, a, b.const(3, 1)))
    b.op("mem", 4, a, id="m", depth=5)
    res = run(elaborate(configuration("ao", b, _loop_fsm())), opts=SimOptions(max_cycles=20))
    assert res.status.kind == "AddressOutOfRange"
    assert res.status.cycle == 5


def test_input_bindings():
    b = DatapathBuilder("in")
    b.op("reg", 8, b.op("add", 8, b.op("in", 8, id="x"), b.const(8, 1)), id="r")
    d = elaborate(configuration("in", b, _loop_fsm()))
    res = run(d, opts=SimOptions(max_cycles=2, probes=["r"], input_bindings={"x": 41}))
    assert res.trace.column("r.q") == [0, 42]
    with pytest.raises(DanglingReference):
        run(d, opts=SimOptions(input_bindings={"nope": 1}))


def test_memory_init_errors(design):
    d = design("hamming")
    with pytest.raises(ShapeMismatch):
        run(d, {"in_mem": MemoryImage(8, 16)})
    with pytest.raises(DanglingReference):
        run(d, {"nope": MemoryImage(8, 16)})


def test_trace_csv(design, tmp_path):
    path = tmp_path / "t.csv"
    run(design("counter"), opts=SimOptions(probes=["cnt"], trace_path=str(path)))
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == ["cycle", "cnt.q"]
    assert rows[1] == ["0", "0"]
    assert rows[11] == ["10", "a"]
    assert len(rows) == 12


def test_trace_all_signals_when_no_probes(design, tmp_path):
    path = tmp_path / "t.csv"
    run(design("counter"), opts=SimOptions(trace_path=str(path)))
    header = path.read_text().splitlines()[0].split(",")
    assert header[0] == "cycle"
    assert set(header[1:]) == set(design("counter").signals)


@pytest.mark.parametrize("seed", range(20))
def test_probing_does_not_change_results(seed):
    rng = random.Random(seed)
    d = elaborate(random_configuration(rng))
    init = random_memory_init(rng, d)
    plain = run(d, init, SimOptions(max_cycles=200))
    probed = run(d, init, SimOptions(max_cycles=200, probes=list(d.signals)))
    assert plain.status == probed.status and plain.cycles == probed.cycles
    assert plain.final_memories == probed.final_memories


def test_deterministic(design):
    a = run(design("hamming"), opts=SimOptions(probes=["out_mem"]))
    b = run(design("hamming"), opts=SimOptions(probes=["out_mem"]))
    assert a.trace.rows == b.trace.rows and a.final_memories == b.final_memories


def test_op_eval_count_counter(design):
    # per cycle: add and eq (combinational) plus one register edge; the
    # final cycle settles but never clocks
    res = run(design("counter"))
    assert res.stats.op_evals == 11 * 2 + 10 * 1
