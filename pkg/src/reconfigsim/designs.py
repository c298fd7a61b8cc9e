"""The shipped corpus: builders for each design and the writer for its files.

The XML, memory images and goldens under ``reconfigsim/corpus`` are produced
by :func:`write_corpus`; goldens come from the software oracles in
:mod:`reconfigsim.harness`, never from the simulator.
"""

from __future__ import annotations

import os
import random
from importlib import resources

from .generate import DatapathBuilder, FsmBuilder, configuration
from .harness import butterfly_oracle, hamming_oracle
from .memimage import MemoryImage, dump_mem
from .model import RtgEdge, RtgNode, RtgSpec, SharedMemory, Value
from .xmlio import emit_datapath, emit_fsm, emit_rtg


def corpus_dir() -> str:
    return str(resources.files("reconfigsim") / "corpus")


# -- counter ------------------------------------------------------------------

def counter_datapath():
    """4-bit counter; status ``last`` is high when the next count is 10."""
    b = DatapathBuilder("counter")
    b.control("en", 1)
    cnt = b.op("reg", 4, id="cnt")
    inc = b.op("add", 4, cnt, b.const(4, 1), id="inc")
    b.bind(cnt, "d", inc)
    b.bind(cnt, "en", "en")
    b.status("last", 1, b.op("eq", 4, inc, b.const(4, 10), id="is_last"))
    return b


def counter_fsm():
    f = FsmBuilder("counter_ctl", "RUN")
    f.input("last", 1)
    f.output("en", 1)
    f.state("RUN", {"en": 1}, [("last == 1", "DONE")])
    f.state("DONE", final=0)
    return f


def counter_free_fsm():
    """Never halts: the counter keeps wrapping."""
    f = FsmBuilder("counter_free_ctl", "RUN")
    f.input("last", 1)
    f.output("en", 1)
    f.state("RUN", {"en": 1})
    return f


# -- Hamming(7,4) decoder -----------------------------------------------------

HAMMING_DEPTH = 128


def hamming_datapath():
    """Decode every word of ``in_mem`` into ``out_mem``, one word per cycle.

    ``in_mem`` has a registered read port, so the write address ``j`` trails
    the read address ``i`` by one cycle.
    """
    w = 7
    b = DatapathBuilder("hamming_decoder")
    b.control("run", 1)
    b.control("wr", 1)
    one = b.const(w, 1)
    i = b.op("reg", w, id="i")
    j = b.op("reg", w, id="j")
    b.bind(i, "d", b.op("add", w, i, one, id="i_next"))
    b.bind(i, "en", "run")
    b.bind(j, "d", i)
    b.bind(j, "en", "run")
    x = b.op("mem", w, i, id="in_mem", depth=HAMMING_DEPTH, latency=1)

    bits = [x if k == 0 else b.op("shr", w, x, b.const(w, k), id=f"x_sh{k}") for k in range(7)]
    bits = [b.op("and", w, s, one, id=f"bit{k}") for k, s in enumerate(bits)]

    def parity(name, positions):
        acc = bits[positions[0] - 1]
        for n, p in enumerate(positions[1:]):
            acc = b.op("xor", w, acc, bits[p - 1], id=f"{name}_{n}")
        return acc

    s1 = parity("s1", (1, 3, 5, 7))
    s2 = parity("s2", (2, 3, 6, 7))
    s4 = parity("s4", (4, 5, 6, 7))
    syn = b.op("or", w, s1, b.op("shl", w, s2, one, id="s2_sh"), id="syn_lo")
    syn = b.op("or", w, syn, b.op("shl", w, s4, b.const(w, 2), id="s4_sh"), id="syndrome")
    bad = b.op("ne", w, syn, b.const(w, 0), id="has_error")
    flip = b.op("shl", w, one, b.op("sub", w, syn, one, id="err_pos"), id="flip_mask")
    fixed = b.op("mux", w, bad, x, b.op("xor", w, x, flip, id="flipped"), id="corrected",
                 arity=2)
    d0 = b.op("and", w, b.op("shr", w, fixed, b.const(w, 2), id="y_sh2"), one, id="d0")
    d123 = b.op("and", w, b.op("shr", w, fixed, b.const(w, 3), id="y_sh3"), b.const(w, 14),
                id="d123")
    data = b.op("or", w, d0, d123, id="data")
    b.op("mem", w, j, data, "wr", id="out_mem", depth=HAMMING_DEPTH, latency=1)
    b.op("out", w, data, id="decoded")
    b.status("last", 1, b.op("eq", w, j, b.const(w, HAMMING_DEPTH - 1), id="j_last"))
    return b


def hamming_fsm():
    f = FsmBuilder("hamming_ctl", "PRIME")
    f.input("last", 1)
    f.output("run", 1)
    f.output("wr", 1)
    f.state("PRIME", {"run": 1}, [(None, "RUN")])
    f.state("RUN", {"run": 1, "wr": 1}, [("last == 1", "DONE")])
    f.state("DONE", final=0)
    return f


# -- 4x4 butterfly transform ----------------------------------------------------

BF_WIDTH = 16
BF_DEPTH = 16


def _pass_unit(b, p, src_dout, column):
    """Address generation, operand registers and butterfly for one pass.

    Pair ``k`` (0..7) reads addresses ``a`` and ``b``; writes a+b to ``a``
    and a-b to ``b``. Returns (address, write data) signals.
    """
    aw = 4
    one = b.const(aw, 1)
    k = b.op("reg", aw, id=f"{p}k")
    b.bind(k, "d", b.op("add", aw, k, one, id=f"{p}k_next"))
    b.bind(k, "en", f"{p}ken")
    if column:
        hi = b.op("shl", aw, b.op("shr", aw, k, b.const(aw, 2), id=f"{p}pair"), b.const(aw, 3),
                  id=f"{p}row_base")
        a_addr = b.op("or", aw, hi, b.op("and", aw, k, b.const(aw, 3), id=f"{p}col"),
                      id=f"{p}a_addr")
        b_addr = b.op("add", aw, a_addr, b.const(aw, 4), id=f"{p}b_addr")
    else:
        a_addr = b.op("add", aw, k, k, id=f"{p}a_addr")
        b_addr = b.op("or", aw, a_addr, one, id=f"{p}b_addr")
    addr = b.op("mux", aw, f"{p}asel", a_addr, b_addr, id=f"{p}addr", arity=2)
    ra = b.op("reg", BF_WIDTH, src_dout, f"{p}lda", id=f"{p}opa")
    rb = b.op("reg", BF_WIDTH, src_dout, f"{p}ldb", id=f"{p}opb")
    total = b.op("add", BF_WIDTH, ra, rb, id=f"{p}sum")
    diff = b.op("sub", BF_WIDTH, ra, rb, id=f"{p}diff")
    data = b.op("mux", BF_WIDTH, f"{p}asel", total, diff, id=f"{p}wdata", arity=2)
    b.status(f"{p}last", 1, b.op("eq", aw, k, b.const(aw, 7), id=f"{p}k_last"))
    return addr, data


def _pass_controls(b, p):
    for name in ("asel", "lda", "ldb", "we", "ken"):
        b.control(f"{p}{name}", 1)


def _pass_states(f, p, done_target):
    f.state(f"{p.upper()}READ_A", {f"{p}lda": 1}, [(None, f"{p.upper()}READ_B")])
    f.state(f"{p.upper()}READ_B", {f"{p}asel": 1, f"{p}ldb": 1}, [(None, f"{p.upper()}WRITE_SUM")])
    f.state(f"{p.upper()}WRITE_SUM", {f"{p}we": 1}, [(None, f"{p.upper()}WRITE_DIFF")])
    f.state(f"{p.upper()}WRITE_DIFF", {f"{p}asel": 1, f"{p}we": 1, f"{p}ken": 1},
            [(f"{p}last == 1", done_target), (None, f"{p.upper()}READ_A")])


def _pass_io(f, p):
    f.input(f"{p}last", 1)
    for name in ("asel", "lda", "ldb", "we", "ken"):
        f.output(f"{p}{name}", 1)


def butterfly_single_datapath():
    """Both passes in one configuration with three memories (in, mid, out)."""
    b = DatapathBuilder("butterfly_single")
    _pass_controls(b, "r_")
    _pass_controls(b, "c_")
    b.control("phase", 1)
    in_mem = b.op("mem", BF_WIDTH, None, id="in_mem", depth=BF_DEPTH, latency=0)
    mid = b.op("mem", BF_WIDTH, None, id="mid", depth=BF_DEPTH, latency=0)
    r_addr, r_data = _pass_unit(b, "r_", in_mem, column=False)
    c_addr, c_data = _pass_unit(b, "c_", mid, column=True)
    b.bind(in_mem, "addr", r_addr)
    b.bind(mid, "addr", b.op("mux", 4, "phase", r_addr, c_addr, id="mid_addr", arity=2))
    b.bind(mid, "din", r_data)
    b.bind(mid, "we", "r_we")
    b.op("mem", BF_WIDTH, c_addr, c_data, "c_we", id="out_mem", depth=BF_DEPTH, latency=0)
    return b


def butterfly_single_fsm():
    f = FsmBuilder("butterfly_single_ctl", "R_READ_A")
    _pass_io(f, "r_")
    _pass_io(f, "c_")
    f.output("phase", 1)
    _pass_states(f, "r_", "C_READ_A")
    # column states also hold phase=1 so the mid memory is addressed by the column unit
    start = len(f.states)
    _pass_states(f, "c_", "DONE")
    for st in f.states[start:]:
        st.assigns["phase"] = Value(1, 1)
    f.state("DONE", final=0)
    return f


def butterfly_rows_datapath():
    b = DatapathBuilder("butterfly_rows")
    _pass_controls(b, "r_")
    in_mem = b.op("mem", BF_WIDTH, None, id="in_mem", depth=BF_DEPTH, latency=0)
    addr, data = _pass_unit(b, "r_", in_mem, column=False)
    b.bind(in_mem, "addr", addr)
    b.op("mem", BF_WIDTH, addr, data, "r_we", id="mid", depth=BF_DEPTH, latency=0)
    return b


def butterfly_rows_fsm():
    f = FsmBuilder("butterfly_rows_ctl", "R_READ_A")
    _pass_io(f, "r_")
    _pass_states(f, "r_", "DONE")
    f.state("DONE", final=0)
    return f


def butterfly_cols_datapath():
    b = DatapathBuilder("butterfly_cols")
    _pass_controls(b, "c_")
    mid = b.op("mem", BF_WIDTH, None, id="mid", depth=BF_DEPTH, latency=0)
    addr, data = _pass_unit(b, "c_", mid, column=True)
    b.bind(mid, "addr", addr)
    b.op("mem", BF_WIDTH, addr, data, "c_we", id="out_mem", depth=BF_DEPTH, latency=0)
    return b


def butterfly_cols_fsm():
    f = FsmBuilder("butterfly_cols_ctl", "C_READ_A")
    _pass_io(f, "c_")
    _pass_states(f, "c_", "DONE")
    f.state("DONE", final=0)
    return f


def butterfly_rtg():
    return RtgSpec(
        "butterfly_split", "cfg1",
        [RtgNode("cfg1", "butterfly_rows_dp.xml", "butterfly_rows_fsm.xml"),
         RtgNode("cfg2", "butterfly_cols_dp.xml", "butterfly_cols_fsm.xml")],
        [RtgEdge("cfg1", "cfg2")],
        [SharedMemory("image_in", BF_WIDTH, BF_DEPTH, {"cfg1": "in_mem"}),
         SharedMemory("mid", BF_WIDTH, BF_DEPTH, {"cfg1": "mid", "cfg2": "mid"}),
         SharedMemory("image_out", BF_WIDTH, BF_DEPTH, {"cfg2": "out_mem"})])


def butterfly_input():
    """The corpus input image: fixed pseudo-random 8-bit pixels, row-major."""
    rng = random.Random(2005)
    return [[rng.randrange(256) for _ in range(4)] for _ in range(4)]


# -- corpus files ---------------------------------------------------------------

CONFIGS = {
    "counter": (counter_datapath, counter_fsm),
    "counter_free": (counter_datapath, counter_free_fsm),
    "hamming": (hamming_datapath, hamming_fsm),
    "butterfly_single": (butterfly_single_datapath, butterfly_single_fsm),
    "butterfly_rows": (butterfly_rows_datapath, butterfly_rows_fsm),
    "butterfly_cols": (butterfly_cols_datapath, butterfly_cols_fsm),
}

# file stem -> builder pair; counter_free reuses the counter datapath
DATAPATH_FILES = {"counter": counter_datapath, "hamming": hamming_datapath,
                  "butterfly_single": butterfly_single_datapath,
                  "butterfly_rows": butterfly_rows_datapath,
                  "butterfly_cols": butterfly_cols_datapath}
FSM_FILES = {"counter": counter_fsm, "counter_free": counter_free_fsm, "hamming": hamming_fsm,
             "butterfly_single": butterfly_single_fsm, "butterfly_rows": butterfly_rows_fsm,
             "butterfly_cols": butterfly_cols_fsm}


def corpus_configuration(name):
    dp, fsm = CONFIGS[name]
    return configuration(name, dp(), fsm())


SUITE = """\
<suite name="corpus">
  <test name="hamming_exhaustive" datapath="hamming_dp.xml" fsm="hamming_fsm.xml"
        expect="finished" exit-code="0" cycles="130">
    <mem id="in_mem" file="hamming_in.mem"/>
    <golden id="out_mem" file="hamming_out.golden.mem"/>
  </test>
  <test name="butterfly_single" datapath="butterfly_single_dp.xml" fsm="butterfly_single_fsm.xml"
        expect="finished" exit-code="0">
    <mem id="in_mem" file="butterfly_in.mem"/>
    <golden id="out_mem" file="butterfly_out.golden.mem"/>
  </test>
  <test name="butterfly_split" rtg="butterfly_rtg.xml" expect="completed">
    <mem id="image_in" file="butterfly_in.mem"/>
    <golden id="image_out" file="butterfly_out.golden.mem"/>
  </test>
  <test name="counter_finish" datapath="counter_dp.xml" fsm="counter_fsm.xml"
        expect="finished" exit-code="0" cycles="11"/>
  <test name="counter_assert" datapath="counter_dp.xml" fsm="counter_free_fsm.xml"
        assert="counter.assert" expect="assertion-failed" fail-cycle="11"/>
  <test name="counter_budget" datapath="counter_dp.xml" fsm="counter_free_fsm.xml"
        max-cycles="100" expect="max-cycles" cycles="100"/>
</suite>
"""

COUNTER_ASSERT = """\
# the free-running counter passes 10 during cycle 11
always cnt <= 10
at 5 cnt.q 5
"""


def corpus_files() -> dict:
    """Every corpus file name -> text."""
    files = {}
    for stem, fn in DATAPATH_FILES.items():
        files[f"{stem}_dp.xml"] = emit_datapath(fn().build())
    for stem, fn in FSM_FILES.items():
        files[f"{stem}_fsm.xml"] = emit_fsm(fn().build())
    files["butterfly_rtg.xml"] = emit_rtg(butterfly_rtg())

    files["hamming_in.mem"] = dump_mem(MemoryImage(7, HAMMING_DEPTH, range(HAMMING_DEPTH)))
    files["hamming_out.golden.mem"] = dump_mem(
        MemoryImage(7, HAMMING_DEPTH, [hamming_oracle(x) for x in range(HAMMING_DEPTH)]))
    img = butterfly_input()
    files["butterfly_in.mem"] = dump_mem(
        MemoryImage(BF_WIDTH, BF_DEPTH, [p for row in img for p in row]))
    files["butterfly_out.golden.mem"] = dump_mem(
        MemoryImage(BF_WIDTH, BF_DEPTH, [p for row in butterfly_oracle(img) for p in row]))
    files["suite.xml"] = SUITE
    files["counter.assert"] = COUNTER_ASSERT
    return files


def write_corpus(directory):
    os.makedirs(directory, exist_ok=True)
    for name, text in corpus_files().items():
        with open(os.path.join(directory, name), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


if __name__ == "__main__":
    write_corpus(corpus_dir())
