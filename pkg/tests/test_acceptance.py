"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line which the conftest hook prints at the end
of the run; ``python tests/test_acceptance.py`` runs them standalone.
"""

import os
import random
import shutil
import sys
import tempfile
import time

import pydot
import pytest

from reconfigsim.cli import main as cli_main
from reconfigsim.designs import CONFIGS, butterfly_input, corpus_dir, corpus_configuration
from reconfigsim.dot import datapath_to_dot, fsm_to_dot, rtg_to_dot
from reconfigsim.generate import random_configuration, random_memory_init, throughput_configuration
from reconfigsim.harness import hamming_oracle
from reconfigsim.kernel import Finished, SimOptions, run
from reconfigsim.memimage import MemoryImage, dump_mem, load_mem, read_mem_file
from reconfigsim.model import elaborate
from reconfigsim.operators import eval_comb
from reconfigsim.reference import ReferenceSimulator
from reconfigsim.rtg import COMPLETED, execute
from reconfigsim.xmlio import emit_datapath, emit_fsm, emit_rtg, load_rtg, parse_datapath, parse_fsm, parse_rtg

RESULTS = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of the calling test under its criterion number."""
    number = int(request.node.name.split("_")[1])
    info = {"detail": ""}
    yield info
    rep = getattr(request.node, "rep_call", None)
    RESULTS[number] = (rep is not None and rep.passed, info["detail"])


def _c(*parts):
    return os.path.join(corpus_dir(), *parts)


def test_1_hamming_exhaustive(criterion):
    t0 = time.perf_counter()
    d = elaborate(corpus_configuration("hamming"))
    res = run(d, {"in_mem": MemoryImage(7, 128, list(range(128)))})
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"{res.status}, {elapsed:.2f}s"
    assert isinstance(res.status, Finished)
    assert res.final_memories["out_mem"].words == [hamming_oracle(w) for w in range(128)]
    assert elapsed < 5


def test_2_split_equivalence(criterion):
    t0 = time.perf_counter()
    flat = MemoryImage(16, 16, [p for row in butterfly_input() for p in row])
    single = run(elaborate(corpus_configuration("butterfly_single")), {"in_mem": flat})
    report = execute(load_rtg(_c("butterfly_rtg.xml")), {"image_in": flat})
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"{report.format_path()}, {elapsed:.2f}s"
    assert single.status == Finished(0) and report.status == COMPLETED
    assert report.final_shared["image_out"].words == single.final_memories["out_mem"].words
    assert elapsed < 5


def test_3_kernel_vs_reference(criterion):
    t0 = time.perf_counter()
    cycles = 16
    for seed in range(200):
        rng = random.Random(seed)
        d = elaborate(random_configuration(rng, max_ops=30, max_width=8))
        init = random_memory_init(rng, d)
        signals = list(d.signals)
        fast = run(d, init, SimOptions(max_cycles=cycles, probes=signals))
        ref_status, ref_cycles, ref_rows, ref_mems = ReferenceSimulator(d, init).run(cycles)
        assert fast.status == ref_status, seed
        assert fast.cycles == ref_cycles, seed
        assert len(fast.trace.rows) == len(ref_rows), seed
        for row, ref in zip(fast.trace.rows, ref_rows):
            assert list(row[1:]) == [ref[s] for s in signals], (seed, row[0])
        assert fast.final_memories == ref_mems, seed
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"200 netlists x {cycles} cycles, {elapsed:.2f}s"
    assert elapsed < 30


def _signed(x, w):
    return x - (1 << w) if x >> (w - 1) else x


# Arbitrary-precision reference: exact integer result, then reduced mod 2**w.
REFERENCE = {
    "add": lambda a, b, w: a + b,
    "sub": lambda a, b, w: a - b,
    "mul": lambda a, b, w: a * b,
    "div": lambda a, b, w: a // b,
    "rem": lambda a, b, w: a % b,
    "and": lambda a, b, w: a & b,
    "or": lambda a, b, w: a | b,
    "xor": lambda a, b, w: a ^ b,
    "neg": lambda a, b, w: -a,
    "not": lambda a, b, w: ~a,
    "shl": lambda a, b, w: a * 2 ** (b % w),
    "shr": lambda a, b, w: a // 2 ** (b % w),
    "asr": lambda a, b, w: _signed(a, w) // 2 ** (b % w),
    "eq": lambda a, b, w: int(a == b),
    "ne": lambda a, b, w: int(a != b),
    "ltu": lambda a, b, w: int(a < b),
    "leu": lambda a, b, w: int(a <= b),
    "gtu": lambda a, b, w: int(a > b),
    "geu": lambda a, b, w: int(a >= b),
    "lts": lambda a, b, w: int(_signed(a, w) < _signed(b, w)),
    "les": lambda a, b, w: int(_signed(a, w) <= _signed(b, w)),
    "gts": lambda a, b, w: int(_signed(a, w) > _signed(b, w)),
    "ges": lambda a, b, w: int(_signed(a, w) >= _signed(b, w)),
}
UNARY = {"neg", "not"}


def test_4_arithmetic_oracle(criterion):
    samples = 10_000
    rng = random.Random(4)
    for kind, ref in REFERENCE.items():
        for i in range(samples):
            w = rng.randint(1, 64)
            # bias towards edge values every fourth sample
            pick = (lambda: rng.choice([0, 1, (1 << w) - 1, 1 << (w - 1)])) if i % 4 == 0 \
                else (lambda: rng.randrange(1 << w))
            a, b = pick(), pick()
            if kind in ("div", "rem") and b == 0:
                b = 1
            args = [a] if kind in UNARY else [a, b]
            expected = ref(a, b, w) % (1 << w)
            assert eval_comb(kind, w, args) == expected, (kind, w, a, b)
    criterion["detail"] = f"{len(REFERENCE)} kinds x {samples} samples"


def test_5_throughput(criterion):
    d = elaborate(throughput_configuration())
    res = run(d, opts=SimOptions(max_cycles=50_000))
    wall, rate = res.stats.wall_time, res.stats.evals_per_second
    criterion["detail"] = (f"{len(d.datapath.operators)} operators, 50000 cycles in {wall:.2f}s, "
                           f"{rate:,.0f} evals/s")
    assert res.cycles == 50_000
    assert 160 <= len(d.datapath.operators) <= 180
    assert wall < 10
    assert rate >= 1e6


def test_6_stop_and_assert(criterion, capsys):
    args = ["sim", "--datapath", _c("counter_dp.xml"), "--fsm", _c("counter_free_fsm.xml")]
    rc_assert = cli_main(args + ["--assert", _c("counter.assert")])
    out_assert = capsys.readouterr().out
    rc_budget = cli_main(args + ["--max-cycles", "100"])
    out_budget = capsys.readouterr().out
    criterion["detail"] = f"assert exit {rc_assert}, budget exit {rc_budget}"
    assert rc_assert == 1
    assert "status: AssertionFailed(11: always cnt <= 10)" in out_assert
    assert rc_budget == 3
    assert "status: MaxCyclesReached" in out_budget and "cycles: 100" in out_budget


def test_7_round_trips(criterion):
    rng = random.Random(7)
    for _ in range(100):
        w, depth = rng.randint(1, 64), rng.randint(1, 300)
        img = MemoryImage(w, depth, [rng.randrange(1 << w) for _ in range(depth)])
        assert load_mem(dump_mem(img), w, depth) == img
    n = 0
    for name, (dp_fn, fsm_fn) in CONFIGS.items():
        dp, fsm = dp_fn().build(), fsm_fn().build()
        assert parse_datapath(emit_datapath(dp)) == dp, name
        assert parse_fsm(emit_fsm(fsm)) == fsm, name
        n += 1
    with open(_c("butterfly_rtg.xml"), "rb") as f:
        rtg = parse_rtg(f.read())
    assert parse_rtg(emit_rtg(rtg)) == rtg
    criterion["detail"] = f"100 images, {n} configurations, 1 RTG"


def _dot_counts(text):
    graphs = pydot.graph_from_dot_data(text)
    assert graphs and len(graphs) == 1
    g = graphs[0]
    nodes = [x for x in g.get_nodes() if x.get_name() not in ("node", "edge", "graph")]
    return len(nodes), len(g.get_edges())


def test_8_dot_validity(criterion):
    checked = 0
    for name, (dp_fn, fsm_fn) in CONFIGS.items():
        dp, fsm = dp_fn().build(), fsm_fn().build()
        assert _dot_counts(datapath_to_dot(dp)) == (
            len(dp.operators) + len(dp.controls) + len(dp.statuses),
            sum(len(op.inputs) for op in dp.operators) + len(dp.statuses)), name
        assert _dot_counts(fsm_to_dot(fsm)) == (
            len(fsm.states), sum(len(s.transitions) for s in fsm.states)), name
        checked += 2
    with open(_c("butterfly_rtg.xml"), "rb") as f:
        rtg = parse_rtg(f.read())
    assert _dot_counts(rtg_to_dot(rtg)) == (
        len(rtg.nodes) + len(rtg.shared),
        len(rtg.edges) + sum(len(sm.bindings) for sm in rtg.shared))
    criterion["detail"] = f"{checked + 1} documents"


def test_9_suite_automation(criterion, capsys):
    assert cli_main(["suite", _c("suite.xml")]) == 0
    out = capsys.readouterr().out
    assert "6/6 passed" in out
    goldens = {"hamming_out.golden.mem": (7, 128), "butterfly_out.golden.mem": (16, 16)}
    rng = random.Random(9)
    flips = 0
    for golden, (width, depth) in goldens.items():
        for _ in range(3):
            with tempfile.TemporaryDirectory() as tmp:
                work = os.path.join(tmp, "corpus")
                shutil.copytree(corpus_dir(), work)
                path = os.path.join(work, golden)
                img = read_mem_file(path, width, depth)
                addr = rng.randrange(depth)
                img.words[addr] ^= 1 << rng.randrange(width)
                with open(path, "w") as f:
                    f.write(dump_mem(img))
                assert cli_main(["suite", os.path.join(work, "suite.xml")]) == 1
                out = capsys.readouterr().out
                fail_lines = [ln for ln in out.splitlines() if ln.startswith("FAIL")]
                assert fail_lines
                reports = [ln for ln in out.splitlines() if ln.strip().endswith(": 1 mismatches")]
                assert len(reports) == len(fail_lines), out
                assert f"@{addr:x}:" in out
                flips += 1
    criterion["detail"] = f"clean run exit 0, {flips} perturbed goldens exit 1"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
