"""Reference oracles and the automated test-suite runner.

A suite manifest is XML::

    <suite name="corpus">
      <test name="hamming" datapath="hamming_dp.xml" fsm="hamming_fsm.xml"
            expect="finished" exit-code="0">
        <mem id="in_mem" file="hamming_in.mem"/>
        <golden id="out_mem" file="hamming_out.golden.mem"/>
      </test>
      <test name="split" rtg="butterfly_rtg.xml" expect="completed">
        <mem id="image_in" file="butterfly_in.mem"/>
        <golden id="image_out" file="butterfly_out.golden.mem"/>
      </test>
    </suite>

Paths are relative to the manifest. ``expect`` is one of ``finished``,
``max-cycles``, ``assertion-failed``, ``runtime-fault`` for single
configurations and ``completed``, ``reconfig-limit``, ``no-enabled-edge``,
``propagated-fault`` for RTG tests. Optional checks: ``exit-code``,
``cycles`` (total cycles) and ``fail-cycle``. For RTG tests ``<mem>`` and
``<golden>`` name shared memories.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

from .errors import ManifestError, ReconfigError
from .kernel import (
    AssertionFailed, Finished, MaxCyclesReached, RuntimeFault, SimOptions,
    parse_assertions, run,
)
from .memimage import MismatchReport, compare, read_mem_file
from .rtg import (
    COMPLETED, DEFAULT_RECONFIG_LIMIT, NO_ENABLED_EDGE, PROPAGATED_FAULT,
    RECONFIG_LIMIT, execute,
)
from .xmlio import load_configuration, load_rtg, parse_tree

log = logging.getLogger(__name__)


# -- oracles -----------------------------------------------------------------

DATA_POSITIONS = (3, 5, 6, 7)


def _bit(word, position):
    return (word >> (position - 1)) & 1


def hamming_encode(data: int) -> int:
    """Hamming(7,4) codeword, even parity; bit ``p-1`` holds position ``p``."""
    word = 0
    for i, pos in enumerate(DATA_POSITIONS):
        word |= ((data >> i) & 1) << (pos - 1)
    for parity in (1, 2, 4):
        covered = [p for p in range(1, 8) if p & parity and p != parity]
        if sum(_bit(word, p) for p in covered) % 2:
            word |= 1 << (parity - 1)
    return word


def hamming_oracle(word: int) -> int:
    """Correct up to one flipped bit in a 7-bit codeword and return its 4 data bits."""
    syndrome = 0
    for parity in (1, 2, 4):
        if sum(_bit(word, p) for p in range(1, 8) if p & parity) % 2:
            syndrome |= parity
    if syndrome:
        word ^= 1 << (syndrome - 1)
    return sum(_bit(word, pos) << i for i, pos in enumerate(DATA_POSITIONS))


def _butterfly_pairs(vec):
    out = []
    for a, b in zip(vec[0::2], vec[1::2]):
        out += [(a + b) & 0xFFFF, (a - b) & 0xFFFF]
    return out


def butterfly_oracle(image):
    """Two-pass 4x4 butterfly: (a+b, a-b) on adjacent pairs of each row, then of each column.

    ``image`` is a 4x4 nested list; results are 16-bit two's complement.
    """
    inter = [_butterfly_pairs(row) for row in image]
    cols = [_butterfly_pairs([inter[r][c] for r in range(4)]) for c in range(4)]
    return [[cols[c][r] for c in range(4)] for r in range(4)]


# -- manifests ---------------------------------------------------------------

CONFIG_EXPECT = {"finished": Finished, "max-cycles": MaxCyclesReached,
                 "assertion-failed": AssertionFailed, "runtime-fault": RuntimeFault}
RTG_EXPECT = {"completed": COMPLETED, "reconfig-limit": RECONFIG_LIMIT,
              "no-enabled-edge": NO_ENABLED_EDGE, "propagated-fault": PROPAGATED_FAULT}

_TEST_ATTRS = {"name", "datapath", "fsm", "rtg", "assert", "max-cycles", "max-reconfig",
               "expect", "exit-code", "cycles", "fail-cycle"}


@dataclass
class TestCase:
    name: str
    datapath: str | None = None
    fsm: str | None = None
    rtg: str | None = None
    mems: dict = field(default_factory=dict)     # memory id -> file
    goldens: dict = field(default_factory=dict)  # memory id -> file
    inputs: dict = field(default_factory=dict)
    assertions: str | None = None
    max_cycles: int | None = None
    max_reconfig: int = DEFAULT_RECONFIG_LIMIT
    expect: str = "finished"
    exit_code: int | None = None
    cycles: int | None = None
    fail_cycle: int | None = None

    __test__ = False  # not a pytest class


@dataclass
class SuiteManifest:
    name: str
    tests: list = field(default_factory=list)


def _int(node, name):
    text = node.attrs[name]
    try:
        return int(text, 0)
    except ValueError:
        raise ManifestError(f"<{node.tag}> {name}={text!r} is not an integer",
                            node.line, node.column) from None


def parse_manifest(text, base_dir=".") -> SuiteManifest:
    try:
        root = parse_tree(text)
    except ReconfigError as exc:
        raise ManifestError(exc.message, exc.line, exc.column) from None
    if root.tag != "suite":
        raise ManifestError(f"expected <suite> root, found <{root.tag}>", root.line, root.column)
    manifest = SuiteManifest(root.attrs.get("name", "suite"))
    seen = set()
    path = lambda p: os.path.join(base_dir, p)
    for node in root.children:
        if node.tag != "test":
            raise ManifestError(f"unexpected <{node.tag}>", node.line, node.column)
        unknown = set(node.attrs) - _TEST_ATTRS
        if unknown:
            raise ManifestError(f"unknown test attributes {sorted(unknown)}", node.line, node.column)
        name = node.attrs.get("name")
        if not name or name in seen:
            raise ManifestError(f"test name {name!r} missing or duplicated", node.line, node.column)
        seen.add(name)
        tc = TestCase(name)
        if "rtg" in node.attrs:
            tc.rtg = path(node.attrs["rtg"])
            tc.expect = node.attrs.get("expect", "completed")
            allowed = RTG_EXPECT
        elif "datapath" in node.attrs and "fsm" in node.attrs:
            tc.datapath = path(node.attrs["datapath"])
            tc.fsm = path(node.attrs["fsm"])
            tc.expect = node.attrs.get("expect", "finished")
            allowed = CONFIG_EXPECT
        else:
            raise ManifestError(f"test {name!r} needs rtg= or datapath= and fsm=",
                                node.line, node.column)
        if tc.expect not in allowed:
            raise ManifestError(f"test {name!r}: bad expect={tc.expect!r}", node.line, node.column)
        if "assert" in node.attrs:
            tc.assertions = path(node.attrs["assert"])
        for attr, dest in (("max-cycles", "max_cycles"), ("max-reconfig", "max_reconfig"),
                           ("exit-code", "exit_code"), ("cycles", "cycles"),
                           ("fail-cycle", "fail_cycle")):
            if attr in node.attrs:
                setattr(tc, dest, _int(node, attr))
        for child in node.children:
            if child.tag in ("mem", "golden") and set(child.attrs) == {"id", "file"}:
                target = tc.mems if child.tag == "mem" else tc.goldens
                target[child.attrs["id"]] = path(child.attrs["file"])
            elif child.tag == "input" and set(child.attrs) == {"name", "value"}:
                tc.inputs[child.attrs["name"]] = _int(child, "value")
            else:
                raise ManifestError(f"unexpected <{child.tag}> {sorted(child.attrs)} in test {name!r}",
                                    child.line, child.column)
        manifest.tests.append(tc)
    return manifest


def load_manifest(path) -> SuiteManifest:
    try:
        with open(path, "rb") as f:
            text = f.read()
    except OSError as exc:
        raise ManifestError(f"cannot read {path}: {exc.strerror}") from None
    return parse_manifest(text, os.path.dirname(os.path.abspath(path)))


# -- running -----------------------------------------------------------------

@dataclass
class TestResult:
    name: str
    passed: bool
    status: str = ""
    cycles: int = 0
    wall_time: float = 0.0
    mismatches: dict = field(default_factory=dict)  # golden id -> MismatchReport
    message: str = ""
    error: bool = False

    __test__ = False


def _shape_of(design, mem_id):
    op = design.datapath.operator(mem_id)
    if op is None or op.kind != "mem":
        raise ReconfigError(f"{design.config.id} has no memory {mem_id!r}")
    return op.width, op.attrs["depth"]


def _load_images(files, shape_of):
    return {mid: read_mem_file(f, *shape_of(mid)) for mid, f in files.items()}


def run_test(tc: TestCase) -> TestResult:
    t0 = time.perf_counter()
    try:
        if tc.rtg:
            result = _run_rtg_test(tc)
        else:
            result = _run_config_test(tc)
    except ReconfigError as exc:
        result = TestResult(tc.name, False, "error", message=str(exc), error=True)
    except OSError as exc:
        result = TestResult(tc.name, False, "error", message=f"{exc.filename}: {exc.strerror}",
                            error=True)
    result.wall_time = time.perf_counter() - t0
    return result


def _check_goldens(tc, result, finals, shape_of):
    for mid, f in tc.goldens.items():
        if mid not in finals:
            raise ReconfigError(f"golden names unknown memory {mid!r}")
        expected = read_mem_file(f, *shape_of(mid))
        report = compare(finals[mid], expected)
        if report:
            result.mismatches[mid] = report
            result.passed = False


def _run_config_test(tc):
    design = load_configuration(tc.datapath, tc.fsm, tc.name)
    shape_of = lambda mid: _shape_of(design, mid)
    opts = SimOptions(input_bindings=dict(tc.inputs))
    if tc.max_cycles is not None:
        opts.max_cycles = tc.max_cycles
    if tc.assertions:
        with open(tc.assertions, encoding="utf-8") as f:
            opts.assertions = parse_assertions(f.read())
    sim = run(design, _load_images(tc.mems, shape_of), opts)
    st = sim.status
    result = TestResult(tc.name, True, str(st), sim.cycles)
    problems = []
    if not isinstance(st, CONFIG_EXPECT[tc.expect]):
        problems.append(f"expected {tc.expect}, got {st}")
    if tc.exit_code is not None and getattr(st, "exit_code", None) != tc.exit_code:
        problems.append(f"expected exit code {tc.exit_code}")
    if tc.cycles is not None and sim.cycles != tc.cycles:
        problems.append(f"expected {tc.cycles} cycles, ran {sim.cycles}")
    if tc.fail_cycle is not None and getattr(st, "cycle", None) != tc.fail_cycle:
        problems.append(f"expected failure at cycle {tc.fail_cycle}")
    result.passed = not problems
    _check_goldens(tc, result, sim.final_memories, shape_of)
    result.message = "; ".join(problems)
    return result


def _run_rtg_test(tc):
    vrtg = load_rtg(tc.rtg)
    decl = {sm.id: sm for sm in vrtg.rtg.shared}

    def shape_of(mid):
        if mid not in decl:
            raise ReconfigError(f"no shared memory {mid!r}")
        return decl[mid].width, decl[mid].depth

    opts = {}
    if tc.max_cycles is not None:
        opts = {n.id: SimOptions(max_cycles=tc.max_cycles) for n in vrtg.rtg.nodes}
    report = execute(vrtg, _load_images(tc.mems, shape_of), opts,
                     reconfig_limit=tc.max_reconfig)
    cycles = sum(r.cycles for _, r in report.path)
    result = TestResult(tc.name, True, f"{report.status} [{report.format_path()}]", cycles)
    problems = []
    if report.status != RTG_EXPECT[tc.expect]:
        problems.append(f"expected {tc.expect}, got {report.status} {report.detail}".strip())
    if tc.cycles is not None and cycles != tc.cycles:
        problems.append(f"expected {tc.cycles} cycles, ran {cycles}")
    if tc.exit_code is not None:
        last = report.path[-1][1].status
        if getattr(last, "exit_code", None) != tc.exit_code:
            problems.append(f"expected final exit code {tc.exit_code}")
    result.passed = not problems
    _check_goldens(tc, result, report.final_shared, shape_of)
    result.message = "; ".join(problems)
    return result


@dataclass
class SuiteReport:
    name: str
    results: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def ok(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    def to_text(self):
        lines = []
        for r in self.results:
            verdict = "PASS" if r.passed else ("ERROR" if r.error else "FAIL")
            lines.append(f"{verdict:5} {r.name}  {r.status}  cycles={r.cycles} "
                         f"time={r.wall_time:.3f}s")
            if r.message:
                lines.append(f"      {r.message}")
            for mid, rep in r.mismatches.items():
                lines.append(f"      {mid}: " + rep.format().replace("\n", "\n      "))
        passed = sum(r.passed for r in self.results)
        lines.append(f"{passed}/{len(self.results)} passed in {self.wall_time:.3f}s")
        return "\n".join(lines) + "\n"

    def to_xml(self):
        """JUnit-style XML, which most CI systems can ingest."""
        fails = sum(1 for r in self.results if not r.passed and not r.error)
        errors = sum(1 for r in self.results if r.error)
        out = [f'<testsuite name={quoteattr(self.name)} tests="{len(self.results)}" '
               f'failures="{fails}" errors="{errors}" time="{self.wall_time:.6f}">']
        for r in self.results:
            head = (f"  <testcase name={quoteattr(r.name)} time=\"{r.wall_time:.6f}\" "
                    f"cycles=\"{r.cycles}\" status={quoteattr(r.status)}")
            if r.passed:
                out.append(head + "/>")
                continue
            out.append(head + ">")
            tag = "error" if r.error else "failure"
            body = "\n".join([r.message] + [f"{mid}: {rep.format()}"
                                            for mid, rep in r.mismatches.items()]).strip()
            mism = sum(rep.count for rep in r.mismatches.values())
            out.append(f"    <{tag} message={quoteattr(r.message or f'{mism} mismatches')}>"
                       f"{escape(body)}</{tag}>")
            out.append("  </testcase>")
        out.append("</testsuite>")
        return "\n".join(out) + "\n"


def run_suite(manifest: SuiteManifest, jobs=None) -> SuiteReport:
    """Run every test; results come back in manifest order."""
    t0 = time.perf_counter()
    report = SuiteReport(manifest.name)
    if not manifest.tests:
        log.warning("suite %r contains no tests", manifest.name)
    else:
        workers = max(1, jobs or os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report.results = list(pool.map(run_test, manifest.tests))
    report.wall_time = time.perf_counter() - t0
    return report


__all__ = [
    "hamming_encode", "hamming_oracle", "butterfly_oracle", "TestCase", "SuiteManifest",
    "parse_manifest", "load_manifest", "run_test", "run_suite", "SuiteReport", "TestResult",
    "MismatchReport",
]
