"""Cycle-based simulation of one elaborated configuration.

Each design is compiled once into two straight-line Python functions over a
flat value list: ``settle`` evaluates the combinational nodes in level order
and ``edge`` performs the clock edge (registers and memory ports). The FSM
is interpreted around them. One cycle is:

1. drive controls with the current state's Moore outputs and settle;
2. record probes, check assertions, halt if the state is final;
3. clock edge: take the first enabled transition, load registers, commit
   memory writes; the cycle counter advances.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from operator import itemgetter

from . import operators as ops
from .errors import (
    AddressOutOfRange, DanglingReference, DivideByZero, MuxIndexOutOfRange,
    ReconfigError, ShapeMismatch, SimFault,
)
from .expr import Expr, compile_expr, parse_expr, variables
from .memimage import MemoryImage

DEFAULT_MAX_CYCLES = 1_000_000


# -- options and results -----------------------------------------------------

@dataclass(frozen=True)
class CycleAssertion:
    cycle: int
    signal: str
    expected: int

    def __str__(self):
        return f"at {self.cycle} {self.signal} {self.expected:#x}"


@dataclass(frozen=True)
class AlwaysAssertion:
    expr: Expr
    text: str = ""

    def __str__(self):
        return f"always {self.text}"


def parse_assertions(text: str) -> list:
    """Read an assertion file.

    One assertion per line, ``#`` starts a comment::

        at 5 r1.q 3          # r1.q must equal 3 during cycle 5
        always cnt <= 10     # checked every cycle
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "always" and rest:
                out.append(AlwaysAssertion(parse_expr(rest), rest))
                continue
            if head == "at":
                cycle, signal, value = rest.split()
                out.append(CycleAssertion(int(cycle, 0), signal, int(value, 0)))
                continue
        except ReconfigError as exc:
            exc.line = lineno
            raise
        except ValueError:
            pass
        raise ReconfigError(f"malformed assertion {line!r}", lineno)
    return out


@dataclass
class SimOptions:
    max_cycles: int = DEFAULT_MAX_CYCLES
    probes: list = field(default_factory=list)
    trace_path: str | None = None
    assertions: list = field(default_factory=list)
    input_bindings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Finished:
    exit_code: int

    def __str__(self):
        return f"Finished({self.exit_code})"


@dataclass(frozen=True)
class MaxCyclesReached:
    def __str__(self):
        return "MaxCyclesReached"


@dataclass(frozen=True)
class AssertionFailed:
    cycle: int
    which: str

    def __str__(self):
        return f"AssertionFailed({self.cycle}: {self.which})"


@dataclass(frozen=True)
class RuntimeFault:
    cycle: int
    fault: str
    kind: str = ""

    def __str__(self):
        return f"RuntimeFault({self.cycle}: {self.kind}: {self.fault})"


@dataclass
class Trace:
    signals: list
    widths: list
    rows: list = field(default_factory=list)  # (cycle, v0, v1, ...)

    def to_csv(self, f):
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["cycle"] + list(self.signals))
        digits = [(x + 3) // 4 for x in self.widths]
        for row in self.rows:
            w.writerow([row[0]] + [f"{val:0{d}x}" for val, d in zip(row[1:], digits)])

    def column(self, signal):
        i = self.signals.index(signal) + 1
        return [row[i] for row in self.rows]


@dataclass
class SimStats:
    op_evals: int = 0
    wall_time: float = 0.0

    @property
    def evals_per_second(self):
        return self.op_evals / self.wall_time if self.wall_time > 0 else float("inf")


@dataclass
class SimResult:
    status: object
    cycles: int
    final_memories: dict
    trace: Trace | None
    stats: SimStats

    @property
    def ok(self):
        return isinstance(self.status, Finished)


# -- compilation -------------------------------------------------------------

class Program:
    """Compiled form of an :class:`ElaboratedDesign`; shared by all its runs."""

    def __init__(self, design):
        self.design = design
        dp, fsm = design.datapath, design.fsm
        self.slots = {name: i for i, name in enumerate(design.signals)}
        self.n_controls = len(dp.controls)
        self.mem_ops = design.memories()
        self.mem_index = {op.id: k for k, op in enumerate(self.mem_ops)}

        # sources written once per run
        self.fixed = []
        for op in dp.operators:
            if op.kind == "const":
                self.fixed.append((self._out(op), op.attrs["value"]))
            elif op.kind == "reg":
                self.fixed.append((self._out(op), op.attrs.get("init", 0)))

        settle_src, self.comb_ops = self._settle_source()
        edge_src, self.seq_ops = self._edge_source()
        ns = {"DivideByZero": DivideByZero, "MuxIndexOutOfRange": MuxIndexOutOfRange,
              "AddressOutOfRange": AddressOutOfRange}
        exec(compile(settle_src + edge_src, f"<design {design.config.id}>", "exec"), ns)
        self.settle = ns["settle"]
        self.edge = ns["edge"]
        self.source = settle_src + edge_src

        names = [s.name for s in fsm.states]
        self.state_index = {n: i for i, n in enumerate(names)}
        self.state_names = names
        ctl_order = [c.name for c in dp.controls]
        defaults = {name: d.bits for name, _, d in fsm.outputs}
        self.moore = []
        self.final = []
        self.transitions = []
        status_slot = {s.name: self.slots[f"{s.name}.out"] for s in dp.statuses}
        for st in fsm.states:
            vals = dict(defaults)
            vals.update({k: val.bits for k, val in st.assigns.items()})
            self.moore.append([vals[c] for c in ctl_order])
            self.final.append(st.exit_code)
            self.transitions.append([
                (None if tr.cond is None else compile_expr(tr.cond, status_slot.__getitem__),
                 self.state_index[tr.target])
                for tr in st.transitions])
        self.reset = self.state_index[fsm.reset_state]

    def _out(self, op):
        return self.slots[f"{op.id}.{op.output_port}"]

    def _in(self, op, port):
        ref = op.inputs.get(port)
        return None if ref is None else self.slots[self.design.resolve(ref)]

    def _settle_source(self):
        dp = self.design.datapath
        statuses = {s.name: s for s in dp.statuses}
        lines = ["def settle(v, m):"]
        count = 0
        for name in self.design.order:
            if name in statuses:
                st = statuses[name]
                lines.append(f"    v[{self.slots[name + '.out']}] = "
                             f"v[{self.slots[self.design.resolve(st.source)]}]")
                continue
            op = dp.operator(name)
            if op.kind in ("const", "in"):
                continue
            count += 1
            lines.extend("    " + ln for ln in self._comb_lines(op))
        lines.append("    return")
        return "\n".join(lines) + "\n", count

    def _comb_lines(self, op):
        k, w = op.kind, op.width
        o = self._out(op)
        M = ops.mask(w)
        H = 1 << (w - 1)
        a = self._in(op, "a")
        b = self._in(op, "b")
        where = repr(op.id)
        simple = {
            "add": f"(v[{a}] + v[{b}]) & {M}",
            "sub": f"(v[{a}] - v[{b}]) & {M}",
            "mul": f"(v[{a}] * v[{b}]) & {M}",
            "and": f"v[{a}] & v[{b}]",
            "or": f"v[{a}] | v[{b}]",
            "xor": f"v[{a}] ^ v[{b}]",
            "neg": f"-v[{a}] & {M}",
            "not": f"v[{a}] ^ {M}",
            "shl": f"(v[{a}] << (v[{b}] % {w})) & {M}",
            "shr": f"v[{a}] >> (v[{b}] % {w})",
            "asr": f"(((v[{a}] ^ {H}) - {H}) >> (v[{b}] % {w})) & {M}",
            "eq": f"1 if v[{a}] == v[{b}] else 0",
            "ne": f"1 if v[{a}] != v[{b}] else 0",
            "ltu": f"1 if v[{a}] < v[{b}] else 0",
            "leu": f"1 if v[{a}] <= v[{b}] else 0",
            "gtu": f"1 if v[{a}] > v[{b}] else 0",
            "geu": f"1 if v[{a}] >= v[{b}] else 0",
            # signed order is unsigned order of the sign-flipped encodings
            "lts": f"1 if (v[{a}] ^ {H}) < (v[{b}] ^ {H}) else 0",
            "les": f"1 if (v[{a}] ^ {H}) <= (v[{b}] ^ {H}) else 0",
            "gts": f"1 if (v[{a}] ^ {H}) > (v[{b}] ^ {H}) else 0",
            "ges": f"1 if (v[{a}] ^ {H}) >= (v[{b}] ^ {H}) else 0",
            "out": f"v[{a}]",
        }
        if k in simple:
            return [f"v[{o}] = {simple[k]}"]
        if k in ("div", "rem"):
            sym = "//" if k == "div" else "%"
            return [f"if not v[{b}]: raise DivideByZero({where} + ': divisor is zero')",
                    f"v[{o}] = v[{a}] {sym} v[{b}]"]
        if k == "mux":
            arity = op.attrs["arity"]
            sel = self._in(op, "sel")
            choices = tuple(self._in(op, f"in{i}") for i in range(arity))
            out = []
            if arity < 1 << ops.clog2(arity):
                out.append(f"if v[{sel}] >= {arity}: raise MuxIndexOutOfRange("
                           f"{where} + ': select %d with arity {arity}' % v[{sel}])")
            if arity == 2:
                out.append(f"v[{o}] = v[{choices[1]}] if v[{sel}] else v[{choices[0]}]")
            else:
                out.append(f"v[{o}] = v[{choices}[v[{sel}]]]")
            return out
        if k == "mem":
            return self._mem_read_lines(op, o)
        raise AssertionError(k)

    def _addr_check(self, op, addr_expr):
        depth = op.attrs["depth"]
        if depth == 1 << ops.clog2(depth):
            return []
        return [f"if {addr_expr} >= {depth}: raise AddressOutOfRange("
                f"{op.id!r} + ': address %d >= depth {depth}' % {addr_expr})"]

    def _mem_read_lines(self, op, o):
        k = self.mem_index[op.id]
        addr = self._in(op, "addr")
        return self._addr_check(op, f"v[{addr}]") + [f"v[{o}] = m[{k}][v[{addr}]]"]

    def _edge_source(self):
        dp = self.design.datapath
        temps, writes, commits = [], [], []
        count = 0
        for op in dp.operators:
            if op.kind == "reg":
                count += 1
                q, d, en = self._out(op), self._in(op, "d"), self._in(op, "en")
                t = f"t{len(commits)}"
                if en is None:
                    temps.append(f"{t} = v[{d}]")
                else:
                    temps.append(f"{t} = v[{d}] if v[{en}] else v[{q}]")
                commits.append(f"v[{q}] = {t}")
            elif op.kind == "mem":
                count += 1
                k = self.mem_index[op.id]
                addr, din, we = self._in(op, "addr"), self._in(op, "din"), self._in(op, "we")
                data = "0" if din is None else f"v[{din}]"
                if op.attrs.get("latency", 1) == 1:
                    t = f"t{len(commits)}"
                    temps.extend(self._addr_check(op, f"v[{addr}]"))
                    temps.append(f"{t} = m[{k}][v[{addr}]]")
                    commits.append(f"v[{self._out(op)}] = {t}")
                    if we is not None:
                        writes.append(f"if v[{we}]: m[{k}][v[{addr}]] = {data}")
                elif we is not None:
                    # latency-0 address was range-checked during settle
                    writes.append(f"if v[{we}]: m[{k}][v[{addr}]] = {data}")
        body = temps + writes + commits or ["pass"]
        return "def edge(v, m):\n" + "".join(f"    {ln}\n" for ln in body), count


def program_for(design) -> Program:
    if design._program is None:
        design._program = Program(design)
    return design._program


# -- execution ---------------------------------------------------------------

class Simulation:
    """Mutable state of one run. Use :func:`run` unless stepping by hand."""

    def __init__(self, design, memory_init=None, opts=None):
        self.design = design
        self.opts = opts = opts or SimOptions()
        if opts.max_cycles < 1:
            raise ReconfigError("max_cycles must be >= 1")
        prog = self.program = program_for(design)
        self.v = v = [0] * len(prog.slots)
        for slot, val in prog.fixed:
            v[slot] = val

        for name, val in opts.input_bindings.items():
            op = design.datapath.operator(name)
            if op is None or op.kind != "in":
                raise DanglingReference(f"no 'in' operator named {name!r}")
            bits = getattr(val, "bits", val)
            if not 0 <= bits < 1 << op.width:
                raise ReconfigError(f"input {name}={bits} does not fit {op.width} bits")
            v[prog.slots[f"{name}.out"]] = bits

        memory_init = memory_init or {}
        for name in memory_init:
            if name not in prog.mem_index:
                raise DanglingReference(f"no memory operator named {name!r}")
        self.mems = []
        for op in prog.mem_ops:
            img = memory_init.get(op.id)
            shape = (op.width, op.attrs["depth"])
            if img is None:
                self.mems.append([0] * shape[1])
            elif img.shape != shape:
                raise ShapeMismatch(f"image for {op.id} is {img.width}x{img.depth}, "
                                    f"memory is {shape[0]}x{shape[1]}")
            else:
                self.mems.append(list(img.words))

        self.cycle = 0
        self.state = prog.reset
        self.status = None
        self.op_evals = 0

        names = opts.probes or (list(design.signals) if opts.trace_path else [])
        probes = [design.resolve(p) for p in names]
        self.trace = None
        if probes:
            slots = [prog.slots[p] for p in probes]
            self.trace = Trace(probes, [design.signals[p] for p in probes])
            self._probe = (itemgetter(*slots) if len(slots) > 1
                           else (lambda vals, s=slots[0]: (vals[s],)))

        self._at = {}
        self._always = []
        for a in opts.assertions:
            if isinstance(a, CycleAssertion):
                sig = design.resolve(a.signal)
                if not 0 <= a.expected < 1 << design.signals[sig]:
                    raise ReconfigError(f"{a}: expected value does not fit {sig}")
                self._at.setdefault(a.cycle, []).append((prog.slots[sig], a.expected, str(a)))
            else:
                for var in variables(a.expr):
                    design.resolve(var)
                slot_of = lambda name: prog.slots[design.resolve(name)]
                self._always.append((compile_expr(a.expr, slot_of), str(a)))

    def value(self, signal) -> int:
        """Current value of a signal.

        Combinational values are from the last settle; register and memory
        outputs already reflect the clock edge that followed it.
        """
        return self.v[self.program.slots[self.design.resolve(signal)]]

    @property
    def state_name(self):
        return self.program.state_names[self.state]

    def step(self):
        """Execute one cycle. Returns the halting status, or None to continue."""
        if self.status is not None:
            return self.status
        prog, v, c, s = self.program, self.v, self.cycle, self.state
        try:
            if prog.n_controls:
                v[:prog.n_controls] = prog.moore[s]
            prog.settle(v, self.mems)
            self.op_evals += prog.comb_ops
            if self.trace is not None:
                self.trace.rows.append((c,) + self._probe(v))
            for slot, expected, text in self._at.get(c, ()):
                if v[slot] != expected:
                    return self._halt(AssertionFailed(c, f"{text}, got {v[slot]:#x}"))
            for check, text in self._always:
                if not check(v):
                    return self._halt(AssertionFailed(c, text))
            code = prog.final[s]
            if code is not None:
                return self._halt(Finished(code))
            nxt = s
            for guard, target in prog.transitions[s]:
                if guard is None or guard(v):
                    nxt = target
                    break
            prog.edge(v, self.mems)
            self.op_evals += prog.seq_ops
        except SimFault as fault:
            return self._halt(RuntimeFault(c, fault.message, type(fault).__name__))
        self.state = nxt
        self.cycle = c + 1
        if self.cycle >= self.opts.max_cycles:
            self.status = MaxCyclesReached()
        return self.status

    def _halt(self, status):
        self.cycle += 1
        self.status = status
        return status

    def final_memories(self):
        return {op.id: MemoryImage(op.width, op.attrs["depth"], words)
                for op, words in zip(self.program.mem_ops, self.mems)}

    def run(self) -> SimResult:
        t0 = time.perf_counter()
        step = self.step
        while step() is None:
            pass
        wall = time.perf_counter() - t0
        if self.opts.trace_path and self.trace is not None:
            with open(self.opts.trace_path, "w", encoding="utf-8", newline="") as f:
                self.trace.to_csv(f)
        return SimResult(self.status, self.cycle, self.final_memories(), self.trace,
                         SimStats(self.op_evals, wall))


def run(design, memory_init=None, opts=None) -> SimResult:
    """Simulate ``design`` until it finishes, faults, fails an assertion or runs out of cycles."""
    return Simulation(design, memory_init, opts).run()
