"""Slow reference simulator used to cross-check the compiled kernel.

Each cycle it settles the combinational logic by re-evaluating every node
until nothing changes, in whatever order the netlist lists them, so it does
not depend on levelization or on the generated code.
"""

from __future__ import annotations

from . import operators as ops
from .errors import SimFault
from .expr import evaluate, variables
from .kernel import AssertionFailed, Finished, MaxCyclesReached, RuntimeFault
from .memimage import MemoryImage


class ReferenceSimulator:
    def __init__(self, design, memory_init=None, input_bindings=None):
        self.design = design
        dp = design.datapath
        memory_init = memory_init or {}
        input_bindings = input_bindings or {}
        self.regs = {op.id: op.attrs.get("init", 0) for op in dp.operators if op.kind == "reg"}
        self.mems = {}
        for op in dp.operators:
            if op.kind == "mem":
                img = memory_init.get(op.id) or MemoryImage(op.width, op.attrs["depth"])
                self.mems[op.id] = ops.MemoryModel(op.width, op.attrs["depth"], list(img.words),
                                                   op.attrs.get("latency", 1), name=op.id)
        self.inputs = {k: getattr(v, "bits", v) for k, v in input_bindings.items()}
        self.state = design.fsm.reset_state
        self.src = {}  # (owner, port) -> canonical signal name
        for op in dp.operators:
            for port, ref in op.inputs.items():
                self.src[(op.id, port)] = design.resolve(ref)
        self.comb = [op for op in dp.operators if not ops.is_sequential(op.kind, op.attrs)]

    def _read(self, val, op, port, default=0):
        key = self.src.get((op.id, port))
        return default if key is None else val[key]

    def _eval(self, op, val):
        if op.kind == "in":
            return self.inputs.get(op.id, 0)
        if op.kind == "mem":
            return self.mems[op.id].dout(self._read(val, op, "addr"))
        sig = ops.signature(op.kind, op.attrs)
        return ops.eval_comb(op.kind, op.width, [self._read(val, op, p) for p in sig.inputs],
                             op.attrs)

    def settle(self):
        """Return every signal's settled value for the current cycle."""
        dp, fsm = self.design.datapath, self.design.fsm
        val = {name: 0 for name in self.design.signals}
        st = fsm.state(self.state)
        defaults = {name: d.bits for name, _, d in fsm.outputs}
        for c in dp.controls:
            v = st.assigns.get(c.name)
            val[f"{c.name}.out"] = v.bits if v is not None else defaults[c.name]
        for op in dp.operators:
            if op.kind == "reg":
                val[f"{op.id}.q"] = self.regs[op.id]
            elif op.kind == "mem" and op.attrs.get("latency", 1) == 1:
                val[f"{op.id}.dout"] = self.mems[op.id].dout_reg
        nodes = list(reversed(self.comb))
        # faults on unsettled values are transient; only a fault at the fixpoint counts
        for _ in range(len(nodes) + len(dp.statuses) + 2):
            changed = False
            for op in nodes:
                try:
                    new = self._eval(op, val)
                except SimFault:
                    continue
                key = f"{op.id}.{op.output_port}"
                if val[key] != new:
                    val[key] = new
                    changed = True
            for s in dp.statuses:
                new = val[self.design.resolve(s.source)]
                if val[f"{s.name}.out"] != new:
                    val[f"{s.name}.out"] = new
                    changed = True
            if not changed:
                break
        else:
            raise RuntimeError("combinational logic did not settle")
        for op in nodes:
            self._eval(op, val)  # re-raises a persistent fault
        return val

    def edge(self, val):
        dp, fsm = self.design.datapath, self.design.fsm
        env = {s.name: val[f"{s.name}.out"] for s in dp.statuses}
        nxt = self.state
        for tr in fsm.state(self.state).transitions:
            if tr.cond is None or evaluate(tr.cond, env):
                nxt = tr.target
                break
        new_regs = {}
        for op in dp.operators:
            if op.kind == "reg":
                new_regs[op.id] = ops.reg_next(val[f"{op.id}.q"], self._read(val, op, "d"),
                                               self._read(val, op, "en", 1))
        for op in dp.operators:
            if op.kind == "mem":
                self.mems[op.id].clock(self._read(val, op, "addr"), self._read(val, op, "din"),
                                       self._read(val, op, "we"))
        self.regs.update(new_regs)
        self.state = nxt

    def run(self, max_cycles, always=()):
        """Returns (status, cycles, rows, final memories); ``always`` holds (Expr, text)."""
        rows = []
        cycle = 0
        while True:
            try:
                val = self.settle()
            except SimFault as f:
                return RuntimeFault(cycle, f.message, type(f).__name__), cycle + 1, rows, self._final()
            rows.append(val)
            for expr, text in always:
                env = {var: val[self.design.resolve(var)] for var in variables(expr)}
                if not evaluate(expr, env):
                    return AssertionFailed(cycle, text), cycle + 1, rows, self._final()
            code = self.design.fsm.state(self.state).exit_code
            if code is not None:
                return Finished(code), cycle + 1, rows, self._final()
            try:
                self.edge(val)
            except SimFault as f:
                return RuntimeFault(cycle, f.message, type(f).__name__), cycle + 1, rows, self._final()
            cycle += 1
            if cycle >= max_cycles:
                return MaxCyclesReached(), cycle, rows, self._final()

    def _final(self):
        return {k: MemoryImage(m.width, m.depth, m.words) for k, m in self.mems.items()}
