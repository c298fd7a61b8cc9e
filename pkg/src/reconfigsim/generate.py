"""Programmatic construction of designs: builders and random/benchmark generators."""

from __future__ import annotations

import random
from collections import defaultdict

from . import operators as ops
from .expr import parse_expr
from .model import (
    ConfigurationSpec, Control, DatapathSpec, FsmSpec, OperatorInstance, SignalRef,
    StateSpec, Status, Transition, Value,
)


class DatapathBuilder:
    """Accumulates operators; inputs are given positionally in signature order.

    >>> b = DatapathBuilder("demo")
    >>> one = b.const(4, 1)
    >>> cnt = b.op("reg", 4, id="cnt")
    >>> b.bind(cnt, "d", b.op("add", 4, cnt, one))
    """

    def __init__(self, name):
        self.name = name
        self.controls = []
        self.statuses = []
        self.operators = {}
        self._consts = {}
        self._n = 0

    def _fresh(self, kind):
        self._n += 1
        return f"{kind}{self._n}"

    def control(self, name, width):
        self.controls.append(Control(name, width))
        return name

    def status(self, name, width, source):
        self.statuses.append(Status(name, width, SignalRef.parse(source)))
        return name

    def const(self, width, value):
        key = (width, value)
        if key not in self._consts:
            self._consts[key] = self.op("const", width, id=f"c{width}_{value}", value=value)
        return self._consts[key]

    def op(self, kind, width, *inputs, id=None, **attrs):
        ident = id or self._fresh(kind)
        for name, (required, default) in ops.ATTRS.get(kind, {}).items():
            if not required:
                attrs.setdefault(name, default)
        sig = ops.signature(kind, attrs)
        ports = sig.inputs + sig.optional
        bound = {p: SignalRef.parse(src) for p, src in zip(ports, inputs) if src is not None}
        self.operators[ident] = OperatorInstance(ident, kind, width, attrs, bound)
        return ident

    def bind(self, ident, port, source):
        self.operators[ident].inputs[port] = SignalRef.parse(source)

    def build(self) -> DatapathSpec:
        out = []
        for op in self.operators.values():
            sig = ops.signature(op.kind, op.attrs)
            order = [p for p in sig.inputs + sig.optional if p in op.inputs]
            out.append(OperatorInstance(op.id, op.kind, op.width, dict(op.attrs),
                                        {p: op.inputs[p] for p in order}))
        return DatapathSpec(self.name, out, list(self.controls), list(self.statuses))


class FsmBuilder:
    def __init__(self, name, reset):
        self.name = name
        self.reset = reset
        self.inputs = []
        self.outputs = []
        self.states = []

    def input(self, name, width):
        self.inputs.append((name, width))

    def output(self, name, width, default=0):
        self.outputs.append((name, width, Value(default, width)))

    def state(self, name, assigns=None, transitions=(), final=None):
        widths = {n: w for n, w, _ in self.outputs}
        values = {k: Value(v, widths[k]) for k, v in (assigns or {}).items()}
        trs = [Transition(None if cond is None else parse_expr(cond), target, cond)
               for cond, target in transitions]
        self.states.append(StateSpec(name, values, trs, final))

    def build(self) -> FsmSpec:
        return FsmSpec(self.name, self.reset, list(self.inputs), list(self.outputs),
                       list(self.states))


def configuration(config_id, dp_builder, fsm_builder):
    return ConfigurationSpec(config_id, dp_builder.build(), fsm_builder.build())


# -- random acyclic netlists -------------------------------------------------

_RANDOM_KINDS = (
    ["add", "sub", "mul", "and", "or", "xor", "neg", "not", "shl", "shr", "asr"] * 3
    + list(ops.COMPARES) + ["mux", "mux", "div", "rem", "out", "in", "mem"]
)


def random_configuration(rng: random.Random, max_ops=30, max_width=8, name="rand"):
    """A random single-clock design with an FSM; acyclic by construction.

    Combinational operators only read signals created before them (or
    sequential outputs/controls), so the combinational graph is a DAG.
    """
    b = DatapathBuilder(name)
    pool = defaultdict(list)  # width -> signals readable in the same cycle
    n_ops = rng.randint(4, max_ops)
    width = lambda: rng.randint(1, max_width)

    def pick(w):
        if not pool[w] or rng.random() < 0.1:
            pool[w].append(b.const(w, rng.randrange(1 << w)))
        return rng.choice(pool[w])

    for i in range(rng.randint(1, 2)):
        w = width()
        pool[w].append(b.control(f"ctl{i}", w))
    regs = []
    for i in range(rng.randint(1, 4)):
        w = width()
        r = b.op("reg", w, id=f"r{i}", init=rng.randrange(1 << w))
        regs.append((r, w))
        pool[w].append(r)
    mems = []

    while len(b.operators) < n_ops:
        kind = rng.choice(_RANDOM_KINDS)
        w = width()
        if kind == "in":
            pool[w].append(b.op("in", w))
        elif kind == "out":
            b.op("out", w, pick(w))
        elif kind == "mem":
            k = rng.randint(1, 3)
            m = b.op("mem", w, pick(k), id=f"m{len(mems)}", depth=1 << k,
                     latency=rng.randint(0, 1))
            mems.append((m, w))
            pool[w].append(m)
        elif kind == "mux":
            arity = rng.choice((2, 2, 4))
            sel = pick(ops.clog2(arity))
            pool[w].append(b.op("mux", w, sel, *[pick(w) for _ in range(arity)], arity=arity))
        elif kind in ("div", "rem"):
            divisor = b.op("or", w, pick(w), b.const(w, 1))
            pool[w].append(b.op(kind, w, pick(w), divisor))
        elif kind in ("neg", "not"):
            pool[w].append(b.op(kind, w, pick(w)))
        elif kind in ops.COMPARES:
            pool[1].append(b.op(kind, w, pick(w), pick(w)))
        else:
            pool[w].append(b.op(kind, w, pick(w), pick(w)))

    for r, w in regs:
        b.bind(r, "d", pick(w))
        if rng.random() < 0.7:
            b.bind(r, "en", pick(1))
    for m, w in mems:
        if rng.random() < 0.8:
            b.bind(m, "din", pick(w))
            b.bind(m, "we", pick(1))

    n_status = rng.randint(1, 2)
    for i in range(n_status):
        b.status(f"st{i}", 1, pick(1))

    f = FsmBuilder(name, "S0")
    for i in range(n_status):
        f.input(f"st{i}", 1)
    for c in b.controls:
        f.output(c.name, c.width, rng.randrange(1 << c.width))
    n_states = rng.randint(2, 3)
    has_final = rng.random() < 0.5
    for s in range(n_states):
        assigns = {c.name: rng.randrange(1 << c.width)
                   for c in b.controls if rng.random() < 0.6}
        final = rng.randint(0, 3) if has_final and s == n_states - 1 else None
        transitions = []
        if final is None:
            for _ in range(rng.randint(0, 2)):
                var = f"st{rng.randrange(n_status)}"
                cond = rng.choice([f"{var} == 1", f"!{var}", f"{var} != 0 && st0 == 0",
                                   f"{var} || st0"])
                transitions.append((cond, f"S{rng.randrange(n_states)}"))
            if rng.random() < 0.5:
                transitions.append((None, f"S{rng.randrange(n_states)}"))
        f.state(f"S{s}", assigns, transitions, final)
    return configuration(name, b, f)


def random_memory_init(rng, design):
    from .memimage import MemoryImage
    out = {}
    for op in design.memories():
        depth = op.attrs["depth"]
        out[op.id] = MemoryImage(op.width, depth,
                                 [rng.randrange(1 << op.width) for _ in range(depth)])
    return out


# -- throughput benchmark -----------------------------------------------------

def throughput_configuration(n_ops=170, width=16, seed=1):
    """A free-running design of about ``n_ops`` operators that never halts.

    A bank of registers is mixed by layers of arithmetic, logic and mux
    operators and fed back, so every operator is live every cycle.
    """
    rng = random.Random(seed)
    b = DatapathBuilder("throughput")
    b.control("en", 1)
    regs = [b.op("reg", width, id=f"acc{i}", init=rng.randrange(1 << width)) for i in range(12)]
    live = list(regs) + [b.const(width, rng.randrange(1 << width)) for _ in range(4)]
    kinds = ["add", "sub", "xor", "mul", "and", "or", "shr", "shl", "add", "xor"]
    flag = None
    while len(b.operators) < n_ops - 2:
        k = rng.choice(kinds + ["mux", "ltu"])
        a, c = rng.sample(live[-24:], 2)
        if k == "ltu":
            flag = b.op("ltu", width, a, c)
        elif k == "mux" and flag is not None:
            live.append(b.op("mux", width, flag, a, c, arity=2))
        elif k != "mux":
            live.append(b.op(k, width, a, c))
    for i, r in enumerate(regs):
        b.bind(r, "d", live[-1 - i])
        b.bind(r, "en", "en")
    b.status("hot", 1, b.op("eq", width, live[-1], regs[0]))
    f = FsmBuilder("throughput", "RUN")
    f.input("hot", 1)
    f.output("en", 1, 1)
    f.state("RUN", transitions=[("hot == 1", "RUN")])
    return configuration("throughput", b, f)
