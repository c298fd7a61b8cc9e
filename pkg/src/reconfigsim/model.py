"""Design data model and elaboration."""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field

from . import operators as ops
from .errors import (
    BadAttribute, CombinationalCycle, ControlStatusMismatch, DanglingReference,
    DuplicateId, MissingStartNode, SharedMemoryShapeMismatch, UnboundPort,
    UnknownConfiguration, UnknownOperatorKind, WidthMismatch, WidthOutOfRange,
)
from .expr import Expr, format_expr, variables


@dataclass(frozen=True)
class Value:
    bits: int
    width: int

    def __post_init__(self):
        if not 1 <= self.width <= ops.MAX_WIDTH:
            raise WidthOutOfRange(f"width {self.width} outside 1..{ops.MAX_WIDTH}")
        if not 0 <= self.bits < (1 << self.width):
            raise BadAttribute(f"value {self.bits} does not fit in {self.width} bits")


@dataclass(frozen=True)
class SignalRef:
    """``owner.port``; an empty port means the owner's only output."""

    owner: str
    port: str = ""

    @classmethod
    def parse(cls, text: str) -> "SignalRef":
        owner, _, port = text.strip().partition(".")
        return cls(owner, port)

    def __str__(self):
        return f"{self.owner}.{self.port}" if self.port else self.owner


@dataclass(frozen=True)
class OperatorInstance:
    id: str
    kind: str
    width: int
    attrs: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # port -> SignalRef

    @property
    def output_port(self):
        return ops.signature(self.kind, self.attrs).output


@dataclass(frozen=True)
class Control:
    name: str
    width: int


@dataclass(frozen=True)
class Status:
    name: str
    width: int
    source: SignalRef


@dataclass(frozen=True)
class DatapathSpec:
    name: str
    operators: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    statuses: list = field(default_factory=list)

    def operator(self, ident):
        for op in self.operators:
            if op.id == ident:
                return op
        return None

    def connections(self):
        """Every (source ref, sink ``owner.port``) pair: operator nets, then status sources."""
        out = [(ref, f"{op.id}.{port}")
               for op in self.operators for port, ref in op.inputs.items()]
        out += [(st.source, f"{st.name}.out") for st in self.statuses]
        return out


@dataclass(frozen=True)
class Transition:
    cond: Expr | None
    target: str
    text: str | None = field(default=None, compare=False)

    @property
    def label(self):
        if self.cond is None:
            return "else"
        return self.text if self.text is not None else format_expr(self.cond)


@dataclass(frozen=True)
class StateSpec:
    name: str
    assigns: dict = field(default_factory=dict)  # output name -> Value
    transitions: list = field(default_factory=list)
    exit_code: int | None = None


@dataclass(frozen=True)
class FsmSpec:
    name: str
    reset_state: str
    inputs: list = field(default_factory=list)   # (name, width)
    outputs: list = field(default_factory=list)  # (name, width, default Value)
    states: list = field(default_factory=list)

    def state(self, name):
        for st in self.states:
            if st.name == name:
                return st
        return None


@dataclass(frozen=True)
class ConfigurationSpec:
    id: str
    datapath: DatapathSpec
    fsm: FsmSpec


@dataclass(frozen=True)
class SharedMemory:
    id: str
    width: int
    depth: int
    bindings: dict = field(default_factory=dict)  # config id -> local memory id


@dataclass(frozen=True)
class RtgNode:
    id: str
    datapath: str
    fsm: str


@dataclass(frozen=True)
class RtgEdge:
    source: str
    target: str
    cond: Expr | None = None
    text: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RtgSpec:
    name: str
    start: str
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    shared: list = field(default_factory=list)

    def node(self, ident):
        for n in self.nodes:
            if n.id == ident:
                return n
        return None


class ElaboratedDesign:
    """A resolved, width-checked and levelized configuration.

    ``levels`` maps each combinational node to its level (sources are level 0
    and absent from the map), ``order`` lists combinational nodes in
    evaluation order and ``signals`` maps every addressable ``owner.port`` to
    its width.
    """

    def __init__(self, config, levels, order, signals, kinds):
        self.config = config
        self.levels = levels
        self.order = order
        self.signals = signals
        self._kinds = kinds
        self._program = None

    @property
    def datapath(self):
        return self.config.datapath

    @property
    def fsm(self):
        return self.config.fsm

    def resolve(self, ref) -> str:
        """Canonical ``owner.port`` for a ref (or ref text); raises DanglingReference."""
        if isinstance(ref, str):
            ref = SignalRef.parse(ref)
        return _resolve(ref, self._kinds, str(ref))

    def memories(self):
        return [op for op in self.datapath.operators if op.kind == "mem"]

    def __repr__(self):
        return f"<ElaboratedDesign {self.config.id} ({len(self.signals)} signals)>"


def _resolve(ref, kinds, where):
    # kinds: owner -> (output port, output width, all port names)
    entry = kinds.get(ref.owner)
    if entry is None:
        raise DanglingReference(f"{where}: no operator, control or status named {ref.owner!r}")
    port = ref.port or entry[0]
    if port != entry[0]:
        raise DanglingReference(f"{where}: {ref.owner!r} has no output port {port!r}")
    return f"{ref.owner}.{port}"


def _check_width(w, where):
    if not isinstance(w, int) or not 1 <= w <= ops.MAX_WIDTH:
        raise WidthOutOfRange(f"{where}: width {w} outside 1..{ops.MAX_WIDTH}")


def _check_attrs(op):
    if op.kind not in ops.KINDS:
        raise UnknownOperatorKind(f"{op.id}: unknown kind {op.kind!r}")
    allowed = ops.ATTRS.get(op.kind, {})
    for name in op.attrs:
        if name not in allowed:
            raise BadAttribute(f"{op.id}: {op.kind} takes no attribute {name!r}")
    for name, (required, _) in allowed.items():
        if required and name not in op.attrs:
            raise BadAttribute(f"{op.id}: missing attribute {name!r}")
    a = op.attrs
    if op.kind == "const" and not 0 <= a["value"] < (1 << op.width):
        raise BadAttribute(f"{op.id}: value {a['value']} does not fit {op.width} bits")
    if op.kind == "reg" and not 0 <= a.get("init", 0) < (1 << op.width):
        raise BadAttribute(f"{op.id}: init does not fit {op.width} bits")
    if op.kind == "mux" and a["arity"] < 2:
        raise BadAttribute(f"{op.id}: mux arity must be >= 2")
    if op.kind == "mem":
        if a["depth"] < 1:
            raise BadAttribute(f"{op.id}: depth must be >= 1")
        if a.get("latency", 1) not in (0, 1):
            raise BadAttribute(f"{op.id}: latency must be 0 or 1")


def elaborate_datapath(dp: DatapathSpec, config_id=None):
    """Checks that need only the datapath; returns (levels, order, signals, kinds)."""
    kinds = {}
    signals = {}
    for c in dp.controls:
        _check_width(c.width, f"control {c.name}")
        if c.name in kinds:
            raise DuplicateId(f"duplicate name {c.name!r}")
        kinds[c.name] = ("out", c.width, ())
    for st in dp.statuses:
        _check_width(st.width, f"status {st.name}")
        if st.name in kinds:
            raise DuplicateId(f"duplicate name {st.name!r}")
        kinds[st.name] = ("out", st.width, ())
    for op in dp.operators:
        _check_width(op.width, f"operator {op.id}")
        _check_attrs(op)
        if op.id in kinds:
            raise DuplicateId(f"duplicate name {op.id!r}")
        kinds[op.id] = (op.output_port, ops.output_width(op.kind, op.width), ())
    for c in dp.controls:
        signals[f"{c.name}.out"] = c.width
    for st in dp.statuses:
        signals[f"{st.name}.out"] = st.width
    for op in dp.operators:
        signals[f"{op.id}.{op.output_port}"] = ops.output_width(op.kind, op.width)

    comb = {}  # node -> list of comb-feeding source owners
    for op in dp.operators:
        sig = ops.signature(op.kind, op.attrs)
        for port in op.inputs:
            if port not in sig.inputs and port not in sig.optional:
                raise UnboundPort(f"{op.id}: {op.kind} has no input port {port!r}")
        for port in sig.inputs:
            if port not in op.inputs:
                raise UnboundPort(f"{op.id}.{port} is not driven")
        for port, ref in op.inputs.items():
            sink = f"{op.id}.{port}"
            src = _resolve(ref, kinds, sink)
            want = ops.input_width(op.kind, op.width, port, op.attrs)
            if signals[src] != want:
                raise WidthMismatch(src, sink, signals[src], want)
        if not ops.is_sequential(op.kind, op.attrs):
            comb[op.id] = [op.inputs[p].owner
                           for p in ops.comb_inputs(op.kind, op.attrs, sig.inputs)]
    for st in dp.statuses:
        src = _resolve(st.source, kinds, f"status {st.name}")
        if signals[src] != st.width:
            raise WidthMismatch(src, f"{st.name}.out", signals[src], st.width)
        comb[st.name] = [st.source.owner]

    # only combinational predecessors constrain the order
    sorter = graphlib.TopologicalSorter()
    for node, preds in comb.items():
        sorter.add(node, *[p for p in preds if p in comb])
    try:
        topo = list(sorter.static_order())
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        members = list(dict.fromkeys(cycle))
        raise CombinationalCycle(members) from None

    levels = {}
    for node in topo:
        levels[node] = 1 + max((levels[p] for p in comb[node] if p in comb), default=0)
    position = {name: i for i, name in enumerate(comb)}
    order = sorted(comb, key=lambda n: (levels[n], position[n]))
    return levels, order, signals, kinds


def elaborate(config: ConfigurationSpec) -> ElaboratedDesign:
    """Resolve, width-check, bind and levelize one configuration."""
    dp, fsm = config.datapath, config.fsm
    levels, order, signals, kinds = elaborate_datapath(dp, config.id)
    check_fsm(fsm)

    controls = {c.name: c.width for c in dp.controls}
    outputs = {name: width for name, width, _ in fsm.outputs}
    if controls != outputs:
        raise ControlStatusMismatch(
            f"FSM outputs {_fmt(outputs)} do not match datapath controls {_fmt(controls)}")
    statuses = {s.name: s.width for s in dp.statuses}
    inputs = dict(fsm.inputs)
    if statuses != inputs:
        raise ControlStatusMismatch(
            f"FSM inputs {_fmt(inputs)} do not match datapath statuses {_fmt(statuses)}")
    return ElaboratedDesign(config, levels, order, signals, kinds)


def _fmt(d):
    return "{" + ", ".join(f"{k}:{v}" for k, v in sorted(d.items())) + "}"


def check_fsm(fsm: FsmSpec):
    """Structural FSM checks (the parser performs the same ones with positions)."""
    names = [s.name for s in fsm.states]
    if len(set(names)) != len(names):
        raise DuplicateId(f"{fsm.name}: duplicate state name")
    if fsm.state(fsm.reset_state) is None:
        raise DanglingReference(f"{fsm.name}: reset state {fsm.reset_state!r} is not declared")
    outputs = {}
    for name, width, default in fsm.outputs:
        _check_width(width, f"output {name}")
        if default.width != width:
            raise WidthMismatch(f"{name}.default", name, default.width, width)
        outputs[name] = width
    inputs = {}
    for name, width in fsm.inputs:
        _check_width(width, f"input {name}")
        inputs[name] = width
    for st in fsm.states:
        for out, val in st.assigns.items():
            if out not in outputs:
                raise DanglingReference(f"state {st.name}: no output {out!r}")
            if val.width != outputs[out]:
                raise WidthMismatch(f"{st.name}.{out}", out, val.width, outputs[out])
        for i, tr in enumerate(st.transitions):
            if fsm.state(tr.target) is None:
                raise DanglingReference(f"state {st.name}: unknown next state {tr.target!r}")
            if tr.cond is None and i != len(st.transitions) - 1:
                raise BadAttribute(f"state {st.name}: unconditional transition must be last")
            if tr.cond is not None:
                for var in variables(tr.cond):
                    if var not in inputs:
                        raise DanglingReference(
                            f"state {st.name}: guard reads undeclared input {var!r}")


@dataclass(frozen=True)
class ValidatedRtg:
    rtg: RtgSpec
    designs: dict  # config id -> ElaboratedDesign

    def outgoing(self, node):
        return [e for e in self.rtg.edges if e.source == node]


def check_rtg(rtg: RtgSpec, designs: dict) -> ValidatedRtg:
    ids = [n.id for n in rtg.nodes]
    if len(set(ids)) != len(ids):
        raise DuplicateId(f"{rtg.name}: duplicate configuration id")
    if rtg.start not in ids:
        raise MissingStartNode(f"{rtg.name}: start node {rtg.start!r} is not declared")
    for e in rtg.edges:
        for end in (e.source, e.target):
            if end not in ids:
                raise UnknownConfiguration(f"edge {e.source}->{e.target}: no configuration {end!r}")
        if e.cond is not None and variables(e.cond) - {"exit"}:
            raise BadAttribute(f"edge {e.source}->{e.target}: guards may only read 'exit'")
    for n in ids:
        if n not in designs:
            raise UnknownConfiguration(f"configuration {n!r} was not elaborated")
    for sm in rtg.shared:
        for cfg, local in sm.bindings.items():
            if cfg not in ids:
                raise UnknownConfiguration(f"shared memory {sm.id}: no configuration {cfg!r}")
            op = designs[cfg].datapath.operator(local)
            if op is None or op.kind != "mem":
                raise DanglingReference(f"shared memory {sm.id}: {cfg} has no memory {local!r}")
            if op.width != sm.width or op.attrs["depth"] != sm.depth:
                raise SharedMemoryShapeMismatch(
                    f"shared memory {sm.id} is {sm.width}x{sm.depth} but "
                    f"{cfg}.{local} is {op.width}x{op.attrs['depth']}")
    return ValidatedRtg(rtg, dict(designs))
