"""Readers and writers for the datapath, FSM and RTG XML dialects.

Datapath::

    <datapath name="...">
      <control name="go" width="1"/>
      <status name="done" width="1" from="cmp.out"/>
      <operator id="cnt" kind="reg" width="4" init="0"/>
      <net from="inc.out" to="cnt.d"/>
    </datapath>

FSM::

    <fsm name="..." reset="IDLE">
      <input name="done" width="1"/>
      <output name="go" width="1" default="0"/>
      <state name="IDLE">
        <assign output="go" value="1"/>
        <transition cond="done == 1" next="END"/>
      </state>
      <state name="END" final="0"/>
    </fsm>

RTG::

    <rtg name="..." start="cfg1">
      <configuration id="cfg1" datapath="a_dp.xml" fsm="a_fsm.xml"/>
      <edge from="cfg1" to="cfg2" cond="exit == 0"/>
      <shared-memory id="mid" width="16" depth="16">
        <bind config="cfg1" memory="mid"/>
      </shared-memory>
    </rtg>

Integers are decimal or ``0x`` hex. Unknown elements and attributes are errors.
"""

from __future__ import annotations

import os
import re
import xml.parsers.expat
from dataclasses import dataclass, field
from xml.sax.saxutils import quoteattr

from . import operators as ops
from .errors import (
    BadAttribute, DanglingReference, DuplicateId, ExprSyntax, MissingResetState,
    ReconfigError, UnknownElement, UnknownOperatorKind, XmlSyntax,
)
from .expr import format_expr, parse_expr, variables
from .model import (
    ConfigurationSpec, Control, DatapathSpec, FsmSpec, OperatorInstance, RtgEdge,
    RtgNode, RtgSpec, SharedMemory, SignalRef, StateSpec, Status, Transition, Value,
    check_rtg, elaborate,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT = re.compile(r"(0[xX][0-9a-fA-F]+|[0-9]+)\Z")


@dataclass
class Node:
    tag: str
    attrs: dict
    line: int
    column: int
    children: list = field(default_factory=list)


def parse_tree(text) -> Node:
    """Parse XML into a tree of :class:`Node` that remembers source positions."""
    parser = xml.parsers.expat.ParserCreate()
    stack = []
    root = []

    def start(tag, attrs):
        node = Node(tag, attrs, parser.CurrentLineNumber, parser.CurrentColumnNumber + 1)
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(tag):
        stack.pop()

    def chars(data):
        if data.strip():
            raise XmlSyntax(f"unexpected text {data.strip()[:20]!r}",
                            parser.CurrentLineNumber, parser.CurrentColumnNumber + 1)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(text, True)
    except xml.parsers.expat.ExpatError as exc:
        raise XmlSyntax(xml.parsers.expat.ErrorString(exc.code), exc.lineno, exc.offset + 1) from None
    except (ValueError, UnicodeError) as exc:
        raise XmlSyntax(f"unreadable input: {exc}") from None
    if not root:
        raise XmlSyntax("empty document")
    return root[0]


def root_tag(text) -> str:
    return parse_tree(text).tag


class _Attrs:
    """Attribute accessor that rejects unknown names and reports positions."""

    def __init__(self, node, required=(), optional=()):
        self.node = node
        known = set(required) | set(optional)
        for name in node.attrs:
            if name not in known:
                self.fail(f"<{node.tag}> has no attribute {name!r}")
        for name in required:
            if name not in node.attrs:
                self.fail(f"<{node.tag}> requires attribute {name!r}")

    def fail(self, message, cls=BadAttribute):
        raise cls(message, self.node.line, self.node.column)

    def has(self, name):
        return name in self.node.attrs

    def str(self, name, default=None):
        return self.node.attrs.get(name, default)

    def name(self, attr):
        value = self.node.attrs[attr]
        if not _IDENT.match(value):
            self.fail(f"{attr}={value!r} is not a valid identifier")
        return value

    def label(self, attr):
        value = self.node.attrs[attr]
        if not value or any(ch.isspace() for ch in value):
            self.fail(f"{attr}={value!r} must be non-empty without whitespace")
        return value

    def int(self, name, default=None):
        if name not in self.node.attrs:
            return default
        text = self.node.attrs[name].strip()
        if not _INT.match(text):
            self.fail(f"{name}={text!r} is not an integer")
        return int(text, 0)

    def width(self, name="width"):
        w = self.int(name)
        if not 1 <= w <= ops.MAX_WIDTH:
            self.fail(f"{name}={w} outside 1..{ops.MAX_WIDTH}")
        return w

    def expr(self, name):
        text = self.node.attrs[name]
        try:
            return parse_expr(text)
        except ExprSyntax as exc:
            exc.message = f"{name}={text!r}: {exc.message}"
            exc.args = (exc.message,)
            exc.line, exc.column = self.node.line, self.node.column
            raise


def _expect_root(node, tag):
    if node.tag != tag:
        raise UnknownElement(f"expected <{tag}> root, found <{node.tag}>", node.line, node.column)


def _unknown(node, parent):
    raise UnknownElement(f"unexpected <{node.tag}> inside <{parent}>", node.line, node.column)


def parse_datapath(text) -> DatapathSpec:
    root = parse_tree(text)
    _expect_root(root, "datapath")
    dp_name = _Attrs(root, ("name",)).str("name")
    controls, statuses, operators, nets = [], [], [], []
    seen = {}

    def declare(name, node):
        if name in seen:
            raise DuplicateId(f"{name!r} already declared on line {seen[name]}",
                              node.line, node.column)
        seen[name] = node.line

    for node in root.children:
        if node.tag == "control":
            a = _Attrs(node, ("name", "width"))
            declare(a.name("name"), node)
            controls.append(Control(a.name("name"), a.width()))
        elif node.tag == "status":
            a = _Attrs(node, ("name", "width", "from"))
            declare(a.name("name"), node)
            statuses.append(Status(a.name("name"), a.width(), _ref(a, "from")))
        elif node.tag == "operator":
            kind = node.attrs.get("kind")
            if kind is not None and kind not in ops.KINDS:
                raise UnknownOperatorKind(f"unknown operator kind {kind!r}", node.line, node.column)
            extra = ops.ATTRS.get(kind, {})
            a = _Attrs(node, ("id", "kind", "width") + tuple(n for n, (r, _) in extra.items() if r),
                       tuple(n for n, (r, _) in extra.items() if not r))
            ident = a.name("id")
            declare(ident, node)
            width = a.width()
            attrs = {}
            for attr, (_, default) in extra.items():
                attrs[attr] = a.int(attr, default)
            _check_op_attrs(a, kind, width, attrs)
            operators.append(OperatorInstance(ident, kind, width, attrs, {}))
        elif node.tag == "net":
            nets.append(node)
        else:
            _unknown(node, "datapath")

    by_id = {op.id: op for op in operators}
    for node in nets:
        a = _Attrs(node, ("from", "to"))
        src = _ref(a, "from")
        dst = _ref(a, "to")
        op = by_id.get(dst.owner)
        if op is None:
            a.fail(f"net target {dst.owner!r} is not an operator", DanglingReference)
        sig = ops.signature(op.kind, op.attrs)
        if dst.port not in sig.inputs and dst.port not in sig.optional:
            a.fail(f"{op.kind} operator {op.id!r} has no input port {dst.port!r}")
        if dst.port in op.inputs:
            a.fail(f"{op.id}.{dst.port} is driven more than once", DuplicateId)
        op.inputs[dst.port] = src
    # inputs in signature order so emission and comparison are stable
    ordered = []
    for op in operators:
        sig = ops.signature(op.kind, op.attrs)
        keys = [p for p in sig.inputs + sig.optional if p in op.inputs]
        ordered.append(OperatorInstance(op.id, op.kind, op.width, op.attrs,
                                        {p: op.inputs[p] for p in keys}))
    return DatapathSpec(dp_name, ordered, controls, statuses)


def _ref(a, attr):
    text = a.str(attr)
    owner, dot, port = text.partition(".")
    if not _IDENT.match(owner) or (dot and not _IDENT.match(port)):
        a.fail(f"{attr}={text!r} is not of the form id or id.port")
    return SignalRef(owner, port)


def _check_op_attrs(a, kind, width, attrs):
    if kind == "const" and attrs["value"] >= (1 << width):
        a.fail(f"value {attrs['value']} does not fit {width} bits")
    if kind == "reg" and attrs["init"] >= (1 << width):
        a.fail(f"init {attrs['init']} does not fit {width} bits")
    if kind == "mux" and attrs["arity"] < 2:
        a.fail("mux arity must be >= 2")
    if kind == "mux" and attrs["arity"] > 1 << ops.MAX_WIDTH:
        a.fail("mux arity too large")
    if kind == "mem":
        if attrs["depth"] < 1:
            a.fail("memory depth must be >= 1")
        if attrs["depth"] > 1 << 24:
            a.fail("memory depth above 2**24 is not supported")
        if attrs["latency"] not in (0, 1):
            a.fail("memory latency must be 0 or 1")


def parse_fsm(text) -> FsmSpec:
    root = parse_tree(text)
    _expect_root(root, "fsm")
    ra = _Attrs(root, ("name", "reset"))
    inputs, outputs, states = [], {}, []
    seen = set()
    state_nodes = {}
    for node in root.children:
        if node.tag == "input":
            a = _Attrs(node, ("name", "width"))
            name = a.name("name")
            if name in seen:
                a.fail(f"{name!r} declared twice", DuplicateId)
            seen.add(name)
            inputs.append((name, a.width()))
        elif node.tag == "output":
            a = _Attrs(node, ("name", "width"), ("default",))
            name = a.name("name")
            if name in seen:
                a.fail(f"{name!r} declared twice", DuplicateId)
            seen.add(name)
            width = a.width()
            outputs[name] = (name, width, _value(a, "default", width, 0))
        elif node.tag == "state":
            a = _Attrs(node, ("name",), ("final",))
            name = a.label("name")
            if name in state_nodes:
                a.fail(f"state {name!r} declared twice", DuplicateId)
            state_nodes[name] = node
            states.append(_parse_state(node, a, outputs))
        else:
            _unknown(node, "fsm")
    reset = ra.str("reset")
    if reset not in state_nodes:
        ra.fail(f"reset state {reset!r} is not declared", MissingResetState)
    for st in states:
        for tr in st.transitions:
            if tr.target not in state_nodes:
                node = state_nodes[st.name]
                raise BadAttribute(f"state {st.name!r}: next state {tr.target!r} is not declared",
                                   node.line, node.column)
    return FsmSpec(ra.str("name"), reset, inputs, list(outputs.values()), states)


def _value(a, attr, width, default):
    bits = a.int(attr, default)
    if bits >= (1 << width):
        a.fail(f"{attr}={bits} does not fit {width} bits")
    return Value(bits, width)


def _parse_state(node, a, outputs):
    assigns = {}
    transitions = []
    for child in node.children:
        c = None
        if child.tag == "assign":
            c = _Attrs(child, ("output", "value"))
            out = c.str("output")
            if out not in outputs:
                c.fail(f"assignment to undeclared output {out!r}")
            if out in assigns:
                c.fail(f"output {out!r} assigned twice", DuplicateId)
            assigns[out] = _value(c, "value", outputs[out][1], 0)
        elif child.tag == "transition":
            c = _Attrs(child, ("next",), ("cond",))
            if transitions and transitions[-1].cond is None:
                c.fail("transition after an unconditional transition")
            if c.has("cond"):
                transitions.append(Transition(c.expr("cond"), c.str("next"), c.str("cond")))
            else:
                transitions.append(Transition(None, c.str("next")))
        else:
            _unknown(child, "state")
    exit_code = a.int("final")
    return StateSpec(a.str("name"), assigns, transitions, exit_code)


def parse_rtg(text) -> RtgSpec:
    root = parse_tree(text)
    _expect_root(root, "rtg")
    ra = _Attrs(root, ("name", "start"))
    nodes, edges, shared = [], [], []
    seen, seen_shared = set(), set()
    for node in root.children:
        if node.tag == "configuration":
            a = _Attrs(node, ("id", "datapath", "fsm"))
            ident = a.label("id")
            if ident in seen:
                a.fail(f"configuration {ident!r} declared twice", DuplicateId)
            seen.add(ident)
            nodes.append(RtgNode(ident, a.str("datapath"), a.str("fsm")))
        elif node.tag == "edge":
            a = _Attrs(node, ("from", "to"), ("cond",))
            cond = None
            if a.has("cond"):
                cond = a.expr("cond")
                extra = variables(cond) - {"exit"}
                if extra:
                    a.fail(f"edge guard may only read 'exit', not {sorted(extra)}")
            edges.append(RtgEdge(a.str("from"), a.str("to"), cond, a.str("cond")))
        elif node.tag == "shared-memory":
            a = _Attrs(node, ("id", "width", "depth"))
            ident = a.label("id")
            if ident in seen_shared:
                a.fail(f"shared memory {ident!r} declared twice", DuplicateId)
            seen_shared.add(ident)
            depth = a.int("depth")
            if depth < 1:
                a.fail("depth must be >= 1")
            bindings = {}
            for child in node.children:
                if child.tag != "bind":
                    _unknown(child, "shared-memory")
                b = _Attrs(child, ("config", "memory"))
                if b.str("config") in bindings:
                    b.fail(f"configuration {b.str('config')!r} bound twice", DuplicateId)
                bindings[b.str("config")] = b.str("memory")
            shared.append(SharedMemory(ident, a.width(), depth, bindings))
        else:
            _unknown(node, "rtg")
    return RtgSpec(ra.str("name"), ra.str("start"), nodes, edges, shared)


# -- emitters ---------------------------------------------------------------

def emit_datapath(dp: DatapathSpec) -> str:
    out = [f"<datapath name={quoteattr(dp.name)}>"]
    for c in dp.controls:
        out.append(f'  <control name="{c.name}" width="{c.width}"/>')
    for s in dp.statuses:
        out.append(f'  <status name="{s.name}" width="{s.width}" from="{s.source}"/>')
    for op in dp.operators:
        attrs = "".join(f' {k}="{v}"' for k, v in op.attrs.items())
        out.append(f'  <operator id="{op.id}" kind="{op.kind}" width="{op.width}"{attrs}/>')
    for op in dp.operators:
        for port, ref in op.inputs.items():
            out.append(f'  <net from="{ref}" to="{op.id}.{port}"/>')
    out.append("</datapath>")
    return "\n".join(out) + "\n"


def emit_fsm(fsm: FsmSpec) -> str:
    out = [f"<fsm name={quoteattr(fsm.name)} reset={quoteattr(fsm.reset_state)}>"]
    for name, width in fsm.inputs:
        out.append(f'  <input name="{name}" width="{width}"/>')
    for name, width, default in fsm.outputs:
        out.append(f'  <output name="{name}" width="{width}" default="{default.bits}"/>')
    for st in fsm.states:
        final = "" if st.exit_code is None else f' final="{st.exit_code}"'
        if not st.assigns and not st.transitions:
            out.append(f"  <state name={quoteattr(st.name)}{final}/>")
            continue
        out.append(f"  <state name={quoteattr(st.name)}{final}>")
        for name, val in st.assigns.items():
            out.append(f'    <assign output="{name}" value="{val.bits}"/>')
        for tr in st.transitions:
            cond = "" if tr.cond is None else f" cond={quoteattr(format_expr(tr.cond))}"
            out.append(f"    <transition{cond} next={quoteattr(tr.target)}/>")
        out.append("  </state>")
    out.append("</fsm>")
    return "\n".join(out) + "\n"


def emit_rtg(rtg: RtgSpec) -> str:
    out = [f"<rtg name={quoteattr(rtg.name)} start={quoteattr(rtg.start)}>"]
    for n in rtg.nodes:
        out.append(f"  <configuration id={quoteattr(n.id)} datapath={quoteattr(n.datapath)} "
                   f"fsm={quoteattr(n.fsm)}/>")
    for e in rtg.edges:
        cond = "" if e.cond is None else f" cond={quoteattr(format_expr(e.cond))}"
        out.append(f"  <edge from={quoteattr(e.source)} to={quoteattr(e.target)}{cond}/>")
    for sm in rtg.shared:
        out.append(f"  <shared-memory id={quoteattr(sm.id)} width=\"{sm.width}\" depth=\"{sm.depth}\">")
        for cfg, mem in sm.bindings.items():
            out.append(f"    <bind config={quoteattr(cfg)} memory={quoteattr(mem)}/>")
        out.append("  </shared-memory>")
    out.append("</rtg>")
    return "\n".join(out) + "\n"


# -- file helpers -------------------------------------------------------------

def _read(path):
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise ReconfigError(f"cannot read {path}: {exc.strerror}") from None


def _located(fn, path):
    try:
        return fn(_read(path))
    except ReconfigError as exc:
        exc.message = f"{path}: {exc.message}"
        exc.args = (exc.message,)
        raise


def load_datapath(path) -> DatapathSpec:
    return _located(parse_datapath, path)


def load_fsm(path) -> FsmSpec:
    return _located(parse_fsm, path)


def load_configuration(datapath_path, fsm_path, config_id=None):
    """Parse and elaborate one datapath/FSM pair."""
    dp = load_datapath(datapath_path)
    fsm = load_fsm(fsm_path)
    return elaborate(ConfigurationSpec(config_id or dp.name, dp, fsm))


def load_rtg(path):
    """Parse an RTG file, elaborate every configuration it names, and validate it."""
    rtg = _located(parse_rtg, path)
    base = os.path.dirname(os.path.abspath(path))
    designs = {}
    for node in rtg.nodes:
        designs[node.id] = load_configuration(os.path.join(base, node.datapath),
                                              os.path.join(base, node.fsm), node.id)
    return check_rtg(rtg, designs)
