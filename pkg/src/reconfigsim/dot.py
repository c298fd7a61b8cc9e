"""Graphviz DOT emission for datapaths, FSMs and RTGs (text only, no rendering)."""

from __future__ import annotations

from .expr import format_expr


def quote(s) -> str:
    """A DOT double-quoted string; safe for any input text."""
    s = str(s).replace("\\", "\\\\").replace('"', '\\"')
    return '"' + s.replace("\r", "").replace("\n", "\\n") + '"'


def _doc(name, body):
    return f"digraph {quote(name)} {{\n" + "".join(f"  {ln}\n" for ln in body) + "}\n"


def datapath_to_dot(dp) -> str:
    body = ["node [shape=box];"]
    for c in dp.controls:
        body.append(f"{quote(c.name)} [label={quote(f'{c.name} : control [{c.width}]')}, "
                    "shape=invhouse];")
    for s in dp.statuses:
        body.append(f"{quote(s.name)} [label={quote(f'{s.name} : status [{s.width}]')}, "
                    "shape=house];")
    for op in dp.operators:
        body.append(f"{quote(op.id)} [label={quote(f'{op.id} : {op.kind} [{op.width}]')}];")
    for op in dp.operators:
        for port, ref in op.inputs.items():
            body.append(f"{quote(ref.owner)} -> {quote(op.id)} [label={quote(port)}];")
    for s in dp.statuses:
        body.append(f"{quote(s.source.owner)} -> {quote(s.name)} [style=dashed];")
    return _doc(dp.name, body)


def fsm_to_dot(fsm) -> str:
    body = ["node [shape=circle];"]
    for st in fsm.states:
        label = st.name if st.exit_code is None else f"{st.name}\nexit={st.exit_code}"
        attrs = [f"label={quote(label)}"]
        if st.name == fsm.reset_state:
            attrs.append("shape=doublecircle")
        if st.exit_code is not None:
            attrs.append("style=bold")
        body.append(f"{quote(st.name)} [{', '.join(attrs)}];")
    for st in fsm.states:
        for tr in st.transitions:
            body.append(f"{quote(st.name)} -> {quote(tr.target)} [label={quote(tr.label)}];")
    return _doc(fsm.name, body)


def rtg_to_dot(rtg) -> str:
    body = []
    for n in rtg.nodes:
        shape = "doubleoctagon" if n.id == rtg.start else "octagon"
        body.append(f"{quote('cfg:' + n.id)} [label={quote(n.id)}, shape={shape}];")
    for sm in rtg.shared:
        body.append(f"{quote('mem:' + sm.id)} [label={quote(f'{sm.id} [{sm.width}x{sm.depth}]')}, "
                    "shape=box];")
    for e in rtg.edges:
        label = "always" if e.cond is None else (e.text or format_expr(e.cond))
        body.append(f"{quote('cfg:' + e.source)} -> {quote('cfg:' + e.target)} "
                    f"[label={quote(label)}];")
    for sm in rtg.shared:
        for cfg, local in sm.bindings.items():
            body.append(f"{quote('mem:' + sm.id)} -> {quote('cfg:' + cfg)} "
                        f"[label={quote(local)}, style=dashed, dir=both];")
    return _doc(rtg.name, body)
