"""Sequencing configurations through a Reconfiguration Transition Graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DanglingReference, ShapeMismatch
from .expr import evaluate
from .kernel import Finished, MaxCyclesReached, SimOptions, run
from .memimage import MemoryImage

DEFAULT_RECONFIG_LIMIT = 10_000

COMPLETED = "Completed"
RECONFIG_LIMIT = "ReconfigLimit"
NO_ENABLED_EDGE = "NoEnabledEdge"
PROPAGATED_FAULT = "PropagatedFault"


@dataclass
class RtgRunReport:
    path: list = field(default_factory=list)  # (config id, SimResult)
    final_shared: dict = field(default_factory=dict)
    status: str = COMPLETED
    detail: str = ""

    @property
    def ok(self):
        return self.status == COMPLETED

    @property
    def cycle_budget_exhausted(self):
        return (self.status == PROPAGATED_FAULT and bool(self.path)
                and isinstance(self.path[-1][1].status, MaxCyclesReached))

    def format_path(self):
        return " -> ".join(f"{cfg}({res.cycles} cycles)" for cfg, res in self.path)


def eval_edge_guard(guard, exit_code: int) -> int:
    if guard is None:
        return 1
    return int(bool(evaluate(guard, {"exit": exit_code})))


def execute(vrtg, shared_init=None, node_opts=None, node_mems=None,
            reconfig_limit=DEFAULT_RECONFIG_LIMIT) -> RtgRunReport:
    """Run ``vrtg`` (a :class:`~reconfigsim.model.ValidatedRtg`) from its start node.

    ``shared_init`` maps shared-memory ids to initial images (missing ones start
    at zero); ``node_opts`` and ``node_mems`` give per-configuration simulation
    options and private memory images. Only shared memories survive a
    reconfiguration.
    """
    rtg = vrtg.rtg
    shared_init = shared_init or {}
    node_opts = node_opts or {}
    node_mems = node_mems or {}
    decl = {sm.id: sm for sm in rtg.shared}
    shared = {}
    for sid, sm in decl.items():
        img = shared_init.get(sid)
        if img is None:
            shared[sid] = MemoryImage(sm.width, sm.depth)
        elif img.shape != (sm.width, sm.depth):
            raise ShapeMismatch(f"initial image for {sid} is {img.width}x{img.depth}, "
                                f"declared {sm.width}x{sm.depth}")
        else:
            shared[sid] = img.copy()
    for sid in shared_init:
        if sid not in decl:
            raise DanglingReference(f"no shared memory named {sid!r}")

    report = RtgRunReport()
    node = rtg.start
    while True:
        if len(report.path) >= reconfig_limit:
            report.status = RECONFIG_LIMIT
            report.detail = f"{reconfig_limit} activations"
            break
        mems = dict(node_mems.get(node, {}))
        for sid, sm in decl.items():
            local = sm.bindings.get(node)
            if local is not None:
                mems[local] = shared[sid]
        result = run(vrtg.designs[node], mems, node_opts.get(node, SimOptions()))
        report.path.append((node, result))
        if not isinstance(result.status, Finished):
            report.status = PROPAGATED_FAULT
            report.detail = f"{node}: {result.status}"
            break
        for sid, sm in decl.items():
            local = sm.bindings.get(node)
            if local is not None:
                shared[sid] = result.final_memories[local]
        edges = vrtg.outgoing(node)
        if not edges:
            break
        code = result.status.exit_code
        for e in edges:
            if eval_edge_guard(e.cond, code):
                node = e.target
                break
        else:
            report.status = NO_ENABLED_EDGE
            report.detail = f"{node} finished with exit {code} and no edge guard holds"
            break
    report.final_shared = shared
    return report
