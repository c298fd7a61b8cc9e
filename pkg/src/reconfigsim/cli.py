"""Command-line entry point.

Exit codes: 0 success, 1 verification/assertion/execution failure,
2 input or usage error, 3 cycle budget exhausted.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .dot import datapath_to_dot, fsm_to_dot, rtg_to_dot
from .errors import ReconfigError
from .harness import load_manifest, run_suite
from .kernel import (
    AssertionFailed, Finished, MaxCyclesReached, RuntimeFault, SimOptions,
    parse_assertions, run,
)
from .memimage import compare, infer_depth, load_mem, read_mem_file, write_mem_file
from .model import check_fsm, elaborate, elaborate_datapath, ConfigurationSpec
from .rtg import DEFAULT_RECONFIG_LIMIT, execute
from .xmlio import (
    load_configuration, load_rtg, parse_datapath, parse_fsm, parse_rtg, root_tag,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ReconfigError):
    pass


def _color_enabled(stream):
    mode = os.environ.get("RECONFIGSIM_COLOR", "auto").lower()
    if mode == "always":
        return True
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def error(message):
    prefix = "error:"
    if _color_enabled(sys.stderr):
        prefix = "\033[31merror:\033[0m"
    print(f"{prefix} {message}", file=sys.stderr)


def _pairs(items, what):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key or not value:
            raise UsageError(f"{what} expects NAME=VALUE, got {item!r}")
        out[key] = value
    return out


def _read(path):
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# -- subcommands ---------------------------------------------------------------

def cmd_validate(args):
    datapaths, fsms = [], []
    for path in args.files:
        text = _read(path)
        tag = root_tag(text)
        if tag == "rtg":
            load_rtg(path)
            print(f"{path}: valid RTG")
        elif tag == "datapath":
            datapaths.append((path, parse_datapath(text)))
        elif tag == "fsm":
            fsms.append((path, parse_fsm(text)))
        else:
            raise UsageError(f"{path}: unrecognised document <{tag}>")
    if len(datapaths) == 1 and len(fsms) == 1:
        (dpath, dp), (fpath, fsm) = datapaths[0], fsms[0]
        design = elaborate(ConfigurationSpec(dp.name, dp, fsm))
        depth = max(design.levels.values(), default=0)
        print(f"{dpath} + {fpath}: valid configuration, {len(dp.operators)} operators, "
              f"{depth} combinational levels")
        return EXIT_OK
    for path, dp in datapaths:
        elaborate_datapath(dp)
        print(f"{path}: valid datapath")
    for path, fsm in fsms:
        check_fsm(fsm)
        print(f"{path}: valid FSM")
    return EXIT_OK


def _mem_shapes(design):
    return {op.id: (op.width, op.attrs["depth"]) for op in design.memories()}


def cmd_sim(args):
    design = load_configuration(args.datapath, args.fsm)
    shapes = _mem_shapes(design)
    mems = {}
    for mid, path in _pairs(args.mem, "--mem").items():
        if mid not in shapes:
            raise UsageError(f"--mem: no memory named {mid!r}")
        mems[mid] = read_mem_file(path, *shapes[mid])
    dumps = _pairs(args.dump, "--dump")
    for mid in dumps:
        if mid not in shapes:
            raise UsageError(f"--dump: no memory named {mid!r}")
    inputs = {}
    for name, text in _pairs(args.inputs, "--in").items():
        try:
            inputs[name] = int(text, 0)
        except ValueError:
            raise UsageError(f"--in {name}: {text!r} is not an integer") from None
    opts = SimOptions(max_cycles=args.max_cycles, probes=args.probe or [],
                      trace_path=args.trace, input_bindings=inputs)
    if args.assertions:
        opts.assertions = parse_assertions(_read(args.assertions).decode("utf-8"))

    result = run(design, mems, opts)
    for mid, path in dumps.items():
        write_mem_file(path, result.final_memories[mid])
    print(f"status: {result.status}")
    print(f"cycles: {result.cycles}")
    if args.stats:
        _print_stats(result.stats.wall_time, result.stats.op_evals)
    st = result.status
    if isinstance(st, Finished):
        return EXIT_OK
    if isinstance(st, MaxCyclesReached):
        return EXIT_BUDGET
    if isinstance(st, (AssertionFailed, RuntimeFault)):
        error(str(st))
    return EXIT_FAIL


def _print_stats(wall, evals):
    rate = evals / wall if wall > 0 else float("inf")
    print(f"simulation time (s): {wall:.3f}")
    print(f"operator evaluations: {evals}")
    print(f"operator evaluations/s: {rate:.0f}")


def cmd_run_rtg(args):
    vrtg = load_rtg(args.rtg)
    decl = {sm.id: sm for sm in vrtg.rtg.shared}
    shared = {}
    for sid, path in _pairs(args.shared, "--shared").items():
        if sid not in decl:
            raise UsageError(f"--shared: no shared memory named {sid!r}")
        shared[sid] = read_mem_file(path, decl[sid].width, decl[sid].depth)
    dumps = _pairs(args.dump_shared, "--dump-shared")
    for sid in dumps:
        if sid not in decl:
            raise UsageError(f"--dump-shared: no shared memory named {sid!r}")
    opts = {n.id: SimOptions(max_cycles=args.max_cycles) for n in vrtg.rtg.nodes}
    report = execute(vrtg, shared, opts, reconfig_limit=args.max_reconfig)
    for sid, path in dumps.items():
        write_mem_file(path, report.final_shared[sid])
    if len(report.path) <= 20:
        print(f"path: {report.format_path()}")
    else:
        head = " -> ".join(f"{c}({r.cycles} cycles)" for c, r in report.path[:10])
        print(f"path: {head} -> ... ({len(report.path)} activations)")
    print(f"status: {report.status}")
    if args.stats:
        _print_stats(sum(r.stats.wall_time for _, r in report.path),
                     sum(r.stats.op_evals for _, r in report.path))
    if report.ok:
        return EXIT_OK
    error(f"{report.status}: {report.detail}")
    return EXIT_BUDGET if report.cycle_budget_exhausted else EXIT_FAIL


def cmd_check(args):
    texts = [_read(p).decode("utf-8") for p in (args.actual, args.expected)]
    depths = [args.depth or infer_depth(t) for t in texts]
    actual, expected = (load_mem(t, args.width, d) for t, d in zip(texts, depths))
    report = compare(actual, expected)
    print(report.format(args.width))
    return EXIT_FAIL if report else EXIT_OK


def cmd_suite(args):
    manifest = load_manifest(args.manifest)
    report = run_suite(manifest, jobs=args.jobs)
    sys.stdout.write(report.to_text())
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as f:
            f.write(report.to_xml())
    return EXIT_OK if report.ok else EXIT_FAIL


DOT_KINDS = {
    "datapath": (parse_datapath, datapath_to_dot),
    "fsm": (parse_fsm, fsm_to_dot),
    "rtg": (parse_rtg, rtg_to_dot),
}


def cmd_dot(args):
    parse, emit = DOT_KINDS[args.kind]
    text = emit(parse(_read(args.file)))
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="reconfigsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="parse and elaborate designs")
    s.add_argument("files", nargs="+", metavar="FILE")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("sim", help="simulate one configuration")
    s.add_argument("--datapath", required=True)
    s.add_argument("--fsm", required=True)
    s.add_argument("--mem", action="append", metavar="ID=FILE")
    s.add_argument("--in", dest="inputs", action="append", metavar="NAME=VALUE")
    s.add_argument("--probe", action="append", metavar="SIGNAL")
    s.add_argument("--trace", metavar="CSV")
    s.add_argument("--assert", dest="assertions", metavar="FILE")
    s.add_argument("--max-cycles", type=_positive, default=SimOptions().max_cycles)
    s.add_argument("--dump", action="append", metavar="ID=FILE")
    s.add_argument("--stats", action="store_true")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("run-rtg", help="execute a reconfiguration transition graph")
    s.add_argument("--rtg", required=True)
    s.add_argument("--shared", action="append", metavar="ID=FILE")
    s.add_argument("--dump-shared", action="append", metavar="ID=FILE")
    s.add_argument("--max-reconfig", type=_positive, default=DEFAULT_RECONFIG_LIMIT)
    s.add_argument("--max-cycles", type=_positive, default=SimOptions().max_cycles,
                   help="cycle budget per configuration activation")
    s.add_argument("--stats", action="store_true")
    s.set_defaults(func=cmd_run_rtg)

    s = sub.add_parser("check", help="compare a memory image with a golden file")
    s.add_argument("actual")
    s.add_argument("expected")
    s.add_argument("--width", type=_positive, required=True)
    s.add_argument("--depth", type=_positive,
                   help="words per image (default: inferred from each file)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("suite", help="run a test-suite manifest")
    s.add_argument("manifest")
    s.add_argument("--report", metavar="XML", help="write a JUnit-style XML report")
    s.add_argument("--jobs", type=_positive, default=None,
                   help="parallel tests (default: available CPUs)")
    s.set_defaults(func=cmd_suite)

    s = sub.add_parser("dot", help="emit a Graphviz rendering of a design file")
    s.add_argument("kind", choices=sorted(DOT_KINDS))
    s.add_argument("file")
    s.add_argument("-o", "--output", metavar="FILE")
    s.set_defaults(func=cmd_dot)
    return p


def _positive(text):
    try:
        n = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ReconfigError as exc:
        error(str(exc))
        return EXIT_INPUT
    except OSError as exc:
        error(f"{exc.filename}: {exc.strerror}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
