"""Operator kinds and their functional semantics.

Port signatures
---------------

=========================  ======================  ===========  =======================
kind                       inputs                  output       attributes
=========================  ======================  ===========  =======================
const                      (none)                  out          value
in                         (none)                  out          (bound at run time)
add sub mul div rem        a, b                    out
and or xor                 a, b                    out
neg not                    a                       out
shl shr asr                a, b (amount mod width) out
eq ne ltu leu gtu geu      a, b                    out (1 bit)
lts les gts ges            a, b                    out (1 bit)
mux                        sel, in0 .. in{n-1}     out          arity
reg                        d, [en]                 q            [init]
mem                        addr, [din], [we]       dout         depth, [latency]
out                        a                       out
=========================  ======================  ===========  =======================

Inputs in brackets are optional: an unbound ``en`` reads as 1, an unbound
``we`` as 0. Every data input has the operator's declared width, except the
mux select (``ceil(log2(arity))`` bits), memory ``addr``
(``ceil(log2(depth))`` bits, at least 1) and the 1-bit ``en``/``we`` strobes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AddressOutOfRange, DivideByZero, MuxIndexOutOfRange

MAX_WIDTH = 64

BINARY_ARITH = ("add", "sub", "mul", "div", "rem", "and", "or", "xor")
UNARY = ("neg", "not")
SHIFTS = ("shl", "shr", "asr")
COMPARES = ("eq", "ne", "ltu", "leu", "gtu", "geu", "lts", "les", "gts", "ges")

KINDS = ("const", "in", *BINARY_ARITH, *UNARY, *SHIFTS, *COMPARES,
         "mux", "reg", "mem", "out")

# attribute name -> (required, default)
ATTRS = {
    "const": {"value": (True, None)},
    "mux": {"arity": (True, None)},
    "reg": {"init": (False, 0)},
    "mem": {"depth": (True, None), "latency": (False, 1)},
}


def clog2(n: int) -> int:
    return max(1, (n - 1).bit_length())


def mask(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True)
class PortSig:
    inputs: tuple[str, ...]
    optional: tuple[str, ...] = ()
    output: str = "out"


def signature(kind: str, attrs=None) -> PortSig:
    attrs = attrs or {}
    if kind in ("const", "in"):
        return PortSig(())
    if kind in UNARY or kind == "out":
        return PortSig(("a",))
    if kind in BINARY_ARITH or kind in SHIFTS or kind in COMPARES:
        return PortSig(("a", "b"))
    if kind == "mux":
        arity = attrs.get("arity", 2)
        return PortSig(("sel",) + tuple(f"in{i}" for i in range(arity)))
    if kind == "reg":
        return PortSig(("d",), ("en",), "q")
    if kind == "mem":
        return PortSig(("addr",), ("din", "we"), "dout")
    raise KeyError(kind)


def input_width(kind: str, width: int, port: str, attrs) -> int:
    if kind == "mux" and port == "sel":
        return clog2(attrs["arity"])
    if kind == "mem" and port == "addr":
        return clog2(attrs["depth"])
    if port in ("en", "we"):
        return 1
    return width


def output_width(kind: str, width: int) -> int:
    return 1 if kind in COMPARES else width


def is_sequential(kind: str, attrs) -> bool:
    """True when the operator's output is a state element (a level-0 source)."""
    if kind == "reg":
        return True
    return kind == "mem" and attrs.get("latency", 1) == 1


def comb_inputs(kind: str, attrs, ports):
    """The subset of ``ports`` that feed the output within the same cycle."""
    if kind == "reg":
        return []
    if kind == "mem":
        return ["addr"] if attrs.get("latency", 1) == 0 else []
    return list(ports)


def _signed(x, width):
    return x - (1 << width) if x >> (width - 1) else x


def eval_comb(kind: str, width: int, inputs, attrs=None) -> int:
    """Evaluate a combinational operator on unsigned operand encodings.

    ``width`` is the operator's declared width. The result is reduced modulo
    ``2**width``; comparisons return 0 or 1. ``attrs`` is needed only for
    ``const``.
    """
    m = mask(width)
    if kind == "const":
        return attrs["value"] & m
    if kind in ("in", "out"):
        return inputs[0] & m if inputs else 0
    if kind == "neg":
        return -inputs[0] & m
    if kind == "not":
        return inputs[0] ^ m
    if kind == "mux":
        sel, choices = inputs[0], inputs[1:]
        if sel >= len(choices):
            raise MuxIndexOutOfRange(f"select {sel} with arity {len(choices)}")
        return choices[sel]
    a, b = inputs
    if kind == "add":
        return (a + b) & m
    if kind == "sub":
        return (a - b) & m
    if kind == "mul":
        return (a * b) & m
    if kind in ("div", "rem"):
        if b == 0:
            raise DivideByZero(f"{kind} by zero")
        return a // b if kind == "div" else a % b
    if kind == "and":
        return a & b
    if kind == "or":
        return a | b
    if kind == "xor":
        return a ^ b
    if kind == "shl":
        return (a << (b % width)) & m
    if kind == "shr":
        return a >> (b % width)
    if kind == "asr":
        return (_signed(a, width) >> (b % width)) & m
    if kind in ("lts", "les", "gts", "ges"):
        a, b = _signed(a, width), _signed(b, width)
        kind = kind[:2] + "u"
    if kind == "eq":
        return int(a == b)
    if kind == "ne":
        return int(a != b)
    if kind == "ltu":
        return int(a < b)
    if kind == "leu":
        return int(a <= b)
    if kind == "gtu":
        return int(a > b)
    if kind == "geu":
        return int(a >= b)
    raise KeyError(kind)


def reg_next(current: int, d: int, en: int) -> int:
    return d if en else current


@dataclass
class MemoryModel:
    """One single-port SRAM: a word list plus the registered read output."""

    width: int
    depth: int
    words: list
    latency: int = 1
    dout_reg: int = 0
    name: str = field(default="mem")

    def check(self, addr):
        if addr >= self.depth:
            raise AddressOutOfRange(
                f"{self.name}: address {addr} >= depth {self.depth}")

    def dout(self, addr):
        """Read-port value during the current cycle."""
        if self.latency == 0:
            self.check(addr)
            return self.words[addr]
        return self.dout_reg

    def clock(self, addr, din, we):
        """Apply the clock edge: read-first register load, then the write."""
        self.check(addr)
        if self.latency == 1:
            self.dout_reg = self.words[addr]
        if we:
            self.words[addr] = din & mask(self.width)


def mem_cycle(model: MemoryModel, addr: int, din: int, we: int):
    """One cycle of ``model``: returns (dout seen this cycle, image after the edge)."""
    out = model.dout(addr)
    model.clock(addr, din, we)
    return out, list(model.words)
