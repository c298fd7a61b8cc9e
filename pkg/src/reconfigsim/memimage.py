"""Memory images, the hex image file format, and golden comparison.

File format: whitespace-separated hexadecimal words, ``@ADDR`` (hex) moves
the load address, ``//`` comments run to end of line, unassigned words are 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    AddressBeyondDepth, BadToken, MemFileError, ShapeMismatch, WidthOutOfRange, WordExceedsWidth,
)
from .operators import MAX_WIDTH

MISMATCH_CAP = 32

_HEX = re.compile(r"[0-9a-fA-F]+\Z")


@dataclass
class MemoryImage:
    width: int
    depth: int
    words: list = None

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise WidthOutOfRange(f"memory width {self.width} outside 1..{MAX_WIDTH}")
        if self.depth < 1:
            raise ShapeMismatch(f"memory depth {self.depth} < 1")
        if self.words is None:
            self.words = [0] * self.depth
        else:
            self.words = list(self.words)
        if len(self.words) != self.depth:
            raise ShapeMismatch(f"{len(self.words)} words for depth {self.depth}")
        limit = 1 << self.width
        for i, w in enumerate(self.words):
            if not 0 <= w < limit:
                raise WordExceedsWidth(f"word {i} = {w:#x} exceeds {self.width} bits")

    @classmethod
    def zeros(cls, width, depth):
        return cls(width, depth)

    @property
    def shape(self):
        return (self.width, self.depth)

    def copy(self):
        return MemoryImage(self.width, self.depth, self.words)


def load_mem(text: str, width: int, depth: int) -> MemoryImage:
    words = [0] * depth
    limit = 1 << width
    addr = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        for tok in line.split("//", 1)[0].split():
            if tok.startswith("@"):
                if not _HEX.match(tok[1:]):
                    raise BadToken(f"bad address directive {tok!r}", lineno)
                addr = int(tok[1:], 16)
                if addr >= depth:
                    raise AddressBeyondDepth(f"@{tok[1:]} is beyond depth {depth}", lineno)
                continue
            if not _HEX.match(tok):
                raise BadToken(f"bad token {tok!r}", lineno)
            if addr >= depth:
                raise AddressBeyondDepth(f"word {tok!r} at address {addr} beyond depth {depth}", lineno)
            value = int(tok, 16)
            if value >= limit:
                raise WordExceedsWidth(f"{tok!r} does not fit {width} bits", lineno)
            words[addr] = value
            addr += 1
    return MemoryImage(width, depth, words)


def infer_depth(text: str) -> int:
    """Number of words a file addresses (highest written address + 1)."""
    top = 0
    addr = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        for tok in line.split("//", 1)[0].split():
            if tok.startswith("@"):
                if not _HEX.match(tok[1:]):
                    raise BadToken(f"bad address directive {tok!r}", lineno)
                addr = int(tok[1:], 16)
            else:
                addr += 1
                top = max(top, addr)
    return max(top, 1)


def dump_mem(image: MemoryImage) -> str:
    digits = (image.width + 3) // 4
    lines = []
    for i in range(0, image.depth, 16):
        lines.append(" ".join(f"{w:0{digits}x}" for w in image.words[i:i + 16]))
    return "\n".join(lines) + "\n"


def read_mem_file(path, width, depth) -> MemoryImage:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise MemFileError(f"cannot read {path}: {exc.strerror}") from None
    return load_mem(text, width, depth)


def write_mem_file(path, image: MemoryImage):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dump_mem(image))


@dataclass
class MismatchReport:
    entries: list = field(default_factory=list)  # (address, expected, actual)
    count: int = 0
    truncated: bool = False

    def __bool__(self):
        return self.count > 0

    def format(self, width=None):
        lines = [f"{self.count} mismatches"]
        digits = (width + 3) // 4 if width else 1
        for addr, exp, act in self.entries:
            lines.append(f"  @{addr:x}: expected {exp:0{digits}x} actual {act:0{digits}x}")
        if self.truncated:
            lines.append(f"  ... {self.count - len(self.entries)} more")
        return "\n".join(lines)


def compare(actual: MemoryImage, expected: MemoryImage, cap=MISMATCH_CAP) -> MismatchReport:
    if actual.shape != expected.shape:
        raise ShapeMismatch(
            f"actual is {actual.width}x{actual.depth}, expected {expected.width}x{expected.depth}")
    report = MismatchReport()
    for addr, (a, e) in enumerate(zip(actual.words, expected.words)):
        if a != e:
            report.count += 1
            if len(report.entries) < cap:
                report.entries.append((addr, e, a))
    report.truncated = report.count > len(report.entries)
    return report
