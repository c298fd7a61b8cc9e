"""Exception hierarchy.

Every diagnostic the package raises derives from :class:`ReconfigError`, so
callers (the CLI in particular) can catch one type and report it.
"""


class ReconfigError(Exception):
    """Base class. ``line``/``column`` are set when the error has a source position."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self):
        where = ""
        if self.line is not None:
            where = f"{self.line}:{self.column or 0}: "
        return f"{where}{type(self).__name__}: {self.message}"


# -- front end ---------------------------------------------------------------

class ParseError(ReconfigError):
    pass


class XmlSyntax(ParseError):
    pass


class UnknownElement(ParseError):
    pass


class UnknownOperatorKind(ParseError):
    pass


class DuplicateId(ParseError):
    pass


class BadAttribute(ParseError):
    pass


class MissingResetState(ParseError):
    pass


class ExprSyntax(ParseError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


# -- elaboration -------------------------------------------------------------

class ElaborationError(ReconfigError):
    pass


class CombinationalCycle(ElaborationError):
    def __init__(self, members):
        self.members = list(members)
        super().__init__("combinational cycle through " + " -> ".join(self.members))


class WidthMismatch(ElaborationError):
    def __init__(self, source, sink, source_width, sink_width):
        self.source = source
        self.sink = sink
        self.source_width = source_width
        self.sink_width = sink_width
        super().__init__(
            f"{source} is {source_width} bits but {sink} expects {sink_width}")


class WidthOutOfRange(ElaborationError):
    pass


class UnboundPort(ElaborationError):
    pass


class DanglingReference(ElaborationError):
    pass


class ControlStatusMismatch(ElaborationError):
    pass


class UnknownConfiguration(ElaborationError):
    pass


class SharedMemoryShapeMismatch(ElaborationError):
    pass


class MissingStartNode(ElaborationError):
    pass


# -- memory images -----------------------------------------------------------

class MemFileError(ReconfigError):
    pass


class BadToken(MemFileError):
    pass


class AddressBeyondDepth(MemFileError):
    pass


class WordExceedsWidth(MemFileError):
    pass


class ShapeMismatch(ReconfigError):
    pass


class ManifestError(ReconfigError):
    pass


# -- runtime faults ----------------------------------------------------------

class SimFault(ReconfigError):
    """Raised inside a running simulation; the kernel converts it to a status."""


class DivideByZero(SimFault):
    pass


class MuxIndexOutOfRange(SimFault):
    pass


class AddressOutOfRange(SimFault):
    pass
