"""Functional simulation and regression testing for compiler-generated reconfigurable designs.

Typical use::

    from reconfigsim import load_configuration, run, SimOptions
    design = load_configuration("hamming_dp.xml", "hamming_fsm.xml")
    result = run(design, {"in_mem": image}, SimOptions(max_cycles=1000))
"""

__version__ = "0.1.0"

from .errors import ReconfigError
from .expr import parse_expr
from .kernel import (
    AlwaysAssertion, AssertionFailed, CycleAssertion, Finished, MaxCyclesReached,
    RuntimeFault, SimOptions, SimResult, Simulation, run,
)
from .memimage import MemoryImage, compare, dump_mem, load_mem
from .model import ConfigurationSpec, ElaboratedDesign, check_rtg, elaborate
from .rtg import RtgRunReport, execute
from .xmlio import (
    load_configuration, load_rtg, parse_datapath, parse_fsm, parse_rtg,
)

__all__ = [
    "ReconfigError", "parse_expr",
    "AlwaysAssertion", "AssertionFailed", "CycleAssertion", "Finished", "MaxCyclesReached",
    "RuntimeFault", "SimOptions", "SimResult", "Simulation", "run",
    "MemoryImage", "compare", "dump_mem", "load_mem",
    "ConfigurationSpec", "ElaboratedDesign", "check_rtg", "elaborate",
    "RtgRunReport", "execute",
    "load_configuration", "load_rtg", "parse_datapath", "parse_fsm", "parse_rtg",
]
