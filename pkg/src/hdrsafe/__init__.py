"""Header-validity checking and execution for a small packet-processing language."""

from hdrsafe.checker import CheckResult, check_program
from hdrsafe.control import TableState, load_entries, validate_well_behaved
from hdrsafe.diagnostics import BugCategory, Diagnostic, render
from hdrsafe.interp import BitStream, InvalidAccess, run
from hdrsafe.parser import ParseError, parse_file, parse_program

__all__ = [
    "BitStream", "BugCategory", "CheckResult", "Diagnostic", "InvalidAccess",
    "ParseError", "TableState", "check_program", "load_entries", "parse_file",
    "parse_program", "render", "run", "validate_well_behaved",
]
