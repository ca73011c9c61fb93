"""notjsAbsInt: a configurable-sensitivity abstract interpreter for the notJS language."""

# Language
from .ir import ParseError, parse_program, pretty, validate
# Concrete semantics
from .concrete import run
# Abstract domains and strategies
from .domains import AbsStr, BValue
from .sensitivity import ParameterError, parse_sensitivity
# Analysis
from .engine import (AnalysisLimits, AnalysisResult, LimitExceeded, analyze,
                     generate_program, minimize_witness, soundness_check)
# Error client
from .client import ErrorReport, IncompleteResult, report_errors

__version__ = "0.1"

__all__ = [
    "parse_program",
    "pretty",
    "validate",
    "ParseError",
    "run",
    "AbsStr",
    "BValue",
    "parse_sensitivity",
    "ParameterError",
    "analyze",
    "AnalysisLimits",
    "AnalysisResult",
    "LimitExceeded",
    "soundness_check",
    "minimize_witness",
    "generate_program",
    "report_errors",
    "ErrorReport",
    "IncompleteResult",
]
