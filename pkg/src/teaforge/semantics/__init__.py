"""Name resolution, type checking and model-constraint validation."""

from ..frontend import parse, tokenize
from .builtins import BUILTIN_MODULES, REQUEST_FIELDS, RESPONSE_FIELDS, BuiltinModuleDescriptor, FunctionSig
from .checker import analyze, assignability
from .module import AnalysisError, Diagnostic, SemanticModule, Severity
from .validate import UnknownModel, ValidationReport, Violation, pattern_matches, validate_typed, validate_value


def compile_source(source: str, name: str = "module") -> SemanticModule:
    """Tokenize, parse and analyze ``source``.

    Lex and parse failures propagate as exceptions; semantic problems are
    left on the returned module's diagnostics.
    """
    return analyze(parse(tokenize(source)), name=name)


__all__ = [
    "AnalysisError",
    "BUILTIN_MODULES",
    "BuiltinModuleDescriptor",
    "Diagnostic",
    "FunctionSig",
    "REQUEST_FIELDS",
    "RESPONSE_FIELDS",
    "SemanticModule",
    "Severity",
    "UnknownModel",
    "ValidationReport",
    "Violation",
    "analyze",
    "assignability",
    "pattern_matches",
    "compile_source",
    "validate_typed",
    "validate_value",
]
