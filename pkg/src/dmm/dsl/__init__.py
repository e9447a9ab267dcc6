from .lexer import DmmSyntaxError, tokenize
from .loader import Diagnostic, LoadError, Loader, SymbolTable, load, validate
from .parser import Program, format_program, format_statement, parse

__all__ = [
    "Diagnostic", "DmmSyntaxError", "LoadError", "Loader", "Program", "SymbolTable",
    "format_program", "format_statement", "load", "load_text", "parse", "tokenize", "validate",
]


def load_text(text: str, registry=None, file=None):
    """Parse and load program text in one step."""
    return load(parse(text, file), registry)
