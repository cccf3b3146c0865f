"""The ``.gpt`` circuit language."""

from optheory.dsl.ast import Program, SourceError, Span
from optheory.dsl.lower import CheckItem, EvalItem, LoweredProgram, load, lower
from optheory.dsl.parser import parse, parse_with_errors, tokenize
from optheory.dsl.printer import format_program, objects_to_program, to_text

__all__ = [
    "CheckItem",
    "EvalItem",
    "LoweredProgram",
    "Program",
    "SourceError",
    "Span",
    "format_program",
    "load",
    "lower",
    "objects_to_program",
    "parse",
    "parse_with_errors",
    "to_text",
    "tokenize",
]
