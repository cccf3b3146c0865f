"""Syntax tree of ``.gpt`` programs.

Spans are carried on every node but excluded from equality, so a program
and the re-parse of its printed form compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

KEYWORDS = frozenset({"system", "state", "effect", "map", "test", "circuit", "eval", "check", "on"})
STATEMENT_KEYWORDS = frozenset({"system", "state", "effect", "map", "test", "circuit", "eval", "check"})
THEORY_NAMES = ("classical", "quantum", "boxworld")
TRIVIAL = "trivial"


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int
    offset: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


NO_SPAN = Span(0, 0, 0, 0)


@dataclass(frozen=True)
class SourceError:
    span: Span
    kind: str  # lex, parse, resolve, type
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.kind} error: {self.message}"


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# expressions


@dataclass(frozen=True)
class Num:
    """Matrix entry; ``im`` is ``None`` for a real literal."""

    re: float
    im: float | None = None


@dataclass(frozen=True)
class Matrix:
    rows: tuple[tuple[Num, ...], ...]
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[int | float, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class Ref:
    name: str
    span: Span = _span()


Expr = Union[Matrix, Call, Ref]


# circuit expressions


@dataclass(frozen=True)
class CRef:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class CSeq:
    items: tuple
    span: Span = _span()


@dataclass(frozen=True)
class CPar:
    items: tuple
    span: Span = _span()


CExpr = Union[CRef, CSeq, CPar]


# statements


@dataclass(frozen=True)
class SystemDecl:
    name: str
    theory: str
    dim: int | None = None
    span: Span = _span()


@dataclass(frozen=True)
class CompositeDecl:
    name: str
    parts: tuple[str, ...]
    span: Span = _span()


@dataclass(frozen=True)
class StateDecl:
    name: str
    system: str
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class EffectDecl:
    name: str
    system: str
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class MapDecl:
    name: str
    src: str
    dst: str
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class TestDecl:
    __test__ = False
    name: str
    src: str
    dst: str
    branches: tuple
    span: Span = _span()


@dataclass(frozen=True)
class CircuitDecl:
    name: str
    body: CExpr
    span: Span = _span()


@dataclass(frozen=True)
class EvalStmt:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class CheckStmt:
    """``groups`` are ``|``-separated lists of names; ``options`` are
    ``key=value`` pairs in source order."""

    axiom: str
    target: str
    groups: tuple[tuple[str, ...], ...] = ()
    options: tuple[tuple[str, object], ...] = ()
    span: Span = _span()


Statement = Union[
    SystemDecl, CompositeDecl, StateDecl, EffectDecl, MapDecl, TestDecl, CircuitDecl, EvalStmt, CheckStmt
]


@dataclass(frozen=True)
class Program:
    statements: tuple = ()
