"""Lexer and recursive-descent parser for ``.gpt`` programs."""

from __future__ import annotations

import re
from dataclasses import dataclass

from optheory.dsl.ast import (
    KEYWORDS,
    STATEMENT_KEYWORDS,
    THEORY_NAMES,
    Call,
    CheckStmt,
    CompositeDecl,
    CPar,
    CRef,
    CSeq,
    CircuitDecl,
    EffectDecl,
    EvalStmt,
    MapDecl,
    Matrix,
    Num,
    Program,
    Ref,
    SourceError,
    Span,
    StateDecl,
    SystemDecl,
    TestDecl,
)
from optheory.errors import DSLError

_NUMBER = r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
_TOKEN = re.compile(
    rf"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<imag>{_NUMBER}i(?![A-Za-z0-9_]))
  | (?P<number>{_NUMBER})
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>->|>>|[:=(){{}}\[\],&*|+-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # name, number, imag, punct, eof
    text: str
    span: Span


def tokenize(text: str) -> tuple[list[Token], list[SourceError]]:
    tokens, errors = [], []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            errors.append(SourceError(Span(line, col, 1, pos), "lex", f"unexpected character {text[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, Span(line, col, len(value), pos)))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1, 0, pos)))
    return tokens, errors


class _Fail(Exception):
    def __init__(self, error: SourceError):
        self.error = error


def _join(a: Span, b: Span) -> Span:
    return Span(a.line, a.column, b.offset + b.length - a.offset, a.offset)


def _number(text: str):
    if re.fullmatch(r"\d+", text):
        return int(text)
    return float(text)


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "name") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise _Fail(SourceError(tok.span, "parse", f"{message}, found {found}"))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def name(self, what: str = "name") -> Token:
        if self.tok.kind != "name" or self.tok.text in KEYWORDS:
            self.fail(f"expected {what}")
        return self.advance()

    def last_span(self) -> Span:
        return self.tokens[self.pos - 1].span

    # program

    def program(self) -> tuple[Program, list[SourceError]]:
        statements, errors = [], []
        while self.tok.kind != "eof":
            try:
                statements.append(self.statement())
            except _Fail as exc:
                errors.append(exc.error)
                self.synchronize()
        return Program(tuple(statements)), errors

    def synchronize(self) -> None:
        self.advance()
        while self.tok.kind != "eof" and not (self.tok.kind == "name" and self.tok.text in STATEMENT_KEYWORDS):
            self.advance()

    def statement(self):
        start = self.tok
        if start.kind != "name" or start.text not in STATEMENT_KEYWORDS:
            self.fail("expected a statement")
        self.advance()
        node = getattr(self, f"stmt_{start.text}")()
        return type(node)(**{**node.__dict__, "span": _join(start.span, self.last_span())})

    def stmt_system(self):
        name = self.name("system name").text
        if self.at("="):
            self.advance()
            parts = [self.name("system name").text]
            self.expect("*")
            parts.append(self.name("system name").text)
            while self.at("*"):
                self.advance()
                parts.append(self.name("system name").text)
            return CompositeDecl(name, tuple(parts))
        self.expect(":")
        theory = self.tok
        if theory.kind != "name" or theory.text not in THEORY_NAMES:
            self.fail("expected classical, quantum or boxworld")
        self.advance()
        if theory.text == "boxworld":
            return SystemDecl(name, "boxworld")
        self.expect("(")
        if self.tok.kind != "number" or not self.tok.text.isdigit():
            self.fail("expected an integer dimension")
        dim = int(self.advance().text)
        self.expect(")")
        return SystemDecl(name, theory.text, dim)

    def stmt_state(self):
        name = self.name("state name").text
        self.expect("on")
        system = self.name("system name").text
        self.expect("=")
        return StateDecl(name, system, self.expr())

    def stmt_effect(self):
        name = self.name("effect name").text
        self.expect("on")
        system = self.name("system name").text
        self.expect("=")
        return EffectDecl(name, system, self.expr())

    def _arrow_types(self):
        self.expect(":")
        src = self.name("system name").text
        self.expect("->")
        dst = self.name("system name").text
        self.expect("=")
        return src, dst

    def stmt_map(self):
        name = self.name("map name").text
        src, dst = self._arrow_types()
        return MapDecl(name, src, dst, self.expr())

    def stmt_test(self):
        name = self.name("test name").text
        src, dst = self._arrow_types()
        self.expect("{")
        branches = [self.expr()]
        while self.at(","):
            self.advance()
            branches.append(self.expr())
        self.expect("}")
        return TestDecl(name, src, dst, tuple(branches))

    def stmt_circuit(self):
        name = self.name("circuit name").text
        self.expect("=")
        return CircuitDecl(name, self.cexpr())

    def stmt_eval(self):
        return EvalStmt(self.name("circuit name").text)

    def stmt_check(self):
        axiom = self.name("axiom name").text
        self.expect("on")
        target = self.name("target name").text
        groups, options = (), ()
        if self.at("("):
            groups, options = self.check_args()
        return CheckStmt(axiom, target, groups, options)

    def check_args(self):
        self.expect("(")
        groups, current, options = [], [], []
        if not self.at(")"):
            while True:
                if self.at("|"):
                    self.advance()
                    groups.append(tuple(current))
                    current = []
                    if self.at(")"):
                        break
                    continue
                key = self.name("argument")
                if self.at("="):
                    self.advance()
                    options.append((key.text, self.option_value()))
                else:
                    current.append(key.text)
                if self.at(","):
                    self.advance()
                    continue
                if self.at("|"):
                    continue
                break
        groups.append(tuple(current))
        self.expect(")")
        if not any(groups):
            groups = []
        return tuple(groups), tuple(options)

    def option_value(self):
        if self.tok.kind == "name" and self.tok.text not in KEYWORDS:
            return self.advance().text
        return self.signed_number()

    def signed_number(self):
        sign = 1
        if self.at("-") or self.at("+"):
            sign = -1 if self.advance().text == "-" else 1
        if self.tok.kind != "number":
            self.fail("expected a number")
        return sign * _number(self.advance().text)

    # expressions

    def expr(self):
        start = self.tok
        if self.at("["):
            return self.matrix()
        name = self.name("expression")
        if self.at("("):
            self.advance()
            args = []
            if not self.at(")"):
                args.append(self.signed_number())
                while self.at(","):
                    self.advance()
                    args.append(self.signed_number())
            self.expect(")")
            return Call(name.text, tuple(args), _join(start.span, self.last_span()))
        return Ref(name.text, name.span)

    def matrix(self):
        start = self.expect("[")
        rows = [self.row()]
        while self.at(","):
            self.advance()
            rows.append(self.row())
        self.expect("]")
        return Matrix(tuple(rows), _join(start.span, self.last_span()))

    def row(self):
        self.expect("[")
        entries = [self.entry()]
        while self.at(","):
            self.advance()
            entries.append(self.entry())
        self.expect("]")
        return tuple(entries)

    def entry(self) -> Num:
        sign = 1.0
        if self.at("-") or self.at("+"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        if self.tok.kind == "imag":
            return Num(0.0, sign * float(self.advance().text[:-1]))
        if self.tok.kind != "number":
            self.fail("expected a matrix entry")
        re_part = sign * float(self.advance().text)
        if (self.at("+") or self.at("-")) and self.peek().kind == "imag":
            s = -1.0 if self.advance().text == "-" else 1.0
            return Num(re_part, s * float(self.advance().text[:-1]))
        return Num(re_part)

    # circuit expressions: ">>" sequential, "&" parallel (binds tighter)

    def cexpr(self):
        start = self.tok
        items = [self.cterm()]
        while self.at(">>"):
            self.advance()
            items.append(self.cterm())
        if len(items) == 1:
            return items[0]
        return CSeq(tuple(items), _join(start.span, self.last_span()))

    def cterm(self):
        start = self.tok
        items = [self.catom()]
        while self.at("&"):
            self.advance()
            items.append(self.catom())
        if len(items) == 1:
            return items[0]
        return CPar(tuple(items), _join(start.span, self.last_span()))

    def catom(self):
        if self.at("("):
            self.advance()
            inner = self.cexpr()
            self.expect(")")
            return inner
        tok = self.name("circuit component")
        return CRef(tok.text, tok.span)


def parse_with_errors(text: str) -> tuple[Program, list[SourceError]]:
    """Parse as much as possible; returns the program and every lex/parse error."""
    tokens, lex_errors = tokenize(text)
    program, parse_errors = Parser(tokens).program()
    errors = sorted(lex_errors + parse_errors, key=lambda e: (e.span.offset, e.kind))
    return program, errors


def parse(text: str) -> Program:
    """Parse ``text``; raises :class:`DSLError` listing every lex/parse error."""
    program, errors = parse_with_errors(text)
    if errors:
        raise DSLError(errors)
    return program
