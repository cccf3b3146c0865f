"""Random syntax trees for round-trip testing of the printer and parser."""

from __future__ import annotations

from optheory.dsl.ast import (
    KEYWORDS,
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
    StateDecl,
    SystemDecl,
    TestDecl,
)
from optheory.theories.base import rng_from_seed

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_"


class _Gen:
    def __init__(self, seed):
        self.rng = rng_from_seed(seed)

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def name(self) -> str:
        while True:
            n = "".join(self.pick(_LETTERS) for _ in range(int(self.rng.integers(1, 6))))
            n += "".join(self.pick(_LETTERS + "0123456789") for _ in range(int(self.rng.integers(0, 3))))
            if n not in KEYWORDS:
                return n

    def real(self) -> float:
        kind = self.rng.uniform()
        if kind < 0.3:
            return float(self.rng.integers(-3, 4))
        if kind < 0.4:
            return float(self.rng.normal() * 10.0 ** int(self.rng.integers(-12, 12)))
        return float(self.rng.normal())

    def number(self):
        return int(self.rng.integers(-5, 20)) if self.rng.uniform() < 0.6 else self.real()

    def num(self) -> Num:
        return Num(self.real(), self.real() if self.rng.uniform() < 0.3 else None)

    def expr(self):
        kind = self.rng.uniform()
        if kind < 0.4:
            rows, cols = int(self.rng.integers(1, 4)), int(self.rng.integers(1, 4))
            return Matrix(tuple(tuple(self.num() for _ in range(cols)) for _ in range(rows)))
        if kind < 0.7:
            return Call(self.name(), tuple(self.number() for _ in range(int(self.rng.integers(0, 4)))))
        return Ref(self.name())

    def cexpr(self, depth: int = 0):
        if depth > 2 or self.rng.uniform() < 0.35:
            return CRef(self.name())
        items = tuple(self.cexpr(depth + 1) for _ in range(int(self.rng.integers(2, 4))))
        return CSeq(items) if self.rng.uniform() < 0.5 else CPar(items)

    def statement(self):
        kind = int(self.rng.integers(10))
        if kind == 0:
            theory = self.pick(THEORY_NAMES)
            return SystemDecl(self.name(), theory, None if theory == "boxworld" else int(self.rng.integers(1, 9)))
        if kind == 1:
            return CompositeDecl(self.name(), tuple(self.name() for _ in range(int(self.rng.integers(2, 4)))))
        if kind == 2:
            return StateDecl(self.name(), self.name(), self.expr())
        if kind == 3:
            return EffectDecl(self.name(), self.name(), self.expr())
        if kind == 4:
            return MapDecl(self.name(), self.name(), self.name(), self.expr())
        if kind == 5:
            return TestDecl(self.name(), self.name(), self.name(), tuple(self.expr() for _ in range(int(self.rng.integers(1, 4)))))
        if kind in (6, 7):
            return CircuitDecl(self.name(), self.cexpr())
        if kind == 8:
            return EvalStmt(self.name())
        n_groups = int(self.rng.integers(0, 3))
        groups = tuple(tuple(self.name() for _ in range(int(self.rng.integers(1, 3)))) for _ in range(n_groups))
        options = tuple(
            (self.name(), self.name() if self.rng.uniform() < 0.3 else self.number())
            for _ in range(int(self.rng.integers(0, 3)))
        )
        return CheckStmt(self.name(), self.name(), groups, options)


def random_program(seed, n_statements: int | None = None) -> Program:
    """A syntactically valid program; names need not resolve."""
    gen = _Gen(seed)
    n = int(gen.rng.integers(1, 30)) if n_statements is None else n_statements
    return Program(tuple(gen.statement() for _ in range(n)))
