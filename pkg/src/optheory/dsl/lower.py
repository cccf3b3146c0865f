"""Lowering of parsed programs to systems, processes and circuits.

Name resolution and type checking run statement by statement; every
problem is recorded with its span and lowering carries on, so one run
reports all independent errors.  A declaration that failed is remembered
so later references to it do not produce follow-on errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from optheory.circuit import Circuit, Node, build
from optheory.core import (
    Effect,
    State,
    SystemRef,
    Test,
    Transformation,
    as_transformation,
    compose_systems,
    deterministic_effect,
    get_theory,
    trivial,
)
from optheory.dsl.ast import (
    TRIVIAL,
    Call,
    CheckStmt,
    CompositeDecl,
    CRef,
    CSeq,
    CircuitDecl,
    EffectDecl,
    EvalStmt,
    MapDecl,
    Matrix,
    Program,
    Ref,
    SourceError,
    Span,
    StateDecl,
    SystemDecl,
    TestDecl,
)
from optheory.dsl.parser import parse
from optheory.errors import DSLError, GPTError
from optheory.theories import CATALOG, make_system, named_state
from optheory.theories.quantum import (
    effect_from_operator,
    hilbert_dim,
    kraus_to_transformation,
    state_from_density,
    transformation_from_choi,
)

LITERAL_TOL = 1e-9

# builtins beyond the state catalog
EFFECT_BUILTINS = ("discard",)
MAP_BUILTINS = ("identity",)

# axiom -> (target kinds, number of name groups, allowed options)
AXIOMS = {
    "causality": (("system",), 0, ("samples", "seed")),
    "purity_preservation": (("system",), 0, ("samples", "seed")),
    "purification": (("state",), 0, ("max_env",)),
    "no_signalling": (("state",), 2, ()),
    "no_cloning": (("system",), 1, ("blank",)),
    "entanglement": (("system", "state"), 0, ("max_partner",)),
}
INT_OPTIONS = ("samples", "seed", "max_env", "max_partner")


@dataclass
class EvalItem:
    name: str
    circuit: Circuit
    span: Span


@dataclass
class CheckItem:
    axiom: str
    target_name: str
    target: object
    groups: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    span: Span | None = None


@dataclass
class LoweredProgram:
    systems: dict
    objects: dict
    circuits: dict
    items: list


class _Error(Exception):
    def __init__(self, span: Span, kind: str, message: str):
        self.error = SourceError(span, kind, message)


class _Skip(Exception):
    """A reference to a declaration that already failed."""


def _kind_name(obj) -> str:
    if isinstance(obj, State):
        return "state"
    if isinstance(obj, Effect):
        return "effect"
    if isinstance(obj, Test):
        return "test"
    if isinstance(obj, Circuit):
        return "circuit"
    if isinstance(obj, SystemRef):
        return "system"
    return "map"


class Lowering:
    def __init__(self):
        self.systems: dict[str, SystemRef] = {}
        self.objects: dict = {}
        self.circuits: dict[str, Circuit] = {}
        self.items: list = []
        self.failed: set[str] = set()
        self.errors: list[SourceError] = []

    def run(self, program: Program) -> LoweredProgram:
        for stmt in program.statements:
            try:
                getattr(self, f"do_{type(stmt).__name__}")(stmt)
            except _Error as exc:
                self.errors.append(exc.error)
                self._mark_failed(stmt)
            except _Skip:
                self._mark_failed(stmt)
        if self.errors:
            raise DSLError(self.errors)
        return LoweredProgram(self.systems, self.objects, self.circuits, self.items)

    def _mark_failed(self, stmt) -> None:
        name = getattr(stmt, "name", None)
        if isinstance(stmt, EvalStmt) or name is None:
            return
        # a rejected redeclaration leaves the first declaration usable
        if name not in self.systems and name not in self.objects and name not in self.circuits:
            self.failed.add(name)

    # names

    def _check_fresh(self, name: str, span: Span, namespace: str) -> None:
        if name == TRIVIAL:
            raise _Error(span, "resolve", "'trivial' is predeclared")
        taken = self.systems if namespace == "system" else {**self.objects, **self.circuits}
        if name in taken or name in self.failed:
            raise _Error(span, "resolve", f"{name!r} is already declared")

    def system(self, name: str, span: Span) -> SystemRef | None:
        """``None`` stands for the trivial system of the surrounding theory."""
        if name == TRIVIAL:
            return None
        if name in self.systems:
            return self.systems[name]
        if name in self.failed:
            raise _Skip
        if name in self.objects or name in self.circuits:
            raise _Error(span, "resolve", f"{name!r} is not a system")
        raise _Error(span, "resolve", f"unknown system {name!r}")

    def arrow(self, src_name: str, dst_name: str, span: Span) -> tuple[SystemRef, SystemRef]:
        src, dst = self.system(src_name, span), self.system(dst_name, span)
        if src is None and dst is None:
            raise _Error(span, "type", "a process between trivial systems has no theory")
        theory = (src or dst).theory_id
        src = src or trivial(theory)
        dst = dst or trivial(theory)
        if src.theory_id != dst.theory_id:
            raise _Error(span, "type", f"{src} and {dst} belong to different theories")
        return src, dst

    # statements

    def do_SystemDecl(self, s: SystemDecl) -> None:
        self._check_fresh(s.name, s.span, "system")
        try:
            self.systems[s.name] = make_system(s.theory, s.dim)
        except GPTError as exc:
            raise _Error(s.span, "type", str(exc)) from None

    def do_CompositeDecl(self, s: CompositeDecl) -> None:
        self._check_fresh(s.name, s.span, "system")
        parts = [self.system(p, s.span) for p in s.parts]
        parts = [p for p in parts if p is not None]
        if not parts:
            raise _Error(s.span, "type", "a composite of trivial systems has no theory")
        try:
            self.systems[s.name] = compose_systems(*parts)
        except GPTError as exc:
            raise _Error(s.span, "type", str(exc)) from None

    def do_StateDecl(self, s: StateDecl) -> None:
        self._check_fresh(s.name, s.span, "object")
        system = self.system(s.system, s.span)
        if system is None:
            raise _Error(s.span, "type", "a state on the trivial system has no theory")
        t = self.value(s.expr, trivial(system.theory_id), system, "state")
        self.objects[s.name] = t.as_state()

    def do_EffectDecl(self, s: EffectDecl) -> None:
        self._check_fresh(s.name, s.span, "object")
        system = self.system(s.system, s.span)
        if system is None:
            raise _Error(s.span, "type", "an effect on the trivial system has no theory")
        t = self.value(s.expr, system, trivial(system.theory_id), "effect")
        self.objects[s.name] = t.as_effect()

    def do_MapDecl(self, s: MapDecl) -> None:
        self._check_fresh(s.name, s.span, "object")
        src, dst = self.arrow(s.src, s.dst, s.span)
        self.objects[s.name] = self.value(s.expr, src, dst, "map")

    def do_TestDecl(self, s: TestDecl) -> None:
        self._check_fresh(s.name, s.span, "object")
        src, dst = self.arrow(s.src, s.dst, s.span)
        kind = "state" if src.is_trivial else "effect" if dst.is_trivial else "map"
        branches = [self.value(b, src, dst, kind) for b in s.branches]
        test = Test(branches)
        if not get_theory(src.theory_id).valid_test(test, LITERAL_TOL):
            raise _Error(s.span, "type", f"branches do not form a deterministic test {src} -> {dst}")
        self.objects[s.name] = test

    def do_CircuitDecl(self, s: CircuitDecl) -> None:
        self._check_fresh(s.name, s.span, "object")
        self.circuits[s.name] = self.circuit(s.body, s.span)

    def do_EvalStmt(self, s: EvalStmt) -> None:
        if s.name in self.failed:
            raise _Skip
        if s.name not in self.circuits:
            what = "unknown name" if s.name not in self.objects else f"{_kind_name(self.objects[s.name])}, not a circuit"
            raise _Error(s.span, "resolve", f"eval {s.name!r}: {what}")
        circuit = self.circuits[s.name]
        if not circuit.is_closed:
            raise _Error(s.span, "type", f"circuit {s.name!r} has open wires")
        self.items.append(EvalItem(s.name, circuit, s.span))

    def do_CheckStmt(self, s: CheckStmt) -> None:
        if s.axiom not in AXIOMS:
            raise _Error(s.span, "resolve", f"unknown axiom {s.axiom!r}; expected one of {', '.join(AXIOMS)}")
        kinds, n_groups, allowed = AXIOMS[s.axiom]
        target = self.lookup(s.target, s.span)
        if _kind_name(target) not in kinds:
            raise _Error(s.span, "resolve", f"check {s.axiom} needs a {' or '.join(kinds)}, {s.target!r} is a {_kind_name(target)}")
        groups = [g for g in s.groups]
        if n_groups == 0 and any(groups) or n_groups and (len(groups) != n_groups or not all(groups)):
            raise _Error(s.span, "resolve", f"check {s.axiom} takes {n_groups} nonempty name list(s)")
        resolved = [[self.lookup(n, s.span) for n in g] for g in groups]
        options = {}
        for key, value in s.options:
            if key not in allowed:
                raise _Error(s.span, "resolve", f"check {s.axiom} has no option {key!r}")
            if key in INT_OPTIONS:
                if not isinstance(value, int) or value < 0:
                    raise _Error(s.span, "type", f"option {key} needs a non-negative integer")
                options[key] = value
            else:
                if not isinstance(value, str):
                    raise _Error(s.span, "type", f"option {key} needs a name")
                options[key] = self.lookup(value, s.span)
        self._type_check_args(s, target, resolved, options)
        self.items.append(CheckItem(s.axiom, s.target, target, resolved, options, s.span))

    def _type_check_args(self, s: CheckStmt, target, groups, options) -> None:
        if s.axiom == "no_signalling":
            parts = target.system.parts
            if len(parts) != 2:
                raise _Error(s.span, "type", f"no_signalling needs a bipartite state, {s.target!r} is on {target.system}")
            for i, (side, group) in enumerate(zip(parts, groups)):
                tests = []
                for t in group:
                    if isinstance(t, (State, Effect, Transformation)):
                        t = Test.single(as_transformation(t))
                    if not isinstance(t, Test) or t.input != side or not t.output.is_trivial:
                        raise _Error(s.span, "type", f"each test must observe {side}")
                    tests.append(t)
                groups[i] = tests
        if s.axiom == "no_cloning":
            for p in groups[0] + ([options["blank"]] if "blank" in options else []):
                if not isinstance(p, State) or p.system != target:
                    raise _Error(s.span, "type", f"probes and blank must be states on {target}")

    def lookup(self, name: str, span: Span):
        if name in self.failed:
            raise _Skip
        for table in (self.objects, self.circuits, self.systems):
            if name in table:
                return table[name]
        raise _Error(span, "resolve", f"unknown name {name!r}")

    # expressions

    def value(self, expr, src: SystemRef, dst: SystemRef, kind: str) -> Transformation:
        if isinstance(expr, Ref):
            if expr.name in self.failed:
                raise _Skip
            if expr.name in self.objects:
                obj = self.objects[expr.name]
                if isinstance(obj, Test):
                    if len(obj) != 1:
                        raise _Error(expr.span, "type", f"{expr.name!r} is a test with {len(obj)} outcomes")
                    obj = obj.branches[0]
                t = as_transformation(obj)
                if t.input != src or t.output != dst:
                    raise _Error(
                        expr.span, "type", f"{expr.name!r} maps {t.input} -> {t.output}, expected {src} -> {dst}"
                    )
                return t
            if expr.name in CATALOG or expr.name in EFFECT_BUILTINS + MAP_BUILTINS:
                return self.builtin(Call(expr.name, (), expr.span), src, dst, kind)
            if expr.name in self.circuits or expr.name in self.systems:
                raise _Error(expr.span, "resolve", f"{expr.name!r} is a {_kind_name(self.lookup(expr.name, expr.span))}")
            raise _Error(expr.span, "resolve", f"unknown name {expr.name!r}")
        if isinstance(expr, Call):
            return self.builtin(expr, src, dst, kind)
        return self.literal(expr, src, dst, kind)

    def builtin(self, call: Call, src: SystemRef, dst: SystemRef, kind: str) -> Transformation:
        name = call.name
        if name in CATALOG:
            if kind != "state":
                raise _Error(call.span, "resolve", f"{name} is a state, expected a {kind}")
            try:
                return as_transformation(named_state(dst.theory_id, name, call.args, dst))
            except GPTError as exc:
                raise _Error(call.span, "resolve", str(exc)) from None
        if name == "discard":
            if kind != "effect" or call.args:
                raise _Error(call.span, "resolve", f"discard is an effect without parameters, expected a {kind}")
            return as_transformation(deterministic_effect(src))
        if name == "identity":
            if call.args or src != dst:
                raise _Error(call.span, "type", f"identity needs matching systems, got {src} -> {dst}")
            return Transformation.identity(src)
        raise _Error(call.span, "resolve", f"unknown builtin {name!r}")

    def literal(self, m: Matrix, src: SystemRef, dst: SystemRef, kind: str) -> Transformation:
        theory = get_theory(src.theory_id)
        is_complex = any(x.im is not None for row in m.rows for x in row)
        if is_complex and theory.id != "quantum":
            raise _Error(m.span, "type", "complex entries are only allowed in quantum literals")
        if len({len(r) for r in m.rows}) != 1:
            raise _Error(m.span, "type", "matrix rows have different lengths")
        values = np.array([[complex(x.re, x.im or 0.0) for x in row] for row in m.rows])
        try:
            t = self._literal_value(values, src, dst, kind, theory.id)
        except GPTError as exc:
            raise _Error(m.span, "type", str(exc)) from None
        if not theory.valid_transformation(t, LITERAL_TOL):
            raise _Error(m.span, "type", f"literal is not a valid {kind} {self._describe(src, dst)}")
        return t

    @staticmethod
    def _describe(src: SystemRef, dst: SystemRef) -> str:
        if src.is_trivial:
            return f"on {dst}"
        if dst.is_trivial:
            return f"on {src}"
        return f"{src} -> {dst}"

    def _literal_value(self, values, src, dst, kind, theory_id) -> Transformation:
        shape = values.shape
        if theory_id == "quantum" and not (src.is_trivial and dst.is_trivial):
            if kind in ("state", "effect"):
                system = dst if kind == "state" else src
                d = hilbert_dim(system)
                if shape != (d, d):
                    raise _TypeProblem(f"expected a {d}x{d} operator, got {shape[0]}x{shape[1]}")
                if np.max(np.abs(values - values.conj().T)) > LITERAL_TOL:
                    raise _TypeProblem(f"{kind} operator must be Hermitian")
                if kind == "state":
                    return as_transformation(state_from_density(system, values))
                return as_transformation(effect_from_operator(system, values))
            d_in, d_out = hilbert_dim(src), hilbert_dim(dst)
            if shape == (d_out, d_in):
                return kraus_to_transformation([values], src, dst)
            if shape == (d_in * d_out, d_in * d_out):
                if np.max(np.abs(values - values.conj().T)) > LITERAL_TOL:
                    raise _TypeProblem("Choi matrix must be Hermitian")
                return transformation_from_choi(values, src, dst)
            raise _TypeProblem(
                f"expected a {d_out}x{d_in} Kraus operator or a {d_in * d_out}x{d_in * d_out} Choi matrix, got {shape[0]}x{shape[1]}"
            )
        want = (dst.rep_dim, src.rep_dim)
        if kind == "effect":
            want = (1, src.rep_dim)
        elif kind == "state":
            want = (1, dst.rep_dim)
        if shape != want:
            raise _TypeProblem(f"expected a {want[0]}x{want[1]} matrix, got {shape[0]}x{shape[1]}")
        if kind == "state":
            return Transformation(src, dst, values.real.T)
        return Transformation(src, dst, values.real)

    # circuits

    def circuit(self, c, span: Span) -> Circuit:
        counts: dict[str, int] = {}
        return self._circuit(c, span, counts)

    def _circuit(self, c, span: Span, counts: dict) -> Circuit:
        if isinstance(c, CRef):
            if c.name in self.failed:
                raise _Skip
            if c.name in self.circuits:
                return self.circuits[c.name]
            if c.name not in self.objects:
                if c.name in self.systems:
                    raise _Error(c.span, "resolve", f"{c.name!r} is a system, not a process")
                raise _Error(c.span, "resolve", f"unknown process {c.name!r}")
            obj = self.objects[c.name]
            test = obj if isinstance(obj, Test) else Test.single(as_transformation(obj))
            k = counts.get(c.name, 0) + 1
            counts[c.name] = k
            return build([Node(test, c.name if k == 1 else f"{c.name}_{k}")])
        parts = [self._circuit(i, span, counts) for i in c.items]
        out = parts[0]
        try:
            for p in parts[1:]:
                out = out.then(p) if isinstance(c, CSeq) else out.beside(p)
        except GPTError as exc:
            raise _Error(c.span if c.span.length else span, "type", str(exc)) from None
        return out


class _TypeProblem(GPTError):
    pass


def lower(program: Program) -> LoweredProgram:
    """Resolve and type-check ``program``; raises :class:`DSLError` with all errors."""
    return Lowering().run(program)


def load(text: str) -> LoweredProgram:
    return lower(parse(text))
