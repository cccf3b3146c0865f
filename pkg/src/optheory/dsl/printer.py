"""Canonical text for programs, and programs for library objects.

``format_program`` is the inverse of ``parse`` on syntax trees.
``objects_to_program`` turns states, effects, maps, tests and circuits into
declarations so that any witness can be written out and replayed.
"""

from __future__ import annotations

import numpy as np

from optheory.circuit import Circuit
from optheory.core import Effect, State, SystemRef, Test, Transformation
from optheory.dsl.ast import (
    TRIVIAL,
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
from optheory.errors import TypeMismatch


def _real(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"cannot print {x!r} as a literal")
    return repr(float(x))


def format_number(x) -> str:
    if isinstance(x, bool):
        raise ValueError("booleans are not numbers here")
    if isinstance(x, int):
        return str(x)
    return _real(x)


def format_num(n: Num) -> str:
    if n.im is None:
        return _real(n.re)
    sign = "-" if (n.im < 0 or (n.im == 0 and str(n.im).startswith("-"))) else "+"
    return f"{_real(n.re)}{sign}{_real(abs(n.im))}i"


def format_expr(e) -> str:
    if isinstance(e, Matrix):
        return "[" + ", ".join("[" + ", ".join(format_num(x) for x in row) + "]" for row in e.rows) + "]"
    if isinstance(e, Call):
        return f"{e.name}(" + ", ".join(format_number(a) for a in e.args) + ")"
    if isinstance(e, Ref):
        return e.name
    raise TypeError(f"not an expression: {e!r}")


def format_cexpr(c, parent: str = "") -> str:
    if isinstance(c, CRef):
        return c.name
    if isinstance(c, CSeq):
        text = " >> ".join(format_cexpr(i, "seq") for i in c.items)
        return f"({text})" if parent else text
    if isinstance(c, CPar):
        text = " & ".join(format_cexpr(i, "par") for i in c.items)
        return f"({text})" if parent == "par" else text
    raise TypeError(f"not a circuit expression: {c!r}")


def _format_option(value) -> str:
    return value if isinstance(value, str) else format_number(value)


def format_statement(s) -> str:
    if isinstance(s, SystemDecl):
        if s.theory == "boxworld":
            return f"system {s.name} : boxworld"
        return f"system {s.name} : {s.theory}({s.dim})"
    if isinstance(s, CompositeDecl):
        return f"system {s.name} = " + " * ".join(s.parts)
    if isinstance(s, StateDecl):
        return f"state {s.name} on {s.system} = {format_expr(s.expr)}"
    if isinstance(s, EffectDecl):
        return f"effect {s.name} on {s.system} = {format_expr(s.expr)}"
    if isinstance(s, MapDecl):
        return f"map {s.name} : {s.src} -> {s.dst} = {format_expr(s.expr)}"
    if isinstance(s, TestDecl):
        body = ",\n".join("  " + format_expr(b) for b in s.branches)
        return f"test {s.name} : {s.src} -> {s.dst} = {{\n{body}\n}}"
    if isinstance(s, CircuitDecl):
        return f"circuit {s.name} = {format_cexpr(s.body)}"
    if isinstance(s, EvalStmt):
        return f"eval {s.name}"
    if isinstance(s, CheckStmt):
        text = f"check {s.axiom} on {s.target}"
        if s.groups or s.options:
            parts = [", ".join(g) for g in s.groups] or [""]
            opts = ", ".join(f"{k}={_format_option(v)}" for k, v in s.options)
            parts[-1] = ", ".join(p for p in (parts[-1], opts) if p)
            text += " (" + " | ".join(parts) + ")"
        return text
    raise TypeError(f"not a statement: {s!r}")


def format_program(program: Program) -> str:
    return "".join(format_statement(s) + "\n" for s in program.statements)


# -- library objects to declarations ----------------------------------------------


class _Namer:
    """Deterministic names for systems and objects in an emitted program."""

    def __init__(self):
        self.systems: dict[SystemRef, str] = {}
        self.statements: list = []
        self.used: set[str] = {TRIVIAL}

    def fresh(self, base: str) -> str:
        name, k = base, 2
        while name in self.used:
            name, k = f"{base}_{k}", k + 1
        self.used.add(name)
        return name

    def system(self, s: SystemRef) -> str:
        if s.is_trivial:
            return TRIVIAL
        if s in self.systems:
            return self.systems[s]
        if s.is_composite:
            parts = [self.system(p) for p in s.parts]
            name = self.fresh("_".join(parts))
            self.statements.append(CompositeDecl(name, tuple(parts)))
        else:
            if s.theory_id == "boxworld":
                name = self.fresh("G")
                self.statements.append(SystemDecl(name, "boxworld"))
            else:
                name = self.fresh(f"{s.theory_id[0].upper()}{s.shape}")
                self.statements.append(SystemDecl(name, s.theory_id, int(s.shape)))
        self.systems[s] = name
        return name


def _matrix(values: np.ndarray) -> Matrix:
    values = np.atleast_2d(values)
    rows = []
    for row in values:
        entries = []
        for x in row:
            x = complex(x)
            entries.append(Num(float(x.real) + 0.0, float(x.imag) + 0.0 if x.imag != 0 else None))
        rows.append(tuple(entries))
    return Matrix(tuple(rows))


def value_literal(obj) -> Matrix:
    """Matrix literal that the lowering reads back as ``obj``."""
    from optheory.theories.quantum import choi_matrix, density_matrix, effect_operator

    if isinstance(obj, State):
        if obj.system.theory_id == "quantum" and not obj.system.is_trivial:
            return _matrix(density_matrix(obj))
        return _matrix(obj.coords[None, :])
    if isinstance(obj, Effect):
        if obj.system.theory_id == "quantum" and not obj.system.is_trivial:
            return _matrix(effect_operator(obj))
        return _matrix(obj.coords[None, :])
    if isinstance(obj, Transformation):
        if obj.theory_id == "quantum":
            if obj.input.is_trivial:
                return value_literal(obj.as_state())
            if obj.output.is_trivial:
                return value_literal(obj.as_effect())
            return _matrix(choi_matrix(obj))
        return _matrix(obj.matrix)
    raise TypeError(f"no literal for {type(obj).__name__}")


def _branch_literal(t: Transformation) -> Matrix:
    if t.input.is_trivial:
        return value_literal(t.as_state())
    if t.output.is_trivial:
        return value_literal(t.as_effect())
    return value_literal(t)


def _declare(namer: _Namer, name: str, obj) -> str:
    name = namer.fresh(name)
    if isinstance(obj, State):
        namer.statements.append(StateDecl(name, namer.system(obj.system), value_literal(obj)))
    elif isinstance(obj, Effect):
        namer.statements.append(EffectDecl(name, namer.system(obj.system), value_literal(obj)))
    elif isinstance(obj, Transformation):
        src, dst = namer.system(obj.input), namer.system(obj.output)
        namer.statements.append(MapDecl(name, src, dst, value_literal(obj)))
    elif isinstance(obj, Test):
        src, dst = namer.system(obj.input), namer.system(obj.output)
        namer.statements.append(TestDecl(name, src, dst, tuple(_branch_literal(b) for b in obj.branches)))
    elif isinstance(obj, Circuit):
        namer.statements.append(CircuitDecl(name, _circuit_expr(namer, obj, name)))
    else:
        raise TypeError(f"cannot declare {type(obj).__name__}")
    return name


def _circuit_expr(namer: _Namer, circuit: Circuit, prefix: str):
    """Layer the circuit left to right; each layer runs one node and carries
    the other open wires through identity maps."""
    names = [_declare(namer, f"{prefix}_{node.name or 'n'}{i}", node.test) for i, node in enumerate(circuit.nodes)]
    inputs_of = {}
    for w in circuit.wires:
        inputs_of[(w.dst, w.dst_port)] = (w.src, w.src_port)
    frontier: list[tuple[int, int]] = []
    layers = []
    identities: dict[SystemRef, str] = {}

    def identity(system: SystemRef) -> str:
        if system not in identities:
            nm = namer.fresh(f"id_{namer.system(system)}")
            sysname = namer.system(system)
            namer.statements.append(MapDecl(nm, sysname, sysname, Call("identity")))
            identities[system] = nm
        return identities[system]

    if circuit.dangling_inputs:
        raise TypeMismatch("only closed circuits or circuits without open inputs can be printed")
    for idx in circuit.order:
        node = circuit.nodes[idx]
        wanted = [inputs_of[(idx, p)] for p in range(len(node.inputs))]
        if wanted:
            try:
                start = frontier.index(wanted[0])
            except ValueError:
                raise TypeMismatch("circuit wiring is not expressible as layers") from None
            if frontier[start:start + len(wanted)] != wanted:
                raise TypeMismatch("circuit wiring is not expressible as layers")
        else:
            start = len(frontier)
        items = []
        for n, p in frontier[:start]:
            items.append(CRef(identity(circuit.nodes[n].outputs[p])))
        items.append(CRef(names[idx]))
        for n, p in frontier[start + len(wanted):]:
            items.append(CRef(identity(circuit.nodes[n].outputs[p])))
        layers.append(items[0] if len(items) == 1 else CPar(tuple(items)))
        outs = [(idx, p) for p in range(len(node.outputs))]
        frontier = frontier[:start] + outs + frontier[start + len(wanted):]
    return layers[0] if len(layers) == 1 else CSeq(tuple(layers))


def objects_to_program(named: dict) -> Program:
    """Declarations for every ``name -> object`` pair, systems first."""
    namer = _Namer()
    for name, obj in named.items():
        _declare(namer, name, obj)
    return Program(tuple(namer.statements))


def to_text(obj) -> str:
    """Canonical text for a program, a statement, or a library object."""
    if isinstance(obj, Program):
        return format_program(obj)
    if isinstance(obj, (State, Effect, Transformation, Test, Circuit)):
        return format_program(objects_to_program({"x": obj}))
    return format_statement(obj)
