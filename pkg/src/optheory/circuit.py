"""Typed circuits of tests and their evaluation.

A node wraps a :class:`~optheory.core.Test`; its ports are the atomic
components of the test's input and output systems.  Wires connect an
output port to an input port of the same system type.  Closed circuits
(no dangling ports) evaluate to joint outcome distributions; open ones,
with one branch chosen per node, evaluate to transformations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from optheory.core import (
    OutcomeDistribution,
    SystemRef,
    Test,
    Transformation,
    as_transformation,
    compose_systems,
    get_theory,
    trivial,
)
from optheory.errors import BranchOutOfRange, CycleDetected, EmptyList, OpenCircuit, TypeMismatch
from optheory.theories.base import rng_from_seed


@dataclass(frozen=True, eq=False)
class Node:
    test: Test
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.test, Test):
            object.__setattr__(self, "test", Test.single(self.test))

    @property
    def inputs(self) -> tuple[SystemRef, ...]:
        return self.test.input.parts

    @property
    def outputs(self) -> tuple[SystemRef, ...]:
        return self.test.output.parts

    @property
    def labels(self) -> tuple[str, ...]:
        return self.test.labels

    @property
    def kind(self) -> str:
        if self.test.input.is_trivial:
            return "preparation"
        if self.test.output.is_trivial:
            return "observation"
        return "transformation"


@dataclass(frozen=True, order=True)
class Wire:
    """Edge from output port ``src_port`` of node ``src`` to input port
    ``dst_port`` of node ``dst``."""

    src: int
    src_port: int
    dst: int
    dst_port: int


@dataclass(frozen=True, eq=False)
class Circuit:
    nodes: tuple
    wires: tuple
    order: tuple
    dangling_inputs: tuple
    dangling_outputs: tuple
    theory_id: str

    @property
    def is_closed(self) -> bool:
        return not self.dangling_inputs and not self.dangling_outputs

    @property
    def input_system(self) -> SystemRef:
        systems = [self.nodes[n].inputs[p] for n, p in self.dangling_inputs]
        return compose_systems(*systems) if systems else trivial(self.theory_id)

    @property
    def output_system(self) -> SystemRef:
        systems = [self.nodes[n].outputs[p] for n, p in self.dangling_outputs]
        return compose_systems(*systems) if systems else trivial(self.theory_id)

    @property
    def label_schema(self) -> tuple[str, ...]:
        return tuple(node.name or f"n{i}" for i, node in enumerate(self.nodes))

    def predecessors(self) -> list[set[int]]:
        preds = [set() for _ in self.nodes]
        for w in self.wires:
            preds[w.dst].add(w.src)
        return preds

    def is_topological(self, order: Sequence[int]) -> bool:
        order = list(order)
        if sorted(order) != list(range(len(self.nodes))):
            return False
        pos = {n: i for i, n in enumerate(order)}
        return all(pos[w.src] < pos[w.dst] for w in self.wires)

    def replace_node(self, index: int, test: Test) -> Circuit:
        """Same wiring with node ``index`` running ``test`` instead."""
        old = self.nodes[index]
        if test.input != old.test.input or test.output != old.test.output:
            raise TypeMismatch("replacement test must have the same systems")
        nodes = list(self.nodes)
        nodes[index] = Node(test, old.name)
        return build(nodes, self.wires)

    def then(self, other: Circuit) -> Circuit:
        """Wire this circuit's dangling outputs, in order, into the dangling
        inputs of ``other``."""
        outs, ins = self.dangling_outputs, other.dangling_inputs
        if len(outs) != len(ins):
            raise TypeMismatch(f"{len(outs)} open outputs cannot feed {len(ins)} open inputs")
        shift = len(self.nodes)
        wires = list(self.wires) + [
            Wire(w.src + shift, w.src_port, w.dst + shift, w.dst_port) for w in other.wires
        ]
        wires += [Wire(n, p, m + shift, q) for (n, p), (m, q) in zip(outs, ins)]
        return build(list(self.nodes) + list(other.nodes), wires)

    def beside(self, other: Circuit) -> Circuit:
        shift = len(self.nodes)
        wires = list(self.wires) + [
            Wire(w.src + shift, w.src_port, w.dst + shift, w.dst_port) for w in other.wires
        ]
        return build(list(self.nodes) + list(other.nodes), wires)


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    distribution: OutcomeDistribution
    schema: tuple = field(default=())

    @property
    def scalar(self) -> float:
        if len(self.distribution.probs) != 1:
            raise ValueError("scalar view needs a single joint outcome")
        return float(self.distribution.probs[0])


def build(nodes, wires=()) -> Circuit:
    """Validate ``nodes`` and ``wires`` into a :class:`Circuit`.

    Dangling ports leave the circuit open.  Every type error is collected
    and reported together on the raised :class:`TypeMismatch` (its
    ``errors`` attribute); cycles raise :class:`CycleDetected`.
    """
    nodes = tuple(n if isinstance(n, Node) else Node(n) for n in nodes)
    if not nodes:
        raise EmptyList("a circuit needs at least one node")
    wires = tuple(w if isinstance(w, Wire) else Wire(*w) for w in wires)
    theory_id = nodes[0].test.input.theory_id
    errors = []
    for i, node in enumerate(nodes):
        if node.test.input.theory_id != theory_id:
            errors.append(f"node {i} belongs to {node.test.input.theory_id}, not {theory_id}")
    used_out, used_in = set(), set()
    for w in wires:
        if not (0 <= w.src < len(nodes) and 0 <= w.dst < len(nodes)):
            errors.append(f"{w} refers to a missing node")
            continue
        if not (0 <= w.src_port < len(nodes[w.src].outputs)):
            errors.append(f"{w}: node {w.src} has no output port {w.src_port}")
            continue
        if not (0 <= w.dst_port < len(nodes[w.dst].inputs)):
            errors.append(f"{w}: node {w.dst} has no input port {w.dst_port}")
            continue
        src_sys = nodes[w.src].outputs[w.src_port]
        dst_sys = nodes[w.dst].inputs[w.dst_port]
        if src_sys != dst_sys:
            errors.append(f"{w}: carries {src_sys} into a port expecting {dst_sys}")
        if (w.src, w.src_port) in used_out:
            errors.append(f"{w}: output port used twice")
        if (w.dst, w.dst_port) in used_in:
            errors.append(f"{w}: input port used twice")
        used_out.add((w.src, w.src_port))
        used_in.add((w.dst, w.dst_port))
    if errors:
        exc = TypeMismatch("; ".join(errors))
        exc.errors = errors
        raise exc
    order = _topological_order(len(nodes), wires)
    dangling_in = tuple(
        (i, p) for i, node in enumerate(nodes) for p in range(len(node.inputs)) if (i, p) not in used_in
    )
    dangling_out = tuple(
        (i, p) for i, node in enumerate(nodes) for p in range(len(node.outputs)) if (i, p) not in used_out
    )
    return Circuit(nodes, tuple(sorted(wires)), order, dangling_in, dangling_out, theory_id)


def _topological_order(n: int, wires) -> tuple[int, ...]:
    preds = [set() for _ in range(n)]
    for w in wires:
        preds[w.dst].add(w.src)
    done: list[int] = []
    placed = set()
    while len(done) < n:
        ready = [i for i in range(n) if i not in placed and preds[i] <= placed]
        if not ready:
            raise CycleDetected("circuit wiring contains a cycle")
        done.append(ready[0])
        placed.add(ready[0])
    return tuple(done)


def contraction_plan(circuit: Circuit) -> tuple[int, ...]:
    """Topological order chosen greedily to keep the intermediate tensor
    small; ties go to the lowest node index."""
    preds = circuit.predecessors()
    live = {}  # axis tag -> dim
    for n, p in circuit.dangling_inputs:
        d = circuit.nodes[n].inputs[p].rep_dim
        live[("i", n, p)] = d
        live[("x", n, p)] = d
    placed: set[int] = set()
    order: list[int] = []
    sources = _sources(circuit)
    while len(order) < len(circuit.nodes):
        ready = [i for i in range(len(circuit.nodes)) if i not in placed and preds[i] <= placed]
        if not ready:
            raise CycleDetected("circuit wiring contains a cycle")
        best, best_size, best_live = None, None, None
        for i in ready:
            trial = dict(live)
            for q in range(len(circuit.nodes[i].inputs)):
                trial.pop(sources[(i, q)], None)
            trial[("c", i)] = len(circuit.nodes[i].labels)
            for p, s in enumerate(circuit.nodes[i].outputs):
                trial[("o", i, p)] = s.rep_dim
            size = math.prod(trial.values())
            if best_size is None or size < best_size:
                best, best_size, best_live = i, size, trial
        order.append(best)
        placed.add(best)
        live = best_live
    return tuple(order)


def _sources(circuit: Circuit) -> dict:
    """Axis tag feeding each input port."""
    src = {}
    for w in circuit.wires:
        src[(w.dst, w.dst_port)] = ("o", w.src, w.src_port)
    for n, p in circuit.dangling_inputs:
        src[(n, p)] = ("i", n, p)
    return src


def _node_tensor(node: Node, branch) -> np.ndarray:
    outs = [s.rep_dim for s in node.outputs]
    ins = [s.rep_dim for s in node.inputs]
    if branch is None:
        stacked = np.stack([b.matrix for b in node.test.branches])
        return stacked.reshape([len(node.labels)] + outs + ins)
    return node.test.branches[branch].matrix.reshape(outs + ins)


def _contract(circuit: Circuit, order, select=None):
    """Contract the circuit in ``order``.

    Returns the final tensor and its axis tags: outcome axes ``("c", n)``
    (only when ``select`` is None), dangling outputs ``("o", n, p)`` and
    dangling inputs ``("x", n, p)``.
    """
    sources = _sources(circuit)
    tensor = np.ones(())
    tags: list = []
    for n, p in circuit.dangling_inputs:
        d = circuit.nodes[n].inputs[p].rep_dim
        tensor = np.multiply.outer(tensor, np.eye(d))
        tags += [("i", n, p), ("x", n, p)]
    for i in order:
        node = circuit.nodes[i]
        block = _node_tensor(node, None if select is None else select[i])
        in_tags = [sources[(i, q)] for q in range(len(node.inputs))]
        out_tags = ([("c", i)] if select is None else []) + [("o", i, p) for p in range(len(node.outputs))]
        keep = [t for t in tags if t not in in_tags]
        ids = {t: k for k, t in enumerate(dict.fromkeys(tags + out_tags))}
        tensor = np.einsum(
            tensor, [ids[t] for t in tags],
            block, [ids[t] for t in out_tags + in_tags],
            [ids[t] for t in keep + out_tags],
        )
        tags = keep + out_tags
    return tensor, tags


def _final_axes(circuit: Circuit, with_outcomes: bool) -> list:
    axes = [("c", i) for i in range(len(circuit.nodes))] if with_outcomes else []
    axes += [("o", n, p) for n, p in circuit.dangling_outputs]
    axes += [("x", n, p) for n, p in circuit.dangling_inputs]
    return axes


def evaluate(circuit: Circuit, order: Sequence[int] | None = None) -> EvaluationResult:
    """Joint outcome distribution of a closed circuit.

    Outcome tuples follow node insertion order.  ``order`` overrides the
    contraction plan and must be topological.
    """
    if not circuit.is_closed:
        raise OpenCircuit(
            f"circuit has {len(circuit.dangling_inputs)} open inputs and {len(circuit.dangling_outputs)} open outputs"
        )
    order = _checked_order(circuit, order)
    tensor, tags = _contract(circuit, order)
    final = _final_axes(circuit, True)
    tensor = np.transpose(tensor, [tags.index(t) for t in final])
    labels = list(itertools.product(*(node.labels for node in circuit.nodes)))
    dist = OutcomeDistribution(labels, tensor.reshape(-1))
    return EvaluationResult(dist, circuit.label_schema)


def evaluate_open(circuit: Circuit, branches: Sequence, order: Sequence[int] | None = None) -> Transformation:
    """Composite transformation from the dangling inputs to the dangling
    outputs with ``branches[i]`` (index or label) chosen at node ``i``."""
    if len(branches) != len(circuit.nodes):
        raise BranchOutOfRange(f"need one branch per node ({len(circuit.nodes)}), got {len(branches)}")
    select = []
    for node, b in zip(circuit.nodes, branches):
        if isinstance(b, str):
            if b not in node.labels:
                raise BranchOutOfRange(f"node has no outcome {b!r}")
            b = node.labels.index(b)
        if not 0 <= int(b) < len(node.labels):
            raise BranchOutOfRange(f"branch {b} outside 0..{len(node.labels) - 1}")
        select.append(int(b))
    order = _checked_order(circuit, order)
    tensor, tags = _contract(circuit, order, select)
    final = _final_axes(circuit, False)
    tensor = np.transpose(tensor, [tags.index(t) for t in final])
    out_sys, in_sys = circuit.output_system, circuit.input_system
    return Transformation(in_sys, out_sys, tensor.reshape(out_sys.rep_dim, in_sys.rep_dim))


def _checked_order(circuit: Circuit, order):
    if order is None:
        return contraction_plan(circuit)
    order = tuple(int(i) for i in order)
    if not circuit.is_topological(order):
        raise CycleDetected(f"{order} is not a topological order of the circuit")
    return order


def random_topological_order(circuit: Circuit, seed) -> tuple[int, ...]:
    rng = rng_from_seed(seed)
    preds = circuit.predecessors()
    placed: set[int] = set()
    order: list[int] = []
    while len(order) < len(circuit.nodes):
        ready = [i for i in range(len(circuit.nodes)) if i not in placed and preds[i] <= placed]
        pick = ready[int(rng.integers(len(ready)))]
        order.append(pick)
        placed.add(pick)
    return tuple(order)


# -- builders -------------------------------------------------------------------


def single(process, name: str = "") -> Circuit:
    """One-node circuit from a test or a single process."""
    test = process if isinstance(process, Test) else Test.single(as_transformation(process))
    return build([Node(test, name)])


def chain(*items) -> Circuit:
    """Sequential composition of tests (or circuits), left to right."""
    circuits = [c if isinstance(c, Circuit) else single(c) for c in items]
    out = circuits[0]
    for c in circuits[1:]:
        out = out.then(c)
    return out


def side_by_side(*items) -> Circuit:
    circuits = [c if isinstance(c, Circuit) else single(c) for c in items]
    out = circuits[0]
    for c in circuits[1:]:
        out = out.beside(c)
    return out


_SMALL_SHAPES = {"classical": (2, 3), "quantum": (2,), "boxworld": ("gbit",)}


def random_closed_circuit(theory_id: str, seed, max_nodes: int = 6) -> Circuit:
    """A random closed circuit of full tests with up to two wires per box side."""
    theory = get_theory(theory_id)
    rng = rng_from_seed(seed)
    shapes = _SMALL_SHAPES[theory_id]

    def atomic():
        return SystemRef(theory_id, shapes[int(rng.integers(len(shapes)))])

    def test(in_parts, out_parts):
        in_sys = compose_systems(*in_parts) if in_parts else trivial(theory_id)
        out_sys = compose_systems(*out_parts) if out_parts else trivial(theory_id)
        return theory.random_test(in_sys, out_sys, int(rng.integers(1, 4)), int(rng.integers(2**63)))

    nodes: list[Node] = []
    wires: list[Wire] = []
    open_ports: list[tuple[int, int, SystemRef]] = []

    def add(in_count, out_count):
        taken = [open_ports.pop(int(rng.integers(len(open_ports)))) for _ in range(in_count)]
        outs = [atomic() for _ in range(out_count)]
        idx = len(nodes)
        nodes.append(Node(test([s for _, _, s in taken], outs), f"n{idx}"))
        for q, (n, p, _) in enumerate(taken):
            wires.append(Wire(n, p, idx, q))
        open_ports.extend((idx, p, s) for p, s in enumerate(outs))

    add(0, int(rng.integers(1, 3)))
    while len(nodes) < max_nodes - 1 and open_ports:
        action = rng.uniform()
        if action < 0.2:
            add(0, int(rng.integers(1, 3)))
        elif action < 0.8:
            add(min(len(open_ports), int(rng.integers(1, 3))), int(rng.integers(1, 3)))
        else:
            add(min(len(open_ports), int(rng.integers(1, 3))), 0)
    while open_ports:
        add(min(len(open_ports), 2), 0)
    return build(nodes, wires)
