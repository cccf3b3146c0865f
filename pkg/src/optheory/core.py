"""Theory-independent domain types and the two composition operations.

Every object lives in a real linear representation supplied by its theory:
states are coordinate vectors, effects are dual vectors and transformations
are matrices of shape ``(rep_dim(output), rep_dim(input))``.  Composite
systems use the Kronecker product with the left factor major.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from optheory.errors import (
    BadSelector,
    EmptyList,
    TheoryMismatch,
    TypeMismatch,
    UnknownSystem,
    UnknownTheory,
)

DEFAULT_TOL = 1e-9

_REGISTRY: dict = {}


def register_theory(model):
    """Make ``model`` resolvable through :func:`get_theory` by its ``id``."""
    _REGISTRY[model.id] = model
    return model


def get_theory(theory_id: str):
    import optheory.theories  # noqa: F401  registers the builtin models

    try:
        return _REGISTRY[theory_id]
    except KeyError:
        raise UnknownTheory(f"unknown theory {theory_id!r}") from None


def _flatten_shape(shape):
    if not isinstance(shape, tuple):
        return (shape,)
    out = []
    for s in shape:
        out.extend(_flatten_shape(s))
    return tuple(out)


@dataclass(frozen=True)
class SystemRef:
    """A physical system type.

    ``shape`` is an atomic descriptor (``int`` dimension for classical and
    quantum systems, ``"gbit"`` for boxworld) or a tuple of atomic
    descriptors for a composite.  The empty tuple is the trivial system.
    """

    theory_id: str
    shape: object

    def __post_init__(self):
        if isinstance(self.shape, (tuple, list)):
            flat = _flatten_shape(tuple(self.shape))
            object.__setattr__(self, "shape", flat[0] if len(flat) == 1 else flat)

    @property
    def parts(self) -> tuple[SystemRef, ...]:
        if isinstance(self.shape, tuple):
            return tuple(SystemRef(self.theory_id, s) for s in self.shape)
        return (self,)

    @property
    def is_trivial(self) -> bool:
        return self.shape == ()

    @property
    def is_composite(self) -> bool:
        return isinstance(self.shape, tuple) and len(self.shape) > 1

    @property
    def theory(self):
        return get_theory(self.theory_id)

    @functools.cached_property
    def rep_dim(self) -> int:
        try:
            theory = get_theory(self.theory_id)
        except UnknownTheory as exc:
            raise UnknownSystem(str(exc)) from None
        return math.prod(theory.atomic_rep_dim(p.shape) for p in self.parts)

    @property
    def part_dims(self) -> tuple[int, ...]:
        return tuple(p.rep_dim for p in self.parts)

    def __str__(self) -> str:
        if self.is_trivial:
            return f"{self.theory_id}:trivial"
        if self.is_composite:
            return "*".join(str(p) for p in self.parts)
        if self.theory_id == "boxworld":
            return "boxworld"
        return f"{self.theory_id}({self.shape})"


def trivial(theory_id: str) -> SystemRef:
    return SystemRef(theory_id, ())


def compose_systems(*systems: SystemRef) -> SystemRef:
    """Composite of ``systems`` in order; trivial factors drop out."""
    if not systems:
        raise EmptyList("compose_systems needs at least one system")
    theory_id = systems[0].theory_id
    for s in systems[1:]:
        if s.theory_id != theory_id:
            raise TheoryMismatch(f"cannot compose {s.theory_id} with {theory_id}")
    shape = tuple(p.shape for s in systems for p in s.parts)
    return SystemRef(theory_id, shape)


def _readonly(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise TypeMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class State:
    """A (possibly sub-normalized) state; ``weight`` is its normalization."""

    system: SystemRef
    coords: np.ndarray

    def __post_init__(self):
        coords = _readonly(self.coords, 1)
        if coords.shape[0] != self.system.rep_dim:
            raise TypeMismatch(
                f"state on {self.system} needs {self.system.rep_dim} coords, got {coords.shape[0]}"
            )
        object.__setattr__(self, "coords", coords)

    @property
    def weight(self) -> float:
        return float(deterministic_effect(self.system).coords @ self.coords)

    def as_transformation(self) -> Transformation:
        return Transformation(trivial(self.system.theory_id), self.system, self.coords[:, None])

    def scaled(self, factor: float) -> State:
        return State(self.system, factor * self.coords)

    def allclose(self, other: State, tol: float = DEFAULT_TOL) -> bool:
        return self.system == other.system and bool(np.max(np.abs(self.coords - other.coords)) <= tol)


@dataclass(frozen=True, eq=False)
class Effect:
    system: SystemRef
    coords: np.ndarray

    def __post_init__(self):
        coords = _readonly(self.coords, 1)
        if coords.shape[0] != self.system.rep_dim:
            raise TypeMismatch(
                f"effect on {self.system} needs {self.system.rep_dim} coords, got {coords.shape[0]}"
            )
        object.__setattr__(self, "coords", coords)

    def as_transformation(self) -> Transformation:
        return Transformation(self.system, trivial(self.system.theory_id), self.coords[None, :])

    def allclose(self, other: Effect, tol: float = DEFAULT_TOL) -> bool:
        return self.system == other.system and bool(np.max(np.abs(self.coords - other.coords)) <= tol)


@dataclass(frozen=True, eq=False)
class Transformation:
    input: SystemRef
    output: SystemRef
    matrix: np.ndarray

    def __post_init__(self):
        if self.input.theory_id != self.output.theory_id:
            raise TheoryMismatch(f"{self.input} -> {self.output} crosses theories")
        matrix = _readonly(self.matrix, 2)
        expected = (self.output.rep_dim, self.input.rep_dim)
        if matrix.shape != expected:
            raise TypeMismatch(f"matrix for {self.input} -> {self.output} must be {expected}, got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, system: SystemRef) -> Transformation:
        return cls(system, system, np.eye(system.rep_dim))

    @property
    def theory_id(self) -> str:
        return self.input.theory_id

    def apply(self, state: State) -> State:
        if state.system != self.input:
            raise TypeMismatch(f"cannot apply {self.input} -> {self.output} to a state on {state.system}")
        return State(self.output, self.matrix @ state.coords)

    def as_state(self) -> State:
        if not self.input.is_trivial:
            raise TypeMismatch("only transformations from the trivial system are states")
        return State(self.output, self.matrix[:, 0])

    def as_effect(self) -> Effect:
        if not self.output.is_trivial:
            raise TypeMismatch("only transformations into the trivial system are effects")
        return Effect(self.input, self.matrix[0, :])

    def allclose(self, other: Transformation, tol: float = DEFAULT_TOL) -> bool:
        return (
            self.input == other.input
            and self.output == other.output
            and bool(np.max(np.abs(self.matrix - other.matrix)) <= tol)
        )


Process = Union[State, Effect, Transformation]


def as_transformation(obj: Process) -> Transformation:
    if isinstance(obj, Transformation):
        return obj
    if isinstance(obj, (State, Effect)):
        return obj.as_transformation()
    raise TypeError(f"not a process: {type(obj).__name__}")


def _restore_kind(t: Transformation, like: Sequence[Process]) -> Process:
    # States and effects come back as their own kind.
    if all(isinstance(x, State) for x in like) or (
        t.input.is_trivial and not t.output.is_trivial and any(isinstance(x, State) for x in like)
    ):
        return t.as_state()
    if all(isinstance(x, Effect) for x in like) or (
        t.output.is_trivial and not t.input.is_trivial and any(isinstance(x, Effect) for x in like)
    ):
        return t.as_effect()
    return t


@dataclass(frozen=True, eq=False)
class Test:
    """Outcome-labelled family of transformations sharing input and output."""

    __test__ = False  # keep pytest from collecting this class

    branches: tuple
    labels: tuple = None

    def __post_init__(self):
        branches = tuple(as_transformation(b) for b in self.branches)
        if not branches:
            raise EmptyList("a test needs at least one branch")
        first = branches[0]
        for b in branches[1:]:
            if b.input != first.input or b.output != first.output:
                raise TypeMismatch("all branches of a test must share input and output systems")
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(len(branches)))
        labels = tuple(str(x) for x in labels)
        if len(labels) != len(branches):
            raise TypeMismatch(f"{len(labels)} labels for {len(branches)} branches")
        if len(set(labels)) != len(labels):
            raise TypeMismatch(f"duplicate outcome labels {labels}")
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def single(cls, process: Process, label: str = "0") -> Test:
        return cls((as_transformation(process),), (label,))

    @property
    def input(self) -> SystemRef:
        return self.branches[0].input

    @property
    def output(self) -> SystemRef:
        return self.branches[0].output

    def __len__(self) -> int:
        return len(self.branches)

    def coarse_grained(self) -> Test:
        return Test((coarse_grain(self.branches),), ("+".join(self.labels),))

    def is_deterministic(self, tol: float = DEFAULT_TOL) -> bool:
        """True when the coarse-graining of all branches preserves weight."""
        total = coarse_grain(self.branches).matrix
        u_in = deterministic_effect(self.input).coords
        u_out = deterministic_effect(self.output).coords
        return bool(np.max(np.abs(u_out @ total - u_in)) <= tol)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    labels: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = _readonly(self.probs, 1)
        labels = tuple(tuple(x) for x in self.labels)
        if len(labels) != probs.shape[0]:
            raise TypeMismatch("labels and probabilities differ in length")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def as_dict(self) -> dict:
        return {lab: float(p) for lab, p in zip(self.labels, self.probs)}

    def __getitem__(self, label) -> float:
        return self.as_dict()[tuple(label)]


# -- operations ---------------------------------------------------------------


def sequential_compose(first: Process, second: Process) -> Process:
    """``second`` after ``first``; the matrix product ``second @ first``."""
    a, b = as_transformation(first), as_transformation(second)
    if a.output != b.input:
        raise TypeMismatch(f"cannot wire output {a.output} into input {b.input}")
    t = Transformation(a.input, b.output, b.matrix @ a.matrix)
    if isinstance(first, State) and t.input.is_trivial and not t.output.is_trivial:
        return t.as_state()
    if isinstance(second, Effect) and t.output.is_trivial and not t.input.is_trivial:
        return t.as_effect()
    return t


def parallel_compose(left: Process, right: Process) -> Process:
    """Side-by-side composition; the Kronecker product, left factor major."""
    a, b = as_transformation(left), as_transformation(right)
    if a.theory_id != b.theory_id:
        raise TheoryMismatch(f"cannot compose {a.theory_id} with {b.theory_id}")
    t = Transformation(
        compose_systems(a.input, b.input),
        compose_systems(a.output, b.output),
        np.kron(a.matrix, b.matrix),
    )
    return _restore_kind(t, (left, right))


def tensor(*objs: Process) -> Process:
    if not objs:
        raise EmptyList("tensor of nothing")
    return functools.reduce(parallel_compose, objs)


def coarse_grain(branches: Iterable[Process]) -> Process:
    """Entrywise sum of ``branches``, which must share their systems."""
    items = list(branches)
    if not items:
        raise EmptyList("nothing to coarse-grain")
    ts = [as_transformation(b) for b in items]
    first = ts[0]
    for t in ts[1:]:
        if t.input != first.input or t.output != first.output:
            raise TypeMismatch("coarse-grained branches must share input and output systems")
    total = Transformation(first.input, first.output, np.sum([t.matrix for t in ts], axis=0))
    if all(isinstance(x, State) for x in items):
        return total.as_state()
    if all(isinstance(x, Effect) for x in items):
        return total.as_effect()
    return total


def pairing(effect: Effect, state: State) -> float:
    if effect.system != state.system:
        raise TypeMismatch(f"effect on {effect.system} paired with state on {state.system}")
    return float(effect.coords @ state.coords)


def deterministic_effect(system: SystemRef) -> Effect:
    """The discard effect; products of the atomic unit effects on composites."""
    try:
        theory = get_theory(system.theory_id)
    except UnknownTheory as exc:
        raise UnknownSystem(str(exc)) from None
    coords = np.ones(1)
    for part in system.parts:
        coords = np.kron(coords, theory.unit_coords(part.shape))
    return Effect(system, coords)


def _normalize_selector(keep, n_parts: int) -> tuple[int, ...]:
    if isinstance(keep, (int, np.integer)):
        keep = (int(keep),)
    try:
        keep = tuple(int(k) for k in keep)
    except TypeError:
        raise BadSelector(f"bad component selector {keep!r}") from None
    if not keep or len(set(keep)) != len(keep) or any(k < 0 or k >= n_parts for k in keep):
        raise BadSelector(f"selector {keep} invalid for {n_parts} components")
    return keep


def discard_parts(system: SystemRef, keep) -> Transformation:
    """Transformation that discards every component of ``system`` not in ``keep``.

    ``keep`` lists component indices; the kept components appear in the
    output in the listed order.
    """
    parts = system.parts
    keep = _normalize_selector(keep, len(parts))
    dims = [p.rep_dim for p in parts]
    theory = get_theory(system.theory_id)
    # Build the matrix by contracting an identity tensor.
    n = system.rep_dim
    eye = np.eye(n).reshape([n] + dims)
    for axis in sorted(set(range(len(parts))) - set(keep), reverse=True):
        u = theory.unit_coords(parts[axis].shape)
        eye = np.tensordot(eye, u, axes=([axis + 1], [0]))
    remaining = sorted(keep)
    perm = [0] + [remaining.index(k) + 1 for k in keep]
    eye = np.transpose(eye, perm)
    out_system = compose_systems(*(parts[k] for k in keep))
    return Transformation(system, out_system, eye.reshape(n, out_system.rep_dim).T)


def marginalize(state: State, keep) -> State:
    """Discard every component of a composite state except those in ``keep``."""
    if not state.system.is_composite:
        raise BadSelector(f"marginalize needs a composite system, got {state.system}")
    return discard_parts(state.system, keep).apply(state)


def permute_parts(system: SystemRef, order: Sequence[int]) -> Transformation:
    """Reversible transformation reordering the components of ``system``."""
    parts = system.parts
    order = tuple(order)
    if sorted(order) != list(range(len(parts))):
        raise BadSelector(f"{order} is not a permutation of {len(parts)} components")
    dims = [p.rep_dim for p in parts]
    n = system.rep_dim
    eye = np.eye(n).reshape(dims + [n])
    eye = np.transpose(eye, list(order) + [len(parts)])
    out_system = compose_systems(*(parts[k] for k in order))
    return Transformation(system, out_system, eye.reshape(n, n))
