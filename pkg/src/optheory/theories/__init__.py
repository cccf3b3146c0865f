"""Concrete theory models and their constructors."""

from __future__ import annotations

import math

import numpy as np

from optheory.core import State, SystemRef, Test, Transformation, get_theory, register_theory, trivial
from optheory.errors import BadParams, TheoryMismatch, UnknownName
from optheory.theories.base import PolytopeTheory, TheoryModel, rng_from_seed
from optheory.theories.boxworld import BoxworldTheory, coords_from_behaviour, pr_box
from optheory.theories.classical import ClassicalTheory
from optheory.theories.polytope import PolytopeStateSpace
from optheory.theories.quantum import QuantumTheory, state_from_density, state_from_vector

CLASSICAL = register_theory(ClassicalTheory())
QUANTUM = register_theory(QuantumTheory())
BOXWORLD = register_theory(BoxworldTheory())

THEORY_IDS = ("classical", "quantum", "boxworld")

# name -> owning theory
CATALOG = {
    "point_mass": "classical",
    "uniform": "classical",
    "computational": "quantum",
    "plus_state": "quantum",
    "singlet": "quantum",
    "maximally_mixed": "quantum",
    "gbit_vertex": "boxworld",
    "gbit_center": "boxworld",
    "pr_box": "boxworld",
}


def make_system(theory_id: str, shape=None) -> SystemRef:
    theory = get_theory(theory_id)
    if shape is None:
        if theory_id != "boxworld":
            raise BadParams(f"{theory_id} systems need a dimension")
        shape = "gbit"
    return theory.make_system(shape)


def _int_param(params, i, default=None, name="parameter"):
    if len(params) > i:
        value = params[i]
        if isinstance(value, bool) or not float(value).is_integer():
            raise BadParams(f"{name} must be an integer, got {value!r}")
        return int(value)
    if default is None:
        raise BadParams(f"missing {name}")
    return default


def _dim_of(system, theory_id, default=None):
    if system is None:
        return default
    if system.theory_id != theory_id or system.is_composite:
        return None
    return 1 if system.is_trivial else int(system.shape)


def named_state(theory_id: str, name: str, params=(), system: SystemRef | None = None) -> State:
    """Builtin catalog state.  ``system``, when given, supplies missing
    dimensions and must match the state's system."""
    owner = CATALOG.get(name)
    if owner is None:
        raise UnknownName(f"no builtin state named {name!r}")
    if owner != theory_id:
        raise UnknownName(f"{name!r} is a {owner} state, not {theory_id}")
    params = tuple(params)
    if name == "point_mass":
        d = _int_param(params, 1, _dim_of(system, theory_id), "dimension")
        k = _int_param(params, 0, name="outcome index")
        sys_ = make_system("classical", d)
        if not 0 <= k < d:
            raise BadParams(f"point_mass({k}) outside 0..{d - 1}")
        coords = np.zeros(sys_.rep_dim)
        coords[k] = 1.0
        state = State(sys_, coords)
    elif name == "uniform":
        d = _int_param(params, 0, _dim_of(system, theory_id), "dimension")
        if d < 1:
            raise BadParams("uniform needs d >= 1")
        sys_ = make_system("classical", d)
        state = State(sys_, np.full(sys_.rep_dim, 1.0 / sys_.rep_dim))
    elif name == "computational":
        d = _int_param(params, 1, _dim_of(system, theory_id, 2) or 2, "dimension")
        k = _int_param(params, 0, name="basis index")
        if not 0 <= k < d:
            raise BadParams(f"computational({k}) outside 0..{d - 1}")
        psi = np.zeros(d)
        psi[k] = 1.0
        state = state_from_vector(make_system("quantum", d), psi)
    elif name == "plus_state":
        state = state_from_vector(make_system("quantum", 2), np.array([1.0, 1.0]) / math.sqrt(2))
    elif name == "singlet":
        qubit = make_system("quantum", 2)
        psi = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2)
        state = state_from_vector(SystemRef("quantum", (qubit.shape, qubit.shape)), psi)
    elif name == "maximally_mixed":
        d = _int_param(params, 0, _dim_of(system, theory_id), "dimension")
        if d < 1:
            raise BadParams("maximally_mixed needs d >= 1")
        state = state_from_density(make_system("quantum", d), np.eye(d) / d)
    elif name == "gbit_vertex":
        k = _int_param(params, 0, name="vertex index")
        state = BOXWORLD.vertex(make_system("boxworld"), k)
    elif name == "gbit_center":
        state = BOXWORLD.center(make_system("boxworld"))
    else:  # pr_box
        bits = [_int_param(params, i, 0, "bit") for i in range(3)]
        if any(b not in (0, 1) for b in bits):
            raise BadParams("pr_box parameters are bits")
        gbits = SystemRef("boxworld", ("gbit", "gbit"))
        state = State(gbits, coords_from_behaviour(pr_box(*bits)))
    if system is not None and state.system != system:
        raise BadParams(f"{name} is a state on {state.system}, not on {system}")
    return state


def random_state(system: SystemRef, seed, pure: bool = False) -> State:
    return get_theory(system.theory_id).random_state(system, seed, pure)


def random_test(in_system: SystemRef, out_system: SystemRef, n_outcomes: int, seed) -> Test:
    if in_system.theory_id != out_system.theory_id:
        raise TheoryMismatch(f"{in_system} and {out_system} belong to different theories")
    return get_theory(in_system.theory_id).random_test(in_system, out_system, n_outcomes, seed)


def reversible_sample(system: SystemRef, seed) -> Transformation:
    return get_theory(system.theory_id).reversible_sample(system, seed)


__all__ = [
    "BOXWORLD",
    "BoxworldTheory",
    "CATALOG",
    "CLASSICAL",
    "ClassicalTheory",
    "PolytopeStateSpace",
    "PolytopeTheory",
    "QUANTUM",
    "QuantumTheory",
    "THEORY_IDS",
    "TheoryModel",
    "get_theory",
    "make_system",
    "named_state",
    "random_state",
    "random_test",
    "reversible_sample",
    "rng_from_seed",
    "trivial",
]
