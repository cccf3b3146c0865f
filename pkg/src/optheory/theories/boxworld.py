"""Boxworld: gbits with a square state space and the maximal tensor product.

A gbit state is ``(n, s0, s1)`` where ``n`` is the weight and
``p(a|x) = (n + (-1)^a s_x) / 2`` are the outcome probabilities of its two
fiducial measurements.  Composite states are all vectors that give
nonnegative probabilities to every product of fiducial effects, i.e. every
no-signalling behaviour.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

from optheory.core import State, SystemRef
from optheory.errors import BadShape, BadParams
from optheory.theories.base import PolytopeTheory
from optheory.theories.polytope import enumerate_cone_section

GBIT = "gbit"
# supports brute-force vertex enumeration of the composite cone
MAX_ENUMERATED_GBITS = 2


def fiducial_effect(a: int, x: int) -> np.ndarray:
    e = np.zeros(3)
    e[0] = 0.5
    e[1 + x] = 0.5 * (-1) ** a
    return e


GBIT_FIDUCIALS = np.array([fiducial_effect(a, x) for x in (0, 1) for a in (0, 1)])
GBIT_VERTICES = np.array([[1.0, s0, s1] for s0 in (1.0, -1.0) for s1 in (1.0, -1.0)])


def _square_symmetries() -> list[np.ndarray]:
    out = []
    for swap in (False, True):
        for sign0 in (1.0, -1.0):
            for sign1 in (1.0, -1.0):
                m = np.diag([1.0, sign0, sign1])
                if swap:
                    m = m[[0, 2, 1]]
                out.append(m)
    return out


GBIT_SYMMETRIES = _square_symmetries()


@functools.lru_cache(maxsize=None)
def _enumerated_vertices(n_gbits: int) -> np.ndarray:
    facets = functools.reduce(lambda a, b: np.array([np.kron(x, y) for x in a for y in b]), [GBIT_FIDUCIALS] * n_gbits)
    unit = functools.reduce(np.kron, [np.array([1.0, 0.0, 0.0])] * n_gbits)
    verts = enumerate_cone_section(facets, unit)
    verts.setflags(write=False)
    return verts


def behaviour_table(coords: np.ndarray) -> np.ndarray:
    """``p[a, b, x, y]`` for a two-gbit state given by its coordinates."""
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        p[a, b, x, y] = np.kron(fiducial_effect(a, x), fiducial_effect(b, y)) @ coords
    return p


def coords_from_behaviour(p: np.ndarray) -> np.ndarray:
    """Inverse of :func:`behaviour_table`; ``p`` must be no-signalling."""
    rows, rhs = [], []
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        rows.append(np.kron(fiducial_effect(a, x), fiducial_effect(b, y)))
        rhs.append(p[a, b, x, y])
    coords, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    if np.max(np.abs(np.array(rows) @ coords - rhs)) > 1e-9:
        raise BadParams("behaviour is signalling; it is not a two-gbit state")
    return coords


def pr_box(alpha: int = 0, beta: int = 0, gamma: int = 0) -> np.ndarray:
    """Behaviour with ``a xor b = x*y xor alpha*x xor beta*y xor gamma``."""
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        if (a ^ b) == ((x & y) ^ (alpha & x) ^ (beta & y) ^ gamma):
            p[a, b, x, y] = 0.5
    return p


class BoxworldTheory(PolytopeTheory):
    id = "boxworld"

    def check_shape(self, shape) -> None:
        if shape != GBIT:
            raise BadShape(f"boxworld systems are gbits, got {shape!r}")

    def atomic_rep_dim(self, shape) -> int:
        self.check_shape(shape)
        return 3

    def unit_coords(self, shape) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0])

    def make_system(self, shape=GBIT) -> SystemRef:
        return super().make_system(shape)

    def atomic_vertices(self, shape) -> np.ndarray:
        return GBIT_VERTICES.copy()

    def atomic_facets(self, shape) -> np.ndarray:
        return GBIT_FIDUCIALS.copy()

    def atomic_measurements(self, shape) -> list[np.ndarray]:
        return [GBIT_FIDUCIALS[0:2], GBIT_FIDUCIALS[2:4]]

    def atomic_group(self, shape) -> list[np.ndarray]:
        return list(GBIT_SYMMETRIES)

    def composite_vertices(self, system: SystemRef) -> np.ndarray:
        n = len(system.parts)
        if n > MAX_ENUMERATED_GBITS:
            raise BadShape(f"vertex enumeration supports at most {MAX_ENUMERATED_GBITS} gbits, got {n}")
        return _enumerated_vertices(n).copy()

    def vertex(self, system: SystemRef, k: int) -> State:
        verts = self.vertices(system)
        if not 0 <= k < len(verts):
            raise BadParams(f"vertex index {k} outside 0..{len(verts) - 1}")
        return State(system, verts[k])

    def center(self, system: SystemRef) -> State:
        return State(system, self.vertices(system).mean(axis=0))
