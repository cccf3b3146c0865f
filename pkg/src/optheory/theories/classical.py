"""Classical probability theory: simplices of probability vectors."""

from __future__ import annotations

import itertools

import numpy as np

from optheory.core import State, SystemRef, Test, Transformation
from optheory.errors import BadShape
from optheory.theories.base import PolytopeTheory, _split_weights, rng_from_seed


class ClassicalTheory(PolytopeTheory):
    id = "classical"

    def check_shape(self, shape) -> None:
        if isinstance(shape, bool) or not isinstance(shape, (int, np.integer)) or shape < 1:
            raise BadShape(f"classical systems need an outcome count d >= 1, got {shape!r}")

    def atomic_rep_dim(self, shape) -> int:
        self.check_shape(shape)
        return int(shape)

    def unit_coords(self, shape) -> np.ndarray:
        return np.ones(self.atomic_rep_dim(shape))

    def atomic_vertices(self, shape) -> np.ndarray:
        return np.eye(self.atomic_rep_dim(shape))

    def atomic_facets(self, shape) -> np.ndarray:
        return np.eye(self.atomic_rep_dim(shape))

    def atomic_measurements(self, shape) -> list[np.ndarray]:
        return [np.eye(self.atomic_rep_dim(shape))]

    def composite_vertices(self, system: SystemRef) -> np.ndarray:
        return np.eye(system.rep_dim)

    # a composite classical system is again a simplex
    def facets(self, system: SystemRef) -> np.ndarray:
        return np.eye(system.rep_dim)

    def measurements(self, system: SystemRef) -> list[np.ndarray]:
        return [np.eye(system.rep_dim)]

    def point_mass(self, system: SystemRef, k: int) -> State:
        if not 0 <= k < system.rep_dim:
            raise BadShape(f"point mass {k} outside 0..{system.rep_dim - 1}")
        coords = np.zeros(system.rep_dim)
        coords[k] = 1.0
        return State(system, coords)

    def random_test(self, in_system: SystemRef, out_system: SystemRef, n_outcomes: int, seed) -> Test:
        """Random column-stochastic matrix split entrywise across outcomes."""
        self._check_arity(in_system, out_system, n_outcomes)
        n = int(n_outcomes)
        rng = rng_from_seed(seed)
        d_in, d_out = in_system.rep_dim, out_system.rep_dim
        stochastic = rng.dirichlet(np.ones(d_out), size=d_in).T
        split = _split_weights(rng, n, (d_out, d_in))
        return Test(tuple(Transformation(in_system, out_system, split[i] * stochastic) for i in range(n)))

    def reversible_group(self, system: SystemRef) -> list[Transformation]:
        self._own(system)
        d = system.rep_dim
        eye = np.eye(d)
        return [Transformation(system, system, eye[:, list(p)]) for p in itertools.permutations(range(d))]

    def reversible_sample(self, system: SystemRef, seed) -> Transformation:
        self._own(system)
        rng = rng_from_seed(seed)
        d = system.rep_dim
        return Transformation(system, system, np.eye(d)[:, rng.permutation(d)])

    def pure_transformation_sample(self, in_system, out_system, seed) -> Transformation:
        """Matrix with a single nonzero entry in (0, 1]."""
        rng = rng_from_seed(seed)
        m = np.zeros((out_system.rep_dim, in_system.rep_dim))
        m[rng.integers(out_system.rep_dim), rng.integers(in_system.rep_dim)] = rng.uniform(0.05, 1.0)
        return Transformation(in_system, out_system, m)
