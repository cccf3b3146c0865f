"""Common machinery for theory models."""

from __future__ import annotations

import functools
import itertools

import numpy as np

from optheory.core import (
    DEFAULT_TOL,
    Effect,
    State,
    SystemRef,
    Test,
    Transformation,
    deterministic_effect,
    permute_parts,
    trivial,
)
from optheory.errors import BadArity, TheoryMismatch
from optheory.theories.polytope import PolytopeStateSpace


def rng_from_seed(seed) -> np.random.Generator:
    """Generator for any 64-bit seed, negative values included."""
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


class TheoryModel:
    """Rule-set for one theory: representation sizes, validity predicates,
    composites and samplers.  Subclasses fill in the atomic data."""

    id: str = ""
    kind: str = ""

    def atomic_rep_dim(self, shape) -> int:
        raise NotImplementedError

    def check_shape(self, shape) -> None:
        raise NotImplementedError

    def unit_coords(self, shape) -> np.ndarray:
        raise NotImplementedError

    def make_system(self, shape) -> SystemRef:
        if isinstance(shape, (tuple, list)):
            for s in shape:
                self.check_shape(s)
            return SystemRef(self.id, tuple(shape))
        self.check_shape(shape)
        if shape == 1:
            return trivial(self.id)
        return SystemRef(self.id, shape)

    def _own(self, system: SystemRef) -> None:
        if system.theory_id != self.id:
            raise TheoryMismatch(f"{system} does not belong to {self.id}")

    # validity predicates
    def valid_state(self, state: State, tol: float = DEFAULT_TOL) -> bool:
        raise NotImplementedError

    def valid_effect(self, effect: Effect, tol: float = DEFAULT_TOL) -> bool:
        raise NotImplementedError

    def valid_transformation(self, t: Transformation, tol: float = DEFAULT_TOL) -> bool:
        raise NotImplementedError

    def valid_test(self, test: Test, tol: float = DEFAULT_TOL) -> bool:
        return all(self.valid_transformation(b, tol) for b in test.branches) and test.is_deterministic(tol)

    # samplers
    def random_state(self, system: SystemRef, seed, pure: bool = False) -> State:
        raise NotImplementedError

    def random_test(self, in_system: SystemRef, out_system: SystemRef, n_outcomes: int, seed) -> Test:
        raise NotImplementedError

    def reversible_sample(self, system: SystemRef, seed) -> Transformation:
        raise NotImplementedError

    def pure_transformation_sample(self, in_system: SystemRef, out_system: SystemRef, seed) -> Transformation:
        raise NotImplementedError

    def _check_arity(self, in_system, out_system, n_outcomes):
        self._own(in_system)
        self._own(out_system)
        if int(n_outcomes) < 1:
            raise BadArity(f"a test needs at least one outcome, got {n_outcomes}")


def _split_weights(rng: np.random.Generator, n: int, size) -> np.ndarray:
    """Random nonnegative weights summing to one along the first axis."""
    if n == 1:
        return np.ones((1,) + tuple(np.atleast_1d(size)))
    w = rng.dirichlet(np.ones(n), size=size)
    return np.moveaxis(w, -1, 0)


def _cached(theory, kind: str, system: SystemRef, compute) -> np.ndarray:
    """Read-only arrays memoised per theory instance and system."""
    cache = theory.__dict__.setdefault("_array_cache", {})
    key = (kind, system)
    if key not in cache:
        arr = np.array(compute(system), dtype=float)
        arr.setflags(write=False)
        cache[key] = arr
    return cache[key]


class PolytopeTheory(TheoryModel):
    """A theory whose normalized state spaces are polytopes.

    Subclasses provide atomic vertices, atomic facet functionals (which
    cut out the state cone; composites take Kronecker products of them),
    atomic fiducial measurements and atomic symmetries.
    """

    kind = "polytope"

    def atomic_vertices(self, shape) -> np.ndarray:
        raise NotImplementedError

    def atomic_facets(self, shape) -> np.ndarray:
        raise NotImplementedError

    def atomic_measurements(self, shape) -> list[np.ndarray]:
        raise NotImplementedError

    def composite_vertices(self, system: SystemRef) -> np.ndarray:
        raise NotImplementedError

    def facets(self, system: SystemRef) -> np.ndarray:
        return _cached(self, "facets", system, self._facets)

    def _facets(self, system: SystemRef) -> np.ndarray:
        rows = np.ones((1, 1))
        for part in system.parts:
            f = self.atomic_facets(part.shape)
            rows = np.array([np.kron(a, b) for a in rows for b in f])
        return rows

    def vertices(self, system: SystemRef) -> np.ndarray:
        self._own(system)
        return _cached(self, "vertices", system, self._vertices)

    def _vertices(self, system: SystemRef) -> np.ndarray:
        if system.is_trivial:
            return np.ones((1, 1))
        if not system.is_composite:
            return self.atomic_vertices(system.shape)
        return self.composite_vertices(system)

    def state_space(self, system: SystemRef) -> PolytopeStateSpace:
        return PolytopeStateSpace(self.vertices(system), self.facets(system))

    def pure_states(self, system: SystemRef) -> list[State]:
        return [State(system, v) for v in self.vertices(system)]

    def measurements(self, system: SystemRef) -> list[np.ndarray]:
        """Fiducial measurements on ``system``: products of atomic ones."""
        if system.is_trivial:
            return [np.ones((1, 1))]
        per_part = [self.atomic_measurements(p.shape) for p in system.parts]
        out = []
        for combo in itertools.product(*per_part):
            effects = functools.reduce(lambda a, b: np.array([np.kron(x, y) for x in a for y in b]), combo)
            out.append(effects)
        return out

    # predicates
    def valid_state(self, state: State, tol: float = DEFAULT_TOL) -> bool:
        self._own(state.system)
        x = state.coords
        return bool(np.min(self.facets(state.system) @ x) >= -tol and state.weight <= 1 + tol)

    def valid_effect(self, effect: Effect, tol: float = DEFAULT_TOL) -> bool:
        self._own(effect.system)
        values = self.vertices(effect.system) @ effect.coords
        return bool(np.min(values) >= -tol and np.max(values) <= 1 + tol)

    def valid_transformation(self, t: Transformation, tol: float = DEFAULT_TOL) -> bool:
        self._own(t.input)
        images = self.vertices(t.input) @ t.matrix.T
        if np.min(images @ self.facets(t.output).T) < -tol:
            return False
        weights = images @ deterministic_effect(t.output).coords
        return bool(np.max(weights) <= 1 + tol)

    # samplers
    def random_state(self, system: SystemRef, seed, pure: bool = False) -> State:
        self._own(system)
        rng = rng_from_seed(seed)
        verts = self.vertices(system)
        if pure:
            return State(system, verts[rng.integers(len(verts))])
        w = rng.dirichlet(np.ones(len(verts)))
        return State(system, w @ verts)

    def _random_mixed_coords(self, rng, system, size):
        verts = self.vertices(system)
        w = rng.dirichlet(np.ones(len(verts)), size=size)
        return w @ verts

    def random_test(self, in_system: SystemRef, out_system: SystemRef, n_outcomes: int, seed) -> Test:
        """Measure-and-prepare branches, mixed with symmetries when the
        input and output coincide."""
        self._check_arity(in_system, out_system, n_outcomes)
        n = int(n_outcomes)
        rng = rng_from_seed(seed)
        meas = self.measurements(in_system)
        q = rng.dirichlet(np.ones(len(meas)))
        branches = [np.zeros((out_system.rep_dim, in_system.rep_dim)) for _ in range(n)]
        reversible_share = 0.0
        if in_system == out_system and not in_system.is_trivial:
            reversible_share = float(rng.uniform(0.0, 0.5))
            group = self.reversible_group(in_system)
            picks = rng.choice(len(group), size=min(4, len(group)), replace=False)
            gw = rng.dirichlet(np.ones(len(picks))) * reversible_share
            split = _split_weights(rng, n, len(picks))
            for j, g in enumerate(picks):
                for i in range(n):
                    branches[i] += split[i, j] * gw[j] * group[g].matrix
        for m, effects in enumerate(meas):
            prep = self._random_mixed_coords(rng, out_system, (len(effects), n))
            split = _split_weights(rng, n, len(effects))
            for o, e in enumerate(effects):
                for i in range(n):
                    scale = (1 - reversible_share) * q[m] * split[i, o]
                    branches[i] += scale * np.outer(prep[o, i], e)
        return Test(tuple(Transformation(in_system, out_system, b) for b in branches))

    def atomic_group(self, shape) -> list[np.ndarray]:
        raise NotImplementedError

    def reversible_group(self, system: SystemRef) -> list[Transformation]:
        """All reversible transformations: local symmetries followed by
        permutations of identical components."""
        self._own(system)
        if system.is_trivial:
            return [Transformation.identity(system)]
        parts = system.parts
        locals_ = [self.atomic_group(p.shape) for p in parts]
        perms = [
            order for order in itertools.permutations(range(len(parts)))
            if all(parts[order[i]] == parts[i] for i in range(len(parts)))
        ]
        out = []
        for order in perms:
            p = permute_parts(system, order).matrix
            for combo in itertools.product(*locals_):
                m = functools.reduce(np.kron, combo)
                out.append(Transformation(system, system, p @ m))
        return out

    def reversible_sample(self, system: SystemRef, seed) -> Transformation:
        rng = rng_from_seed(seed)
        group = self.reversible_group(system)
        return group[int(rng.integers(len(group)))]

    def pure_transformation_sample(self, in_system, out_system, seed) -> Transformation:
        """A random extreme-ray transformation: a scaled vertex-to-vertex map
        or, for matching systems, a scaled symmetry."""
        rng = rng_from_seed(seed)
        scale = float(rng.uniform(0.1, 1.0))
        if in_system == out_system and rng.uniform() < 0.5:
            g = self.reversible_sample(in_system, int(rng.integers(2**63)))
            return Transformation(in_system, out_system, scale * g.matrix)
        # measure one extreme effect, prepare one vertex
        effect = self.extreme_effect(in_system, rng)
        vert = self.vertices(out_system)
        v = vert[int(rng.integers(len(vert)))]
        return Transformation(in_system, out_system, scale * np.outer(v, effect))

    def extreme_effect(self, system: SystemRef, rng) -> np.ndarray:
        meas = self.measurements(system)
        effects = meas[int(rng.integers(len(meas)))]
        return effects[int(rng.integers(len(effects)))]


def product_vertices(theory: PolytopeTheory, system: SystemRef) -> np.ndarray:
    """Kronecker products of the component vertices of ``system``."""
    rows = np.ones((1, 1))
    for part in system.parts:
        rows = np.array([np.kron(a, b) for a in rows for b in theory.vertices(part)])
    return rows


__all__ = [
    "PolytopeTheory",
    "TheoryModel",
    "product_vertices",
    "rng_from_seed",
]
