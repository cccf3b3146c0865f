"""Purity of states and transformations, and the purity-preservation check."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from optheory.axioms.report import FAILS, CERTIFIED, HOLDS, CheckReport, PurityVerdict
from optheory.core import (
    DEFAULT_TOL,
    State,
    SystemRef,
    Transformation,
    get_theory,
    parallel_compose,
    sequential_compose,
)
from optheory.errors import InvalidState, InvalidTransformation
from optheory.theories.base import rng_from_seed
from optheory.theories.polytope import enumerate_cone_section, extremality_witness, is_extreme_ray
from optheory.theories.quantum import choi_matrix, density_matrix, state_from_vector

RANK_TOL = 1e-7

DEFAULT_SYSTEMS = {"classical": 3, "quantum": 2, "boxworld": "gbit"}


def resolve_theory(theory):
    return get_theory(theory) if isinstance(theory, str) else theory


def default_system(theory) -> SystemRef:
    theory = resolve_theory(theory)
    return theory.make_system(DEFAULT_SYSTEMS.get(theory.id, 2))


def is_pure_state(theory, state: State, tol: float = DEFAULT_TOL) -> PurityVerdict:
    """Purity of a state, with a convex decomposition witness when mixed.

    Sub-normalized states are judged by their normalized direction.
    """
    theory = resolve_theory(theory)
    if not theory.valid_state(state, tol) or state.weight <= tol:
        raise InvalidState(f"not a valid nonzero state on {state.system}")
    w = state.weight
    if theory.kind == "quantum":
        rho = density_matrix(state) / w
        purity = float(np.real(np.trace(rho @ rho)))
        if abs(purity - 1.0) <= tol:
            return PurityVerdict(True, None)
        vals, vecs = np.linalg.eigh(rho)
        mixture = [
            (float(p), state_from_vector(state.system, v))
            for p, v in zip(vals[::-1], vecs.T[::-1])
            if p > RANK_TOL * vals[-1]
        ]
        return PurityVerdict(False, mixture)
    verts = theory.vertices(state.system)
    extreme, weights = extremality_witness(state.coords / w, verts, tol)
    if extreme:
        return PurityVerdict(True, None)
    mixture = [(float(c), State(state.system, v)) for c, v in zip(weights, verts) if c > 1e-12]
    return PurityVerdict(False, mixture)


def is_pure_transformation(theory, t: Transformation, tol: float = RANK_TOL) -> bool:
    """Quantum: rank-one Choi operator; classical: one nonzero entry;
    boxworld: extreme ray of the cone of maps.

    The null transformation admits no nontrivial refinement and counts as
    pure.
    """
    theory = resolve_theory(theory)
    if not theory.valid_transformation(t, DEFAULT_TOL):
        raise InvalidTransformation(f"not a valid transformation {t.input} -> {t.output}")
    if np.max(np.abs(t.matrix)) <= 1e-12:
        return True
    if theory.kind == "quantum":
        s = np.linalg.svd(choi_matrix(t), compute_uv=False)
        return bool(s[0] > 0 and np.all(s[1:] <= tol * s[0]))
    if theory.id == "classical":
        scale = np.max(np.abs(t.matrix))
        return bool(scale > 0 and np.count_nonzero(np.abs(t.matrix) > tol * scale) == 1)
    return is_extreme_ray(t.matrix, theory.vertices(t.input), theory.facets(t.output), tol=DEFAULT_TOL)


def extreme_transformations(theory, system: SystemRef) -> list[Transformation]:
    """Every extreme ray of the cone of maps ``system -> system`` in a
    polytope theory, scaled to be weight non-increasing."""
    theory = resolve_theory(theory)
    if theory.id == "classical":
        d = system.rep_dim
        out = []
        for r in range(d):
            for c in range(d):
                m = np.zeros((d, d))
                m[r, c] = 1.0
                out.append(Transformation(system, system, m))
        return out
    verts = theory.vertices(system)
    facets = theory.facets(system)
    unit = np.ones(1)
    for p in system.parts:
        unit = np.kron(unit, theory.unit_coords(p.shape))
    rows = np.einsum("fi,vj->fvij", facets, verts).reshape(-1, facets.shape[1] * verts.shape[1])
    section = enumerate_cone_section(rows, rows.sum(axis=0))
    n = system.rep_dim
    out = []
    for x in section:
        m = x.reshape(n, n)
        m = m / np.max(unit @ m @ verts.T)
        out.append(Transformation(system, system, m))
    return out


def check_purity_preservation(
    theory,
    n_samples: int = 100,
    seed: int = 0,
    system: SystemRef | None = None,
    pairs: Iterable | None = None,
    exhaustive: bool = False,
    tol: float = RANK_TOL,
) -> CheckReport:
    """Compose pure transformations sequentially and in parallel and check
    that the results stay pure.

    ``pairs`` replaces the sampled stream (used to plant counterexamples);
    ``exhaustive`` walks every pair of extreme maps of a polytope theory.
    """
    theory = resolve_theory(theory)
    system = system or default_system(theory)
    if pairs is not None:
        stream = list(pairs)
    elif exhaustive:
        if theory.kind != "polytope":
            raise ValueError("exhaustive purity-preservation needs a polytope theory")
        maps = extreme_transformations(theory, system)
        stream = [(a, b) for a in maps for b in maps]
    else:
        rng = rng_from_seed(seed)
        stream = []
        for _ in range(n_samples):
            s1, s2 = (int(x) for x in rng.integers(2**63, size=2))
            stream.append(
                (theory.pure_transformation_sample(system, system, s1), theory.pure_transformation_sample(system, system, s2))
            )
    for first, second in stream:
        for kind in ("sequential", "parallel"):
            composite = sequential_compose(first, second) if kind == "sequential" else parallel_compose(first, second)
            if not is_pure_transformation(theory, composite, tol):
                witness = {
                    "first": first,
                    "second": second,
                    "composition": kind,
                    "result": composite,
                    "premise_pure": [is_pure_transformation(theory, first, tol), is_pure_transformation(theory, second, tol)],
                }
                return CheckReport(
                    "purity-preservation", theory.id, FAILS, witness, samples=len(stream), seed=seed, tolerance=tol
                )
    verdict = CERTIFIED if exhaustive and pairs is None else HOLDS
    return CheckReport(
        "purity-preservation",
        theory.id,
        verdict,
        None,
        samples=len(stream),
        seed=seed,
        tolerance=tol,
        details={"system": str(system), "compositions": ["sequential", "parallel"]},
    )
