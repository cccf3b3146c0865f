"""Purifications, their essential uniqueness, and dilations of channels."""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from optheory.axioms.purity import RANK_TOL, is_pure_state, resolve_theory
from optheory.axioms.report import CERTIFIED, FAILS, IMPOSSIBLE, CheckReport, Dilation, PurificationResult
from optheory.core import (
    DEFAULT_TOL,
    State,
    SystemRef,
    Transformation,
    compose_systems,
    deterministic_effect,
    marginalize,
    parallel_compose,
    trivial,
)
from optheory.errors import (
    BadMatrix,
    InvalidState,
    InvalidTransformation,
    MarginalMismatch,
    NotTracePreserving,
    TypeMismatch,
)
from optheory.theories.base import rng_from_seed
from optheory.theories.boxworld import MAX_ENUMERATED_GBITS
from optheory.theories.quantum import (
    density_matrix,
    hilbert_dim,
    kraus_operators,
    state_from_vector,
    unitary_transformation,
)

DEFAULT_MAX_ENV = 8


def _check_normalized(theory, state: State, tol: float) -> None:
    if not theory.valid_state(state, tol) or abs(state.weight - 1.0) > 1e-7:
        raise InvalidState(f"purification needs a valid normalized state on {state.system}")


def purify_state(theory, state: State, max_env: int = DEFAULT_MAX_ENV, tol: float = DEFAULT_TOL) -> PurificationResult:
    """Find a pure state of ``system (x) environment`` whose marginal is ``state``.

    Quantum states are purified constructively from their eigendecomposition.
    Classical and boxworld searches enumerate every pure joint state over
    environments up to the bound and report impossibility when none fits.
    """
    theory = resolve_theory(theory)
    _check_normalized(theory, state, tol)
    system = state.system
    if is_pure_state(theory, state, tol).pure:
        return PurificationResult(system, trivial(theory.id), state)
    if theory.kind == "quantum":
        rho = density_matrix(state)
        vals, vecs = np.linalg.eigh(rho)
        keep = [k for k in range(len(vals)) if vals[k] > RANK_TOL * vals[-1]][::-1]
        env = SystemRef("quantum", len(keep))
        psi = np.zeros(hilbert_dim(system) * len(keep), dtype=complex)
        for i, k in enumerate(keep):
            psi += math.sqrt(max(vals[k], 0.0)) * np.kron(vecs[:, k], np.eye(len(keep))[i])
        psi /= np.linalg.norm(psi)
        return PurificationResult(system, env, state_from_vector(compose_systems(system, env), psi))
    if theory.id == "classical":
        searched = 0
        for e in range(1, max_env + 1):
            env = theory.make_system(e)
            joint = compose_systems(system, env)
            for vertex in theory.vertices(joint):
                searched += 1
                candidate = State(joint, vertex)
                if marginalize_to_first(candidate, system).allclose(state, tol):
                    return PurificationResult(system, env, candidate, searched=searched)
        return PurificationResult(system, None, None, impossible=True, bound=max_env, searched=searched)
    # polytope theories whose composites are enumerated vertex by vertex
    n_sys = len(system.parts)
    max_gbits = max(0, min(max_env, MAX_ENUMERATED_GBITS - n_sys))
    searched = 0
    for k in range(1, max_gbits + 1):
        env = compose_systems(*(theory.make_system("gbit") for _ in range(k)))
        joint = compose_systems(system, env)
        for vertex in theory.vertices(joint):
            searched += 1
            candidate = State(joint, vertex)
            if marginalize_to_first(candidate, system).allclose(state, tol):
                return PurificationResult(system, env, candidate, searched=searched)
    return PurificationResult(system, None, None, impossible=True, bound=max_gbits, searched=searched)


def marginalize_to_first(joint: State, system: SystemRef) -> State:
    """Keep the leading components of ``joint`` that make up ``system``."""
    n = len(system.parts)
    if len(joint.system.parts) == n:
        return joint
    return marginalize(joint, range(n))


def _env_action(system: SystemRef, v: Transformation) -> Transformation:
    return parallel_compose(Transformation.identity(system), v)


def check_purification_uniqueness(
    theory, p1: PurificationResult, p2: PurificationResult, tol: float = DEFAULT_TOL
) -> CheckReport:
    """Look for a reversible ``V`` on the environment alone with
    ``(I (x) V) psi1 = psi2``."""
    theory = resolve_theory(theory)
    if not (p1.found and p2.found):
        raise MarginalMismatch("both inputs must be constructed purifications")
    if p1.system != p2.system:
        raise MarginalMismatch(f"purifications of states on {p1.system} and {p2.system}")
    if p1.environment != p2.environment:
        raise TypeMismatch(f"environments differ: {p1.environment} vs {p2.environment}")
    system, env = p1.system, p1.environment
    m1 = marginalize_to_first(p1.pure_state, system)
    m2 = marginalize_to_first(p2.pure_state, system)
    if not m1.allclose(m2, max(tol, 1e-7)):
        raise MarginalMismatch("the two purifications have different marginals")
    if env.is_trivial:
        residual = float(np.max(np.abs(p1.pure_state.coords - p2.pure_state.coords)))
        v = Transformation.identity(env)
        verdict = CERTIFIED if residual <= tol else FAILS
        return CheckReport(
            "purification-uniqueness", theory.id, verdict, {"V": v, "residual": residual, "pair": [p1, p2]},
            samples=1, tolerance=tol, deviation=residual,
        )
    if theory.kind == "quantum":
        v = _quantum_gauge(p1.pure_state, p2.pure_state, system, env)
        mapped = _env_action(system, v).apply(p1.pure_state)
        residual = float(np.max(np.abs(mapped.coords - p2.pure_state.coords)))
        verdict = CERTIFIED if residual <= max(tol, 1e-9) else FAILS
        witness = {"V": v, "residual": residual}
        if verdict == FAILS:
            witness["pair"] = [p1, p2]
        return CheckReport(
            "purification-uniqueness", theory.id, verdict, witness, samples=1, tolerance=tol, deviation=residual
        )
    group = theory.reversible_group(env)
    best = math.inf
    for v in group:
        mapped = _env_action(system, v).apply(p1.pure_state)
        residual = float(np.max(np.abs(mapped.coords - p2.pure_state.coords)))
        best = min(best, residual)
        if residual <= tol:
            return CheckReport(
                "purification-uniqueness", theory.id, CERTIFIED, {"V": v, "residual": residual},
                samples=len(group), tolerance=tol, deviation=residual,
            )
    return CheckReport(
        "purification-uniqueness", theory.id, FAILS, {"pair": [p1, p2], "group_size": len(group)},
        samples=len(group), tolerance=tol, deviation=best,
    )


def _top_vector(state: State) -> np.ndarray:
    vals, vecs = np.linalg.eigh(density_matrix(state))
    return vecs[:, -1] * math.sqrt(max(vals[-1], 0.0))


def _quantum_gauge(psi1: State, psi2: State, system: SystemRef, env: SystemRef) -> Transformation:
    """Unitary ``V`` on the environment best mapping ``psi1`` to ``psi2``.

    Writing ``psi = sum M[a, e] |a>|e>``, ``(I (x) V) psi`` has coefficient
    matrix ``M V^T``; the closest unitary ``X = V^T`` solves an orthogonal
    Procrustes problem, whose solution absorbs the global phase.
    """
    da, de = hilbert_dim(system), hilbert_dim(env)
    m1 = _top_vector(psi1).reshape(da, de)
    m2 = _top_vector(psi2).reshape(da, de)
    u, _, vh = np.linalg.svd(m1.conj().T @ m2)
    x = u @ vh
    return unitary_transformation(env, x.T)


def dilate_channel(channel: Transformation, n_checks: int = 20, seed: int = 0, tol: float = DEFAULT_TOL) -> Dilation:
    """Reversible dilation of a quantum channel on ``A``.

    The Kraus family ``{K_k}`` defines the isometry
    ``|a>|0> -> sum_k K_k|a> (x) |k>``, completed to a unitary on ``A (x) E``.
    Discarding ``E`` after ``U(rho (x) |0><0|)`` reproduces the channel; this
    is re-verified on ``n_checks`` random states.
    """
    from optheory.core import get_theory

    theory = get_theory("quantum")
    if channel.theory_id != "quantum":
        raise TypeMismatch("dilate_channel needs a quantum transformation")
    if channel.input != channel.output:
        raise TypeMismatch("dilation needs matching input and output systems")
    if not theory.valid_transformation(channel, tol):
        raise InvalidTransformation("not a completely positive map")
    system = channel.input
    u_in = deterministic_effect(system).coords
    if np.max(np.abs(u_in @ channel.matrix - u_in)) > tol:
        raise NotTracePreserving("channel does not preserve the trace")
    kraus = kraus_operators(channel)
    d = hilbert_dim(system)
    r = len(kraus)
    if r == 1:
        env = trivial("quantum")
        unitary = channel
        env_state = State(env, [1.0])
    else:
        env = SystemRef("quantum", r)
        basis = np.eye(r)
        u = np.zeros((d * r, d * r), dtype=complex)
        for a in range(d):
            col = sum(np.kron(k[:, a], basis[j]) for j, k in enumerate(kraus))
            u[:, a * r] = col
        used = [a * r for a in range(d)]
        rest = [c for c in range(d * r) if c not in used]
        u[:, rest] = null_space(u[:, used].conj().T)
        unitary = unitary_transformation(compose_systems(system, env), u)
        env_state = state_from_vector(env, basis[0])
    rng = rng_from_seed(seed)
    residual = 0.0
    for _ in range(n_checks):
        rho = theory.random_state(system, int(rng.integers(2**63)))
        joint = unitary.apply(parallel_compose(rho, env_state)) if r > 1 else unitary.apply(rho)
        out = marginalize(joint, 0) if r > 1 else joint
        residual = max(residual, float(np.max(np.abs(out.coords - channel.apply(rho).coords))))
    return Dilation(env, unitary, env_state, residual, r)


def _check_stochastic(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise BadMatrix(f"need a square column-stochastic matrix, got shape {m.shape}")
    if np.min(m) < -1e-12 or np.max(np.abs(m.sum(axis=0) - 1.0)) > 1e-9:
        raise BadMatrix("columns must be probability vectors")
    return m


def _permutation_matrix(images: list[int]) -> np.ndarray:
    n = len(images)
    p = np.zeros((n, n))
    p[images, np.arange(n)] = 1.0
    return p


def _complete_permutation(partial: dict[int, int], n: int) -> list[int]:
    free_targets = iter(sorted(set(range(n)) - set(partial.values())))
    return [partial[i] if i in partial else next(free_targets) for i in range(n)]


def _dilation_marginal(perm: list[int], env_state: np.ndarray, d: int) -> np.ndarray:
    e = len(env_state)
    out = np.zeros((d, d))
    for a in range(d):
        for k in range(e):
            out[perm[a * e + k] // e, a] += env_state[k]
    return out


def classical_dilation_search(matrix, max_env: int = DEFAULT_MAX_ENV, mixed_env: bool = False) -> CheckReport:
    """Search for a permutation of ``A x E`` and an initial environment state
    that reproduce ``matrix`` once ``E`` is discarded.

    With a pure (point-mass) environment the image of each input is again a
    point mass, so every reachable output for every environment size up to
    ``max_env`` is enumerated.  With ``mixed_env`` the search runs over
    balanced assignments ``A x E -> A`` and solves an LP for the
    environment distribution.
    """
    m = _check_stochastic(matrix)
    d = m.shape[0]
    details = {"mixed_env": mixed_env, "max_env": max_env}
    searched = 0
    for e in range(1, max_env + 1):
        if not mixed_env:
            found = _pure_env_dilation(m, e)
            searched += d * e
        else:
            found, count = _mixed_env_dilation(m, e)
            searched += count
        if found is not None:
            perm, env_state = found
            residual = float(np.max(np.abs(_dilation_marginal(perm, env_state, d) - m)))
            a_sys = SystemRef("classical", d)
            env = SystemRef("classical", e)
            joint = compose_systems(a_sys, env)
            witness = {
                "env_size": e,
                "env_state": State(env, env_state),
                "permutation": Transformation(joint, joint, _permutation_matrix(perm)),
                "residual": residual,
            }
            return CheckReport("classical-dilation", "classical", CERTIFIED, witness, samples=searched,
                               deviation=residual, details=details)
    witness = {"bound": max_env, "searched": searched, "pure_env": not mixed_env}
    return CheckReport("classical-dilation", "classical", IMPOSSIBLE, witness, samples=searched, details=details)


def _pure_env_dilation(m: np.ndarray, e: int):
    # a permutation sends the point mass (a, 0) to some point mass (b, k),
    # so column a of the channel must itself be a point mass
    targets = []
    for a in range(m.shape[0]):
        hits = np.flatnonzero(np.abs(m[:, a] - 1.0) <= 1e-12)
        if len(hits) != 1:
            return None
        targets.append(int(hits[0]))
    d = m.shape[0]
    partial, used = {}, {}
    for a, b in enumerate(targets):
        slot = used.get(b, 0)
        if slot >= e:
            return None
        used[b] = slot + 1
        partial[a * e] = b * e + slot
    env_state = np.zeros(e)
    env_state[0] = 1.0
    return _complete_permutation(partial, d * e), env_state


MAX_ASSIGNMENTS = 200_000


def _balanced_assignments(d: int, e: int):
    """Maps ``A x E -> A`` hitting every output exactly ``e`` times."""
    cells = d * e

    def rec(prefix, counts):
        if len(prefix) == cells:
            yield tuple(prefix)
            return
        for b in range(d):
            if counts[b] < e:
                counts[b] += 1
                prefix.append(b)
                yield from rec(prefix, counts)
                prefix.pop()
                counts[b] -= 1

    yield from rec([], [0] * d)


def _mixed_env_dilation(m: np.ndarray, e: int):
    d = m.shape[0]
    count = 0
    for phi in _balanced_assignments(d, e):
        count += 1
        if count > MAX_ASSIGNMENTS:
            break
        # sum_k eta_k [phi(a, k) = b] = m[b, a]
        a_eq = np.zeros((d * d + 1, e))
        b_eq = np.zeros(d * d + 1)
        for a in range(d):
            for b in range(d):
                row = a * d + b
                b_eq[row] = m[b, a]
                for k in range(e):
                    if phi[a * e + k] == b:
                        a_eq[row, k] = 1.0
        a_eq[-1] = 1.0
        b_eq[-1] = 1.0
        res = linprog(np.zeros(e), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * e, method="highs")
        if res.status != 0:
            continue
        eta = np.clip(res.x, 0.0, None)
        eta /= eta.sum()
        slots = {}
        perm = []
        for cell, b in enumerate(phi):
            k = slots.get(b, 0)
            slots[b] = k + 1
            perm.append(b * e + k)
        if np.max(np.abs(_dilation_marginal(perm, eta, d) - m)) <= 1e-9:
            return (perm, eta), count
    return None, count
