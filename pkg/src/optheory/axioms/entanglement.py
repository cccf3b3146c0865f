"""Entangled pure states: detection and existence."""

from __future__ import annotations

import numpy as np

from optheory.axioms.purity import RANK_TOL, is_pure_state, resolve_theory
from optheory.axioms.report import CERTIFIED, IMPOSSIBLE, CheckReport, EntanglementVerdict
from optheory.core import DEFAULT_TOL, State, SystemRef, compose_systems, marginalize
from optheory.errors import NotPure, TypeMismatch
from optheory.theories.boxworld import MAX_ENUMERATED_GBITS
from optheory.theories.quantum import density_matrix, hilbert_dim, state_from_vector

DEFAULT_MAX_PARTNER = 8


def _split_systems(system: SystemRef, split: int) -> tuple[SystemRef, SystemRef]:
    parts = system.parts
    if not 0 < split < len(parts):
        raise TypeMismatch(f"cannot split {system} after component {split}")
    return compose_systems(*parts[:split]), compose_systems(*parts[split:])


def is_entangled_pure(theory, state: State, split: int = 1, tol: float = DEFAULT_TOL) -> EntanglementVerdict:
    """A pure state of ``A (x) B`` is entangled when it is not a product.

    Product states come back with their factors ``(alpha_A, alpha_B)``;
    entangled ones with the marginal on ``A``, which is then mixed.
    """
    theory = resolve_theory(theory)
    a_sys, b_sys = _split_systems(state.system, split)
    if not is_pure_state(theory, state, tol).pure:
        raise NotPure(f"state on {state.system} is mixed")
    keep_a = range(split)
    keep_b = range(split, len(state.system.parts))
    if theory.kind == "quantum":
        rho = density_matrix(state) / state.weight
        vals, vecs = np.linalg.eigh(rho)
        psi = vecs[:, -1].reshape(hilbert_dim(a_sys), hilbert_dim(b_sys))
        u, s, vh = np.linalg.svd(psi)
        rank = int(np.sum(s > RANK_TOL * s[0]))
        if rank == 1:
            return EntanglementVerdict(False, (state_from_vector(a_sys, u[:, 0]), state_from_vector(b_sys, vh[0])))
        return EntanglementVerdict(True, {"schmidt_coefficients": s[:rank], "marginal": marginalize(state, keep_a)})
    va, vb = theory.vertices(a_sys), theory.vertices(b_sys)
    x = state.coords / state.weight
    for a in va:
        for b in vb:
            if np.max(np.abs(np.kron(a, b) - x)) <= max(tol, 1e-9):
                return EntanglementVerdict(False, (State(a_sys, a), State(b_sys, b)))
    return EntanglementVerdict(True, {"marginal": marginalize(state, keep_a), "marginal_b": marginalize(state, keep_b)})


def maximally_entangled(system: SystemRef) -> State:
    d = hilbert_dim(system)
    psi = np.eye(d).ravel() / np.sqrt(d)
    return state_from_vector(compose_systems(system, system), psi)


def entanglement_existence(theory, system: SystemRef, max_partner: int = DEFAULT_MAX_PARTNER) -> CheckReport:
    """Search for a pure state of ``system (x) partner`` with a mixed marginal.

    If none exists within the bound, mixed states of ``system`` have no
    purification with such a partner either.
    """
    theory = resolve_theory(theory)
    if theory.kind == "quantum":
        psi = maximally_entangled(system)
        marginal = marginalize(psi, range(len(system.parts)))
        rho = density_matrix(marginal)
        purity = float(np.real(np.trace(rho @ rho)))
        witness = {"state": psi, "partner": system, "marginal": marginal, "marginal_purity": purity}
        return CheckReport("entanglement", theory.id, CERTIFIED, witness, samples=1, deviation=purity,
                           details={"system": str(system), "construction": "maximally entangled"})
    if theory.id == "classical":
        partners = [theory.make_system(k) for k in range(2, max_partner + 1)]
        bound = max_partner
    else:
        n = max(0, min(max_partner, MAX_ENUMERATED_GBITS - len(system.parts)))
        partners = [compose_systems(*(theory.make_system("gbit") for _ in range(k))) for k in range(1, n + 1)]
        bound = n
    split = len(system.parts)
    searched = 0
    for partner in partners:
        joint = compose_systems(system, partner)
        for v in theory.vertices(joint):
            searched += 1
            verdict = is_entangled_pure(theory, State(joint, v), split)
            if verdict.entangled:
                witness = {"state": State(joint, v), "partner": partner, "marginal": verdict.witness["marginal"]}
                return CheckReport("entanglement", theory.id, CERTIFIED, witness, samples=searched,
                                   details={"system": str(system), "bound": bound})
    witness = {"bound": bound, "searched": searched,
               "consequence": "mixed states of this system admit no purification within the bound"}
    return CheckReport("entanglement", theory.id, IMPOSSIBLE, witness, samples=searched,
                       details={"system": str(system), "bound": bound})
