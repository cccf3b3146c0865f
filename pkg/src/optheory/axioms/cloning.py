"""Feasibility of perfect cloning for a family of pure probe states.

A cloner is one transformation ``T`` on ``S (x) S`` with
``T(alpha (x) blank) = alpha (x) alpha`` for every probe ``alpha``.  The
conditions are linear in the matrix of ``T``; validity of ``T`` adds linear
inequalities (exact facet/vertex pairs for polytope theories, PSD cutting
planes on the Choi operator for quantum theory).  Infeasibility is reported
with Farkas multipliers that re-check without the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from optheory.axioms.purity import is_pure_state, resolve_theory
from optheory.axioms.report import CloningVerdict, InfeasibilityCertificate, farkas_margin
from optheory.core import DEFAULT_TOL, State, SystemRef, Transformation, compose_systems, deterministic_effect
from optheory.errors import ProbeNotPure, TooFewProbes, TypeMismatch
from optheory.theories.quantum import (
    choi_matrix,
    density_matrix,
    hilbert_dim,
    operator_basis,
    state_from_vector,
)

CERT_MARGIN = 1e-8
MAX_CUT_ROUNDS = 50
CUT_TOL = 1e-10


@dataclass
class CloningProblem:
    """Everything needed to rebuild the constraint rows from scratch."""

    theory: object
    system: SystemRef
    probes: list[np.ndarray]
    blank: np.ndarray
    cuts: list[np.ndarray] = field(default_factory=list)

    @property
    def joint(self) -> SystemRef:
        return compose_systems(self.system, self.system)

    def bound(self) -> float:
        """Box bound valid for every entry of every valid deterministic ``T``."""
        joint = self.joint
        if self.theory.kind == "quantum":
            # |Tr(B_k T(B_l))| <= |B_k|_op |B_l|_1 <= sqrt(D)
            return math.sqrt(hilbert_dim(joint))
        verts = self.theory.vertices(joint)
        c_max = float(np.max(np.abs(verts)))
        pinv = np.linalg.pinv(verts.T)
        return c_max * float(np.max(np.abs(pinv).sum(axis=0)))

    def rows(self):
        joint = self.joint
        n = joint.rep_dim
        eye = np.eye(n)
        a_eq, b_eq = [], []
        for p in self.probes:
            src = np.kron(p, self.blank)
            dst = np.kron(p, p)
            for k in range(n):
                a_eq.append(np.kron(eye[k], src))
                b_eq.append(dst[k])
        unit = deterministic_effect(joint).coords
        for col in range(n):
            a_eq.append(np.kron(unit, eye[col]))
            b_eq.append(unit[col])
        a_ub = []
        if self.theory.kind == "polytope":
            facets = self.theory.facets(joint)
            verts = self.theory.vertices(joint)
            a_ub.extend(-np.einsum("fi,vj->fvij", facets, verts).reshape(-1, n * n))
        else:
            a_ub.extend(-c for c in self.cuts)
        a_ub = np.array(a_ub).reshape(-1, n * n)
        return np.array(a_eq), np.array(b_eq), a_ub, np.zeros(len(a_ub))


def _psd_cut(v: np.ndarray, joint: SystemRef) -> np.ndarray:
    """Coefficients of ``x -> <v|J(T)|v>`` with ``x = T.ravel()``."""
    basis = operator_basis(joint)
    d = basis.shape[1]
    mat = v.reshape(d, d)
    coeff = np.einsum("ia,lji,kab,jb->kl", mat.conj(), basis, basis, mat)
    return np.real(coeff).ravel()


def _product_cut(p: np.ndarray, w: np.ndarray, joint: SystemRef) -> np.ndarray:
    """Cut for ``<w|T(|p><p|)|w> >= 0``: the Choi vector ``conj(p) (x) w``."""
    return _psd_cut(np.kron(p.conj(), w), joint)


def _seed_cuts(problem: CloningProblem) -> None:
    """Positivity cuts that already exclude cloning of non-orthogonal pairs.

    For probes ``r1, r2`` write ``(r1 - r2) (x) blank = P - Q`` and split the
    target difference ``r1 (x) r1 - r2 (x) r2`` by its eigenvectors.  Trace
    preservation and positivity of ``T(P)`` and ``T(Q)`` on those
    eigenvectors bound the output trace distance by the input one, which the
    target exceeds.
    """
    system, joint = problem.system, problem.joint
    blank = density_matrix(State(system, problem.blank))
    rhos = [density_matrix(State(system, p)) for p in problem.probes]
    for i, r1 in enumerate(rhos):
        for r2 in rhos[i + 1:]:
            _, ins = np.linalg.eigh(np.kron(r1 - r2, blank))
            _, outs = np.linalg.eigh(np.kron(r1, r1) - np.kron(r2, r2))
            for p in (ins[:, 0], ins[:, -1]):
                for w in outs.T:
                    problem.cuts.append(_product_cut(p, w, joint))


def _solve_primal(a_eq, b_eq, a_ub, b_ub, bound):
    n = a_eq.shape[1]
    res = linprog(
        np.zeros(n),
        A_ub=a_ub if len(a_ub) else None,
        b_ub=b_ub if len(a_ub) else None,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(-bound, bound)] * n,
        method="highs",
    )
    return res


def _farkas(a_eq, b_eq, a_ub, b_ub, bound):
    """Minimise ``bound * |A^T y|_1`` subject to ``b . y = -1``, ``y_ub >= 0``."""
    m_eq, m_ub, n = len(a_eq), len(a_ub), a_eq.shape[1]
    # variables: y_eq (free), y_ub (>= 0), r_plus, r_minus (>= 0)
    n_var = m_eq + m_ub + 2 * n
    c = np.concatenate([np.zeros(m_eq + m_ub), bound * np.ones(2 * n)])
    a = np.zeros((n + 1, n_var))
    a[:n, :m_eq] = a_eq.T
    a[:n, m_eq:m_eq + m_ub] = a_ub.T
    a[:n, m_eq + m_ub:m_eq + m_ub + n] = -np.eye(n)
    a[:n, m_eq + m_ub + n:] = np.eye(n)
    a[n, :m_eq] = b_eq
    a[n, m_eq:m_eq + m_ub] = b_ub
    b = np.zeros(n + 1)
    b[n] = -1.0
    bounds = [(None, None)] * m_eq + [(0, None)] * (m_ub + 2 * n)
    res = linprog(c, A_eq=a, b_eq=b, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    return res.x[:m_eq], res.x[m_eq:m_eq + m_ub]


def _replica_residuals(t: Transformation, probes, blank) -> list[float]:
    out = []
    for p in probes:
        image = t.matrix @ np.kron(p, blank)
        out.append(float(np.max(np.abs(image - np.kron(p, p)))))
    return out


def _default_blank(theory, system: SystemRef) -> np.ndarray:
    if theory.kind == "quantum":
        psi = np.zeros(hilbert_dim(system))
        psi[0] = 1.0
        return state_from_vector(system, psi).coords
    return theory.vertices(system)[0]


def _distinct(probes: list[np.ndarray], tol: float) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in probes:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return out


def _candidate(theory, system: SystemRef, probes, blank, tol):
    """Closed-form cloners for the cases where one is known to exist."""
    joint = compose_systems(system, system)
    unit = deterministic_effect(joint).coords
    if len(probes) == 1:
        p = probes[0]
        return Transformation(joint, joint, np.outer(np.kron(p, p), unit)), "prepare-and-replace"
    if theory.id == "classical":
        # (a, b) -> (a, a): copies every point mass
        d = system.rep_dim
        m = np.zeros((d * d, d * d))
        for a in range(d):
            for b in range(d):
                m[a * d + a, a * d + b] = 1.0
        return Transformation(joint, joint, m), "universal-copy"
    if theory.kind == "quantum":
        rhos = [density_matrix(State(system, p)) for p in probes]
        overlaps = [abs(np.trace(r1 @ r2)) for i, r1 in enumerate(rhos) for r2 in rhos[i + 1:]]
        if max(overlaps) <= tol:
            return _measure_and_prepare(system, rhos), "measure-and-prepare"
    return None, ""


def _measure_and_prepare(system: SystemRef, rhos) -> Transformation:
    """Measure in a basis containing the orthogonal probes, re-prepare two copies."""
    d = hilbert_dim(system)
    vecs = [np.linalg.eigh(r)[1][:, -1] for r in rhos]
    frame = np.array(vecs).T
    rest = np.linalg.svd(np.eye(d) - frame @ frame.conj().T)[0][:, : d - len(vecs)] if len(vecs) < d else None
    projectors = [np.outer(v, v.conj()) for v in vecs]
    if rest is not None:
        projectors.append(rest @ rest.conj().T)
    outputs = [np.kron(r, r) for r in rhos] + ([np.kron(rhos[0], rhos[0])] if rest is not None else [])
    joint = compose_systems(system, system)
    basis = operator_basis(joint)
    ident = np.eye(d)
    # T(X) = sum_i Tr[(P_i (x) I) X] out_i
    cols = []
    for b in basis:
        img = sum(np.trace(np.kron(p, ident) @ b) * o for p, o in zip(projectors, outputs))
        cols.append(np.real(np.einsum("kba,ab->k", basis, img)))
    return Transformation(joint, joint, np.array(cols).T)


def no_cloning_check(
    theory,
    system: SystemRef,
    probes,
    blank: State | None = None,
    tol: float = DEFAULT_TOL,
) -> CloningVerdict:
    """Decide whether one transformation clones every probe."""
    theory = resolve_theory(theory)
    probes = list(probes)
    if len(probes) < 1:
        raise TooFewProbes("need at least one probe state")
    for p in probes:
        if p.system != system:
            raise TypeMismatch(f"probe on {p.system}, expected {system}")
        if abs(p.weight - 1.0) > 1e-9 or not is_pure_state(theory, p, tol).pure:
            raise ProbeNotPure(f"probe {p.coords} is not a normalized pure state")
    if blank is not None and blank.system != system:
        raise TypeMismatch(f"blank on {blank.system}, expected {system}")
    blank_coords = blank.coords if blank is not None else _default_blank(theory, system)
    vecs = _distinct([p.coords for p in probes], 1e-9)

    cloner, method = _candidate(theory, system, vecs, blank_coords, tol)
    if cloner is not None and theory.valid_transformation(cloner, 1e-9):
        residuals = _replica_residuals(cloner, vecs, blank_coords)
        if max(residuals) <= max(tol, 1e-9):
            return CloningVerdict(theory.id, system, True, cloner, residuals, method=method)

    problem = CloningProblem(theory, system, vecs, blank_coords)
    bound = problem.bound()
    joint = problem.joint
    n = joint.rep_dim
    if theory.kind == "quantum":
        _seed_cuts(problem)
    rounds = 0
    while True:
        a_eq, b_eq, a_ub, b_ub = problem.rows()
        res = _solve_primal(a_eq, b_eq, a_ub, b_ub, bound)
        if res.status == 2:
            y = _farkas(a_eq, b_eq, a_ub, b_ub, bound)
            if y is not None:
                margin = farkas_margin(y[0], y[1], a_eq, b_eq, a_ub, b_ub, bound)
                if margin <= max(CERT_MARGIN, 10 * tol):
                    break
                cert = InfeasibilityCertificate(y[0], y[1], bound, margin, problem)
                return CloningVerdict(theory.id, system, False, certificate=cert, method="lp", iterations=rounds)
            break
        if res.status != 0:
            break
        t = Transformation(joint, joint, res.x.reshape(n, n))
        if theory.kind == "polytope":
            return CloningVerdict(
                theory.id, system, True, t, _replica_residuals(t, vecs, blank_coords), method="lp", iterations=rounds
            )
        vals, vecs_j = np.linalg.eigh(choi_matrix(t))
        if vals[0] >= -CUT_TOL:
            return CloningVerdict(
                theory.id, system, True, t, _replica_residuals(t, vecs, blank_coords), method="lp", iterations=rounds
            )
        if rounds >= MAX_CUT_ROUNDS:
            break
        for lam, v in zip(vals, vecs_j.T):
            if lam < -CUT_TOL:
                problem.cuts.append(_psd_cut(v, joint))
        rounds += 1
    raise RuntimeError(f"cloning LP undecided after {rounds} cutting-plane rounds")
