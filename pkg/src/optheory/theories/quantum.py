"""Finite-dimensional quantum theory in a real Hermitian-operator basis.

An atomic system of Hilbert dimension ``d`` uses the orthonormal basis
``I/sqrt(d)`` followed by the generalized Gell-Mann matrices scaled by
``1/sqrt(2)``.  Composites use Kronecker products of the atomic bases, so
the Hilbert-Schmidt inner product becomes the ordinary dot product of
coordinates and the Born rule is ``pairing``.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.stats import unitary_group

from optheory.core import DEFAULT_TOL, Effect, State, SystemRef, Test, Transformation
from optheory.errors import BadShape, TypeMismatch
from optheory.theories.base import TheoryModel, rng_from_seed


@functools.lru_cache(maxsize=None)
def gell_mann_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of ``d x d`` matrices, identity first."""
    mats = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            mats.append(m / math.sqrt(2))
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            mats.append(m / math.sqrt(2))
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag).astype(complex) / math.sqrt(l * (l + 1)))
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


@functools.lru_cache(maxsize=None)
def _system_basis(dims: tuple[int, ...]) -> np.ndarray:
    basis = np.ones((1, 1, 1), dtype=complex)
    for d in dims:
        b = gell_mann_basis(d)
        basis = np.einsum("iab,jcd->ijacbd", basis, b).reshape(
            basis.shape[0] * b.shape[0], basis.shape[1] * d, basis.shape[2] * d
        )
    basis.setflags(write=False)
    return basis


def hilbert_dims(system: SystemRef) -> tuple[int, ...]:
    return tuple(int(p.shape) for p in system.parts)


def hilbert_dim(system: SystemRef) -> int:
    return math.prod(hilbert_dims(system))


def operator_basis(system: SystemRef) -> np.ndarray:
    return _system_basis(hilbert_dims(system))


def operator_to_coords(op: np.ndarray, system: SystemRef) -> np.ndarray:
    basis = operator_basis(system)
    op = np.asarray(op, dtype=complex)
    d = basis.shape[1]
    if op.shape != (d, d):
        raise TypeMismatch(f"operator for {system} must be {d}x{d}, got {op.shape}")
    # Tr(B_k op) for Hermitian B_k
    return np.real(np.einsum("kba,ab->k", basis, op))


def coords_to_operator(coords: np.ndarray, system: SystemRef) -> np.ndarray:
    return np.einsum("k,kab->ab", np.asarray(coords, dtype=float), operator_basis(system))


def density_matrix(state: State) -> np.ndarray:
    return coords_to_operator(state.coords, state.system)


def effect_operator(effect: Effect) -> np.ndarray:
    return coords_to_operator(effect.coords, effect.system)


def state_from_density(system: SystemRef, rho: np.ndarray) -> State:
    return State(system, operator_to_coords(rho, system))


def state_from_vector(system: SystemRef, psi: np.ndarray) -> State:
    psi = np.asarray(psi, dtype=complex)
    return state_from_density(system, np.outer(psi, psi.conj()))


def effect_from_operator(system: SystemRef, op: np.ndarray) -> Effect:
    return Effect(system, operator_to_coords(op, system))


def superoperator_to_matrix(superop: np.ndarray, in_system: SystemRef, out_system: SystemRef) -> np.ndarray:
    """Coordinate matrix of a map given by its row-major superoperator."""
    b_in = operator_basis(in_system)
    b_out = operator_basis(out_system)
    v_in = b_in.reshape(b_in.shape[0], -1)
    v_out = b_out.reshape(b_out.shape[0], -1)
    # coords = Re(conj(vec B_k) . vec X);  vec X = sum_l c_l vec B_l
    return np.real(v_out.conj() @ superop @ v_in.T)


def kraus_to_transformation(kraus, in_system: SystemRef, out_system: SystemRef) -> Transformation:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d_in, d_out = hilbert_dim(in_system), hilbert_dim(out_system)
    superop = np.zeros((d_out * d_out, d_in * d_in), dtype=complex)
    for k in kraus:
        if k.shape != (d_out, d_in):
            raise TypeMismatch(f"Kraus operator must be {d_out}x{d_in}, got {k.shape}")
        superop += np.kron(k, k.conj())
    return Transformation(in_system, out_system, superoperator_to_matrix(superop, in_system, out_system))


def unitary_transformation(system: SystemRef, u: np.ndarray) -> Transformation:
    return kraus_to_transformation([u], system, system)


def choi_matrix(t: Transformation) -> np.ndarray:
    """Choi operator ``sum_ij |i><j| (x) T(|i><j|)``, input factor first."""
    b_in = operator_basis(t.input)
    b_out = operator_basis(t.output)
    images = np.einsum("kl,kab->lab", t.matrix, b_out)
    return np.einsum("lji,lab->iajb", b_in, images).reshape(
        b_in.shape[1] * b_out.shape[1], b_in.shape[1] * b_out.shape[1]
    )


def transformation_from_choi(choi: np.ndarray, in_system: SystemRef, out_system: SystemRef) -> Transformation:
    d_in, d_out = hilbert_dim(in_system), hilbert_dim(out_system)
    j = np.asarray(choi, dtype=complex).reshape(d_in, d_out, d_in, d_out)
    # T(|i><j|) = J[i, :, j, :];  superop[(a,b),(i,j)] = J[i,a,j,b]
    superop = np.transpose(j, (1, 3, 0, 2)).reshape(d_out * d_out, d_in * d_in)
    return Transformation(in_system, out_system, superoperator_to_matrix(superop, in_system, out_system))


def kraus_operators(t: Transformation, tol: float = 1e-12) -> list[np.ndarray]:
    """Kraus family from the eigendecomposition of the Choi operator."""
    d_in, d_out = hilbert_dim(t.input), hilbert_dim(t.output)
    vals, vecs = np.linalg.eigh(choi_matrix(t))
    out = []
    for lam, v in zip(vals[::-1], vecs.T[::-1]):
        if lam <= tol * max(1.0, vals[-1]):
            break
        # v = sum_i |i> (x) K|i>  =>  K[a, i] = sqrt(lam) v[i, a]
        out.append(math.sqrt(lam) * v.reshape(d_in, d_out).T)
    return out


def partial_trace_out(choi: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Trace over the output factor of a Choi operator."""
    return np.einsum("iaja->ij", choi.reshape(d_in, d_out, d_in, d_out))


def haar_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(d, random_state=rng)


class QuantumTheory(TheoryModel):
    id = "quantum"
    kind = "quantum"

    def check_shape(self, shape) -> None:
        if isinstance(shape, bool) or not isinstance(shape, (int, np.integer)) or shape < 1:
            raise BadShape(f"quantum systems need a Hilbert dimension d >= 1, got {shape!r}")

    def atomic_rep_dim(self, shape) -> int:
        self.check_shape(shape)
        return int(shape) ** 2

    def unit_coords(self, shape) -> np.ndarray:
        d = int(shape)
        coords = np.zeros(d * d)
        coords[0] = math.sqrt(d)
        return coords

    def valid_state(self, state: State, tol: float = DEFAULT_TOL) -> bool:
        self._own(state.system)
        rho = density_matrix(state)
        eig = np.linalg.eigvalsh(rho)
        return bool(eig[0] >= -tol and np.real(np.trace(rho)) <= 1 + tol)

    def valid_effect(self, effect: Effect, tol: float = DEFAULT_TOL) -> bool:
        self._own(effect.system)
        eig = np.linalg.eigvalsh(effect_operator(effect))
        return bool(eig[0] >= -tol and eig[-1] <= 1 + tol)

    def valid_transformation(self, t: Transformation, tol: float = DEFAULT_TOL) -> bool:
        """Complete positivity and trace non-increase, both on the Choi form."""
        self._own(t.input)
        choi = choi_matrix(t)
        if np.linalg.eigvalsh(choi)[0] < -tol:
            return False
        d_in, d_out = hilbert_dim(t.input), hilbert_dim(t.output)
        slack = np.eye(d_in) - partial_trace_out(choi, d_in, d_out)
        return bool(np.linalg.eigvalsh(slack)[0] >= -tol)

    def random_state(self, system: SystemRef, seed, pure: bool = False) -> State:
        self._own(system)
        rng = rng_from_seed(seed)
        d = hilbert_dim(system)
        if pure:
            return state_from_vector(system, haar_vector(d, rng))
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        return state_from_density(system, rho / np.real(np.trace(rho)))

    def random_kraus(self, in_system, out_system, n_ops: int, rng) -> list[np.ndarray]:
        """Blocks of an isometry from an orthonormalized Gaussian matrix."""
        d_in, d_out = hilbert_dim(in_system), hilbert_dim(out_system)
        g = rng.normal(size=(n_ops * d_out, d_in)) + 1j * rng.normal(size=(n_ops * d_out, d_in))
        q, r = np.linalg.qr(g)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        return [q[i * d_out:(i + 1) * d_out] for i in range(n_ops)]

    def random_test(self, in_system: SystemRef, out_system: SystemRef, n_outcomes: int, seed) -> Test:
        self._check_arity(in_system, out_system, n_outcomes)
        n = int(n_outcomes)
        rng = rng_from_seed(seed)
        d_in, d_out = hilbert_dim(in_system), hilbert_dim(out_system)
        per_outcome = [int(k) for k in rng.integers(1, 3, size=n)]
        # an isometry needs n_ops * d_out >= d_in
        while sum(per_outcome) * d_out < d_in:
            per_outcome[int(rng.integers(n))] += 1
        kraus = self.random_kraus(in_system, out_system, sum(per_outcome), rng)
        branches, start = [], 0
        for k in per_outcome:
            branches.append(kraus_to_transformation(kraus[start:start + k], in_system, out_system))
            start += k
        return Test(tuple(branches))

    def reversible_sample(self, system: SystemRef, seed) -> Transformation:
        self._own(system)
        rng = rng_from_seed(seed)
        return unitary_transformation(system, haar_unitary(hilbert_dim(system), rng))

    def pure_transformation_sample(self, in_system, out_system, seed) -> Transformation:
        """Single-Kraus map ``rho -> K rho K^dag`` with ``||K|| <= 1``."""
        rng = rng_from_seed(seed)
        d_in, d_out = hilbert_dim(in_system), hilbert_dim(out_system)
        if d_in == d_out and rng.uniform() < 0.5:
            k = haar_unitary(d_in, rng)
        else:
            k = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
            k = k / (np.linalg.norm(k, 2) * rng.uniform(1.0, 2.0))
        return kraus_to_transformation([k], in_system, out_system)
