import itertools

import numpy as np
import pytest

from optheory.core import State, SystemRef, Transformation, compose_systems, sequential_compose, trivial
from optheory.errors import BadArity, BadParams, BadShape, UnknownName
from optheory.theories import (
    BOXWORLD,
    CLASSICAL,
    QUANTUM,
    make_system,
    named_state,
    random_state,
    random_test,
    reversible_sample,
)
from optheory.theories.boxworld import behaviour_table, coords_from_behaviour, pr_box
from optheory.theories.polytope import PolytopeStateSpace
from optheory.theories.quantum import (
    choi_matrix,
    density_matrix,
    gell_mann_basis,
    kraus_operators,
    kraus_to_transformation,
    partial_trace_out,
    transformation_from_choi,
)

QUBIT = make_system("quantum", 2)
GBIT = make_system("boxworld")
GBITS = compose_systems(GBIT, GBIT)
THEORIES = {"classical": CLASSICAL, "quantum": QUANTUM, "boxworld": BOXWORLD}
SYSTEMS = [("classical", 3), ("quantum", 2), ("quantum", 3), ("boxworld", "gbit")]


def test_make_system():
    assert make_system("classical", 6).rep_dim == 6
    assert make_system("quantum", 3).rep_dim == 9
    assert GBIT.rep_dim == 3
    assert make_system("classical", 1).is_trivial
    for bad in [("classical", 0), ("quantum", -2), ("boxworld", 2), ("classical", 2.5)]:
        with pytest.raises(BadShape):
            make_system(*bad)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_gell_mann_basis_is_orthonormal(d):
    basis = gell_mann_basis(d)
    assert basis.shape == (d * d, d, d)
    gram = np.einsum("aij,bji->ab", basis, basis)
    np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-12)
    for b in basis:
        np.testing.assert_allclose(b, b.conj().T, atol=1e-15)


def test_singlet():
    s = named_state("quantum", "singlet")
    rho = density_matrix(s)
    assert abs(np.trace(rho @ rho).real - 1) < 1e-12
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    np.testing.assert_allclose(rho, np.outer(psi, psi), atol=1e-12)


def test_catalog():
    np.testing.assert_allclose(named_state("classical", "uniform", (2,)).coords, [0.5, 0.5])
    np.testing.assert_allclose(named_state("classical", "point_mass", (2, 4)).coords, [0, 0, 1, 0])
    np.testing.assert_allclose(density_matrix(named_state("quantum", "maximally_mixed", (3,))), np.eye(3) / 3, atol=1e-12)
    np.testing.assert_allclose(density_matrix(named_state("quantum", "computational", (1,))), np.diag([0, 1]), atol=1e-12)
    np.testing.assert_allclose(density_matrix(named_state("quantum", "plus_state")), np.full((2, 2), 0.5), atol=1e-12)
    center = named_state("boxworld", "gbit_center")
    verts = [named_state("boxworld", "gbit_vertex", (k,)).coords for k in range(4)]
    np.testing.assert_allclose(center.coords, np.mean(verts, axis=0), atol=1e-15)
    with pytest.raises(UnknownName):
        named_state("quantum", "nonsense")
    with pytest.raises(UnknownName):
        named_state("classical", "singlet")
    with pytest.raises(BadParams):
        named_state("classical", "point_mass", (5, 2))
    with pytest.raises(BadParams):
        named_state("boxworld", "gbit_vertex", (4,))


@pytest.mark.parametrize("theory,shape", SYSTEMS)
def test_random_states_are_valid_and_deterministic(theory, shape):
    system = make_system(theory, shape)
    model = THEORIES[theory]
    for seed in (0, 1, 2**63 + 5):
        for pure in (False, True):
            a, b = random_state(system, seed, pure), random_state(system, seed, pure)
            np.testing.assert_array_equal(a.coords, b.coords)
            assert model.valid_state(a)


def test_random_pure_qubit_has_unit_purity():
    for seed in range(20):
        rho = density_matrix(random_state(QUBIT, seed, pure=True))
        assert abs(np.trace(rho @ rho).real - 1) < 1e-12


def test_random_classical_mixed_is_distribution():
    for seed in range(20):
        p = random_state(make_system("classical", 4), seed).coords
        assert np.all(p >= 0)
        assert abs(p.sum() - 1) < 1e-12


@pytest.mark.parametrize("theory,shape", SYSTEMS)
def test_random_tests_are_valid(theory, shape):
    system = make_system(theory, shape)
    model = THEORIES[theory]
    for seed in range(5):
        for n in (1, 2, 3):
            test = random_test(system, system, n, seed)
            assert len(test) == n
            assert model.valid_test(test)
            prep = random_test(trivial(theory), system, n, seed)
            assert model.valid_test(prep)


def test_random_test_arity():
    with pytest.raises(BadArity):
        random_test(QUBIT, QUBIT, 0, 0)


def test_classical_branches_are_stochastic():
    bit = make_system("classical", 2)
    for seed in range(10):
        total = sum(b.matrix for b in random_test(bit, bit, 2, seed).branches)
        np.testing.assert_allclose(total.sum(axis=0), [1, 1], atol=1e-12)


def test_quantum_test_choi_partial_trace():
    for seed in range(10):
        choi = sum(choi_matrix(b) for b in random_test(QUBIT, QUBIT, 3, seed).branches)
        np.testing.assert_allclose(partial_trace_out(choi, 2, 2), np.eye(2), atol=1e-12)


def test_choi_and_kraus_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(5):
        t = QUANTUM.random_test(QUBIT, make_system("quantum", 3), 1, int(rng.integers(2**32))).branches[0]
        back = transformation_from_choi(choi_matrix(t), t.input, t.output)
        np.testing.assert_allclose(back.matrix, t.matrix, atol=1e-12)
        rebuilt = kraus_to_transformation(kraus_operators(t), t.input, t.output)
        np.testing.assert_allclose(rebuilt.matrix, t.matrix, atol=1e-10)


def test_quantum_predicates_reject_non_cp():
    transpose = np.zeros((4, 4), dtype=complex)
    for i, j in itertools.product(range(2), repeat=2):
        transpose[i * 2 + j, j * 2 + i] = 1
    t = transformation_from_choi(transpose, QUBIT, QUBIT)
    assert not QUANTUM.valid_transformation(t)
    bad = State(QUBIT, np.array([1 / np.sqrt(2), 0, 0, 1.0]))
    assert not QUANTUM.valid_state(bad)


def test_classical_reversible_is_permutation():
    for seed in range(10):
        m = reversible_sample(make_system("classical", 3), seed).matrix
        assert set(np.unique(m)) <= {0.0, 1.0}
        np.testing.assert_array_equal(m.sum(axis=0), np.ones(3))
        np.testing.assert_array_equal(m.sum(axis=1), np.ones(3))


def test_quantum_reversible_preserves_purity():
    u = reversible_sample(QUBIT, 9)
    for seed in range(20):
        rho = random_state(QUBIT, seed)
        out = density_matrix(u.apply(rho))
        before = np.trace(density_matrix(rho) @ density_matrix(rho)).real
        assert abs(np.trace(out @ out).real - before) < 1e-12


@pytest.mark.parametrize("theory,shape", SYSTEMS)
def test_reversible_inverse_is_valid(theory, shape):
    system = make_system(theory, shape)
    model = THEORIES[theory]
    for seed in range(5):
        r = reversible_sample(system, seed)
        inv = Transformation(system, system, np.linalg.inv(r.matrix))
        assert model.valid_transformation(r) and model.valid_transformation(inv)
        np.testing.assert_allclose(sequential_compose(r, inv).matrix, np.eye(system.rep_dim), atol=1e-12)


def test_gbit_has_eight_symmetries():
    group = BOXWORLD.reversible_group(GBIT)
    assert len(group) == 8
    mats = {tuple(np.round(g.matrix, 12).ravel()) for g in group}
    assert len(mats) == 8


def _known_two_gbit_behaviours():
    # local deterministic boxes a = f(x), b = g(y), and the eight PR boxes
    out = []
    for f in itertools.product((0, 1), repeat=2):
        for g in itertools.product((0, 1), repeat=2):
            p = np.zeros((2, 2, 2, 2))
            for x, y in itertools.product((0, 1), repeat=2):
                p[f[x], g[y], x, y] = 1.0
            out.append(p)
    for bits in itertools.product((0, 1), repeat=3):
        out.append(pr_box(*bits))
    return out


def test_two_gbit_vertices_match_the_no_signalling_polytope():
    verts = BOXWORLD.vertices(GBITS)
    assert len(verts) == 24
    tables = [behaviour_table(v) for v in verts]
    for p in _known_two_gbit_behaviours():
        assert any(np.allclose(p, t, atol=1e-12) for t in tables)
    n_local = sum(np.all(np.isin(np.round(t, 12), (0.0, 1.0))) for t in tables)
    assert n_local == 16


def test_pr_box_correlations():
    p = behaviour_table(coords_from_behaviour(pr_box()))
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        expected = 0.5 if (a ^ b) == (x & y) else 0.0
        assert abs(p[a, b, x, y] - expected) < 1e-12
    chsh = sum((-1) ** (x * y) * sum((-1) ** (a ^ b) * p[a, b, x, y] for a in (0, 1) for b in (0, 1))
               for x in (0, 1) for y in (0, 1))
    assert abs(chsh - 4) < 1e-12
    assert BOXWORLD.valid_state(State(GBITS, coords_from_behaviour(p)))


def test_signalling_behaviour_rejected():
    p = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product((0, 1), repeat=2):
        p[y, 0, x, y] = 1.0  # Alice's output copies Bob's input
    with pytest.raises(BadParams):
        coords_from_behaviour(p)


@pytest.mark.parametrize("system", [make_system("classical", 4), GBIT, GBITS])
def test_vertex_lists_are_minimal(system):
    space = PolytopeStateSpace(THEORIES[system.theory_id].vertices(system))
    assert space.is_minimal()
    assert space.affine_dimension() == system.rep_dim - 1


def test_polytope_contains():
    space = BOXWORLD.state_space(GBIT)
    assert space.contains(named_state("boxworld", "gbit_center").coords)
    assert not space.contains(np.array([1.0, 1.0, 1.0]) * np.array([1, 1.5, 0]))


def test_valid_predicates_accept_catalog():
    for name, theory in [("singlet", "quantum"), ("plus_state", "quantum"), ("gbit_center", "boxworld"), ("pr_box", "boxworld")]:
        s = named_state(theory, name)
        assert THEORIES[theory].valid_state(s)
    assert SystemRef("boxworld", ("gbit", "gbit")) == GBITS
