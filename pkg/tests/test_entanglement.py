import numpy as np
import pytest

from optheory.axioms import entanglement_existence, is_entangled_pure
from optheory.axioms.report import CERTIFIED, IMPOSSIBLE
from optheory.core import State, SystemRef, tensor
from optheory.errors import NotPure
from optheory.theories import BOXWORLD, make_system, named_state, random_state
from optheory.theories.quantum import density_matrix

QUBIT = make_system("quantum", 2)


def purity(state):
    rho = density_matrix(state)
    return np.trace(rho @ rho).real


def test_singlet_is_entangled():
    verdict = is_entangled_pure("quantum", named_state("quantum", "singlet"))
    assert verdict.entangled
    np.testing.assert_allclose(verdict.witness["schmidt_coefficients"], [np.sqrt(0.5)] * 2, atol=1e-12)
    assert abs(purity(verdict.witness["marginal"]) - 0.5) < 1e-12


def test_product_returns_factors():
    zero, plus = named_state("quantum", "computational", (0,)), named_state("quantum", "plus_state")
    verdict = is_entangled_pure("quantum", tensor(zero, plus))
    assert not verdict.entangled
    a, b = verdict.witness
    assert a.allclose(zero, 1e-12) and b.allclose(plus, 1e-12)


def test_random_pure_products_are_not_entangled():
    for seed in range(10):
        s = tensor(random_state(QUBIT, seed, pure=True), random_state(make_system("quantum", 3), seed, pure=True))
        assert not is_entangled_pure("quantum", s).entangled


def test_mixed_input_rejected():
    with pytest.raises(NotPure):
        is_entangled_pure("quantum", tensor(named_state("quantum", "maximally_mixed", (2,)), named_state("quantum", "plus_state")))


def test_pr_box_is_entangled():
    pr = named_state("boxworld", "pr_box")
    verdict = is_entangled_pure("boxworld", pr)
    assert verdict.entangled
    # oracle: compare against all 16 products of gbit vertices
    verts = BOXWORLD.vertices(make_system("boxworld"))
    assert not any(np.allclose(np.kron(a, b), pr.coords) for a in verts for b in verts)
    np.testing.assert_allclose(verdict.witness["marginal"].coords, named_state("boxworld", "gbit_center").coords, atol=1e-12)


def test_local_gbit_vertex_is_product():
    g = make_system("boxworld")
    s = tensor(named_state("boxworld", "gbit_vertex", (1,)), named_state("boxworld", "gbit_vertex", (2,)))
    verdict = is_entangled_pure("boxworld", s)
    assert not verdict.entangled
    np.testing.assert_allclose(verdict.witness[0].coords, BOXWORLD.vertices(g)[1])


def test_classical_point_masses_are_products():
    joint = SystemRef("classical", (2, 3))
    for k in range(6):
        coords = np.eye(6)[k]
        assert not is_entangled_pure("classical", State(joint, coords)).entangled


@pytest.mark.parametrize("d", [2, 3])
def test_quantum_entanglement_exists(d):
    report = entanglement_existence("quantum", make_system("quantum", d))
    assert report.verdict == CERTIFIED
    assert report.witness["marginal_purity"] <= 1 / d + 1e-9
    assert is_entangled_pure("quantum", report.witness["state"]).entangled


def test_classical_has_no_entanglement():
    report = entanglement_existence("classical", make_system("classical", 3), max_partner=8)
    assert report.verdict == IMPOSSIBLE
    assert report.witness["bound"] == 8
    assert report.witness["searched"] == sum(3 * k for k in range(2, 9))


def test_boxworld_entanglement_found():
    report = entanglement_existence("boxworld", make_system("boxworld"))
    assert report.verdict == CERTIFIED
    assert is_entangled_pure("boxworld", report.witness["state"]).entangled
