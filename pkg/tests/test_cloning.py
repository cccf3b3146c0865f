import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optheory.axioms import no_cloning_check
from optheory.core import compose_systems, parallel_compose
from optheory.errors import ProbeNotPure, TooFewProbes, TypeMismatch
from optheory.theories import BOXWORLD, make_system, named_state
from optheory.theories.quantum import density_matrix, state_from_vector

QUBIT = make_system("quantum", 2)
TRIT = make_system("classical", 3)
GBIT = make_system("boxworld")


def trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()


def test_trace_distance_rules_out_zero_plus_cloner():
    # independent oracle: cloning would raise the distance, but channels contract it
    zero, plus = np.array([1.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2)
    before = trace_distance(np.outer(zero, zero), np.outer(plus, plus))
    zz, pp = np.kron(zero, zero), np.kron(plus, plus)
    after = trace_distance(np.outer(zz, zz), np.outer(pp, pp))
    assert abs(before - np.sqrt(0.5)) < 1e-12
    assert abs(after - np.sqrt(0.75)) < 1e-12
    assert after > before


def test_quantum_zero_plus_infeasible_with_certificate():
    probes = [named_state("quantum", "computational", (0,)), named_state("quantum", "plus_state")]
    verdict = no_cloning_check("quantum", QUBIT, probes)
    assert not verdict.feasible and verdict.cloner is None
    cert = verdict.certificate
    assert cert.margin > 1e-8
    assert cert.validate() > 1e-8
    assert abs(cert.validate() - cert.margin) < 1e-9


def test_classical_trit_cloned_exactly():
    probes = [named_state("classical", "point_mass", (k, 3)) for k in range(3)]
    verdict = no_cloning_check("classical", TRIT, probes)
    assert verdict.feasible
    assert max(verdict.residuals) == 0.0
    for p in probes:
        blank = named_state("classical", "point_mass", (0, 3))
        np.testing.assert_array_equal(verdict.cloner.apply(parallel_compose(p, blank)).coords, parallel_compose(p, p).coords)


def test_single_quantum_probe_cloned():
    probe = named_state("quantum", "plus_state")
    verdict = no_cloning_check("quantum", QUBIT, [probe, probe])
    assert verdict.feasible
    assert max(verdict.residuals) < 1e-12


def test_orthogonal_quantum_probes_cloned():
    probes = [named_state("quantum", "computational", (k,)) for k in (0, 1)]
    verdict = no_cloning_check("quantum", QUBIT, probes)
    assert verdict.feasible
    assert max(verdict.residuals) < 1e-12


@settings(max_examples=15, deadline=None)
@given(
    st.floats(0.05, np.pi / 2 - 0.05),
    st.floats(0.0, 2 * np.pi),
)
def test_nonorthogonal_qubit_probes_never_cloned(theta, phi):
    a = np.array([1.0, 0.0])
    b = np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)])
    probes = [state_from_vector(QUBIT, a), state_from_vector(QUBIT, b)]
    verdict = no_cloning_check("quantum", QUBIT, probes)
    assert not verdict.feasible
    assert verdict.cloner is None
    assert verdict.certificate.validate() > 10 * 1e-9


def test_boxworld_vertex_sets():
    verts = [named_state("boxworld", "gbit_vertex", (k,)) for k in range(4)]
    two = no_cloning_check("boxworld", GBIT, verts[:2])
    assert two.feasible
    assert BOXWORLD.valid_transformation(two.cloner)
    assert max(two.residuals) < 1e-9
    four = no_cloning_check("boxworld", GBIT, verts)
    assert not four.feasible
    assert four.certificate.validate() > 1e-8


def test_cloning_errors():
    with pytest.raises(TooFewProbes):
        no_cloning_check("quantum", QUBIT, [])
    with pytest.raises(ProbeNotPure):
        no_cloning_check("quantum", QUBIT, [named_state("quantum", "maximally_mixed", (2,))])
    with pytest.raises(TypeMismatch):
        no_cloning_check("quantum", QUBIT, [named_state("quantum", "computational", (0, 3))])


def test_cloner_output_is_product_of_replicas():
    probes = [named_state("quantum", "computational", (k,)) for k in (0, 1)]
    verdict = no_cloning_check("quantum", QUBIT, probes)
    blank = named_state("quantum", "computational", (0,))
    for p in probes:
        out = verdict.cloner.apply(parallel_compose(p, blank))
        assert out.system == compose_systems(QUBIT, QUBIT)
        expected = np.kron(density_matrix(p), density_matrix(p))
        np.testing.assert_allclose(density_matrix(out), expected, atol=1e-12)
