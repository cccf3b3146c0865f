import numpy as np
import pytest

from optheory.circuit import (
    Node,
    Wire,
    build,
    chain,
    contraction_plan,
    evaluate,
    evaluate_open,
    random_closed_circuit,
    random_topological_order,
    side_by_side,
    single,
)
from optheory.core import Effect, Test, coarse_grain, pairing, parallel_compose, sequential_compose, trivial
from optheory.errors import BranchOutOfRange, CycleDetected, EmptyList, OpenCircuit, TypeMismatch
from optheory.theories import make_system, named_state, random_state, random_test
from optheory.theories.quantum import effect_from_operator

QUBIT = make_system("quantum", 2)
Z_MEASURE = Test(tuple(effect_from_operator(QUBIT, np.diag(v)) for v in ([1.0, 0.0], [0.0, 1.0])))
THEORIES = ("classical", "quantum", "boxworld")


def test_prepare_transform_observe_chain():
    a, b = make_system("classical", 2), make_system("classical", 3)
    rho = Test.single(named_state("classical", "uniform", (2,)))
    c = random_test(a, b, 2, 0)
    obs = random_test(b, trivial("classical"), 3, 1)
    circuit = chain(rho, c, obs)
    assert circuit.is_closed
    assert len(circuit.nodes) == 3
    assert [n.kind for n in circuit.nodes] == ["preparation", "transformation", "observation"]
    assert abs(evaluate(circuit).distribution.total - 1) < 1e-12


def test_wire_type_mismatch():
    prep = Node(Test.single(named_state("classical", "uniform", (2,))))
    meas = Node(random_test(make_system("classical", 3), make_system("classical", 1), 2, 0))
    with pytest.raises(TypeMismatch):
        build([prep, meas], [Wire(0, 0, 1, 0)])


def test_port_reuse_and_missing_nodes():
    prep = Node(Test.single(named_state("quantum", "singlet")))
    with pytest.raises(TypeMismatch):
        build([prep, Node(Z_MEASURE)], [Wire(0, 0, 1, 0), Wire(0, 1, 1, 0)])
    with pytest.raises(TypeMismatch):
        build([prep], [Wire(0, 0, 3, 0)])
    with pytest.raises(EmptyList):
        build([])


def test_cycle_detected():
    ident = Test.single(random_test(QUBIT, QUBIT, 1, 0).branches[0])
    with pytest.raises(CycleDetected):
        build([Node(ident), Node(ident)], [Wire(0, 0, 1, 0), Wire(1, 0, 0, 0)])


def test_dangling_ports_make_circuits_open():
    circuit = single(random_test(QUBIT, QUBIT, 2, 0))
    assert not circuit.is_closed
    assert circuit.input_system == QUBIT and circuit.output_system == QUBIT
    with pytest.raises(OpenCircuit):
        evaluate(circuit)


def test_build_is_idempotent():
    c = random_closed_circuit("quantum", 4)
    again = build(c.nodes, c.wires)
    assert again.wires == c.wires and again.order == c.order
    np.testing.assert_array_equal(evaluate(again).distribution.probs, evaluate(c).distribution.probs)


def test_deterministic_preparation_and_measurement():
    circuit = chain(Test.single(named_state("quantum", "computational", (0,))), Z_MEASURE)
    np.testing.assert_allclose(evaluate(circuit).distribution.probs, [1, 0], atol=1e-15)


def test_singlet_statistics():
    nodes = [Node(Test.single(named_state("quantum", "singlet")), "psi"), Node(Z_MEASURE, "a"), Node(Z_MEASURE, "b")]
    result = evaluate(build(nodes, [Wire(0, 0, 1, 0), Wire(0, 1, 2, 0)]))
    np.testing.assert_allclose(result.distribution.probs, [0, 0.5, 0.5, 0], atol=1e-12)
    assert result.schema == ("psi", "a", "b")
    assert result.distribution.labels[1] == ("0", "0", "1")


@pytest.mark.parametrize("theory", THEORIES)
def test_product_rule(theory):
    for seed in range(10):
        c1, c2 = random_closed_circuit(theory, seed), random_closed_circuit(theory, seed + 1000)
        p1, p2 = evaluate(c1).distribution.probs, evaluate(c2).distribution.probs
        joint = evaluate(side_by_side(c1, c2)).distribution.probs
        np.testing.assert_allclose(joint, np.outer(p1, p2).ravel(), atol=1e-12)


def test_scalar_product():
    def scalar_circuit(d):
        first = Effect(make_system("classical", d), np.eye(d)[0])
        return chain(Test.single(named_state("classical", "uniform", (d,))), Test.single(first))

    p, q = evaluate(scalar_circuit(2)).scalar, evaluate(scalar_circuit(3)).scalar
    assert abs(p - 1 / 2) < 1e-15 and abs(q - 1 / 3) < 1e-15
    assert abs(evaluate(side_by_side(scalar_circuit(2), scalar_circuit(3))).scalar - p * q) < 1e-15


@pytest.mark.parametrize("theory", THEORIES)
def test_normalization(theory):
    for seed in range(20):
        dist = evaluate(random_closed_circuit(theory, seed)).distribution
        assert abs(dist.total - 1) < 1e-9
        assert np.all(dist.probs >= -1e-12)


@pytest.mark.parametrize("theory", THEORIES)
def test_order_independence(theory):
    for seed in range(10):
        c = random_closed_circuit(theory, seed, max_nodes=6)
        base = evaluate(c).distribution.probs
        for k in range(3):
            order = random_topological_order(c, 100 * seed + k)
            assert c.is_topological(order)
            np.testing.assert_allclose(evaluate(c, order).distribution.probs, base, atol=1e-12)


def test_bad_order_rejected():
    c = chain(Test.single(named_state("quantum", "plus_state")), Z_MEASURE)
    with pytest.raises(CycleDetected):
        evaluate(c, (1, 0))


@pytest.mark.parametrize("theory", THEORIES)
def test_marginal_consistency(theory):
    for seed in range(10):
        c = random_closed_circuit(theory, seed)
        joint = evaluate(c).distribution.probs.reshape([len(n.labels) for n in c.nodes])
        for i, node in enumerate(c.nodes):
            coarse = c.replace_node(i, node.test.coarse_grained())
            marg = evaluate(coarse).distribution.probs.reshape([len(n.labels) for n in coarse.nodes])
            np.testing.assert_allclose(joint.sum(axis=i, keepdims=True), marg, atol=1e-12)


def test_entries_match_single_branch_circuits():
    c = random_closed_circuit("quantum", 7)
    dist = evaluate(c).distribution
    for k, label in enumerate(dist.labels):
        branches = [c.nodes[i].labels.index(lab) for i, lab in enumerate(label)]
        value = evaluate_open(c, branches).matrix
        assert value.shape == (1, 1)
        assert abs(value[0, 0] - dist.probs[k]) < 1e-12


def test_contraction_plan_linear_chain():
    a, b = random_test(QUBIT, QUBIT, 2, 0), random_test(QUBIT, QUBIT, 2, 1)
    c = chain(Test.single(named_state("quantum", "plus_state")), a, b, Z_MEASURE)
    assert contraction_plan(c) == (0, 1, 2, 3)
    r = random_closed_circuit("classical", 3)
    assert r.is_topological(contraction_plan(r))


def test_evaluate_open_chain_and_ladder():
    a, b = random_test(QUBIT, QUBIT, 2, 0), random_test(QUBIT, QUBIT, 3, 1)
    seq = evaluate_open(chain(a, b), [1, 2])
    np.testing.assert_allclose(seq.matrix, sequential_compose(a.branches[1], b.branches[2]).matrix, atol=1e-12)
    par = evaluate_open(side_by_side(a, b), [0, "1"])
    np.testing.assert_allclose(par.matrix, parallel_compose(a.branches[0], b.branches[1]).matrix, atol=1e-12)
    with pytest.raises(BranchOutOfRange):
        evaluate_open(chain(a, b), [0, 5])
    with pytest.raises(BranchOutOfRange):
        evaluate_open(chain(a, b), [0])
    with pytest.raises(BranchOutOfRange):
        evaluate_open(chain(a, b), [0, "x"])


def test_open_evaluation_commutes_with_closing():
    rho = random_state(QUBIT, 3)
    channel = random_test(QUBIT, QUBIT, 1, 4)
    absorbed = evaluate_open(chain(Test.single(rho), channel), [0, 0]).as_state()
    rng = np.random.default_rng(0)
    for _ in range(10):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m = g @ g.conj().T
        m /= np.linalg.eigvalsh(m).max()
        e = effect_from_operator(QUBIT, m)
        closed = evaluate(chain(Test.single(rho), channel, Test.single(e))).scalar
        assert abs(pairing(e, absorbed) - closed) < 1e-12


def test_coarse_grained_node_matches_coarse_grain():
    t = random_test(QUBIT, QUBIT, 3, 5)
    whole = evaluate_open(single(t.coarse_grained()), [0])
    np.testing.assert_allclose(whole.matrix, coarse_grain(t.branches).matrix, atol=1e-15)


def test_replace_node_type_checked():
    c = chain(Test.single(named_state("quantum", "plus_state")), Z_MEASURE)
    with pytest.raises(TypeMismatch):
        c.replace_node(1, random_test(QUBIT, QUBIT, 1, 0))
