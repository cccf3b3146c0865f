import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optheory.axioms import purify_state
from optheory.circuit import evaluate, random_closed_circuit
from optheory.dsl import format_program, load, parse, parse_with_errors, to_text, tokenize
from optheory.dsl.ast import CheckStmt, CPar, CRef, CSeq, Matrix, Num, SystemDecl, TestDecl
from optheory.dsl.generate import random_program
from optheory.errors import DSLError
from optheory.theories import named_state
from optheory.theories.quantum import density_matrix

HEADER = """
system A : quantum(2)
system AA = A * A
"""

SINGLET_PROGRAM = HEADER + """
state psi on AA = singlet   # the two-qubit singlet
test z : A -> trivial = {
  [[1, 0], [0, 0]],
  [[0, 0], [0, 1]]
}
circuit c = psi >> (z & z)
eval c
"""


def errors_of(text):
    with pytest.raises(DSLError) as info:
        load(text)
    return info.value.errors


def test_tokenizer_kinds():
    tokens, errors = tokenize("state s on A = [[1+2.5i, -3e-2i]] # note")
    assert not errors
    kinds = [t.kind for t in tokens]
    assert kinds.count("imag") == 2
    assert kinds[-1] == "eof"


def test_three_node_chain():
    program = HEADER + """
state rho on A = plus_state
map C : A -> A = [[0, 1], [1, 0]]
effect b on A = [[1, 0], [0, 0]]
circuit c = rho >> C >> b
"""
    lowered = load(program)
    c = lowered.circuits["c"]
    assert len(c.nodes) == 3 and c.is_closed
    assert abs(evaluate(c).scalar - 0.5) < 1e-12
    body = parse(program).statements[-1].body
    assert body == CSeq((CRef("rho"), CRef("C"), CRef("b")))


def test_parallel_preparations_into_joint_measurement():
    program = HEADER + """
state p on A = computational(0)
state q on A = computational(1)
test m : AA -> trivial = {
  [[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],
  [[0,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]
}
circuit c = (p & q) >> m
"""
    c = load(program).circuits["c"]
    assert parse(program).statements[-1].body == CSeq((CPar((CRef("p"), CRef("q"))), CRef("m")))
    np.testing.assert_allclose(evaluate(c).distribution.probs, [0, 0, 0, 1][:1] + [1], atol=1e-12)


def test_parallel_binds_tighter():
    body = parse("circuit c = a & b >> d & e").statements[0].body
    assert body == CSeq((CPar((CRef("a"), CRef("b"))), CPar((CRef("d"), CRef("e")))))


def test_singlet_program_evaluates():
    lowered = load(SINGLET_PROGRAM)
    (item,) = lowered.items
    np.testing.assert_allclose(evaluate(item.circuit).distribution.probs, [0, 0.5, 0.5, 0], atol=1e-12)


def test_bipartite_builtin_on_qubit_is_one_resolve_error():
    errors = errors_of("system A : quantum(2)  state s on A = singlet")
    assert len(errors) == 1
    assert errors[0].kind == "resolve"


def test_maximally_mixed_builtin():
    s = load(HEADER + "state m on A = maximally_mixed(2)\n").objects["m"]
    np.testing.assert_allclose(density_matrix(s), np.eye(2) / 2, atol=1e-12)


def test_negative_probability_is_type_error_with_span():
    text = "system B : classical(2)\nstate s on B = [[1.5, -0.5]]\n"
    (error,) = errors_of(text)
    assert error.kind == "type"
    assert text[error.span.offset:error.span.offset + error.span.length] == "[[1.5, -0.5]]"
    assert (error.span.line, error.span.column) == (2, 16)


def test_check_on_circuit_is_resolve_error():
    (error,) = errors_of(SINGLET_PROGRAM + "check no_signalling on c\n")
    assert error.kind == "resolve"
    assert "circuit" in error.message


def test_complex_entries_only_in_quantum():
    (error,) = errors_of("system B : classical(2)\nstate s on B = [[1+0i, 0]]\n")
    assert error.kind == "type"
    s = load(HEADER + "state y on A = [[0.5, -0.5i], [0.5i, 0.5]]\n").objects["y"]
    np.testing.assert_allclose(density_matrix(s), [[0.5, -0.5j], [0.5j, 0.5]], atol=1e-12)


def test_quantum_maps_as_kraus_or_choi():
    kraus = load(HEADER + "map x : A -> A = [[0, 1], [1, 0]]\n").objects["x"]
    choi_text = "[[0,0,0,0],[0,1,1,0],[0,1,1,0],[0,0,0,0]]"
    choi = load(HEADER + f"map x : A -> A = {choi_text}\n").objects["x"]
    np.testing.assert_allclose(kraus.matrix, choi.matrix, atol=1e-12)


def test_multiple_errors_collected_in_order():
    text = "system @ : quantum(2)\nstate x on = 3\nsystem B : classical(2)\neval nothing\n"
    with pytest.raises(DSLError) as info:
        load(text)
    kinds = [e.kind for e in info.value.errors]
    assert kinds[:2] == ["lex", "parse"]
    offsets = [e.span.offset for e in info.value.errors]
    assert offsets == sorted(offsets)


def test_failed_declaration_does_not_cascade():
    text = HEADER + "state s on A = [[2, 0], [0, 0]]\ncircuit c = s >> discard\neval c\n"
    errors = errors_of(text)
    assert len(errors) == 1 and errors[0].kind == "type"


def test_duplicate_and_unknown_names():
    errors = errors_of(HEADER + "state s on A = plus_state\nstate s on A = plus_state\ncircuit c = s >> nowhere\n")
    assert [e.kind for e in errors] == ["resolve", "resolve"]


def test_check_arguments_parse():
    stmt = parse("check no_signalling on psi (z, x | z, x, samples=5)").statements[0]
    assert stmt == CheckStmt("no_signalling", "psi", (("z", "x"), ("z", "x")), (("samples", 5),))
    # a bar before options opens an empty group
    assert parse("check no_signalling on psi (z | samples=5)").statements[0].groups == (("z",), ())
    assert parse("check causality on A").statements[0].groups == ()


def test_canonical_spacing():
    program = parse(SINGLET_PROGRAM)
    text = format_program(program)
    lines = text.splitlines()
    assert lines[0] == "system A : quantum(2)"
    assert lines[3] == "test z : A -> trivial = {"
    assert lines[4].startswith("  [[") and lines[5].startswith("  [[")
    assert lines[6] == "}"
    assert "circuit c = psi >> z & z" in lines
    assert text.endswith("eval c\n")


def test_number_printing_round_trips():
    for x in (0.1, -2.5e-300, 1e22, 1 / 3, -0.0):
        m = Matrix(((Num(x), Num(0.0, x)),))
        stmt = TestDecl("t", "A", "B", (m,))
        back = parse(format_program(parse(format_program(type("P", (), {"statements": (stmt,)})()))))
        assert back.statements[0].branches[0] == m


@pytest.mark.parametrize("seed", range(10))
def test_generated_round_trip(seed):
    program = random_program(seed, 50)
    assert parse(format_program(program)) == program


def test_spans_ignored_by_equality():
    a = parse("system A : quantum(2)").statements[0]
    b = parse("\n\n   system   A:quantum( 2 )").statements[0]
    assert a == b == SystemDecl("A", "quantum", 2)
    assert a.span != b.span


def test_library_objects_print_to_loadable_text():
    for obj in (
        named_state("quantum", "singlet"),
        named_state("classical", "uniform", (3,)),
        named_state("boxworld", "pr_box"),
    ):
        back = load(to_text(obj)).objects["x"]
        np.testing.assert_allclose(back.coords, obj.coords, atol=1e-12)
    witness = purify_state("quantum", named_state("quantum", "maximally_mixed", (2,))).pure_state
    np.testing.assert_allclose(load(to_text(witness)).objects["x"].coords, witness.coords, atol=1e-12)


@pytest.mark.parametrize("theory", ["classical", "quantum", "boxworld"])
def test_circuits_print_and_replay(theory):
    replayed = 0
    for seed in range(10):
        c = random_closed_circuit(theory, seed, max_nodes=5)
        try:
            text = to_text(c)
        except TypeError:
            continue  # wiring that crosses layers has no text form
        lowered = load(text)
        np.testing.assert_allclose(
            evaluate(lowered.circuits["x"]).distribution.probs, evaluate(c).distribution.probs, atol=1e-9
        )
        replayed += 1
    assert replayed >= 3


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("system state :=()[]{},>&*|#-+.0123456789ie\nAqbx")), max_size=80))
def test_error_determinism_and_span_integrity(text):
    prog1, errs1 = parse_with_errors(text)
    prog2, errs2 = parse_with_errors(text)
    assert prog1 == prog2
    assert [(e.kind, e.span, e.message) for e in errs1] == [(e.kind, e.span, e.message) for e in errs2]
    for e in errs1:
        assert 0 <= e.span.offset <= len(text)
        assert e.span.offset + e.span.length <= len(text)
        assert e.span.line >= 1 and e.span.column >= 1
    try:
        load(text)
    except DSLError as exc:
        for e in exc.errors:
            assert 0 <= e.span.offset and e.span.offset + e.span.length <= len(text)
