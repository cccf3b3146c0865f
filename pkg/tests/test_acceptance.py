"""End-to-end acceptance criteria.

Each test prints one ``PASS``/``FAIL`` line with its runtime, then asserts.
Run with ``pytest -s tests/test_acceptance.py`` to see the lines inline;
without ``-s`` they still appear because output capture is lifted for them.
"""

import io
import itertools
import json
import re
import time

import numpy as np
import pytest

from optheory.axioms import (
    check_causality,
    check_no_signalling,
    check_purity_preservation,
    classical_dilation_search,
    entanglement_existence,
    is_pure_state,
    is_pure_transformation,
    no_cloning_check,
    purify_state,
)
from optheory.axioms.report import CERTIFIED, FAILS, HOLDS, IMPOSSIBLE
from optheory.circuit import evaluate, random_closed_circuit, random_topological_order, side_by_side
from optheory.cli import demo, run
from optheory.core import Effect, State, Test, Transformation
from optheory.dsl import format_program, parse
from optheory.dsl.generate import random_program
from optheory.theories import BOXWORLD, make_system, named_state, reversible_sample
from optheory.theories.quantum import effect_from_operator, kraus_to_transformation

THEORIES = ("classical", "quantum", "boxworld")
QUBIT = make_system("quantum", 2)


@pytest.fixture
def announce(capsys):
    def emit(number, title, ok, elapsed, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} ({elapsed:.2f} s){' ' + detail if detail else ''}"
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def qubit_basis_tests():
    z = Test([effect_from_operator(QUBIT, np.diag(v)) for v in ([1.0, 0.0], [0.0, 1.0])])
    plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)
    x = Test([effect_from_operator(QUBIT, np.outer(v, v)) for v in (plus, minus)])
    return [z, x]


def test_criterion_01_singlet_purification(announce):
    start = time.perf_counter()
    report = demo("singlet-purification")
    elapsed = time.perf_counter() - start
    marginal, purified, uniqueness = report.items
    probs = np.array([d["p"] for d in marginal.distribution])
    marginal_dev = float(np.max(np.abs(probs - 0.5)))
    ok = report.ok and marginal_dev < 1e-12 and purified.deviation < 1e-9 and elapsed < 1.0
    announce(1, "singlet purification demo", ok, elapsed, f"marginal dev {marginal_dev:.1e}, round trip {purified.deviation:.1e}")
    assert marginal_dev < 1e-12
    assert purified.deviation < 1e-9
    assert uniqueness.verdict == CERTIFIED
    assert elapsed < 1.0


def test_criterion_02_classical_impossibility(announce):
    start = time.perf_counter()
    result = purify_state("classical", named_state("classical", "uniform", (2,)), max_env=8)
    coin = np.full((2, 2), 0.5)
    mixed = classical_dilation_search(coin, max_env=8, mixed_env=True)
    elapsed = time.perf_counter() - start
    w = mixed.witness
    # replay the construction: permute A x E, then discard E
    joint = np.kron(np.eye(2), w["env_state"].coords[:, None])
    channel = np.kron(np.eye(2), np.ones((1, w["env_size"]))) @ w["permutation"].matrix @ joint
    replay_dev = float(np.max(np.abs(channel - coin)))
    ok = (
        result.impossible
        and result.bound == 8
        and mixed.verdict == CERTIFIED
        and w["env_size"] == 2
        and replay_dev == 0.0
        and elapsed < 5.0
    )
    announce(2, "classical purification impossible, mixed environment suffices", ok, elapsed, f"searched {result.searched}")
    assert result.impossible and result.bound == 8
    assert mixed.verdict == CERTIFIED and w["env_size"] == 2
    assert replay_dev == 0.0
    assert elapsed < 5.0


def test_criterion_03_no_cloning(announce):
    start = time.perf_counter()
    probes = [named_state("quantum", "computational", (0,)), named_state("quantum", "plus_state")]
    quantum = no_cloning_check("quantum", QUBIT, probes)
    trit = make_system("classical", 3)
    masses = [named_state("classical", "point_mass", (k, 3)) for k in range(3)]
    classical = no_cloning_check("classical", trit, masses)
    elapsed = time.perf_counter() - start
    margin = quantum.certificate.validate() if quantum.certificate is not None else -np.inf
    residual = max(classical.residuals) if classical.feasible else np.inf
    ok = (not quantum.feasible) and margin > 1e-8 and classical.feasible and residual == 0.0 and elapsed < 5.0
    announce(3, "no-cloning", ok, elapsed, f"quantum margin {margin:.3g}, classical residual {residual}")
    assert not quantum.feasible and margin > 1e-8
    assert classical.feasible and residual == 0.0
    assert elapsed < 5.0


def test_criterion_04_normalization_and_product(announce):
    start = time.perf_counter()
    worst_norm, worst_product = 0.0, 0.0
    for theory in THEORIES:
        for seed in range(100):
            probs = evaluate(random_closed_circuit(theory, seed)).distribution.probs
            worst_norm = max(worst_norm, abs(probs.sum() - 1))
    for k in range(50):
        theory = THEORIES[k % 3]
        c1, c2 = random_closed_circuit(theory, 5000 + k, 4), random_closed_circuit(theory, 6000 + k, 4)
        p1, p2 = evaluate(c1).distribution.probs, evaluate(c2).distribution.probs
        joint = evaluate(side_by_side(c1, c2)).distribution.probs
        worst_product = max(worst_product, float(np.max(np.abs(joint - np.outer(p1, p2).ravel()))))
    elapsed = time.perf_counter() - start
    ok = worst_norm < 1e-9 and worst_product < 1e-12
    announce(4, "normalization and product rule", ok, elapsed, f"norm {worst_norm:.1e}, product {worst_product:.1e}")
    assert worst_norm < 1e-9
    assert worst_product < 1e-12


def test_criterion_05_causality_and_no_signalling(announce):
    start = time.perf_counter()
    causal = {t: check_causality(t, make_system(t, 3 if t == "classical" else 2), 50, 0) for t in ("quantum", "classical")}
    tests = qubit_basis_tests()
    singlet = check_no_signalling("quantum", named_state("quantum", "singlet"), tests, tests)
    gbit = make_system("boxworld")
    box_tests = [Test([Effect(gbit, row) for row in m]) for m in BOXWORLD.measurements(gbit)]
    pr = check_no_signalling("boxworld", named_state("boxworld", "pr_box"), box_tests, box_tests)
    elapsed = time.perf_counter() - start
    ok = (
        all(r.verdict == HOLDS and r.deviation < 1e-9 for r in causal.values())
        and singlet.verdict == HOLDS
        and singlet.deviation < 1e-12
        and pr.verdict == HOLDS
        and pr.deviation < 1e-12
    )
    announce(5, "causality and no-signalling", ok, elapsed, f"singlet {singlet.deviation:.1e}, PR {pr.deviation:.1e}")
    for r in causal.values():
        assert r.verdict == HOLDS and r.deviation < 1e-9
    assert singlet.deviation < 1e-12 and pr.deviation < 1e-12


def test_criterion_06_purity_preservation(announce):
    start = time.perf_counter()
    reports = {t: check_purity_preservation(t, n_samples=100, seed=0) for t in THEORIES}
    dephasing = kraus_to_transformation([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], QUBIT, QUBIT)
    unitary = reversible_sample(QUBIT, 1)
    planted_q = check_purity_preservation("quantum", pairs=[(unitary, unitary), (dephasing, unitary)])
    bit = make_system("classical", 2)
    flip_half = Transformation(bit, bit, [[0.5, 0], [0, 0.5]])
    single = Transformation(bit, bit, [[0, 1], [0, 0]])
    planted_c = check_purity_preservation("classical", pairs=[(single, single), (single, flip_half)])
    elapsed = time.perf_counter() - start
    ok = (
        all(r.verdict == HOLDS and r.samples == 100 for r in reports.values())
        and planted_q.verdict == FAILS
        and planted_c.verdict == FAILS
        and not is_pure_transformation("quantum", planted_q.witness["result"])
    )
    announce(6, "purity preservation and planted fixtures", ok, elapsed)
    for r in reports.values():
        assert r.verdict == HOLDS and r.samples == 100
    assert planted_q.verdict == FAILS and planted_c.verdict == FAILS


def test_criterion_07_entanglement(announce):
    start = time.perf_counter()
    quantum = entanglement_existence("quantum", QUBIT)
    classical = entanglement_existence("classical", make_system("classical", 2), max_partner=8)
    elapsed = time.perf_counter() - start
    purity = quantum.witness["marginal_purity"] if quantum.verdict == CERTIFIED else np.inf
    ok = quantum.verdict == CERTIFIED and purity <= 0.5 + 1e-9 and classical.verdict == IMPOSSIBLE
    announce(7, "entanglement", ok, elapsed, f"marginal purity {purity:.12g}")
    assert quantum.verdict == CERTIFIED and purity <= 0.5 + 1e-9
    assert classical.verdict == IMPOSSIBLE and classical.witness["bound"] == 8


def _decomposition_found(p, step):
    """Search grid directions e_i - e_j for p = (p + v)/2 + (p - v)/2 inside the simplex."""
    d = len(p)
    for i, j in itertools.permutations(range(d), 2):
        v = np.zeros(d)
        v[i], v[j] = step, -step
        if np.all(p + v >= -1e-12) and np.all(p - v >= -1e-12):
            return True
    return False


def test_criterion_08_lp_matches_brute_force(announce):
    start = time.perf_counter()
    step = 0.05
    n = 20
    checked, disagreements = 0, []
    for d in range(1, 5):
        system = make_system("classical", d)
        for counts in itertools.product(range(n + 1), repeat=d):
            if sum(counts) != n:
                continue
            p = np.array(counts) / n
            lp_mixed = not is_pure_state("classical", State(system, p)).pure
            if lp_mixed != _decomposition_found(p, step):
                disagreements.append(p)
            checked += 1
    elapsed = time.perf_counter() - start
    ok = not disagreements
    announce(8, "LP extremality vs brute force", ok, elapsed, f"{checked} grid states, {len(disagreements)} disagreements")
    assert checked == 1 + 21 + 231 + 1771
    assert not disagreements


def test_criterion_09_round_trip_and_order(announce):
    start = time.perf_counter()
    bad_programs = [seed for seed in range(200) if parse(format_program(random_program(seed))) != random_program(seed)]
    worst = 0.0
    for theory in THEORIES:
        for seed in range(30):
            c = random_closed_circuit(theory, seed)
            base = evaluate(c).distribution.probs
            for k in range(3):
                order = random_topological_order(c, 1000 * seed + k)
                worst = max(worst, float(np.max(np.abs(evaluate(c, order).distribution.probs - base))))
    elapsed = time.perf_counter() - start
    ok = not bad_programs and worst < 1e-12
    announce(9, "DSL round trip and order independence", ok, elapsed, f"order dev {worst:.1e}")
    assert not bad_programs
    assert worst < 1e-12


CLI_RUNS = [
    ("check", "causality", "--theory", "quantum", "--seed", "11", "--samples", "20"),
    ("check", "purity-preservation", "--theory", "boxworld", "--seed", "3", "--samples", "20"),
    ("check", "no-cloning", "--theory", "quantum"),
    ("check", "purification", "--theory", "classical"),
    ("demo", "singlet-purification"),
    ("demo", "classical-impossibility"),
]


def _json_without_ms(argv):
    out = io.StringIO()
    run(list(argv) + ["--format", "json"], out, io.StringIO())
    return re.sub(r'"ms": [0-9.eE+-]+', '"ms": 0', out.getvalue()).encode()


def test_criterion_10_cli_determinism(announce):
    start = time.perf_counter()
    mismatched = [argv for argv in CLI_RUNS if _json_without_ms(argv) != _json_without_ms(argv)]
    parsed = [json.loads(_json_without_ms(argv)) for argv in CLI_RUNS]
    elapsed = time.perf_counter() - start
    ok = not mismatched and all(p["items"] for p in parsed)
    announce(10, "CLI JSON determinism", ok, elapsed, f"{len(CLI_RUNS)} commands")
    assert not mismatched
