"""Causality (no signalling from the future) and no signalling across space."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from optheory.axioms.purity import default_system, resolve_theory
from optheory.axioms.report import FAILS, HOLDS, CheckReport
from optheory.circuit import chain, evaluate
from optheory.core import DEFAULT_TOL, Effect, State, SystemRef, Test, coarse_grain, deterministic_effect, trivial
from optheory.errors import TypeMismatch
from optheory.theories.base import rng_from_seed


def _prep_marginal(prep: Test, downstream: Sequence[Test]) -> np.ndarray:
    probs = evaluate(chain(prep, *downstream)).distribution.probs
    return probs.reshape(len(prep), -1).sum(axis=1)


def check_causality(
    theory,
    system: SystemRef | None = None,
    n_samples: int = 50,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Sample preparation tests and pairs of downstream experiments; the
    preparation's outcome statistics must not depend on the later choice.

    Every sampled downstream experiment is also coarse-grained into an
    effect, and all of these must coincide: a causal theory has exactly
    one deterministic effect per system.
    """
    theory = resolve_theory(theory)
    system = system or default_system(theory)
    rng = rng_from_seed(seed)
    none = trivial(theory.id)

    def draw(n_in, n_out, k):
        return theory.random_test(n_in, n_out, k, int(rng.integers(2**63)))

    worst = 0.0
    worst_case = None
    effects: list[Effect] = []
    for i in range(n_samples):
        prep = draw(none, system, int(rng.integers(1, 4)))
        later = []
        for _ in range(2):
            middle = draw(system, system, int(rng.integers(1, 3)))
            final = draw(system, none, int(rng.integers(1, 4)))
            later.append((middle, final))
        marginals = [_prep_marginal(prep, pair) for pair in later]
        dev = float(np.max(np.abs(marginals[0] - marginals[1])))
        if dev > worst:
            worst = dev
            worst_case = {"sample": i, "preparation": prep, "later": later, "marginals": marginals}
        for middle, final in later:
            total = coarse_grain(final.branches).matrix @ coarse_grain(middle.branches).matrix
            effects.append(Effect(system, total[0]))
    distinct = _distinct_effects(effects, tol)
    unit = deterministic_effect(system)
    details = {"system": str(system), "max_marginal_deviation": worst, "deterministic_effects_seen": len(distinct)}
    if len(distinct) > 1 or not distinct[0].allclose(unit, tol):
        witness = {"effects": distinct[:2] if len(distinct) > 1 else [distinct[0], unit]}
        if worst_case is not None:
            witness["marginal_case"] = worst_case
        return CheckReport("causality", theory.id, FAILS, witness, n_samples, seed, tol, worst, details)
    if worst > tol:
        return CheckReport("causality", theory.id, FAILS, worst_case, n_samples, seed, tol, worst, details)
    return CheckReport("causality", theory.id, HOLDS, None, n_samples, seed, tol, worst, details)


def _distinct_effects(effects: list[Effect], tol: float) -> list[Effect]:
    out: list[Effect] = []
    for e in effects:
        if not any(e.allclose(f, tol) for f in out):
            out.append(e)
    return out


def joint_table(state: State, test_a: Test, test_b: Test) -> np.ndarray:
    """``p[i, j]`` for outcomes of ``test_a`` on the first component and
    ``test_b`` on the second."""
    parts = state.system.parts
    if len(parts) != 2:
        raise TypeMismatch(f"no-signalling needs a two-component state, got {state.system}")
    if test_a.input != parts[0] or not test_a.output.is_trivial:
        raise TypeMismatch(f"Alice's test must observe {parts[0]}")
    if test_b.input != parts[1] or not test_b.output.is_trivial:
        raise TypeMismatch(f"Bob's test must observe {parts[1]}")
    table = np.zeros((len(test_a), len(test_b)))
    for i, a in enumerate(test_a.branches):
        for j, b in enumerate(test_b.branches):
            table[i, j] = np.kron(a.matrix[0], b.matrix[0]) @ state.coords
    return table


def check_no_signalling(
    theory,
    state: State,
    tests_a: Sequence[Test],
    tests_b: Sequence[Test],
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Each party's marginal must not depend on the other's choice of test."""
    theory = resolve_theory(theory)
    if not tests_a or not tests_b:
        raise TypeMismatch("each party needs at least one test")
    tables = {
        (x, y): joint_table(state, ta, tb) for (x, ta), (y, tb) in itertools.product(enumerate(tests_a), enumerate(tests_b))
    }
    worst, witness = 0.0, None
    for x in range(len(tests_a)):
        for y1, y2 in itertools.combinations(range(len(tests_b)), 2):
            m1, m2 = tables[x, y1].sum(axis=1), tables[x, y2].sum(axis=1)
            dev = float(np.max(np.abs(m1 - m2)))
            if dev > worst:
                worst, witness = dev, {"party": "A", "test": x, "other_choices": [y1, y2], "marginals": [m1, m2]}
    for y in range(len(tests_b)):
        for x1, x2 in itertools.combinations(range(len(tests_a)), 2):
            m1, m2 = tables[x1, y].sum(axis=0), tables[x2, y].sum(axis=0)
            dev = float(np.max(np.abs(m1 - m2)))
            if dev > worst:
                worst, witness = dev, {"party": "B", "test": y, "other_choices": [x1, x2], "marginals": [m1, m2]}
    n = len(tables)
    details = {"tables": {f"{x},{y}": t for (x, y), t in tables.items()}}
    if worst > tol:
        witness["state"] = state
        return CheckReport("no-signalling", theory.id, FAILS, witness, n, None, tol, worst, details)
    return CheckReport("no-signalling", theory.id, HOLDS, None, n, None, tol, worst, details)
