"""Result types returned by the checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from optheory.core import State, SystemRef, Transformation

HOLDS = "holds_on_samples"
FAILS = "fails"
IMPOSSIBLE = "impossible"
CERTIFIED = "certified"
VERDICTS = (HOLDS, FAILS, IMPOSSIBLE, CERTIFIED)


@dataclass
class CheckReport:
    axiom: str
    theory: str
    verdict: str
    witness: dict | None = None
    samples: int = 0
    seed: int | None = None
    tolerance: float = 1e-9
    deviation: float | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict in (FAILS, IMPOSSIBLE) and not self.witness:
            raise ValueError(f"a {self.verdict} verdict needs a witness")

    @property
    def ok(self) -> bool:
        return self.verdict in (HOLDS, CERTIFIED)


class PurityVerdict(NamedTuple):
    pure: bool
    witness: Any = None


class EntanglementVerdict(NamedTuple):
    entangled: bool
    witness: Any = None


@dataclass
class PurificationResult:
    system: SystemRef
    environment: SystemRef | None = None
    pure_state: State | None = None
    impossible: bool = False
    bound: int | None = None
    searched: int = 0

    @property
    def found(self) -> bool:
        return self.pure_state is not None


@dataclass
class Dilation:
    environment: SystemRef
    unitary: Transformation
    env_state: State
    residual: float
    kraus_rank: int


@dataclass
class InfeasibilityCertificate:
    """Farkas multipliers for ``A_eq x = b_eq, A_ub x <= b_ub, |x| <= bound``.

    ``rows`` re-derives the constraint system from the stored problem data
    so the certificate can be checked without trusting the solver.
    """

    y_eq: np.ndarray
    y_ub: np.ndarray
    bound: float
    margin: float
    problem: Any = None

    def validate(self) -> float:
        """Recompute the margin from scratch; positive means infeasible."""
        a_eq, b_eq, a_ub, b_ub = self.problem.rows()
        return farkas_margin(self.y_eq, self.y_ub, a_eq, b_eq, a_ub, b_ub, self.bound)


def farkas_margin(y_eq, y_ub, a_eq, b_eq, a_ub, b_ub, bound) -> float:
    """Lower bound on how badly any ``x`` with ``|x| <= bound`` misses the system.

    For feasible ``x``: ``(A^T y) . x <= b . y``.  With ``r = A^T y`` the
    left side is at least ``-|r|_1 * bound``, so ``-b.y - |r|_1 * bound > 0``
    rules out every feasible point.
    """
    y_ub = np.clip(np.asarray(y_ub, dtype=float), 0.0, None)
    y_eq = np.asarray(y_eq, dtype=float)
    r = a_eq.T @ y_eq + a_ub.T @ y_ub
    return float(-(b_eq @ y_eq + b_ub @ y_ub) - np.abs(r).sum() * bound)


@dataclass
class CloningVerdict:
    theory: str
    system: SystemRef
    feasible: bool
    cloner: Transformation | None = None
    residuals: list = field(default_factory=list)
    certificate: InfeasibilityCertificate | None = None
    method: str = ""
    iterations: int = 0
