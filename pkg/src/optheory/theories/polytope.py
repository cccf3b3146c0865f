"""Polytope state spaces: vertex enumeration, membership and extremality by LP."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

LP_MARGIN = 1e-8


def enumerate_cone_section(facets: np.ndarray, unit: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vertices of ``{x : facets @ x >= 0, unit @ x == 1}`` by brute force.

    Every vertex is the unique solution of ``dim - 1`` tight facet rows
    together with the normalization row; all such subsystems are solved and
    the feasible solutions deduplicated.  Rows are returned sorted
    lexicographically so the list is reproducible.
    """
    facets = np.asarray(facets, dtype=float)
    unit = np.asarray(unit, dtype=float)
    dim = facets.shape[1]
    found: list[np.ndarray] = []
    for rows in itertools.combinations(range(facets.shape[0]), dim - 1):
        a = np.vstack([facets[list(rows)], unit])
        if abs(np.linalg.det(a)) < 1e-10:
            continue
        b = np.zeros(dim)
        b[-1] = 1.0
        x = np.linalg.solve(a, b)
        if np.min(facets @ x) < -tol:
            continue
        if not any(np.max(np.abs(x - v)) < 1e-7 for v in found):
            found.append(x)
    out = np.array(found)
    out[np.abs(out) < 1e-12] = 0.0
    order = np.lexsort(out.T[::-1])
    return out[order]


def convex_weights(point: np.ndarray, vertices: np.ndarray) -> np.ndarray | None:
    """Convex weights expressing ``point`` over ``vertices``, or ``None``."""
    vertices = np.asarray(vertices, dtype=float)
    k = vertices.shape[0]
    if k == 0:
        return None
    a_eq = np.vstack([vertices.T, np.ones((1, k))])
    b_eq = np.concatenate([np.asarray(point, dtype=float), [1.0]])
    res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    if res.status != 0:
        return None
    w = np.clip(res.x, 0.0, None)
    if np.max(np.abs(vertices.T @ w - point)) > LP_MARGIN or abs(w.sum() - 1) > LP_MARGIN:
        return None
    return w


def extremality_witness(point: np.ndarray, vertices: np.ndarray, tol: float = 1e-9):
    """Decide whether ``point`` is an extreme point of ``conv(vertices)``.

    Returns ``(True, None)`` for extreme points and ``(False, weights)``
    otherwise, where ``weights`` expresses ``point`` as a convex combination
    of vertices different from ``point`` (indexed like ``vertices``).
    """
    vertices = np.asarray(vertices, dtype=float)
    point = np.asarray(point, dtype=float)
    others = [i for i, v in enumerate(vertices) if np.max(np.abs(v - point)) > tol]
    w = convex_weights(point, vertices[others])
    if w is None:
        return True, None
    full = np.zeros(len(vertices))
    full[others] = w
    return False, full


def is_extreme_ray(matrix: np.ndarray, in_rays: np.ndarray, out_facets: np.ndarray, tol: float = 1e-9) -> bool:
    """Extremality of a map in the cone of maps sending ``in_rays`` into the
    cone cut out by ``out_facets``.

    A nonzero point of a polyhedral cone spans an extreme ray iff its
    active constraints have rank ``dim - 1``.  The constraint for input ray
    ``v`` and output facet ``f`` is ``f @ T @ v >= 0``, a row
    ``kron(f, v)`` against ``T`` flattened row-major.
    """
    matrix = np.asarray(matrix, dtype=float)
    if np.max(np.abs(matrix)) <= tol:
        return False
    out_facets, in_rays = np.atleast_2d(out_facets), np.atleast_2d(in_rays)
    rows = np.einsum("fi,vj->fvij", out_facets, in_rays).reshape(-1, out_facets.shape[1] * in_rays.shape[1])
    values = rows @ matrix.ravel()
    scale = max(1.0, float(np.max(np.abs(matrix))))
    active = rows[np.abs(values) <= tol * scale]
    if active.size == 0:
        return matrix.size == 1
    return int(np.linalg.matrix_rank(active, tol=1e-9)) == matrix.size - 1


@dataclass(frozen=True, eq=False)
class PolytopeStateSpace:
    """Normalized state space given by its vertex list (and, optionally, the
    facet functionals of its cone)."""

    vertices: np.ndarray
    facets: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def affine_dimension(self) -> int:
        if len(self.vertices) <= 1:
            return 0
        diffs = self.vertices[1:] - self.vertices[0]
        return int(np.linalg.matrix_rank(diffs, tol=1e-9))

    def is_minimal(self) -> bool:
        """No vertex is a convex combination of the others (checked by LP)."""
        for i, v in enumerate(self.vertices):
            others = np.delete(self.vertices, i, axis=0)
            if convex_weights(v, others) is not None:
                return False
        return True

    def contains(self, point: np.ndarray) -> bool:
        return convex_weights(point, self.vertices) is not None

    def extremality(self, point: np.ndarray, tol: float = 1e-9):
        return extremality_witness(point, self.vertices, tol)
