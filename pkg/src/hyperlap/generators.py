"""Seeded random instances for property checks."""

from __future__ import annotations

import numpy as np

from .energy import edge_faces, subgradient_from_coefficients
from .hypergraph import Hypergraph
from .projection import FaceProduct

__all__ = [
    "random_hypergraph",
    "random_ordinary_graph",
    "random_potential",
    "random_selection",
    "random_face_product",
]


def random_hypergraph(
    rng: np.random.Generator,
    n: int | None = None,
    num_edges: int | None = None,
    max_edge: int = 4,
    integer_weights: bool = False,
) -> Hypergraph:
    """Small hypergraph; components, isolated vertices and repeated edges all occur."""
    n = int(rng.integers(2, 8)) if n is None else n
    m = int(rng.integers(1, 6)) if num_edges is None else num_edges
    edges = []
    for _ in range(m):
        size = int(rng.integers(2, min(n, max_edge) + 1))
        edges.append(rng.choice(n, size=size, replace=False).tolist())
    if integer_weights:
        weights = rng.integers(1, 4, size=m).astype(float)
    else:
        weights = rng.uniform(0.2, 3.0, size=m)
    return Hypergraph(n, edges, weights)


def random_ordinary_graph(rng: np.random.Generator, n: int | None = None, num_edges: int | None = None) -> Hypergraph:
    """Two-vertex edges with integer weights."""
    n = int(rng.integers(2, 9)) if n is None else n
    m = int(rng.integers(1, 2 * n + 1)) if num_edges is None else num_edges
    edges = [rng.choice(n, size=2, replace=False).tolist() for _ in range(m)]
    return Hypergraph(n, edges, rng.integers(1, 5, size=m).astype(float))


def random_potential(rng: np.random.Generator, n: int, ties: bool | None = None, scale: float = 2.0) -> np.ndarray:
    """Gaussian values, or small integers (many exact ties) when ``ties`` is set."""
    ties = bool(rng.integers(2)) if ties is None else ties
    if ties:
        return rng.integers(-2, 3, size=n).astype(float)
    return scale * rng.standard_normal(n)


def random_selection(rng: np.random.Generator, G: Hypergraph, x, p: float, tol_active=None):
    """An arbitrary element of ``L(x)`` with Dirichlet weights on each face."""
    faces = edge_faces(G, x, tol_active)
    weights = [(rng.dirichlet(np.ones(len(f.argmax_set))), rng.dirichlet(np.ones(len(f.argmin_set)))) for f in faces]
    # renormalise so the sums are exactly 1 within the validator's tolerance
    weights = [(a / a.sum(), b / b.sum()) for a, b in weights]
    return subgradient_from_coefficients(G, x, p, weights, tol_active)


def random_face_product(rng: np.random.Generator, max_terms: int = 3, max_set: int = 3, max_free: int = 4) -> FaceProduct:
    """Face product with at most ``max_free`` free barycentric coordinates in total."""
    while True:
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, max_terms + 1))
        tops, bottoms = [], []
        for _ in range(k):
            tops.append(tuple(rng.choice(n, size=int(rng.integers(1, min(max_set, n) + 1)), replace=False).tolist()))
            bottoms.append(tuple(rng.choice(n, size=int(rng.integers(1, min(max_set, n) + 1)), replace=False).tolist()))
        free = sum(len(a) - 1 + len(b) - 1 for a, b in zip(tops, bottoms))
        if free <= max_free:
            break
    scales = rng.uniform(0.1, 3.0, size=k)
    offset = rng.standard_normal(n) if rng.integers(2) else None
    return FaceProduct(n, scales, tuple(tops), tuple(bottoms), offset=offset)
