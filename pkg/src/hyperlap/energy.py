"""Edge spreads, the p-energy and elements of its subdifferential.

For an edge ``e`` the spread is ``f_e(x) = max_e x - min_e x`` and the
energy is ``phi(x) = (1/p) * sum_e w(e) f_e(x)**p``.  An element of the
subdifferential ``L(x)`` picks, for every edge, a probability vector
``lam`` over the vertices attaining the maximum and ``mu`` over those
attaining the minimum, and sums ``w(e) f_e(x)**(p-1) (lam - mu)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotAnOrdinaryGraph
from .hypergraph import Hypergraph

__all__ = [
    "EdgeFace",
    "EdgeCoefficients",
    "SubgradientPoint",
    "default_tol_active",
    "spreads",
    "edge_face",
    "edge_faces",
    "energy",
    "edge_scales",
    "canonical_subgradient",
    "subgradient_from_coefficients",
    "graph_laplacian_check",
]


def default_tol_active(x) -> float:
    """Relative tie tolerance ``1e-9 * (1 + |x|_inf)``."""
    x = np.asarray(x, dtype=float)
    return 1e-9 * (1.0 + (float(np.max(np.abs(x))) if x.size else 0.0))


def _check_potential(G: Hypergraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (G.n,):
        raise ValueError(f"potential has shape {x.shape}, expected ({G.n},)")
    return x


def spreads(G: Hypergraph, x) -> np.ndarray:
    """``f_e(x)`` for every edge, in edge order."""
    x = _check_potential(G, x)
    if G.num_edges == 0:
        return np.zeros(0)
    vals = x[G.flat_vertices]
    return np.maximum.reduceat(vals, G.edge_offsets) - np.minimum.reduceat(vals, G.edge_offsets)


def energy(G: Hypergraph, x, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    f = spreads(G, x)
    return float(np.dot(G.weights, f ** p) / p)


def edge_scales(G: Hypergraph, x, p: float) -> np.ndarray:
    """``w(e) * f_e(x)**(p-1)``; for ``p == 1`` this is ``w(e)`` even on flat edges."""
    f = spreads(G, x)
    return G.weights * np.power(f, p - 1.0)


@dataclass(frozen=True)
class EdgeFace:
    """Active sets of one edge at a potential.

    ``argmax_set`` holds the vertices within ``tol`` of the edge maximum,
    ``argmin_set`` those within ``tol`` of the minimum; both keep the
    vertex order of the edge.  ``spread`` is exact, not rounded by ``tol``.
    """

    edge: int
    spread: float
    argmax_set: tuple[int, ...]
    argmin_set: tuple[int, ...]
    tol: float


def edge_face(G: Hypergraph, x, e: int, tol_active: float | None = None) -> EdgeFace:
    x = _check_potential(G, x)
    tol = default_tol_active(x) if tol_active is None else float(tol_active)
    if tol < 0:
        raise ValueError("tol_active must be >= 0")
    verts = G.edges[e]
    vals = x[list(verts)]
    hi, lo = float(vals.max()), float(vals.min())
    top = tuple(v for v, xv in zip(verts, vals) if xv >= hi - tol)
    bottom = tuple(v for v, xv in zip(verts, vals) if xv <= lo + tol)
    return EdgeFace(e, hi - lo, top, bottom, tol)


def edge_faces(G: Hypergraph, x, tol_active: float | None = None) -> list[EdgeFace]:
    x = _check_potential(G, x)
    tol = default_tol_active(x) if tol_active is None else float(tol_active)
    return [edge_face(G, x, k, tol) for k in range(G.num_edges)]


@dataclass(frozen=True)
class EdgeCoefficients:
    """Convex weights of one edge's term: ``scale * (sum lam_u 1_u - sum mu_v 1_v)``."""

    edge: int
    scale: float
    argmax_set: tuple[int, ...]
    lam: np.ndarray
    argmin_set: tuple[int, ...]
    mu: np.ndarray

    def term(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        np.add.at(out, list(self.argmax_set), self.scale * self.lam)
        np.add.at(out, list(self.argmin_set), -self.scale * self.mu)
        return out


@dataclass(frozen=True)
class SubgradientPoint:
    """A vector of ``L(x)`` together with the per-edge weights that build it."""

    vector: np.ndarray
    coefficients: tuple[EdgeCoefficients, ...] = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        n = self.vector.size
        out = np.zeros(n)
        for c in self.coefficients:
            out += c.term(n)
        return out


def subgradient_from_coefficients(
    G: Hypergraph, x, p: float, weights, tol_active: float | None = None
) -> SubgradientPoint:
    """Assemble a subgradient from per-edge ``(lam, mu)`` pairs.

    ``weights[k]`` gives the weights over the argmax and argmin sets of
    edge ``k`` (in the order returned by :func:`edge_face`).  They are
    checked to be probability vectors.
    """
    x = _check_potential(G, x)
    faces = edge_faces(G, x, tol_active)
    scales = edge_scales(G, x, p)
    coefs = []
    vec = np.zeros(G.n)
    for face, s, (lam, mu) in zip(faces, scales, weights):
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        for name, vals, support in (("lam", lam, face.argmax_set), ("mu", mu, face.argmin_set)):
            if vals.shape != (len(support),):
                raise ValueError(f"edge {face.edge}: {name} has shape {vals.shape}, face has {len(support)} vertices")
            if np.any(vals < 0) or abs(vals.sum() - 1.0) > 1e-12:
                raise ValueError(f"edge {face.edge}: {name} is not a probability vector")
        c = EdgeCoefficients(face.edge, float(s), face.argmax_set, lam, face.argmin_set, mu)
        coefs.append(c)
        vec += c.term(G.n)
    return SubgradientPoint(vec, tuple(coefs))


def canonical_subgradient(G: Hypergraph, x, p: float = 2.0, tol_active: float | None = None) -> SubgradientPoint:
    """Uniform weights on every argmax and argmin set.

    The selection is odd in ``x`` and deterministic.  It is not the
    minimal section in general.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    x = _check_potential(G, x)
    faces = edge_faces(G, x, tol_active)
    weights = [
        (np.full(len(f.argmax_set), 1.0 / len(f.argmax_set)), np.full(len(f.argmin_set), 1.0 / len(f.argmin_set)))
        for f in faces
    ]
    return subgradient_from_coefficients(G, x, p, weights, tol_active)


def graph_laplacian_check(G: Hypergraph, x, p: float = 2.0) -> np.ndarray:
    """``(D - A) x`` from the weighted degree and adjacency matrices.

    Only defined for ordinary graphs (every edge has two vertices) and
    ``p == 2``.  Parallel edges add their weights.
    """
    if p != 2:
        raise ValueError("the matrix form only holds for p = 2")
    if not G.is_ordinary:
        bad = next(k for k, e in enumerate(G.edges) if len(e) != 2)
        raise NotAnOrdinaryGraph(f"edge {bad} has {len(G.edges[bad])} vertices", edge=bad)
    x = _check_potential(G, x)
    A = np.zeros((G.n, G.n))
    for (u, v), w in zip(G.edges, G.weights):
        A[u, v] += w
        A[v, u] += w
    D = np.diag(A.sum(axis=1))
    return (D - A) @ x
