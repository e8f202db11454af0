"""Weighted hypergraphs, connected components and component averaging.

Vertices are 0-based inside the package.  The text format read and written
here is 1-based::

    # comment
    n 4
    e 1.0 1 2 3 4

Each ``e`` line carries the edge weight followed by its vertex indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyEdge,
    HypergraphError,
    IndexOutOfRange,
    NoEdges,
    NonpositiveWeight,
    SingletonEdge,
)

__all__ = [
    "Hypergraph",
    "ComponentPartition",
    "validate",
    "connected_components",
    "component_average",
    "component_means",
    "poincare_constant",
    "zero_eigenspace_basis",
    "read_hypergraph",
    "write_hypergraph",
    "format_hypergraph",
    "parse_hypergraph",
]


def _normalise_edge(raw: Iterable[int], n: int, k: int) -> tuple[int, ...]:
    seen: dict[int, None] = {}
    for v in raw:
        iv = int(v)
        if iv != v:
            raise IndexOutOfRange(f"edge {k}: vertex index {v!r} is not an integer", edge=k)
        if not 0 <= iv < n:
            raise IndexOutOfRange(
                f"edge {k}: vertex {iv + 1} outside 1..{n}", edge=k
            )
        seen.setdefault(iv, None)
    if not seen:
        raise EmptyEdge(f"edge {k} has no vertices", edge=k)
    if len(seen) < 2:
        raise SingletonEdge(
            f"edge {k} has a single distinct vertex ({next(iter(seen)) + 1})", edge=k
        )
    return tuple(seen)


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """Weighted hypergraph ``(V, E, w)`` with ``V = {0, ..., n-1}``.

    Edges keep the order they were given in; repeated vertices inside an
    edge are collapsed, keeping the first occurrence.  Construction fails
    with a :class:`~hyperlap.errors.HypergraphError` subclass naming the
    offending edge.
    """

    n: int
    edges: tuple[tuple[int, ...], ...]
    weights: np.ndarray = field(repr=False)

    def __init__(self, n: int, edges: Sequence[Iterable[int]], weights: Iterable[float] | None = None):
        if int(n) != n or n < 1:
            raise HypergraphError(f"vertex count must be a positive integer, got {n!r}")
        n = int(n)
        edges = [list(e) for e in edges]
        if weights is None:
            w = np.ones(len(edges))
        else:
            w = np.array(list(weights), dtype=float)
        if w.shape != (len(edges),):
            raise HypergraphError(
                f"{len(edges)} edges but {w.size} weights were supplied"
            )
        normal = tuple(_normalise_edge(e, n, k) for k, e in enumerate(edges))
        for k, wk in enumerate(w):
            if not (np.isfinite(wk) and wk > 0):
                raise NonpositiveWeight(f"edge {k} has weight {wk!r}; weights must be > 0", edge=k)
        w.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", normal)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_one_based(cls, n: int, edges: Sequence[Iterable[int]], weights=None) -> "Hypergraph":
        return cls(n, [[v - 1 for v in e] for e in edges], weights)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.edges, self.weights.tobytes()))

    # flattened incidence used by the vectorised edge reductions
    @cached_property
    def flat_vertices(self) -> np.ndarray:
        if not self.edges:
            return np.zeros(0, dtype=np.intp)
        return np.concatenate([np.asarray(e, dtype=np.intp) for e in self.edges])

    @cached_property
    def edge_offsets(self) -> np.ndarray:
        sizes = [len(e) for e in self.edges]
        return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp) if sizes else np.zeros(0, dtype=np.intp)

    @cached_property
    def is_ordinary(self) -> bool:
        return all(len(e) == 2 for e in self.edges)

    @cached_property
    def components(self) -> "ComponentPartition":
        return connected_components(self)


@dataclass(frozen=True, eq=False)
class ComponentPartition:
    """Connected components ``S_1, ..., S_l`` ordered by least vertex index."""

    components: tuple[tuple[int, ...], ...]
    labels: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.components)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.components], dtype=float)

    @cached_property
    def membership(self) -> np.ndarray:
        """0/1 matrix of shape ``(n, l)``."""
        m = np.zeros((self.labels.size, self.count))
        m[np.arange(self.labels.size), self.labels] = 1.0
        return m

    @cached_property
    def leaders(self) -> np.ndarray:
        return np.array([c[0] for c in self.components], dtype=np.intp)

    def indicator(self, k: int) -> np.ndarray:
        out = np.zeros(self.labels.size)
        out[list(self.components[k])] = 1.0
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComponentPartition):
            return NotImplemented
        return self.components == other.components


def validate(raw) -> Hypergraph:
    """Return a validated :class:`Hypergraph` built from ``raw``.

    ``raw`` is anything exposing ``n``, ``edges`` and ``weights`` (0-based),
    or a ``(n, edges, weights)`` triple.
    """
    if isinstance(raw, tuple):
        n, edges, weights = raw
    else:
        n, edges, weights = raw.n, raw.edges, raw.weights
    return Hypergraph(n, edges, weights)


def connected_components(G: Hypergraph) -> ComponentPartition:
    """Components grown from the least vertex not yet visited.

    Isolated vertices become singleton components.
    """
    incident: list[list[int]] = [[] for _ in range(G.n)]
    for k, e in enumerate(G.edges):
        for v in e:
            incident[v].append(k)
    labels = np.full(G.n, -1, dtype=np.intp)
    edge_done = np.zeros(G.num_edges, dtype=bool)
    comps: list[tuple[int, ...]] = []
    for root in range(G.n):
        if labels[root] >= 0:
            continue
        label = len(comps)
        labels[root] = label
        stack = [root]
        members = [root]
        while stack:
            v = stack.pop()
            for k in incident[v]:
                if edge_done[k]:
                    continue
                edge_done[k] = True
                for u in G.edges[k]:
                    if labels[u] < 0:
                        labels[u] = label
                        members.append(u)
                        stack.append(u)
        comps.append(tuple(sorted(members)))
    labels.setflags(write=False)
    return ComponentPartition(tuple(comps), labels)


def component_means(x, P: ComponentPartition) -> np.ndarray:
    """Per-component mean of ``x``, shape ``(l,)`` (or ``(..., l)`` for stacked rows)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != P.labels.size:
        raise ValueError(f"potential has length {x.shape[-1]}, partition covers {P.labels.size} vertices")
    # centring on one member per component makes averaging exact on constants
    ref = x[..., P.leaders]
    return ref + ((x - ref[..., P.labels]) @ P.membership) / P.sizes


def component_average(x, P: ComponentPartition) -> np.ndarray:
    """The averaged vector: each vertex gets the mean of its component."""
    return component_means(x, P)[..., P.labels]


def poincare_constant(G: Hypergraph, P: ComponentPartition | None = None, p: float = 2.0) -> float:
    """``(sum_j #S_j ** (2 - 1/p)) ** p / min_e w(e)``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if G.num_edges == 0:
        raise NoEdges("the Poincare constant needs at least one edge")
    P = G.components if P is None else P
    total = float(np.sum(P.sizes ** (2.0 - 1.0 / p)))
    return total ** p / float(np.min(G.weights))


def zero_eigenspace_basis(P: ComponentPartition) -> list[np.ndarray]:
    """Indicator vectors of the components, one per component."""
    return [P.indicator(k) for k in range(P.count)]


# -- text format -------------------------------------------------------------

def parse_hypergraph(text: str, source: str = "<string>") -> Hypergraph:
    n = None
    edges: list[list[int]] = []
    weights: list[float] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        try:
            if tokens[0] == "n":
                if n is not None or len(tokens) != 2:
                    raise HypergraphError("expected a single 'n <count>' line")
                n = int(tokens[1])
            elif tokens[0] == "e":
                if n is None:
                    raise HypergraphError("'e' line before the 'n' line")
                if len(tokens) < 2:
                    raise HypergraphError("'e' line without a weight")
                weights.append(float(tokens[1]))
                edges.append([int(t) - 1 for t in tokens[2:]])
            else:
                raise HypergraphError(f"unknown record {tokens[0]!r}")
        except HypergraphError as exc:
            raise type(exc)(f"{source}:{lineno}: {exc}", edge=exc.edge) from None
        except ValueError as exc:
            raise HypergraphError(f"{source}:{lineno}: {exc}") from None
    if n is None:
        raise HypergraphError(f"{source}: missing 'n <count>' line")
    return Hypergraph(n, edges, weights)


def format_hypergraph(G: Hypergraph) -> str:
    lines = [f"n {G.n}"]
    for e, w in zip(G.edges, G.weights):
        lines.append("e " + repr(float(w)) + " " + " ".join(str(v + 1) for v in e))
    return "\n".join(lines) + "\n"


def read_hypergraph(path) -> Hypergraph:
    path = Path(path)
    return parse_hypergraph(path.read_text(), source=str(path))


def write_hypergraph(G: Hypergraph, path) -> None:
    Path(path).write_text(format_hypergraph(G))
