"""Minimum-norm points of sums of scaled simplex differences.

A :class:`FaceProduct` is the compact convex set

    offset + sum_e s_e * (conv{1_u : u in U_e} - conv{1_v : v in D_e})

which, with ``U_e``/``D_e`` the argmax/argmin sets of ``x`` on edge ``e``
and ``s_e = w(e) f_e(x)**(p-1)``, is exactly ``L(x)``.  Its extreme points
are indexed by one ``(u_e, v_e)`` choice per edge, so a linear minimisation
oracle is a per-edge argmin/argmax and Wolfe's algorithm applies directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EdgeCoefficients, edge_faces, edge_scales
from .errors import NonConvergence
from .hypergraph import Hypergraph

__all__ = [
    "FaceProduct",
    "MinNormPoint",
    "face_product",
    "min_norm_point",
    "distance_to_face",
    "closest_point",
]


@dataclass(frozen=True)
class FaceProduct:
    n: int
    scales: np.ndarray
    argmax_sets: tuple[tuple[int, ...], ...]
    argmin_sets: tuple[tuple[int, ...], ...]
    edges: tuple[int, ...] = ()
    offset: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=float)
        if not (len(scales) == len(self.argmax_sets) == len(self.argmin_sets)):
            raise ValueError("scales and face sets differ in length")
        if np.any(scales < 0):
            raise ValueError("scales must be nonnegative")
        for s in self.argmax_sets + self.argmin_sets:
            if not s:
                raise ValueError("active sets must be nonempty")
        object.__setattr__(self, "scales", scales)
        if not self.edges:
            object.__setattr__(self, "edges", tuple(range(len(scales))))
        if self.offset is not None:
            object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))

    @property
    def num_terms(self) -> int:
        return len(self.scales)

    def translated(self, shift) -> "FaceProduct":
        """The set ``F + shift``."""
        base = np.zeros(self.n) if self.offset is None else self.offset
        return replace(self, offset=base + np.asarray(shift, dtype=float))

    def scaled(self, t: float) -> "FaceProduct":
        off = None if self.offset is None else t * self.offset
        return replace(self, scales=t * self.scales, offset=off)

    def point(self, choice) -> np.ndarray:
        """Extreme point for one ``(u_e, v_e)`` pair per term."""
        out = np.zeros(self.n) if self.offset is None else self.offset.copy()
        for s, (u, v) in zip(self.scales, choice):
            if u != v:  # a u == v pick is zero; adding and removing s would round
                out[u] += s
                out[v] -= s
        return out

    def centroid(self) -> np.ndarray:
        out = np.zeros(self.n) if self.offset is None else self.offset.copy()
        for s, top, bottom in zip(self.scales, self.argmax_sets, self.argmin_sets):
            # build each term on its own so overlapping sets stay odd under negation
            term = np.zeros(self.n)
            term[list(top)] += s / len(top)
            term[list(bottom)] -= s / len(bottom)
            out += term
        return out

    def extreme_choice(self, direction) -> tuple[tuple[int, int], ...]:
        """Choice minimising ``direction . q`` over extreme points ``q``.

        Ties go to the first vertex in set order, so negating the direction
        and swapping argmax/argmin sets gives the mirrored choice.
        """
        d = np.asarray(direction)
        out = []
        for top, bottom in zip(self.argmax_sets, self.argmin_sets):
            u = top[int(np.argmin(d[list(top)]))]
            v = bottom[int(np.argmax(d[list(bottom)]))]
            out.append((u, v))
        return tuple(out)


def face_product(G: Hypergraph, x, p: float = 2.0, tol_active: float | None = None) -> FaceProduct:
    """``L(x)`` as a :class:`FaceProduct`; edges with zero scale are dropped."""
    faces = edge_faces(G, x, tol_active)
    scales = edge_scales(G, x, p)
    keep = [k for k in range(G.num_edges) if scales[k] > 0]
    return FaceProduct(
        G.n,
        scales[keep],
        tuple(faces[k].argmax_set for k in keep),
        tuple(faces[k].argmin_set for k in keep),
        tuple(keep),
    )


@dataclass(frozen=True)
class MinNormPoint:
    """Result of :func:`min_norm_point`.

    ``corral`` lists the extreme-point choices with positive barycentric
    weight ``weights``; ``coefficients`` folds them into per-term
    probability vectors over the argmax/argmin sets.
    """

    point: np.ndarray
    coefficients: tuple[EdgeCoefficients, ...] = field(repr=False)
    corral: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)
    weights: np.ndarray = field(repr=False)
    gap: float = 0.0
    iterations: int = 0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.point))


def _affine_minimiser(Q: np.ndarray) -> np.ndarray:
    """Barycentric weights of the least-norm point in the affine hull of the rows of ``Q``.

    Works with the Gram matrix of the differences ``q_i - q_0``, which is
    unchanged when all points are negated.
    """
    k = Q.shape[0]
    if k == 1:
        return np.ones(1)
    D = Q[1:] - Q[0]
    gram = D @ D.T
    rhs = -(D @ Q[0])
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return np.concatenate([[1.0 - beta.sum()], beta])


def _fold(F: FaceProduct, corral, weights) -> tuple[EdgeCoefficients, ...]:
    out = []
    for t, (s, top, bottom) in enumerate(zip(F.scales, F.argmax_sets, F.argmin_sets)):
        lam = np.zeros(len(top))
        mu = np.zeros(len(bottom))
        pos_top = {v: i for i, v in enumerate(top)}
        pos_bottom = {v: i for i, v in enumerate(bottom)}
        for choice, a in zip(corral, weights):
            u, v = choice[t]
            lam[pos_top[u]] += a
            mu[pos_bottom[v]] += a
        out.append(EdgeCoefficients(F.edges[t], float(s), top, lam, bottom, mu))
    return tuple(out)


def min_norm_point(F: FaceProduct, tol_opt: float = 1e-10, max_iter: int = 1000) -> MinNormPoint:
    """Least-norm point of ``F`` by Wolfe's algorithm.

    Stops once ``|z|^2 - min_q z.q <= tol_opt / 2`` (so ``|z|^2`` is within
    ``tol_opt`` of the minimum), when the oracle returns a point already
    in the corral, or when the gap is at rounding level.

    Raises
    ------
    NonConvergence
        If ``max_iter`` major cycles pass without meeting a stopping rule.
    """
    if tol_opt <= 0:
        raise ValueError("tol_opt must be > 0")
    if F.num_terms == 0:
        z = np.zeros(F.n) if F.offset is None else F.offset.copy()
        return MinNormPoint(z, (), ((),), np.ones(1), 0.0, 0)

    choice = F.extreme_choice(F.centroid())
    corral = [choice]
    Q = F.point(choice)[None, :]
    lam = np.ones(1)
    z = Q[0].copy()
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        choice = F.extreme_choice(z)
        q = F.point(choice)
        zz = float(z @ z)
        gap = zz - float(z @ q)
        scale = max(zz, float(q @ q), float(np.max(np.einsum("ij,ij->i", Q, Q))))
        if gap <= 0.5 * tol_opt or gap <= 1e-14 * scale or choice in corral:
            break
        corral.append(choice)
        Q = np.vstack([Q, q])
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimiser(Q)
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            mask = alpha <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(mask & (lam - alpha > 0), lam / (lam - alpha), np.inf)
            theta = min(1.0, float(ratios.min()))
            lam = lam + theta * (alpha - lam)
            drop = lam <= 1e-14
            drop[int(np.argmin(np.where(mask, lam, np.inf)))] = True
            keep = ~drop
            Q = Q[keep]
            lam = lam[keep]
            lam = lam / lam.sum()
            corral = [c for c, k in zip(corral, keep) if k]
        z = lam @ Q
    else:
        raise NonConvergence("min-norm point did not converge", float(gap), it)

    weights = lam
    return MinNormPoint(z, _fold(F, corral, weights), tuple(corral), weights, max(float(gap), 0.0), it)


def closest_point(F: FaceProduct, v, tol_opt: float = 1e-10) -> MinNormPoint:
    """Min-norm point of ``F - v``; ``v + result.point`` is the point of ``F`` nearest ``v``."""
    return min_norm_point(F.translated(-np.asarray(v, dtype=float)), tol_opt)


def distance_to_face(F: FaceProduct, v, tol_opt: float = 1e-10) -> float:
    """Euclidean distance from ``v`` to ``F``."""
    return closest_point(F, v, tol_opt).norm
