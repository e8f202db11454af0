"""The resolvent step: the unique ``x`` with ``x + lam * L(x) ∋ y``.

``x`` minimises ``J(x) = |x - y|^2 / 2 + lam * phi(x)``.  Rather than
working on the nonsmooth primal, we solve the smooth dual over
nonnegative column weights ``c_j``, one column ``1_u - 1_v`` for every
ordered pair ``u != v`` of every edge::

    min_{c >= 0}  |y - A c|^2 / 2 + sum_e lam w_e psi(s_e / (lam w_e)),
    s_e = sum of c_j over the columns of e,   psi(r) = r**p' / p'

with ``p' = p / (p - 1)`` and ``x = y - A c``.  At the optimum the
positive columns of edge ``e`` join its argmax set to its argmin set and
``s_e = lam w_e f_e(x)**(p-1)``, which makes ``c`` a certificate directly.
For ``p = 2`` the dual is a single nonnegative least-squares problem; for
other ``p > 1`` it is solved by sequential NNLS (Newton) steps with a line
search.  For ``p = 1`` the dual becomes a projection onto a zonotope and is
handed to Wolfe's algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import lsq_linear, nnls

from .energy import (
    EdgeCoefficients,
    SubgradientPoint,
    default_tol_active,
    edge_faces,
    edge_scales,
    spreads,
)
from .errors import NonConvergence
from .hypergraph import Hypergraph, component_average
from .projection import FaceProduct, closest_point, face_product, min_norm_point

__all__ = ["ProxResult", "prox", "prox_shifted", "rounding_floor"]


@dataclass(frozen=True)
class ProxResult:
    """Outcome of :func:`prox`.

    ``residual`` bounds the distance from ``(y - x) / lam`` to ``L(x)``;
    ``certificate`` is the element of ``L(x)`` achieving it.  ``floor``
    is the part of the residual that rounding ``x`` to doubles can force
    (see :func:`rounding_floor`); the call succeeds when
    ``residual <= tol_opt + floor``.
    """

    x: np.ndarray
    residual: float
    iterations: int
    certificate: SubgradientPoint = field(repr=False)
    floor: float = 0.0


@dataclass(frozen=True)
class _Columns:
    A: np.ndarray  # n x m, columns 1_u - 1_v
    S: np.ndarray  # num_edges x m incidence of columns in edges
    edge: np.ndarray
    u: np.ndarray
    v: np.ndarray


@lru_cache(maxsize=64)
def _columns(G: Hypergraph) -> _Columns:
    edge, us, vs = [], [], []
    for k, e in enumerate(G.edges):
        for a in e:
            for b in e:
                if a != b:
                    edge.append(k)
                    us.append(a)
                    vs.append(b)
    m = len(edge)
    edge, us, vs = (np.array(t, dtype=np.intp) for t in (edge, us, vs))
    A = np.zeros((G.n, m))
    A[us, np.arange(m)] = 1.0
    A[vs, np.arange(m)] = -1.0
    S = np.zeros((G.num_edges, m))
    S[edge, np.arange(m)] = 1.0
    for arr in (A, S, edge, us, vs):
        arr.setflags(write=False)
    return _Columns(A, S, edge, us, vs)


def _apply(cols: _Columns, n: int, c: np.ndarray) -> np.ndarray:
    out = np.zeros(n)
    np.add.at(out, cols.u, c)
    np.add.at(out, cols.v, -c)
    return out


def rounding_floor(G: Hypergraph, x, p: float, magnitude: float = 0.0) -> float:
    """Residual that a few ulps of error in ``x`` can account for.

    For ``1 < p < 2`` the edge scale ``w f**(p-1)`` has unbounded slope as
    ``f -> 0``, so a nearly merged edge pins the residual above ``tol_opt``
    whatever double vector is returned.  Each edge contributes
    ``sqrt(2) w |(f + d)**(p-1) - (f - d)_+**(p-1)|`` with
    ``d = 4 eps max(magnitude, max_{v in e} |x(v)|)``; :func:`prox` passes
    ``|y|_inf`` as ``magnitude`` since ``x`` is computed as ``y`` minus a
    correction.
    """
    if p == 1 or G.num_edges == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    f = spreads(G, x)
    big = np.maximum(np.maximum.reduceat(np.abs(x[G.flat_vertices]), G.edge_offsets), magnitude)
    d = 4.0 * np.finfo(float).eps * big
    hi = np.power(f + d, p - 1.0)
    lo = np.power(np.maximum(f - d, 0.0), p - 1.0)
    return float(np.sqrt(2.0) * np.dot(G.weights, hi - lo))


def _certificate(G, x, p, lam, c, cols, tol_active):
    """Per-edge coefficients read off the dual weights, or None if a support leaves its face."""
    faces = edge_faces(G, x, tol_active)
    scales = edge_scales(G, x, p)
    s = np.bincount(cols.edge, weights=c, minlength=G.num_edges)
    coefs = []
    for k, face in enumerate(faces):
        top, bottom = face.argmax_set, face.argmin_set
        if s[k] > 0:
            pos_top = {v: i for i, v in enumerate(top)}
            pos_bottom = {v: i for i, v in enumerate(bottom)}
            lam_k = np.zeros(len(top))
            mu_k = np.zeros(len(bottom))
            for j in np.flatnonzero((cols.edge == k) & (c > 0)):
                u, v = int(cols.u[j]), int(cols.v[j])
                if u not in pos_top or v not in pos_bottom:
                    return None
                lam_k[pos_top[u]] += c[j]
                mu_k[pos_bottom[v]] += c[j]
            lam_k /= lam_k.sum()
            mu_k /= mu_k.sum()
        else:
            lam_k = np.full(len(top), 1.0 / len(top))
            mu_k = np.full(len(bottom), 1.0 / len(bottom))
        coefs.append(EdgeCoefficients(k, float(scales[k]), top, lam_k, bottom, mu_k))
    cert = SubgradientPoint(np.zeros(G.n), tuple(coefs))
    return SubgradientPoint(cert.reconstruct(), cert.coefficients)


def _certify(G, y, x, lam, p, c, cols, tol_active, tol_opt):
    """Cheap certificate from ``c``; exact projection if that one is not good enough."""
    target = (y - x) / lam
    cert = _certificate(G, x, p, lam, c, cols, tol_active) if c is not None else None
    if cert is not None:
        res = float(np.linalg.norm(target - cert.vector))
        if res <= tol_opt:
            return res, cert
    mnp = closest_point(face_product(G, x, p, tol_active), target, tol_opt=max(tol_opt * tol_opt, np.finfo(float).tiny))
    exact = SubgradientPoint(target + mnp.point, mnp.coefficients)
    return mnp.norm, exact


def _prox_quadratic(G, y, lam, cols):
    # p = 2: psi(s) = s^2 / (2 lam w), so the dual is one NNLS problem
    rows = np.vstack([cols.A, cols.S / np.sqrt(lam * G.weights)[:, None]])
    rhs = np.concatenate([y, np.zeros(G.num_edges)])
    c, _ = nnls(rows, rhs, maxiter=50 * rows.shape[1])
    return c


def _kkt(c, g):
    return float(np.linalg.norm(np.minimum(c, g)))


def _prox_newton(G, y, lam, p, cols, tol_opt, tol_active, max_iter):
    q = p / (p - 1.0)
    lw = lam * G.weights

    def grad(c):
        s = cols.S @ c
        return -(cols.A.T @ (y - cols.A @ c)) + cols.S.T @ ((s / lw) ** (q - 1.0))

    c = np.zeros(cols.A.shape[1])
    best, best_kkt, stall = c, _kkt(c, grad(c)), 0
    for it in range(1, max_iter + 1):
        x = y - _apply(cols, G.n, c)
        s = cols.S @ c
        f = np.maximum(0.0, spreads(G, x))
        s_eval = np.maximum(s, lw * f ** (p - 1.0))
        on = s_eval > 0
        if not np.any(on):
            return c, it
        r_eval = s_eval[on] / lw[on]
        curv = (1.0 / (p - 1.0)) * r_eval ** (q - 2.0) / lw[on]
        slope = (s[on] / lw[on]) ** (q - 1.0)
        keep = np.isin(cols.edge, np.flatnonzero(on))
        sqrt_a = np.sqrt(curv)
        rows = np.vstack([cols.A[:, keep], sqrt_a[:, None] * cols.S[np.ix_(on, keep)]])
        rhs = np.concatenate([y, sqrt_a * (s[on] - slope / curv)])
        sub, _ = nnls(rows, rhs, maxiter=50 * rows.shape[1])
        if np.linalg.norm(rows @ sub - rhs) > np.linalg.norm(rows @ c[keep] - rhs):
            # nnls can fail on the rank-deficient systems that tied columns produce
            sub = lsq_linear(rows, rhs, bounds=(0.0, np.inf), method="bvls", tol=1e-15).x
        target = np.zeros_like(c)
        target[keep] = sub
        d = target - c
        # the full step is taken whenever it shrinks the KKT residual; near
        # the optimum value and slope tests are lost in rounding (with tied
        # columns d can even look like an ascent direction)
        t = 1.0
        if _kkt(c + d, grad(c + d)) >= _kkt(c, grad(c)):
            if float(grad(c) @ d) >= 0:
                return c, it
            if float(grad(c + d) @ d) > 0:
                # the dual is convex along d, so bisect on the slope sign
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    t = 0.5 * (lo + hi)
                    if float(grad(c + t * d) @ d) > 0:
                        hi = t
                    else:
                        lo = t
                t = lo
        if t == 0.0:
            return best, it
        c = np.maximum(c + t * d, 0.0)
        x = y - _apply(cols, G.n, c)
        cert = _certificate(G, x, p, lam, c, cols, tol_active)
        if cert is not None and np.linalg.norm((y - x) / lam - cert.vector) <= 1e-3 * tol_opt:
            return c, it
        if t * float(np.linalg.norm(d)) <= 1e-16 * (1.0 + float(np.linalg.norm(c))):
            return c, it
        k = _kkt(c, grad(c))
        if k < best_kkt:
            best, best_kkt, stall = c, k, 0
        else:
            stall += 1
            if stall >= 3:  # rounding level: further steps only shuffle ulps
                return best, it
    return best, max_iter


def _prox_one(G, y, lam, tol_opt):
    # p = 1: y - x is the projection of y onto lam * sum_e w_e B_e
    F = FaceProduct(G.n, lam * G.weights, G.edges, G.edges, offset=-y)
    mnp = min_norm_point(F, tol_opt=max(tol_opt * tol_opt, np.finfo(float).tiny))
    return -mnp.point, mnp.iterations


def prox(
    G: Hypergraph,
    y,
    lam: float,
    p: float = 2.0,
    tol_opt: float = 1e-10,
    tol_active: float | None = None,
    max_iter: int = 200,
) -> ProxResult:
    """Resolvent ``(I + lam L)^{-1} y`` with an optimality certificate.

    Raises
    ------
    NonConvergence
        If the certificate residual stays above ``tol_opt``.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (G.n,):
        raise ValueError(f"potential has shape {y.shape}, expected ({G.n},)")
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if tol_opt <= 0:
        raise ValueError("tol_opt must be > 0")
    if G.num_edges == 0:
        return ProxResult(y.copy(), 0.0, 0, SubgradientPoint(np.zeros(G.n), ()))

    if not np.any(spreads(G, y)):
        return ProxResult(y.copy(), 0.0, 0, SubgradientPoint(np.zeros(G.n), ()))

    # solve around the component means: nearly merged edges keep their
    # spread digits instead of losing them against |y|
    shift = component_average(y, G.components)
    yc = y - shift
    cols = _columns(G)
    if p == 1:
        xc, iterations = _prox_one(G, yc, lam, tol_opt)
        c = None
    elif p == 2:
        c = _prox_quadratic(G, yc, lam, cols)
        xc = yc - _apply(cols, G.n, c)
        iterations = 1
    else:
        c, iterations = _prox_newton(G, yc, lam, p, cols, tol_opt, tol_active, max_iter)
        xc = yc - _apply(cols, G.n, c)
    x = xc + shift
    tol = default_tol_active(x) if tol_active is None else tol_active
    floor = rounding_floor(G, x, p, float(np.max(np.abs(y))))
    residual, cert = _certify(G, yc, xc, lam, p, c, cols, tol, tol_opt + floor)
    if residual > tol_opt + floor:
        raise NonConvergence("resolvent step did not reach tol_opt", residual, iterations)
    return ProxResult(x, residual, iterations, cert, floor)


def prox_shifted(
    G: Hypergraph, y, dt: float, eps: float, p: float = 2.0, tol_opt: float = 1e-10, tol_active=None
) -> ProxResult:
    """Solve ``(1 + dt eps) x + dt L(x) ∋ y``.

    This is the plain resolvent of ``y / (1 + dt eps)`` with step
    ``dt / (1 + dt eps)``.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    k = 1.0 + dt * eps
    return prox(G, np.asarray(y, dtype=float) / k, dt / k, p, tol_opt, tol_active)
