"""Seeded property suites.

Each suite draws its own random instances from ``numpy.random.default_rng``
seeded by ``(suite index, seed)`` and counts violations of one invariant.
:func:`run_suites` fans the (suite, seed) pairs out over worker threads and
returns results in a fixed order.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .energy import canonical_subgradient, edge_faces, energy, graph_laplacian_check, spreads
from .evolution import solve_cauchy
from .generators import (
    random_face_product,
    random_hypergraph,
    random_ordinary_graph,
    random_potential,
    random_selection,
)
from .hypergraph import component_average, poincare_constant
from .projection import FaceProduct, face_product, min_norm_point
from .resolvent import prox
from .signals import PiecewiseLinearSignal

__all__ = ["SuiteResult", "Tolerances", "SUITES", "run_suites", "brute_force_min_norm"]

P_VALUES = (1.0, 1.5, 2.0, 3.0)


@dataclass(frozen=True)
class Tolerances:
    tol_opt: float = 1e-10
    tol_active: float | None = None
    oracle: float = 1e-6
    contraction: float = 1e-6


@dataclass
class SuiteResult:
    suite: str
    seed: int
    cases: int = 0
    violations: int = 0
    worst: float = 0.0  # largest violation margin seen (<= 0 means all passed)
    first_failure: str | None = field(default=None)

    def record(self, excess: float, detail: str) -> None:
        self.cases += 1
        self.worst = excess if self.cases == 1 else max(self.worst, excess)
        if excess > 0:
            self.violations += 1
            if self.first_failure is None:
                self.first_failure = detail

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _scale(*vals) -> float:
    return 1.0 + max(float(np.max(np.abs(v))) if np.size(v) else 0.0 for v in vals)


# -- suites ------------------------------------------------------------------

def suite_subgradient(rng, res: SuiteResult, tol: Tolerances, cases: int = 100):
    """``y . (xi - x) <= phi(xi) - phi(x)`` for canonical and random selections."""
    for k in range(cases):
        G = random_hypergraph(rng)
        p = P_VALUES[k % len(P_VALUES)]
        x = random_potential(rng, G.n)
        xi = random_potential(rng, G.n)
        for y in (canonical_subgradient(G, x, p, tol.tol_active), random_selection(rng, G, x, p, tol.tol_active)):
            lhs = float(y.vector @ (xi - x))
            rhs = energy(G, xi, p) - energy(G, x, p)
            res.record(lhs - rhs - 1e-12 * _scale(lhs, rhs), f"p={p} x={x.tolist()} xi={xi.tolist()}")


def suite_oddness(rng, res: SuiteResult, tol: Tolerances, cases: int = 100):
    """Canonical subgradient and minimal section are odd, bit for bit."""
    for k in range(cases):
        G = random_hypergraph(rng)
        p = P_VALUES[k % len(P_VALUES)]
        x = random_potential(rng, G.n)
        a = canonical_subgradient(G, x, p, tol.tol_active).vector
        b = canonical_subgradient(G, -x, p, tol.tol_active).vector
        res.record(float(np.max(np.abs(a + b))), f"canonical p={p} x={x.tolist()}")
        za = min_norm_point(face_product(G, x, p, tol.tol_active), tol.tol_opt).point
        zb = min_norm_point(face_product(G, -x, p, tol.tol_active), tol.tol_opt).point
        res.record(float(np.max(np.abs(za + zb))), f"minimal section p={p} x={x.tolist()}")


def suite_monotonicity(rng, res: SuiteResult, tol: Tolerances, cases: int = 100):
    """``(y1 - y2).(x1 - x2) >= sum_e w (f1^{p-1} - f2^{p-1}) (f1 - f2) >= 0``."""
    for k in range(cases):
        G = random_hypergraph(rng)
        p = P_VALUES[k % len(P_VALUES)]
        x1, x2 = random_potential(rng, G.n), random_potential(rng, G.n)
        y1 = random_selection(rng, G, x1, p, tol.tol_active).vector
        y2 = random_selection(rng, G, x2, p, tol.tol_active).vector
        f1, f2 = spreads(G, x1), spreads(G, x2)
        lower = float(np.sum(G.weights * (np.power(f1, p - 1) - np.power(f2, p - 1)) * (f1 - f2)))
        lhs = float((y1 - y2) @ (x1 - x2))
        slack = 1e-12 * _scale(lhs, lower)
        res.record(lower - lhs - slack, f"p={p} x1={x1.tolist()} x2={x2.tolist()}")
        res.record(-lower - slack, f"negative lower bound p={p}")


def suite_nonexpansive(rng, res: SuiteResult, tol: Tolerances, cases: int = 200):
    """``|prox(y1) - prox(y2)| <= |y1 - y2|`` up to ``2 tol_opt``."""
    for k in range(cases):
        G = random_hypergraph(rng)
        p = P_VALUES[k % len(P_VALUES)]
        lam = float(rng.uniform(0.01, 2.0))
        y1, y2 = random_potential(rng, G.n), random_potential(rng, G.n)
        if k % 3 == 0:
            y2 = y1 + 1e-3 * rng.standard_normal(G.n)
        a = prox(G, y1, lam, p, tol.tol_opt, tol.tol_active).x
        b = prox(G, y2, lam, p, tol.tol_opt, tol.tol_active).x
        res.record(
            float(np.linalg.norm(a - b) - np.linalg.norm(y1 - y2)) - 2 * tol.tol_opt,
            f"p={p} lam={lam} y1={y1.tolist()} y2={y2.tolist()}",
        )


def suite_translation(rng, res: SuiteResult, tol: Tolerances, cases: int = 100):
    """Shifting by a component-constant vector leaves energy and faces alone and commutes with prox."""
    for k in range(cases):
        G = random_hypergraph(rng)
        p = P_VALUES[k % len(P_VALUES)]
        P = G.components
        shift = rng.integers(-3, 4, size=P.count).astype(float)[P.labels]
        x = random_potential(rng, G.n)
        detail = f"p={p} x={x.tolist()} shift={shift.tolist()}"
        e0, e1 = energy(G, x, p), energy(G, x + shift, p)
        res.record(abs(e0 - e1) - 1e-12 * _scale(e0), "energy " + detail)
        tol_a = 1e-9 * (1.0 + float(np.max(np.abs(x))))
        same = all(
            (a.argmax_set, a.argmin_set) == (b.argmax_set, b.argmin_set)
            for a, b in zip(edge_faces(G, x, tol_a), edge_faces(G, x + shift, tol_a))
        )
        res.record(0.0 if same else 1.0, "faces " + detail)
        lam = float(rng.uniform(0.05, 1.0))
        a = prox(G, x, lam, p, tol.tol_opt, tol.tol_active).x
        b = prox(G, x + shift, lam, p, tol.tol_opt, tol.tol_active).x
        res.record(float(np.max(np.abs(b - a - shift))) - 1e-9 * _scale(x, shift), "prox " + detail)


def _compositions(K: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``K``."""
    for bars in itertools.combinations(range(K + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(K + parts - 1 - prev - 1)
        yield out


def brute_force_min_norm(F: FaceProduct, max_points: int = 20000) -> np.ndarray:
    """Least-norm point of ``F`` by exhaustive barycentric grid plus local polish.

    Independent of Wolfe's algorithm: the grid step is ``1/K`` with the
    largest ``K <= 100`` keeping the grid below ``max_points``, then the
    best node is polished by SLSQP on the product of simplices.
    """
    blocks, cols = [], []
    for s, top, bottom in zip(F.scales, F.argmax_sets, F.argmin_sets):
        for sign, verts in ((1.0, top), (-1.0, bottom)):
            start = len(cols)
            for v in verts:
                c = np.zeros(F.n)
                c[v] = sign * s
                cols.append(c)
            blocks.append(list(range(start, len(cols))))
    M = np.array(cols).T
    off = np.zeros(F.n) if F.offset is None else F.offset

    K = 100
    while K > 1 and math.prod(math.comb(K + len(b) - 1, len(b) - 1) for b in blocks) > max_points:
        K -= 1
    grids = [np.array(list(_compositions(K, len(b))), dtype=float) / K for b in blocks]
    thetas = np.array([np.concatenate(c) for c in itertools.product(*grids)])
    Z = off + thetas @ M.T
    best = thetas[int(np.argmin(np.einsum("ij,ij->i", Z, Z)))]

    A = np.zeros((len(blocks), M.shape[1]))
    for i, b in enumerate(blocks):
        A[i, b] = 1.0
    sol = minimize(
        lambda th: float(np.sum((off + M @ th) ** 2)),
        best,
        jac=lambda th: 2.0 * M.T @ (off + M @ th),
        method="SLSQP",
        bounds=[(0.0, 1.0)] * M.shape[1],
        constraints=[{"type": "eq", "fun": lambda th: A @ th - 1.0, "jac": lambda th: A}],
        options={"ftol": 1e-16, "maxiter": 500},
    )
    theta = np.clip(sol.x, 0.0, None)
    for b in blocks:
        theta[b] /= theta[b].sum()
    return off + M @ theta


def suite_projection_oracle(rng, res: SuiteResult, tol: Tolerances, cases: int = 10):
    """Wolfe agrees with the brute-force oracle on small face products."""
    for _ in range(cases):
        F = random_face_product(rng)
        z = min_norm_point(F, tol.tol_opt).point
        ref = brute_force_min_norm(F)
        res.record(float(np.linalg.norm(z - ref)) - tol.oracle, f"F={F!r}")


def suite_graph_laplacian(rng, res: SuiteResult, tol: Tolerances, cases: int = 100):
    """Canonical subgradient equals ``(D - A) x`` exactly on ordinary graphs."""
    for _ in range(cases):
        G = random_ordinary_graph(rng)
        x = rng.integers(-4, 5, size=G.n).astype(float)
        a = canonical_subgradient(G, x, 2.0).vector
        b = graph_laplacian_check(G, x, 2.0)
        res.record(0.0 if np.array_equal(a, b) else float(np.max(np.abs(a - b))) or 1.0, f"G={G.edges} x={x.tolist()}")


def suite_contraction(rng, res: SuiteResult, tol: Tolerances, cases: int = 2, eps: float = 0.01, T: float = 1.0, dt: float = 0.01):
    """Damped period map is Lipschitz with factor ``exp(-eps T)``.

    The discrete map's factor is ``(1 + dt eps)^(-T/dt)``, slightly above
    ``exp(-eps T)``; at the default ``eps``, ``T`` and ``dt`` the excess is
    about ``5e-7``, inside the ``1e-6`` allowance.
    """
    bound = math.exp(-eps * T) * (1.0 + tol.contraction)
    for k in range(cases):
        G = random_hypergraph(rng, n=int(rng.integers(3, 6)), num_edges=int(rng.integers(1, 4)))
        p = P_VALUES[(k + int(rng.integers(4))) % len(P_VALUES)]
        knots = np.linspace(0.0, T, 5)
        vals = rng.standard_normal((5, G.n))
        vals[-1] = vals[0]
        h = PiecewiseLinearSignal(knots, vals)
        v1, v2 = random_potential(rng, G.n, ties=False), random_potential(rng, G.n, ties=False)
        a = solve_cauchy(G, v1, h, T, dt, "implicit", p, tol.tol_opt, tol.tol_active, eps).states[-1]
        b = solve_cauchy(G, v2, h, T, dt, "implicit", p, tol.tol_opt, tol.tol_active, eps).states[-1]
        ratio = float(np.linalg.norm(a - b) / np.linalg.norm(v1 - v2))
        res.record(ratio - bound, f"p={p} ratio={ratio!r} bound={bound!r}")


def suite_poincare(rng, res: SuiteResult, tol: Tolerances, cases: int = 100):
    """``|x - mean|_q^p <= p C phi(x)`` for ``q`` in 1, 2, inf."""
    for k in range(cases):
        G = random_hypergraph(rng)
        p = P_VALUES[k % len(P_VALUES)]
        x = random_potential(rng, G.n)
        d = x - component_average(x, G.components)
        rhs = p * poincare_constant(G, p=p) * energy(G, x, p)
        for q in (1, 2, np.inf):
            lhs = float(np.linalg.norm(d, ord=q)) ** p
            res.record(lhs - rhs - 1e-9 * max(rhs, 1e-300), f"p={p} q={q} x={x.tolist()}")


SUITES = {
    "subgradient-inequality": suite_subgradient,
    "oddness": suite_oddness,
    "monotonicity": suite_monotonicity,
    "prox-nonexpansive": suite_nonexpansive,
    "translation": suite_translation,
    "projection-oracle": suite_projection_oracle,
    "graph-laplacian": suite_graph_laplacian,
    "period-map-contraction": suite_contraction,
    "poincare": suite_poincare,
}


def _run_one(name: str, seed: int, tol: Tolerances) -> SuiteResult:
    index = list(SUITES).index(name)
    rng = np.random.default_rng([index, seed])
    res = SuiteResult(name, seed)
    SUITES[name](rng, res, tol)
    return res


def run_suites(seeds=range(10), suites=None, workers: int = 1, tol: Tolerances | None = None) -> list[SuiteResult]:
    """Run every (suite, seed) pair; results come back in suite-then-seed order."""
    tol = Tolerances() if tol is None else tol
    names = list(SUITES) if suites is None else list(suites)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    jobs = [(name, int(seed)) for name in names for seed in seeds]
    if workers <= 1:
        return [_run_one(n, s, tol) for n, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _run_one(job[0], job[1], tol), jobs))
