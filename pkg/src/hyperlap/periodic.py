"""Time-periodic solutions of ``x' + L(x) ∋ h`` with ``x(0) = x(T)``.

A periodic solution can only exist when ``h`` has zero net mass on every
connected component.  We approximate it through the damped problem
``x' + eps x + L(x) ∋ h``, whose period map ``x(0) -> x(T)`` is a
contraction, and let ``eps`` decrease along a schedule.

Component means evolve independently of the operator, so the fixed-point
mean is known in closed form and imposed exactly; the remaining
mean-free part is found by Anderson-accelerated fixed-point iteration
(or plain iteration on request).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import spreads
from .errors import GridMismatch, IncompatibleForcing, NonConvergence
from .evolution import Trajectory, solve_cauchy, time_grid, write_trajectory
from .hypergraph import ComponentPartition, Hypergraph, component_means
from .signals import Signal, ZeroSignal

__all__ = [
    "PeriodicSolveReport",
    "DEFAULT_EPS_SCHEDULE",
    "check_compatibility",
    "default_tol_compat",
    "period_map",
    "solve_periodic_eps",
    "solve_periodic",
    "orbit_offset",
    "orbit_spreads",
    "format_report",
    "write_report",
]

DEFAULT_EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)
METHODS = ("anderson", "plain")


def check_compatibility(h: Signal, T: float, P: ComponentPartition) -> np.ndarray:
    """``r_k = ∫_0^T mean_{S_k} h(t) dt`` for every component."""
    if T <= 0:
        raise ValueError("T must be > 0")
    if isinstance(h, ZeroSignal):
        return np.zeros(P.count)
    return component_means(h.integral(0.0, T), P)


def default_tol_compat(h: Signal, T: float) -> float:
    return 1e-10 * T * h.sup_norm(T)


def _require_compatible(h, T, P, tol_compat):
    r = check_compatibility(h, T, P)
    tol = default_tol_compat(h, T) if tol_compat is None else tol_compat
    bad = np.flatnonzero(np.abs(r) > tol)
    if bad.size:
        k = int(bad[0])
        raise IncompatibleForcing(
            f"forcing has net mass {r[k]:.6g} over one period on component {k + 1} "
            f"(vertices {', '.join(str(v + 1) for v in P.components[k])}); "
            "a periodic solution needs the period integral of the component mean of h "
            f"to vanish on every component (tolerance {tol:.3g})",
            r,
        )
    return r


def period_map(G, v, h, T, dt, eps, p=2.0, tol_opt=1e-10, tol_active=None) -> Trajectory:
    """Damped trajectory from ``x(0) = v``; its last state is the period map at ``v``."""
    return solve_cauchy(G, v, h, T, dt, "implicit", p, tol_opt, tol_active, eps)


def _fixed_mean(G, h, T, dt, eps, P) -> np.ndarray:
    """Component means of the damped fixed point.

    Each step maps means by ``m -> (m + dt mean(h_k)) / (1 + dt eps)``, so
    ``m_N = q m_0 + r`` with ``q = (1 + dt eps)^-N``.
    """
    times = time_grid(T, dt)
    m = np.zeros(P.count)
    if not isinstance(h, ZeroSignal):
        for t0, t1 in zip(times[:-1], times[1:]):
            step = t1 - t0
            m = (m + step * component_means(h.mean_over(t0, t1), P)) / (1.0 + step * eps)
    q = (1.0 + (T / (times.size - 1)) * eps) ** (-(times.size - 1))
    return m / (1.0 - q)


@dataclass(frozen=True, eq=False)
class _EpsSolve:
    orbit: Trajectory
    iterations: int
    residual: float


def solve_periodic_eps(
    G: Hypergraph,
    h: Signal,
    T: float,
    eps: float,
    dt: float,
    p: float = 2.0,
    tol_periodic: float = 1e-9,
    v0=None,
    method: str = "anderson",
    memory: int = 5,
    max_iter: int = 200,
    tol_opt: float = 1e-10,
    tol_active: float | None = None,
) -> _EpsSolve:
    """Fixed point of the damped period map, to ``|x(0) - x(T)| <= tol_periodic``.

    Raises
    ------
    NonConvergence
        After ``max_iter`` period maps.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    P = G.components
    target = _fixed_mean(G, h, T, dt, eps, P)

    def project(v):
        return v - component_means(v, P)[P.labels] + target[P.labels]

    def run(v):
        orbit = period_map(G, v, h, T, dt, eps, p, tol_opt, tol_active)
        return orbit, orbit.states[-1] - v

    v = project(np.zeros(G.n) if v0 is None else np.asarray(v0, dtype=float))
    orbit, f = run(v)
    xs, fs = [v], [f]
    for it in range(1, max_iter + 1):
        norm_f = float(np.linalg.norm(f))
        if norm_f <= tol_periodic:
            return _EpsSolve(orbit, it - 1, norm_f)
        plain = v + f
        if method == "anderson" and len(xs) > 1:
            dX = np.diff(np.array(xs), axis=0).T
            dF = np.diff(np.array(fs), axis=0).T
            gamma = np.linalg.lstsq(dF, f, rcond=None)[0]
            cand = project(plain - (dX + dF) @ gamma)
        else:
            cand = project(plain)
        new_orbit, new_f = run(cand)
        if method == "anderson" and len(xs) > 1 and np.linalg.norm(new_f) > norm_f:
            # accelerated step made things worse: restart from a plain step
            cand = project(plain)
            new_orbit, new_f = run(cand)
            xs, fs = [], []
        v, orbit, f = cand, new_orbit, new_f
        xs.append(v)
        fs.append(f)
        xs, fs = xs[-(memory + 1):], fs[-(memory + 1):]
    raise NonConvergence(f"period map at eps={eps:g} did not reach tol_periodic", float(np.linalg.norm(f)), max_iter)


@dataclass(frozen=True, eq=False)
class PeriodicSolveReport:
    """Result of :func:`solve_periodic`.

    ``eps_changes[i]`` is the largest distance between the orbits for
    ``eps_used[i]`` and ``eps_used[i + 1]``; the schedule stops early once
    it drops below ``tol_uni``.  Convergence of the whole family as
    ``eps -> 0`` is not known in general, so this is an empirical check.
    """

    orbit: Trajectory
    eps_used: list[float]
    iterations: list[int]
    periodic_residuals: list[float]
    compatibility: np.ndarray
    eps_changes: list[float] = field(default_factory=list)
    eps_converged: bool = False
    gamma: np.ndarray | None = None

    @property
    def periodic_residual(self) -> float:
        return self.periodic_residuals[-1]


def solve_periodic(
    G: Hypergraph,
    h: Signal,
    T: float,
    dt: float,
    p: float = 2.0,
    eps_schedule=DEFAULT_EPS_SCHEDULE,
    tol_periodic: float = 1e-9,
    tol_uni: float = 1e-6,
    tol_compat: float | None = None,
    v0=None,
    method: str = "anderson",
    max_iter: int = 200,
    tol_opt: float = 1e-10,
    tol_active: float | None = None,
) -> PeriodicSolveReport:
    """Periodic orbit via a decreasing ``eps`` schedule with warm starts.

    Raises
    ------
    IncompatibleForcing
        Before any time stepping, if some component has nonzero net forcing.
    NonConvergence
        If a damped solve hits its iteration cap.
    """
    eps_schedule = [float(e) for e in eps_schedule]
    if not eps_schedule or any(e <= 0 for e in eps_schedule):
        raise ValueError("eps schedule must be a nonempty list of positive values")
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    if h.n != G.n:
        raise ValueError(f"signal has {h.n} components, graph has {G.n} vertices")
    time_grid(T, dt)
    compat = _require_compatible(h, T, G.components, tol_compat)

    used, iters, residuals, changes = [], [], [], []
    orbit = None
    start = v0
    converged = False
    for eps in eps_schedule:
        sol = solve_periodic_eps(
            G, h, T, eps, dt, p, tol_periodic, start, method, max_iter=max_iter,
            tol_opt=tol_opt, tol_active=tol_active,
        )
        used.append(eps)
        iters.append(sol.iterations)
        residuals.append(sol.residual)
        if orbit is not None:
            changes.append(float(np.max(np.linalg.norm(sol.orbit.states - orbit.states, axis=1))))
        orbit = sol.orbit
        start = orbit.states[0]
        if changes and changes[-1] < tol_uni:
            converged = True
            break
    return PeriodicSolveReport(orbit, used, iters, residuals, compat, changes, converged)


def orbit_offset(x1: Trajectory, x2: Trajectory) -> tuple[np.ndarray, float]:
    """Constant ``gamma`` (time average of ``x1 - x2``) and ``max_t |x1 - x2 - gamma|``."""
    if x1.times.shape != x2.times.shape or not np.allclose(x1.times, x2.times, rtol=0, atol=1e-12):
        raise GridMismatch("orbits live on different time grids")
    d = x1.states - x2.states
    span = x1.times[-1] - x1.times[0]
    gamma = np.trapezoid(d, x1.times, axis=0) / span if span > 0 else d[0]
    return gamma, float(np.max(np.linalg.norm(d - gamma, axis=1)))


def orbit_spreads(G: Hypergraph, orbit: Trajectory) -> np.ndarray:
    """``f_e(x(t))`` for every node (rows) and edge (columns)."""
    return np.array([spreads(G, x) for x in orbit.states])


def format_report(report: PeriodicSolveReport) -> str:
    def fmt(vals):
        return ",".join(repr(float(v)) for v in vals)

    lines = [
        f"periodic_residual = {report.periodic_residual!r}",
        f"eps_used = {fmt(report.eps_used)}",
        f"period_map_iterations = {','.join(str(i) for i in report.iterations)}",
        f"periodic_residuals = {fmt(report.periodic_residuals)}",
        f"compatibility_residuals = {fmt(report.compatibility)}",
        f"eps_changes = {fmt(report.eps_changes)}",
        f"eps_converged = {str(report.eps_converged).lower()}",
        "eps_limit_check = empirical",
        f"steps = {report.orbit.steps}",
        f"T = {report.orbit.times[-1]!r}",
    ]
    if report.gamma is not None:
        lines.append(f"gamma = {fmt(report.gamma)}")
    return "\n".join(lines) + "\n"


def write_report(report: PeriodicSolveReport, path, orbit_csv=None) -> None:
    Path(path).write_text(format_report(report))
    if orbit_csv is not None:
        write_trajectory(report.orbit, orbit_csv)
