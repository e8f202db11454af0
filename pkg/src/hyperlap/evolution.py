"""Time stepping for ``x' + L(x) ∋ h``, ``x(0) = x0``.

The implicit scheme is one resolvent per step with the interval average
of ``h``; the explicit scheme follows the right derivative
``(h - L(x))°``.  Decay envelopes and the closed-form four-vertex
solution live here as well.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .energy import edge_face, energy
from .hypergraph import Hypergraph, component_means
from .projection import closest_point, face_product
from .resolvent import prox_shifted
from .signals import Signal, ZeroSignal

__all__ = [
    "Trajectory",
    "step_implicit",
    "step_explicit",
    "solve_cauchy",
    "time_grid",
    "decay_envelope",
    "lower_envelope",
    "implicit_decay_bound",
    "explicit_lower_bound",
    "reference_solution_4vertex",
    "MERGE_TIME_4VERTEX",
    "first_face_change",
    "write_trajectory",
    "format_trajectory",
    "read_trajectory",
]

SCHEMES = ("implicit", "explicit")
MERGE_TIME_4VERTEX = 0.5 * math.log(2.0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Potentials on a uniform grid with per-node diagnostics.

    ``residual[k]`` is the optimality residual of the step that produced
    node ``k`` (0 at the initial node).
    """

    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    means: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    scheme: str = "implicit"
    p: float = 2.0

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def steps(self) -> int:
        return self.times.size - 1


def time_grid(T: float, dt: float) -> np.ndarray:
    """``0 = t_0 < ... < t_N = T`` with ``N = round(T / dt)``; ``dt`` must divide ``T``."""
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    if dt > T:
        raise ValueError(f"dt={dt} exceeds T={T}")
    N = int(round(T / dt))
    if abs(N * dt - T) > 1e-9 * T:
        raise ValueError(f"dt={dt} does not divide T={T}")
    return T * np.arange(N + 1) / N


def step_implicit(G, x, h_mean, dt, p=2.0, tol_opt=1e-10, tol_active=None, eps=0.0):
    """Resolvent step ``x_next + dt (eps x_next + L(x_next)) ∋ x + dt h_mean``.

    Returns the :class:`~hyperlap.resolvent.ProxResult`; its ``x`` is the
    new state.
    """
    y = np.asarray(x, dtype=float) + dt * np.asarray(h_mean, dtype=float)
    return prox_shifted(G, y, dt, eps, p, tol_opt, tol_active)


def step_explicit(G, x, h_now, dt, p=2.0, tol_opt=1e-10, tol_active=None):
    """``x + dt (h - L(x))°``; returns ``(x_next, gap)``."""
    x = np.asarray(x, dtype=float)
    F = face_product(G, x, p, tol_active)
    mnp = closest_point(F, h_now, tol_opt)
    # mnp.point is the least-norm element of L(x) - h
    return x - dt * mnp.point, mnp.gap


def solve_cauchy(
    G: Hypergraph,
    x0,
    h: Signal | None = None,
    T: float = 1.0,
    dt: float = 1e-2,
    scheme: str = "implicit",
    p: float = 2.0,
    tol_opt: float = 1e-10,
    tol_active: float | None = None,
    eps: float = 0.0,
) -> Trajectory:
    """Integrate on the uniform grid of :func:`time_grid`.

    ``eps > 0`` adds the damping term ``eps x`` (implicit scheme only).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if eps and scheme != "implicit":
        raise ValueError("eps > 0 is only supported by the implicit scheme")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (G.n,):
        raise ValueError(f"initial datum has shape {x.shape}, expected ({G.n},)")
    h = ZeroSignal(G.n) if h is None else h
    if h.n != G.n:
        raise ValueError(f"signal has {h.n} components, graph has {G.n} vertices")
    times = time_grid(T, dt)
    N = times.size - 1
    P = G.components
    states = np.empty((N + 1, G.n))
    res = np.zeros(N + 1)
    states[0] = x
    zero = isinstance(h, ZeroSignal)
    for k in range(N):
        t0, t1 = times[k], times[k + 1]
        step = t1 - t0
        if scheme == "implicit":
            hk = np.zeros(G.n) if zero else h.mean_over(t0, t1)
            r = step_implicit(G, x, hk, step, p, tol_opt, tol_active, eps)
            x, res[k + 1] = r.x, r.residual
        else:
            hk = np.zeros(G.n) if zero else h.value(t0)
            x, res[k + 1] = step_explicit(G, x, hk, step, p, tol_opt, tol_active)
        states[k + 1] = x
    energies = np.array([energy(G, s, p) for s in states])
    return Trajectory(times, states, energies, component_means(states, P), res, scheme, p)


# -- decay envelopes ---------------------------------------------------------

def _power_law(X0, p, rate, t):
    """Solution of ``X' = -2 rate X^{p/2}``, ``X(0) = X0``."""
    t = np.asarray(t, dtype=float)
    if X0 < 0 or rate <= 0:
        raise ValueError("need X0 >= 0 and a positive rate")
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if X0 == 0:
        return np.zeros_like(t)
    if p == 2:
        return X0 * np.exp(-2.0 * rate * t)
    if p < 2:
        a = (2.0 - p) / 2.0
        base = np.maximum(X0 ** a - (2.0 - p) * rate * t, 0.0)
        return base ** (1.0 / a)
    a = (p - 2.0) / 2.0
    return (X0 ** (-a) + (p - 2.0) * rate * t) ** (-1.0 / a)


def decay_envelope(X0: float, p: float, C: float, t):
    """Upper bound on ``|x(t) - mean(x0)|^2`` for the unforced flow."""
    if C <= 0:
        raise ValueError("C must be > 0")
    out = _power_law(X0, p, 1.0 / C, t)
    return float(out) if np.ndim(out) == 0 else out


def _lower_rate(p, n, num_edges, max_w):
    return p * num_edges * n ** (p / 2.0) * max_w


def lower_envelope(X0: float, p: float, t, n: int, num_edges: int, max_w: float):
    """Lower bound from ``X' >= -2 p #E n^{p/2} max_w X^{p/2}``."""
    out = _power_law(X0, p, _lower_rate(p, n, num_edges, max_w), t)
    return float(out) if np.ndim(out) == 0 else out


def implicit_decay_bound(X0: float, p: float, C: float, dt: float, steps: int) -> np.ndarray:
    """``U_{k+1} + (2 dt / C) U_{k+1}^{p/2} = U_k``: the bound the implicit scheme obeys exactly."""
    U = np.empty(steps + 1)
    U[0] = X0
    c = 2.0 * dt / C
    for k in range(steps):
        u = U[k]
        if u <= 0:
            U[k + 1:] = 0.0
            break
        if p == 2:
            U[k + 1] = u / (1.0 + c)
            continue
        g = lambda z: z + c * z ** (p / 2.0) - u
        U[k + 1] = brentq(g, 0.0, u, xtol=1e-300, rtol=4 * np.finfo(float).eps) if g(0.0) < 0 else 0.0
    return U


def explicit_lower_bound(X0: float, p: float, dt: float, steps: int, n: int, num_edges: int, max_w: float) -> np.ndarray:
    """Forward Euler for the lower-envelope ODE, clipped at 0."""
    K = _lower_rate(p, n, num_edges, max_w)
    L = np.empty(steps + 1)
    L[0] = X0
    for k in range(steps):
        L[k + 1] = max(L[k] - 2.0 * dt * K * L[k] ** (p / 2.0), 0.0)
    return L


# -- the four-vertex example -------------------------------------------------

def reference_solution_4vertex(t) -> np.ndarray:
    """Exact solution for one unit-weight edge on four vertices, ``p = 2``, ``x0 = (2, 1, -1, -2)``.

    Vectorised over ``t``; the result has shape ``t.shape + (4,)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    early = t <= MERGE_TIME_4VERTEX
    a = np.where(early, 2.0 * np.exp(-2.0 * t), math.sqrt(2.0) * np.exp(-t))
    b = np.where(early, 1.0, math.sqrt(2.0) * np.exp(-t))
    return np.stack([a, b, -b, -a], axis=-1)


def first_face_change(G: Hypergraph, traj: Trajectory, edge: int = 0, tol_active: float | None = None):
    """Time of the first node whose active sets on ``edge`` differ from the initial ones, or None."""
    first = edge_face(G, traj.states[0], edge, tol_active)
    for t, x in zip(traj.times[1:], traj.states[1:]):
        face = edge_face(G, x, edge, tol_active)
        if (face.argmax_set, face.argmin_set) != (first.argmax_set, first.argmin_set):
            return float(t)
    return None


# -- CSV ---------------------------------------------------------------------

def format_trajectory(traj: Trajectory) -> str:
    header = ["t"] + [f"x_{i + 1}" for i in range(traj.n)] + ["energy", "residual"]
    table = np.column_stack([traj.times, traj.states, traj.energy, traj.residual])
    buf = io.StringIO()
    np.savetxt(buf, table, delimiter=",", fmt="%.17g", header=",".join(header), comments="")
    return buf.getvalue()


def write_trajectory(traj: Trajectory, path) -> None:
    Path(path).write_text(format_trajectory(traj))


def read_trajectory(path, P=None) -> Trajectory:
    """Inverse of :func:`write_trajectory`; component means need the partition ``P``."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if header[0] != "t" or header[-2:] != ["energy", "residual"]:
        raise ValueError(f"{path}: not a trajectory file")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    states = data[:, 1:-2]
    means = component_means(states, P) if P is not None else np.zeros((data.shape[0], 0))
    return Trajectory(data[:, 0], states, data[:, -2], means, data[:, -1])
