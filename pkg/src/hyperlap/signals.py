"""External forcing ``h : [0, T] -> R^V``.

Every signal can be evaluated pointwise and integrated over an interval.
Integrals are exact for the zero signal, piecewise-linear samples and the
cosh preset; general callables use adaptive quadrature.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec

__all__ = [
    "Signal",
    "ZeroSignal",
    "PiecewiseLinearSignal",
    "CoshExample",
    "FunctionSignal",
    "read_signal_csv",
    "parse_signal",
]


class Signal:
    """Base class; subclasses set ``n`` and implement ``value`` and ``integral``."""

    n: int
    exact: bool = True

    def value(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def integral(self, a: float, b: float) -> np.ndarray:
        raise NotImplementedError

    def mean_over(self, a: float, b: float) -> np.ndarray:
        """Average of ``h`` over ``[a, b]``; the left value when ``a == b``."""
        if b == a:
            return self.value(a)
        return self.integral(a, b) / (b - a)

    def sup_norm(self, T: float, samples: int = 1001) -> float:
        ts = np.linspace(0.0, T, samples)
        return float(max(np.max(np.abs(self.value(t))) for t in ts))


@dataclass(frozen=True)
class ZeroSignal(Signal):
    n: int

    def value(self, t):
        return np.zeros(self.n)

    def integral(self, a, b):
        return np.zeros(self.n)

    def sup_norm(self, T, samples=1001):
        return 0.0


@dataclass(frozen=True, eq=False)
class PiecewiseLinearSignal(Signal):
    """Linear interpolation of samples ``values[k]`` at ``times[k]``, constant beyond the ends."""

    times: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or t.ndim != 1 or v.shape[0] != t.size or t.size == 0:
            raise ValueError("need a 1-d time grid and one sample row per time")
        if np.any(np.diff(t) <= 0):
            raise ValueError("signal times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal samples must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def value(self, t):
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(self.n)])

    def integral(self, a, b):
        if b < a:
            return -self.integral(b, a)
        inner = self.times[(self.times > a) & (self.times < b)]
        knots = np.concatenate([[a], inner, [b]])
        vals = np.array([self.value(t) for t in knots])
        widths = np.diff(knots)[:, None]
        return np.sum(0.5 * widths * (vals[1:] + vals[:-1]), axis=0)

    def sup_norm(self, T, samples=1001):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class CoshExample(Signal):
    """Forcing whose periodic solution is ``x_1 = alpha cosh(2(t - T/2)) + beta = -x_n``.

    ``h_1 = 2 alpha exp(2(t - T/2)) + 2 beta``, ``h_n = -h_1`` and the
    middle components are zero.  With one edge covering all vertices, unit
    weight and ``p = 2``, any constant middle values strictly between
    ``x_n`` and ``x_1`` complete a periodic solution.
    """

    n: int
    T: float
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("the cosh preset needs at least two vertices")

    def _pattern(self, s: float) -> np.ndarray:
        out = np.zeros(self.n)
        out[0] = s
        out[-1] = -s
        return out

    def value(self, t):
        return self._pattern(2.0 * self.alpha * math.exp(2.0 * (t - self.T / 2)) + 2.0 * self.beta)

    def integral(self, a, b):
        s = self.alpha * (math.exp(2.0 * (b - self.T / 2)) - math.exp(2.0 * (a - self.T / 2)))
        return self._pattern(s + 2.0 * self.beta * (b - a))

    def solution(self, t, middle=None) -> np.ndarray:
        """Periodic solution at ``t``; ``middle`` fills coordinates ``2..n-1`` (default 0)."""
        c = self.alpha * math.cosh(2.0 * (t - self.T / 2)) + self.beta
        out = np.zeros(self.n) if middle is None else np.concatenate([[0.0], np.asarray(middle, float), [0.0]])
        out[0], out[-1] = c, -c
        return out


@dataclass(frozen=True, eq=False)
class FunctionSignal(Signal):
    """A callable ``t -> R^n``; integrals use adaptive Gauss-Kronrod quadrature."""

    fn: Callable[[float], np.ndarray]
    n: int
    epsabs: float = 1e-14
    epsrel: float = 1e-12
    exact: bool = False

    def value(self, t):
        out = np.asarray(self.fn(t), dtype=float)
        if out.shape != (self.n,):
            raise ValueError(f"signal returned shape {out.shape}, expected ({self.n},)")
        return out

    def integral(self, a, b):
        val, _ = quad_vec(self.value, a, b, epsabs=self.epsabs, epsrel=self.epsrel)
        return np.asarray(val, dtype=float)


def read_signal_csv(path, n: int | None = None) -> PiecewiseLinearSignal:
    """Read ``t,h_1,...,h_n`` rows (with header) into a piecewise-linear signal."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0].strip() != "t":
        raise ValueError(f"{path}: header must start with 't'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: {data.shape[1]} columns but header names {len(header)}")
    sig = PiecewiseLinearSignal(data[:, 0], data[:, 1:])
    if n is not None and sig.n != n:
        raise ValueError(f"{path}: signal has {sig.n} components, graph has {n} vertices")
    return sig


_COSH = re.compile(r"^cosh-example(?:\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\))?$")


def parse_signal(text: str, n: int, T: float) -> Signal:
    """``zero``, ``cosh-example`` / ``cosh-example(alpha,beta)``, or a CSV path."""
    text = text.strip()
    if text == "zero":
        return ZeroSignal(n)
    m = _COSH.match(text)
    if m:
        alpha = float(m.group(1)) if m.group(1) else 1.0
        beta = float(m.group(2)) if m.group(2) else 0.0
        return CoshExample(n, T, alpha, beta)
    return read_signal_csv(text, n)
