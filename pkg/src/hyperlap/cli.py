"""Command-line front end.

Exit codes: 0 success, 1 invalid input or incompatible forcing, 2 solver
did not converge, 3 a verification or reproduction check failed.  Every
nonzero exit writes one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .energy import canonical_subgradient, graph_laplacian_check
from .errors import HypergraphError, IncompatibleForcing, NonConvergence
from .evolution import (
    MERGE_TIME_4VERTEX,
    first_face_change,
    format_trajectory,
    reference_solution_4vertex,
    solve_cauchy,
    write_trajectory,
)
from .hypergraph import Hypergraph, component_average, poincare_constant, read_hypergraph, zero_eigenspace_basis
from .periodic import (
    DEFAULT_EPS_SCHEDULE,
    format_report,
    orbit_offset,
    orbit_spreads,
    solve_periodic,
    write_report,
)
from .signals import CoshExample, parse_signal
from .verify import SUITES, Tolerances, run_suites

EXIT_INVALID = 1
EXIT_NONCONVERGENCE = 2
EXIT_VERIFY = 3

CASES = ("cauchy-4vertex", "cosh-periodic", "degeneracy", "graph-laplacian")


class VerificationFailed(Exception):
    def __init__(self, message: str, failures):
        super().__init__(message)
        self.failures = failures


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    p: float = 2.0
    T: float = 1.0
    dt: float = 1e-3
    scheme: str = "implicit"
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    signal: str = "zero"
    x0: tuple[float, ...] | None = None
    out: str | None = None
    orbit_out: str | None = None
    seed: int = 0
    n_seeds: int = 10
    workers: int = 1
    suite: tuple[str, ...] | None = None
    case: str = "all"
    tol_active: float | None = None
    tol_opt: float = 1e-10
    tol_periodic: float = 1e-9
    tol_uni: float = 1e-6
    tol_compat: float | None = None

    def validate(self) -> None:
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not (self.T > 0 and self.dt > 0):
            raise ValueError("T and dt must be positive")
        if self.dt >= self.T:
            raise ValueError(f"dt={self.dt} must be smaller than T={self.T}")
        for name in ("tol_active", "tol_opt", "tol_periodic", "tol_uni", "tol_compat"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name.replace('_', '-')} must be positive, got {v}")
        if self.scheme not in ("implicit", "explicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_seeds < 1 or self.workers < 1:
            raise ValueError("n-seeds and workers must be >= 1")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


_CONVERT = {
    "p": float, "T": float, "dt": float, "seed": int, "n_seeds": int, "workers": int,
    "eps_schedule": _floats, "x0": _floats,
    "tol_active": float, "tol_opt": float, "tol_periodic": float, "tol_uni": float, "tol_compat": float,
    "suite": lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
}


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` comments; keys use the long flag names."""
    out = {}
    known = {f.name for f in fields(RunConfig)} - {"command"}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        conv = _CONVERT.get(key, str)
        try:
            out[key] = conv(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's 2 (which means nonconvergence here)
    def error(self, message):
        raise ValueError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file; command-line flags override it")
    common.add_argument("--graph", help="hypergraph file (n/e records, 1-based vertices)")
    common.add_argument("--p", type=float, help="exponent p >= 1 (default 2)")
    common.add_argument("--T", type=float, help="final time or period (default 1)")
    common.add_argument("--dt", type=float, help="time step (default 1e-3)")
    common.add_argument("--scheme", choices=("implicit", "explicit"))
    common.add_argument("--eps-schedule", dest="eps_schedule", type=_floats, help="decreasing damping values, comma separated")
    common.add_argument("--signal", help="zero, cosh-example(alpha,beta) or a CSV file t,h_1,...,h_n")
    common.add_argument("--x0", type=_floats, help="initial potential, comma separated")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--orbit-out", dest="orbit_out", help="periodic orbit CSV")
    common.add_argument("--seed", type=int, help="first seed for randomized suites")
    common.add_argument("--n-seeds", dest="n_seeds", type=int, help="number of seeds (default 10)")
    common.add_argument("--workers", type=int, help="worker threads for verify")
    for name in ("active", "opt", "periodic", "uni", "compat"):
        common.add_argument(f"--tol-{name}", dest=f"tol_{name}", type=float)

    parser = _Parser(prog="hyperlap", description="Hypergraph p-Laplacian flows.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("info", parents=[common], help="connected components and the Poincare constant")
    sub.add_parser("solve-cauchy", parents=[common], help="integrate the flow from --x0")
    sub.add_parser("solve-periodic", parents=[common], help="periodic orbit for a forcing")
    v = sub.add_parser("verify", parents=[common], help="seeded property suites")
    v.add_argument("--suite", type=_CONVERT["suite"], default=argparse.SUPPRESS, help=f"comma-separated subset of: {', '.join(SUITES)}")
    r = sub.add_parser("reproduce", parents=[common], help="fixed reference checks")
    r.add_argument("--case", choices=CASES + ("all",), default=argparse.SUPPRESS)
    return parser


def make_config(argv) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    merged = read_config(args["config"]) if "config" in args else {}
    merged.update({k: v for k, v in args.items() if k != "config"})
    cfg = RunConfig(**merged)
    cfg.validate()
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_graph(cfg: RunConfig) -> Hypergraph:
    if not cfg.graph:
        raise ValueError(f"{cfg.command} needs --graph")
    return read_hypergraph(cfg.graph)


def _vec(v) -> str:
    return ",".join(repr(float(a)) for a in v)


# -- subcommands -------------------------------------------------------------

def cmd_info(cfg: RunConfig) -> int:
    G = _load_graph(cfg)
    P = G.components
    lines = [
        f"vertices = {G.n}",
        f"edges = {G.num_edges}",
        f"components = {P.count}",
    ]
    for k, comp in enumerate(P.components, 1):
        lines.append(f"component_{k} = {','.join(str(v + 1) for v in comp)}")
    lines.append(f"p = {cfg.p!r}")
    lines.append(f"poincare_constant = {poincare_constant(G, P, cfg.p)!r}")
    for k, b in enumerate(zero_eigenspace_basis(P), 1):
        lines.append(f"zero_eigenvector_{k} = {_vec(b)}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def cmd_solve_cauchy(cfg: RunConfig) -> int:
    G = _load_graph(cfg)
    if cfg.x0 is None:
        raise ValueError("solve-cauchy needs --x0")
    h = parse_signal(cfg.signal, G.n, cfg.T)
    traj = solve_cauchy(G, np.array(cfg.x0), h, cfg.T, cfg.dt, cfg.scheme, cfg.p, cfg.tol_opt, cfg.tol_active)
    _emit(format_trajectory(traj), cfg.out)
    return 0


def cmd_solve_periodic(cfg: RunConfig) -> int:
    G = _load_graph(cfg)
    h = parse_signal(cfg.signal, G.n, cfg.T)
    v0 = None if cfg.x0 is None else np.array(cfg.x0)
    report = solve_periodic(
        G, h, cfg.T, cfg.dt, cfg.p, cfg.eps_schedule, cfg.tol_periodic, cfg.tol_uni, cfg.tol_compat, v0,
        tol_opt=cfg.tol_opt, tol_active=cfg.tol_active,
    )
    if cfg.out:
        write_report(report, cfg.out, cfg.orbit_out)
    else:
        sys.stdout.write(format_report(report))
        if cfg.orbit_out:
            write_trajectory(report.orbit, cfg.orbit_out)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    seeds = range(cfg.seed, cfg.seed + cfg.n_seeds)
    tol = Tolerances(tol_opt=cfg.tol_opt, tol_active=cfg.tol_active)
    results = run_suites(seeds, cfg.suite, cfg.workers, tol)
    lines, failures = [], []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.suite} seed={r.seed} cases={r.cases} violations={r.violations} worst={r.worst:.3e}")
        if not r.passed:
            failures.append({"suite": r.suite, "seed": r.seed, "violations": r.violations, "example": r.first_failure})
    _emit("\n".join(lines) + "\n", cfg.out)
    if failures:
        raise VerificationFailed(f"{len(failures)} suite run(s) had violations", failures)
    return 0


def _check(lines, failures, name, value, limit, ok=None):
    ok = value <= limit if ok is None else ok
    lines.append(f"{'PASS' if ok else 'FAIL'} {name} value={value:.6g} limit={limit:.6g}")
    if not ok:
        failures.append({"check": name, "value": value, "limit": limit})


def case_cauchy_4vertex(cfg, lines, failures):
    G = Hypergraph(4, [[0, 1, 2, 3]])
    x0 = np.array([2.0, 1.0, -1.0, -2.0])
    errs = []
    for dt in (cfg.dt, cfg.dt / 2):
        traj = solve_cauchy(G, x0, None, 2.0, dt, "implicit", 2.0, cfg.tol_opt, cfg.tol_active)
        errs.append(float(np.max(np.abs(traj.states - reference_solution_4vertex(traj.times)))))
        if dt == cfg.dt:
            merge = first_face_change(G, traj)
    _check(lines, failures, "cauchy-4vertex max_error", errs[0], 5e-3)
    ratio = errs[0] / errs[1]
    _check(lines, failures, "cauchy-4vertex halving_ratio", ratio, 2.3, 1.7 <= ratio <= 2.3)
    miss = math.inf if merge is None else abs(merge - MERGE_TIME_4VERTEX)
    _check(lines, failures, "cauchy-4vertex merge_time_offset", miss, 2 * cfg.dt)


def case_cosh_periodic(cfg, lines, failures):
    G = Hypergraph(4, [[0, 1, 2, 3]])
    h = CoshExample(4, 1.0)
    report = solve_periodic(G, h, 1.0, cfg.dt, 2.0, cfg.eps_schedule, cfg.tol_periodic, cfg.tol_uni, cfg.tol_compat,
                            tol_opt=cfg.tol_opt, tol_active=cfg.tol_active)
    orbit = report.orbit
    ref = type(orbit)(orbit.times, np.array([h.solution(t) for t in orbit.times]), orbit.energy, orbit.means, orbit.residual)
    gamma, dev = orbit_offset(orbit, ref)
    spread_err = float(np.max(np.abs(orbit_spreads(G, orbit)[:, 0] - 2 * np.cosh(2 * (orbit.times - 0.5)))))
    _check(lines, failures, "cosh-periodic orbit_deviation", dev, 1e-2)
    _check(lines, failures, "cosh-periodic spread_error", spread_err, 1e-2)
    _check(lines, failures, "cosh-periodic outer_offset", float(max(abs(gamma[0]), abs(gamma[3]))), 1e-2)
    _check(lines, failures, "cosh-periodic periodic_residual", report.periodic_residual, cfg.tol_periodic)


def case_degeneracy(cfg, lines, failures):
    G = Hypergraph(4, [[0, 1, 2, 3]])
    pairs = {
        "given": (np.array([1.0, 0.3, -0.7, -1.0]), np.array([1.0, -0.5, 0.2, -1.0])),
        "zero_mean": (np.array([1.0, 0.3, -0.3, -1.0]), np.array([1.0, -0.3, 0.3, -1.0])),
    }
    for label, (x1, x2) in pairs.items():
        for p in (1.0, 2.0, 3.0):
            want = np.array([2 ** (p - 1), 0.0, 0.0, -(2 ** (p - 1))])
            y1 = canonical_subgradient(G, x1, p).vector
            y2 = canonical_subgradient(G, x2, p).vector
            exact = np.array_equal(y1, want) and np.array_equal(y2, want)
            tag = f"degeneracy {label} p={p:g}"
            _check(lines, failures, f"{tag} subgradients_exact", 0.0 if exact else 1.0, 0.0, exact)
            _check(lines, failures, f"{tag} pairing", abs(float((y1 - y2) @ (x1 - x2))), 1e-12)
    # the given pair has means -0.1 and -0.075; reported, not asserted
    for k, x in enumerate(pairs["given"], 1):
        lines.append(f"INFO degeneracy given mean_x{k} = {float(component_average(x, G.components)[0]):.17g}")
    means = max(float(np.max(np.abs(component_average(x, G.components)))) for x in pairs["zero_mean"])
    _check(lines, failures, "degeneracy zero_mean means", means, 0.0)


def case_graph_laplacian(cfg, lines, failures):
    fixtures = [
        (Hypergraph(2, [[0, 1]]), [1.0, 0.0], [1.0, -1.0]),
        (Hypergraph(3, [[0, 1], [1, 2], [0, 2]]), [1.0, 0.0, 0.0], [2.0, -1.0, -1.0]),
        (Hypergraph(3, [[0, 1], [1, 2]]), [5.0, 5.0, 5.0], [0.0, 0.0, 0.0]),
    ]
    for k, (G, x, want) in enumerate(fixtures, 1):
        a = canonical_subgradient(G, np.array(x), 2.0).vector
        b = graph_laplacian_check(G, np.array(x), 2.0)
        ok = np.array_equal(a, b) and np.array_equal(a, np.array(want))
        _check(lines, failures, f"graph-laplacian fixture_{k} exact", 0.0 if ok else 1.0, 0.0, ok)


def cmd_reproduce(cfg: RunConfig) -> int:
    runners = {
        "cauchy-4vertex": case_cauchy_4vertex,
        "cosh-periodic": case_cosh_periodic,
        "degeneracy": case_degeneracy,
        "graph-laplacian": case_graph_laplacian,
    }
    chosen = CASES if cfg.case == "all" else (cfg.case,)
    lines, failures = [], []
    for name in chosen:
        runners[name](cfg, lines, failures)
    _emit("\n".join(lines) + "\n", cfg.out)
    if failures:
        raise VerificationFailed(f"{len(failures)} reproduction check(s) failed", failures)
    return 0


COMMANDS = {
    "info": cmd_info,
    "solve-cauchy": cmd_solve_cauchy,
    "solve-periodic": cmd_solve_periodic,
    "verify": cmd_verify,
    "reproduce": cmd_reproduce,
}


def _fail(code: int, exc: BaseException, **extra) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    payload.update(extra)
    sys.stderr.write(json.dumps(payload, default=lambda o: np.asarray(o).tolist()) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cfg = make_config(argv)
        return COMMANDS[cfg.command](cfg)
    except IncompatibleForcing as exc:
        return _fail(EXIT_INVALID, exc, residuals=exc.residuals)
    except NonConvergence as exc:
        return _fail(EXIT_NONCONVERGENCE, exc, residual=exc.residual, iterations=exc.iterations)
    except VerificationFailed as exc:
        return _fail(EXIT_VERIFY, exc, failures=exc.failures)
    except HypergraphError as exc:
        return _fail(EXIT_INVALID, exc, edge=None if exc.edge is None else exc.edge + 1)
    except (ValueError, OSError) as exc:
        return _fail(EXIT_INVALID, exc)
