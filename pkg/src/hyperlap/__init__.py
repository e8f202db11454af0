"""Weighted-hypergraph p-Laplacian: energy and subgradients, resolvent steps and flows built from them."""

__version__ = "0.1.0"

from .energy import canonical_subgradient, edge_face, energy, graph_laplacian_check, spreads
from .errors import (
    EmptyEdge,
    GridMismatch,
    HypergraphError,
    IncompatibleForcing,
    IndexOutOfRange,
    NoEdges,
    NonConvergence,
    NonpositiveWeight,
    NotAnOrdinaryGraph,
    SingletonEdge,
)
from .evolution import (
    Trajectory,
    decay_envelope,
    lower_envelope,
    reference_solution_4vertex,
    solve_cauchy,
    step_explicit,
    step_implicit,
)
from .hypergraph import (
    ComponentPartition,
    Hypergraph,
    component_average,
    connected_components,
    poincare_constant,
    read_hypergraph,
    validate,
    write_hypergraph,
    zero_eigenspace_basis,
)
from .periodic import PeriodicSolveReport, check_compatibility, orbit_offset, solve_periodic, solve_periodic_eps
from .projection import FaceProduct, distance_to_face, face_product, min_norm_point
from .resolvent import ProxResult, prox
from .signals import CoshExample, FunctionSignal, PiecewiseLinearSignal, ZeroSignal, parse_signal

__all__ = [name for name in dir() if not name.startswith("_")]
