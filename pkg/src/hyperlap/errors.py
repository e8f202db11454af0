"""Exception types raised across the package."""

from __future__ import annotations


class HypergraphError(ValueError):
    """Invalid hypergraph input. ``edge`` is the 0-based offending edge, if any."""

    def __init__(self, message: str, edge: int | None = None):
        super().__init__(message)
        self.edge = edge


class EmptyEdge(HypergraphError):
    pass


class SingletonEdge(HypergraphError):
    pass


class NonpositiveWeight(HypergraphError):
    pass


class IndexOutOfRange(HypergraphError):
    pass


class NoEdges(HypergraphError):
    pass


class NotAnOrdinaryGraph(HypergraphError):
    pass


class NonConvergence(RuntimeError):
    """An iterative solver hit its iteration cap; ``residual`` is the best value reached."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class IncompatibleForcing(ValueError):
    """The forcing has nonzero net mass on some component over one period."""

    def __init__(self, message: str, residuals):
        super().__init__(message)
        self.residuals = residuals


class GridMismatch(ValueError):
    pass
