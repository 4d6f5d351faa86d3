"""Network topologies and combination matrices.

Orientation convention used throughout: entry ``[l, k]`` of a combination
matrix is the weight node ``k`` gives to data arriving from node ``l``.  The
fusion matrices ``A1``/``A2`` are *left*-stochastic (each column sums to one)
and the data-sharing matrix ``C`` is *right*-stochastic (each row sums to one).
Getting this backwards silently produces a different algorithm, so every
constructor here states which orientation it returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected graph; ``adjacency`` has no self loops but every
    neighborhood includes its own node."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DomainError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise DomainError("adjacency must be symmetric")
        adj = adj.copy()
        np.fill_diagonal(adj, False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Adjacency with self loops: ``support[l, k]`` iff ``l`` is in N_k."""
        return self.adjacency | np.eye(self.n_nodes, dtype=bool)

    def neighborhood(self, k: int) -> list[int]:
        return [int(l) for l in np.flatnonzero(self.support[:, k])]

    @property
    def degrees(self) -> np.ndarray:
        """Neighborhood sizes ``n_k = |N_k|`` (self included)."""
        return self.support.sum(axis=0)

    @classmethod
    def from_support(cls, matrix, tol=0.0):
        """Smallest graph whose support contains the nonzeros of ``matrix``."""
        nz = np.abs(np.asarray(matrix, dtype=float)) > tol
        return cls(nz | nz.T)


def line_topology(n_nodes: int) -> NetworkGraph:
    """Nodes on a line, each linked to its immediate left/right neighbor."""
    if n_nodes < 1:
        raise DomainError("need at least one node")
    adj = np.zeros((n_nodes, n_nodes), dtype=bool)
    idx = np.arange(n_nodes - 1)
    adj[idx, idx + 1] = adj[idx + 1, idx] = True
    return NetworkGraph(adj)


def grid_topology(nx: int, ny: int) -> NetworkGraph:
    """4-neighbor grid; node ``(k1, k2)`` has index ``k1 * ny + k2``."""
    if nx < 1 or ny < 1:
        raise DomainError("grid dimensions must be positive")
    n = nx * ny
    adj = np.zeros((n, n), dtype=bool)
    for k1 in range(nx):
        for k2 in range(ny):
            k = k1 * ny + k2
            if k1 + 1 < nx:
                adj[k, k + ny] = adj[k + ny, k] = True
            if k2 + 1 < ny:
                adj[k, k + 1] = adj[k + 1, k] = True
    return NetworkGraph(adj)


def complete_topology(n_nodes: int) -> NetworkGraph:
    adj = ~np.eye(n_nodes, dtype=bool)
    return NetworkGraph(adj)


def metropolis_weights(g: NetworkGraph) -> np.ndarray:
    """Metropolis rule; symmetric and doubly stochastic."""
    n = g.degrees
    a = np.where(g.adjacency, 1.0 / np.maximum.outer(n, n), 0.0)
    a[np.diag_indices_from(a)] = 1.0 - a.sum(axis=0)
    return a


def uniform_weights(g: NetworkGraph) -> np.ndarray:
    """Uniform averaging ``a[l, k] = 1/n_k``; left-stochastic."""
    return g.support / g.degrees[None, :].astype(float)


def relative_degree_weights(g: NetworkGraph) -> np.ndarray:
    """``a[l, k] = n_l / sum_{m in N_k} n_m``; left-stochastic."""
    n = g.degrees.astype(float)
    num = g.support * n[:, None]
    return num / num.sum(axis=0, keepdims=True)


RULES = {
    "metropolis": metropolis_weights,
    "uniform": uniform_weights,
    "relative-degree": relative_degree_weights,
    "identity": lambda g: np.eye(g.n_nodes),
}


def combination_matrix(g: NetworkGraph, rule: str, orientation: str = "left") -> np.ndarray:
    """Build a combination matrix by rule name in the requested orientation.

    Rules produce left-stochastic matrices; ``orientation="right"`` transposes,
    which keeps the sparsity pattern because the graph is undirected.
    """
    try:
        a = RULES[rule](g)
    except KeyError:
        raise DomainError(f"unknown combination rule {rule!r}; known: {sorted(RULES)}") from None
    if orientation == "left":
        return a
    if orientation == "right":
        return a.T.copy()
    raise DomainError(f"orientation must be 'left' or 'right', got {orientation!r}")


@dataclass(frozen=True)
class Violation:
    kind: str
    index: tuple
    value: float


@dataclass(frozen=True)
class StochasticReport:
    orientation: str
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_stochastic(matrix, orientation: str = "left", graph: NetworkGraph | None = None,
                        tol: float = 1e-10) -> StochasticReport:
    """Check nonnegativity, the column/row sums for ``orientation`` and,
    when ``graph`` is given, that weights vanish outside each neighborhood.

    Never raises; problems come back as a list of :class:`Violation`.
    """
    violations = []
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return StochasticReport(orientation, [Violation("shape", tuple(a.shape), float("nan"))])
    if orientation not in ("left", "right", "doubly"):
        return StochasticReport(orientation, [Violation("orientation", (), float("nan"))])
    if not np.all(np.isfinite(a)):
        for idx in zip(*np.nonzero(~np.isfinite(a))):
            violations.append(Violation("non-finite", tuple(int(i) for i in idx), float(a[idx])))
    for idx in zip(*np.nonzero(a < -tol)):
        violations.append(Violation("negative", tuple(int(i) for i in idx), float(a[idx])))
    if orientation in ("left", "doubly"):
        for k, s in enumerate(a.sum(axis=0)):
            if abs(s - 1.0) > tol:
                violations.append(Violation("column-sum", (k,), float(s)))
    if orientation in ("right", "doubly"):
        for k, s in enumerate(a.sum(axis=1)):
            if abs(s - 1.0) > tol:
                violations.append(Violation("row-sum", (k,), float(s)))
    if graph is not None:
        if graph.n_nodes != a.shape[0]:
            violations.append(Violation("graph-size", (graph.n_nodes,), float(a.shape[0])))
        else:
            for idx in zip(*np.nonzero((a != 0) & ~graph.support)):
                violations.append(Violation("off-support", tuple(int(i) for i in idx), float(a[idx])))
    return StochasticReport(orientation, violations)


@dataclass(frozen=True)
class CombinationPolicy:
    """The fusion matrices ``A1``, ``A2`` (left-stochastic) and the data
    sharing matrix ``C`` (right-stochastic).  Validated on construction."""

    A1: np.ndarray
    A2: np.ndarray
    C: np.ndarray
    graph: NetworkGraph | None = None
    tol: float = 1e-10

    def __post_init__(self):
        for name, orient in (("A1", "left"), ("A2", "left"), ("C", "right")):
            mat = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, mat)
            rep = validate_stochastic(mat, orient, self.graph, self.tol)
            if not rep.ok:
                raise DomainError(f"{name} is not a valid {orient}-stochastic matrix: "
                                  f"{rep.violations[:3]}")
        shapes = {self.A1.shape, self.A2.shape, self.C.shape}
        if len(shapes) != 1:
            raise DomainError(f"combination matrices disagree in size: {shapes}")

    @property
    def n_nodes(self) -> int:
        return self.A1.shape[0]

    @classmethod
    def identity(cls, n_nodes: int):
        eye = np.eye(n_nodes)
        return cls(eye, eye, eye)

    @classmethod
    def atc(cls, A, C=None):
        n = np.asarray(A).shape[0]
        return cls(np.eye(n), A, np.eye(n) if C is None else C)

    def extended(self, block: int):
        """Kronecker extensions ``X kron I_block`` of ``(A1, A2, C)``."""
        eye = np.eye(block)
        return np.kron(self.A1, eye), np.kron(self.A2, eye), np.kron(self.C, eye)
