"""Shifted Chebyshev space basis and the per-node interpolation matrices.

A space-varying parameter vector ``h(x)`` of length ``M`` is represented by
``N_b`` coefficients per entry,

    h_m(x) = sum_n W[m, n] * b_n(x / L),

where ``b_n`` is the n-th shifted Chebyshev polynomial on [0, 1].  Stacking the
rows of ``W`` into ``w`` gives ``h(x) = B(x) w`` with ``B(x) = I_M kron b(x)^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def chebyshev_shifted(n: int, x):
    """Evaluate the ``n``-th shifted Chebyshev polynomial (1-based) at ``x``.

    ``b_1 = 1``, ``b_2 = 2x - 1`` and ``b_{n+1} = 2(2x - 1) b_n - b_{n-1}``.
    Accepts scalars or arrays.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"basis index must be a positive integer, got {n!r}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("basis argument must be finite")
    t = 2.0 * x - 1.0
    prev, cur = np.ones_like(t), t
    if n == 1:
        out = prev
    else:
        for _ in range(int(n) - 2):
            prev, cur = cur, 2.0 * t * cur - prev
        out = cur
    return float(out) if out.ndim == 0 else out


def chebyshev_table(n_basis: int, x) -> np.ndarray:
    """All of ``b_1 .. b_{n_basis}`` at the points ``x``; shape ``(len(x), n_basis)``."""
    if int(n_basis) != n_basis or n_basis < 1:
        raise DomainError(f"number of basis functions must be >= 1, got {n_basis!r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("basis argument must be finite")
    t = 2.0 * x - 1.0
    out = np.empty((x.size, int(n_basis)))
    out[:, 0] = 1.0
    if n_basis > 1:
        out[:, 1] = t
    for j in range(2, int(n_basis)):
        out[:, j] = 2.0 * t * out[:, j - 1] - out[:, j - 2]
    return out


def block_matrices(vectors: np.ndarray, n_params: int) -> np.ndarray:
    """Stack ``B_k = I_M kron b_k^T`` for every row ``b_k`` of ``vectors``.

    Returns an array of shape ``(N, M, M * N_b)``.
    """
    vectors = np.atleast_2d(vectors)
    eye = np.eye(int(n_params))
    return np.stack([np.kron(eye, b[None, :]) for b in vectors])


@dataclass(frozen=True)
class BasisSet:
    """Sampled 1D basis: one vector ``b_k`` per node and the matching ``B_k``.

    Attributes
    ----------
    count : int
        Number of basis functions ``N_b``.
    length : float
        Length ``L`` of the spatial domain; arguments are rescaled by ``1/L``.
    positions : ndarray, shape (N,)
    vectors : ndarray, shape (N, N_b)
        ``vectors[k, n] = b_{n+1}(x_k / L)``.
    blocks : ndarray, shape (N, M, M * N_b)
    """

    count: int
    length: float
    positions: np.ndarray
    vectors: np.ndarray
    blocks: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_params(self) -> int:
        return self.blocks.shape[1]

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]


def sample_basis(positions, n_basis: int, length: float = 1.0, n_params: int = 1) -> BasisSet:
    """Sample ``n_basis`` shifted Chebyshev functions at the node positions.

    ``positions`` may also be any object with ``positions`` and ``length``
    attributes (e.g. :class:`difflms.pde_model.SpatialDomain`), in which case
    ``length`` is taken from it.
    """
    if hasattr(positions, "positions"):
        length = positions.length
        positions = positions.positions
    if length <= 0:
        raise DomainError("domain length must be positive")
    if int(n_basis) != n_basis or n_basis < 1:
        raise DomainError(f"number of basis functions must be >= 1, got {n_basis!r}")
    pos = np.atleast_1d(np.asarray(positions, dtype=float))
    if np.any(pos < 0) or np.any(pos > length):
        raise DomainError("node positions must lie in [0, L]")
    vectors = chebyshev_table(n_basis, pos / length)
    return BasisSet(
        count=int(n_basis),
        length=float(length),
        positions=pos,
        vectors=vectors,
        blocks=block_matrices(vectors, n_params),
    )


def interpolate(w, x, basis: BasisSet) -> np.ndarray:
    """Evaluate ``B(x) w`` at arbitrary position(s) ``x`` in ``[0, L]``.

    Works between nodes, which is how estimates are carried to locations
    without sensors.  Returns shape ``(M,)`` for scalar ``x`` and
    ``(len(x), M)`` otherwise.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size % basis.count:
        raise DomainError(
            f"coefficient vector of length {w.size} is not a multiple of N_b={basis.count}"
        )
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0) or np.any(xs > basis.length):
        raise DomainError("interpolation point outside [0, L]")
    b = chebyshev_table(basis.count, xs / basis.length)
    out = b @ w.reshape(-1, basis.count).T
    return out[0] if scalar else out


@dataclass(frozen=True)
class BasisSet2D:
    """Tensor-product shifted Chebyshev basis on a 2D grid.

    ``values[k, n]`` is ``b_{n1}(x_{k1}) * b_{n2}(y_{k2})`` with the node index
    ``k = k1 * ny + k2`` and basis index ``n = n1 * nb2 + n2`` (both row-major,
    zero-based).
    """

    counts: tuple
    shape: tuple
    values: np.ndarray
    blocks: np.ndarray

    @property
    def count(self) -> int:
        return self.counts[0] * self.counts[1]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]


def sample_basis_2d(x, y, nb1: int, nb2: int, length=(1.0, 1.0), n_params: int = 1) -> BasisSet2D:
    """Sample the 2D tensor-product basis at the grid ``x`` (axis 0) by ``y`` (axis 1)."""
    for n in (nb1, nb2):
        if int(n) != n or n < 1:
            raise DomainError(f"basis counts must be positive integers, got {(nb1, nb2)}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    bx = chebyshev_table(nb1, x / length[0])
    by = chebyshev_table(nb2, y / length[1])
    values = np.einsum("ia,jb->ijab", bx, by).reshape(x.size * y.size, nb1 * nb2)
    return BasisSet2D(
        counts=(int(nb1), int(nb2)),
        shape=(x.size, y.size),
        values=values,
        blocks=block_matrices(values, n_params),
    )
