"""Ground truth and synthetic data streams.

Two data sources are provided:

* the generic space-varying regression model ``d_k(i) = u_{k,i} h_k + v_k(i)``
  with Gaussian regressors and noise, where ``h_k = B_k w`` comes from a basis
  expansion (optionally built from a 1D diffusion coefficient profile
  ``theta(x)`` through the explicit finite-difference scheme), and
* the 2D Poisson input-estimation problem on a square grid with zero
  Dirichlet boundary, where the regressor is the constant 1 and the reference
  signal is the five-point Laplacian of noisy field measurements.

Random streams
--------------
A batch is a pure function of ``(spec, truth, seed, i)``: ``synthesize_batch``
seeds ``numpy.random.SeedSequence(seed, spawn_key=(i,))``.  For long runs
:class:`SampleStream` draws blocks of iterations from two per-trial generators
(regressors and noise); block boundaries do not change the drawn values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, chebyshev_table, sample_basis
from .errors import DomainError, IterationLimitError


@dataclass(frozen=True)
class SpatialDomain:
    """Uniform 1D grid on ``[0, L]`` with ``N`` interior nodes ``x_k = k dx``."""

    length: float
    n_nodes: int
    dt: float = 1e-3

    def __post_init__(self):
        if self.length <= 0 or self.n_nodes < 1:
            raise DomainError("need L > 0 and at least one node")
        if self.dt <= 0:
            raise DomainError("time step must be positive")

    @property
    def dx(self) -> float:
        return self.length / (self.n_nodes + 1)

    @property
    def nu(self) -> float:
        return self.dt / self.dx**2

    @property
    def positions(self) -> np.ndarray:
        return self.dx * np.arange(1, self.n_nodes + 1)


# --------------------------------------------------------------------------
# 1D model
# --------------------------------------------------------------------------


def discretize_theta_to_h(theta, nu: float) -> np.ndarray:
    """Per-node regression vectors of the explicit FDM scheme.

    ``theta`` holds ``theta_0 .. theta_{N+1}``; returns shape ``(N, 3)`` with
    rows ``[nu/4 (t_{k-1} + 4 t_k - t_{k+1}), 1 - 2 nu t_k,
    nu/4 (-t_{k-1} + 4 t_k + t_{k+1})]``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 3:
        raise DomainError("need at least three theta samples (one interior node)")
    left, mid, right = theta[:-2], theta[1:-1], theta[2:]
    return np.column_stack([
        nu / 4.0 * (left + 4.0 * mid - right),
        1.0 - 2.0 * nu * mid,
        nu / 4.0 * (-left + 4.0 * mid + right),
    ])


@dataclass(frozen=True)
class GroundTruthModel:
    """Coefficients ``W`` (M x N_b) shared by all nodes and the implied
    per-node truth ``h_k = B_k w`` with ``w = vec(W^T)``."""

    W: np.ndarray
    blocks: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        object.__setattr__(self, "W", W)
        if self.blocks.shape[1:] != (W.shape[0], W.size):
            raise DomainError(f"basis blocks {self.blocks.shape} do not match W {W.shape}")

    @property
    def n_params(self) -> int:
        return self.W.shape[0]

    @property
    def n_basis(self) -> int:
        return self.W.shape[1]

    @property
    def w(self) -> np.ndarray:
        return self.W.reshape(-1)

    @property
    def h(self) -> np.ndarray:
        """Per-node truth, shape ``(N, M)``."""
        return self.blocks @ self.w

    @classmethod
    def from_vector(cls, w, blocks):
        blocks = np.asarray(blocks)
        return cls(np.asarray(w, dtype=float).reshape(blocks.shape[1], -1), blocks)


def random_ground_truth(basis, n_params: int, rng, scale: float = 1.0) -> GroundTruthModel:
    """Draw ``W`` with i.i.d. N(0, scale^2) entries."""
    W = scale * rng.standard_normal((n_params, basis.count))
    return GroundTruthModel(W, basis.blocks)


def ground_truth_from_theta(theta_coeffs, domain: SpatialDomain, n_basis: int,
                            n_fit: int = 257) -> tuple[GroundTruthModel, BasisSet]:
    """Ground truth for the 1D diffusion PDE model.

    ``theta(x) = sum_n theta_coeffs[n] b_{n+1}(x/L)``.  Each entry of ``h(x)``
    is then a polynomial of the same degree in ``x``, so it is represented
    exactly by ``n_basis >= len(theta_coeffs)`` shifted Chebyshev functions;
    the coefficients are recovered by least squares on a dense grid.
    Returns the model (M = 3) and the matching basis.
    """
    theta_coeffs = np.asarray(theta_coeffs, dtype=float)
    if n_basis < theta_coeffs.size:
        raise DomainError("n_basis must be at least the number of theta coefficients")
    L, dx, nu = domain.length, domain.dx, domain.nu

    def theta(x):
        return chebyshev_table(theta_coeffs.size, x / L) @ theta_coeffs

    xs = np.linspace(dx, L - dx, n_fit)
    h = np.column_stack([
        nu / 4.0 * (theta(xs - dx) + 4.0 * theta(xs) - theta(xs + dx)),
        1.0 - 2.0 * nu * theta(xs),
        nu / 4.0 * (-theta(xs - dx) + 4.0 * theta(xs) + theta(xs + dx)),
    ])
    design = chebyshev_table(n_basis, xs / L)
    W = np.linalg.lstsq(design, h, rcond=None)[0].T
    basis = sample_basis(domain, n_basis, n_params=3)
    return GroundTruthModel(W, basis.blocks), basis


@dataclass(frozen=True)
class RegressorSpec:
    """Per-node regressor covariances ``R_{u,k}`` and noise variances.

    Covariances must be symmetric positive definite; the symmetric square
    root used to color white regressors is computed once here.
    """

    covariances: np.ndarray
    noise_vars: np.ndarray
    sqrt_cov: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        R = np.asarray(self.covariances, dtype=float)
        if R.ndim == 2:
            R = R[None]
        s2 = np.atleast_1d(np.asarray(self.noise_vars, dtype=float))
        if R.ndim != 3 or R.shape[1] != R.shape[2]:
            raise DomainError("covariances must have shape (N, M, M)")
        if s2.shape != (R.shape[0],):
            raise DomainError("need one noise variance per node")
        if np.any(s2 < 0) or not np.all(np.isfinite(s2)):
            raise DomainError("noise variances must be finite and nonnegative")
        if not np.allclose(R, np.swapaxes(R, 1, 2), atol=1e-12):
            raise DomainError("covariances must be symmetric")
        lam, Q = np.linalg.eigh(R)
        if np.any(lam <= 0):
            k = int(np.argmin(lam.min(axis=1)))
            raise DomainError(f"covariance of node {k} is not positive definite "
                              f"(min eigenvalue {lam[k].min():.3e})")
        root = np.einsum("kij,kj,klj->kil", Q, np.sqrt(lam), Q)
        object.__setattr__(self, "covariances", R)
        object.__setattr__(self, "noise_vars", s2)
        object.__setattr__(self, "sqrt_cov", root)

    @property
    def n_nodes(self) -> int:
        return self.covariances.shape[0]

    @property
    def n_params(self) -> int:
        return self.covariances.shape[1]


def random_regressor_spec(n_nodes: int, n_params: int, rng, trace_range=(1.0, 5.0),
                          noise_range=(0.05, 0.1)) -> RegressorSpec:
    """White regressors with ``Tr(R_{u,k}) ~ U(trace_range)`` and
    ``sigma_{v,k}^2 ~ U(noise_range)``; ``R_{u,k} = Tr/M * I``."""
    traces = rng.uniform(*trace_range, size=n_nodes)
    noise = rng.uniform(*noise_range, size=n_nodes)
    R = traces[:, None, None] / n_params * np.eye(n_params)[None]
    return RegressorSpec(R, noise)


@dataclass(frozen=True)
class SampleBatch:
    """Data of every node at iteration ``i``: regressors ``u`` (N x M),
    observations ``d`` (N,) and the noise ``v`` that produced them."""

    i: int
    u: np.ndarray
    d: np.ndarray
    v: np.ndarray | None = None


def _stream_seeds(seed, i=None):
    key = () if i is None else (int(i),)
    return np.random.SeedSequence(seed, spawn_key=key)


def synthesize_batch(spec: RegressorSpec, truth: GroundTruthModel, seed, i: int) -> SampleBatch:
    """One batch of the regression model, deterministic in ``(seed, i)``."""
    if spec.n_params != truth.n_params:
        raise DomainError("regressor and truth dimensions differ")
    rng = np.random.default_rng(_stream_seeds(seed, i))
    white = rng.standard_normal((spec.n_nodes, spec.n_params))
    u = np.einsum("kij,kj->ki", spec.sqrt_cov, white)
    v = np.sqrt(spec.noise_vars) * rng.standard_normal(spec.n_nodes)
    d = np.einsum("km,km->k", u, truth.h) + v
    return SampleBatch(int(i), u, d, v)


class SampleStream:
    """Sequential regression data for one Monte-Carlo trial.

    Regressors and noise come from two independent generators spawned from
    ``seed``, so drawing ``n`` iterations at once or in pieces gives the same
    values.
    """

    def __init__(self, spec: RegressorSpec, truth: GroundTruthModel, seed):
        self.spec = spec
        self.truth = truth
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        su, sv = ss.spawn(2)
        self._gu = np.random.default_rng(su)
        self._gv = np.random.default_rng(sv)
        self._h = truth.h
        self._sigma = np.sqrt(spec.noise_vars)

    def draw(self, n_iter: int):
        """Return ``u`` (n_iter, N, M), ``d`` (n_iter, N), ``v`` (n_iter, N)."""
        spec = self.spec
        white = self._gu.standard_normal((n_iter, spec.n_nodes, spec.n_params))
        u = np.einsum("kij,tkj->tki", spec.sqrt_cov, white)
        v = self._sigma * self._gv.standard_normal((n_iter, spec.n_nodes))
        d = np.einsum("tkm,km->tk", u, self._h) + v
        return u, d, v


def node_snr(spec: RegressorSpec, truth: GroundTruthModel, k: int) -> float:
    """``10 log10(h_k^T R_{u,k} h_k / sigma_{v,k}^2)``; ``inf`` for a noiseless node."""
    h = truth.h[k]
    signal = float(h @ spec.covariances[k] @ h)
    s2 = float(spec.noise_vars[k])
    if s2 == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / s2)


# --------------------------------------------------------------------------
# 2D Poisson example
# --------------------------------------------------------------------------


def two_bump_input(n_interior: int = 11) -> np.ndarray:
    """The two-bump input surface on an ``n x n`` interior grid (indices 1..n)."""
    kappa = (n_interior - 1) ** 2 / 4.0
    k = np.arange(1, n_interior + 1, dtype=float)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return (np.exp(-kappa * ((k1 - 4) ** 2 + (k2 - 4) ** 2))
            - 5.0 * np.exp(-kappa * ((k1 - 8) ** 2 + (k2 - 8) ** 2)) + 1.0)


@dataclass(frozen=True)
class Poisson2DProblem:
    """Poisson equation ``f_xx + f_yy = h`` on the unit square, zero boundary.

    ``h`` lives on the ``nx x ny`` interior nodes; the full grid including
    the boundary is ``(nx + 2) x (ny + 2)`` with spacing ``dx = 1/(nx + 1)``.
    """

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DomainError("input surface must be a square interior grid")
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @property
    def dx(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def coords(self) -> np.ndarray:
        """Interior coordinates ``k dx``, ``k = 1..n``."""
        return self.dx * np.arange(1, self.n + 1)

    @classmethod
    def default(cls, n_interior: int = 11):
        return cls(two_bump_input(n_interior))


def laplacian(f: np.ndarray, dx: float) -> np.ndarray:
    """Five-point Laplacian of a full grid (last two axes), evaluated on its interior."""
    return (f[..., 2:, 1:-1] + f[..., 1:-1, 2:] + f[..., :-2, 1:-1] + f[..., 1:-1, :-2]
            - 4.0 * f[..., 1:-1, 1:-1]) / dx**2


def poisson_solve(problem: Poisson2DProblem, omega: float = 0.9, tol: float = 1e-8,
                  max_iter: int = 200_000) -> np.ndarray:
    """Solve the discrete Poisson equation by weighted (over-relaxed) Jacobi sweeps.

    Returns the full ``(n + 2) x (n + 2)`` field with zero boundary.  Stops once
    the max-norm residual of the five-point equation drops to ``tol``.
    """
    h, dx = problem.h, problem.dx
    f = np.zeros((problem.n + 2, problem.n + 2))
    inner = f[1:-1, 1:-1]
    residual = np.inf
    for _ in range(max_iter):
        r = laplacian(f, dx) - h
        residual = float(np.abs(r).max())
        if residual <= tol:
            return f
        # Jacobi update is f <- f + dx^2 r / 4; relax by omega.
        inner += omega * dx**2 / 4.0 * r
    r = laplacian(f, dx) - h
    residual = float(np.abs(r).max())
    if residual <= tol:
        return f
    raise IterationLimitError("Jacobi relaxation did not converge", residual)


def snr_noise_variances(f: np.ndarray, snr_db) -> np.ndarray:
    """Measurement noise variances giving ``f_k^2 / sigma_k^2 = 10^(snr/10)``
    at every interior node."""
    inner = f[1:-1, 1:-1]
    return inner**2 / 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def reference_signal(z: np.ndarray, dx: float) -> np.ndarray:
    """Reference ``d`` at interior nodes from a full grid of measurements ``z``."""
    return laplacian(z, dx)


def poisson_reference_stream(f: np.ndarray, noise_vars, rng, i: int = 0,
                             nodes=None) -> SampleBatch:
    """Noisy reference signals for the Poisson model at iteration ``i``.

    Interior measurements are ``z = f + n`` with independent zero-mean
    Gaussian ``n`` of the given per-node variances; boundary values are the
    known Dirichlet data and carry no noise.  The regressor is the constant 1.
    ``nodes`` optionally restricts the output to full-grid indices
    ``(k1, k2)``, which must be interior.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0] - 2
    dx = 1.0 / (n + 1)
    noise = np.zeros_like(f)
    noise[1:-1, 1:-1] = np.sqrt(np.asarray(noise_vars, dtype=float)) * rng.standard_normal((n, n))
    d = reference_signal(f + noise, dx)
    v = reference_signal(noise, dx)
    if nodes is None:
        d, v = d.reshape(-1), v.reshape(-1)
    else:
        idx = []
        for k1, k2 in nodes:
            if not (1 <= k1 <= n and 1 <= k2 <= n):
                raise DomainError(f"node {(k1, k2)} is on the boundary or outside the grid")
            idx.append((k1 - 1, k2 - 1))
        rows, cols = zip(*idx)
        d, v = d[rows, cols], v[rows, cols]
    return SampleBatch(int(i), np.ones((d.size, 1)), d, v)


class PoissonStream:
    """Sequential Poisson reference data for one Monte-Carlo trial.

    Same contract as :class:`SampleStream`: ``draw(n)`` returns ``u``
    (n, N, 1) of ones, ``d`` (n, N) and the effective noise ``v`` (n, N) with
    nodes in row-major interior order.
    """

    def __init__(self, f, noise_vars, seed):
        self.f = np.asarray(f, dtype=float)
        self.n = self.f.shape[0] - 2
        self.dx = 1.0 / (self.n + 1)
        self._sigma = np.sqrt(np.asarray(noise_vars, dtype=float))
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._rng = np.random.default_rng(ss)

    def draw(self, n_iter: int):
        n = self.n
        noise = np.zeros((n_iter, n + 2, n + 2))
        noise[:, 1:-1, 1:-1] = self._sigma * self._rng.standard_normal((n_iter, n, n))
        v = reference_signal(noise, self.dx).reshape(n_iter, -1)
        d = reference_signal(self.f, self.dx).reshape(-1) + v
        return np.ones((n_iter, n * n, 1)), d, v
