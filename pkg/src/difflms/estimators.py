"""Centralized LMS, general diffusion LMS and ATC diffusion.

The ``*_step`` functions follow the recursions node by node and are meant to
be read against the algorithm statements; :func:`simulate` runs the same
recursions vectorized over nodes and Monte-Carlo trials and is what the
experiment harness uses.  The two are checked against each other in the
test-suite.

All updates are synchronous: every node reads iteration ``i-1`` quantities
and writes iteration ``i`` quantities (double buffering).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .pde_model import SampleStream


@dataclass(frozen=True)
class EstimatorState:
    """Per-node estimates of the global coefficients.

    ``w`` has shape ``(N, M*N_b)``, ``h`` is ``B_k w_k`` stacked to ``(N, M)``.
    """

    w: np.ndarray
    h: np.ndarray
    mu: np.ndarray
    i: int = -1

    @classmethod
    def zeros(cls, blocks, mu):
        blocks = np.asarray(blocks)
        n, m, dim = blocks.shape
        mu = np.broadcast_to(np.asarray(mu, dtype=float), (n,)).copy()
        if np.any(mu < 0):
            raise DomainError("step sizes must be nonnegative")
        return cls(np.zeros((n, dim)), np.zeros((n, m)), mu)


@dataclass(frozen=True)
class CentralizedState:
    w: np.ndarray
    mu: float
    i: int = -1

    @classmethod
    def zeros(cls, blocks, mu):
        return cls(np.zeros(np.asarray(blocks).shape[2]), float(mu))


def _check(blocks, batch, n_nodes):
    if blocks.shape[0] != n_nodes or batch.u.shape != (n_nodes, blocks.shape[1]) \
            or batch.d.shape != (n_nodes,):
        raise DomainError(
            f"batch (u {batch.u.shape}, d {batch.d.shape}) does not match "
            f"{n_nodes} nodes with blocks {blocks.shape}")


def centralized_step(state: CentralizedState, batch, blocks) -> CentralizedState:
    """``w_i = w_{i-1} + mu sum_k B_k^T u_k^T (d_k - u_k B_k w_{i-1})``."""
    blocks = np.asarray(blocks)
    _check(blocks, batch, blocks.shape[0])
    if state.w.shape != (blocks.shape[2],):
        raise DomainError("state dimension does not match the basis")
    grad = np.zeros_like(state.w)
    for k in range(blocks.shape[0]):
        g = blocks[k].T @ batch.u[k]
        grad += g * (batch.d[k] - g @ state.w)
    return replace(state, w=state.w + state.mu * grad, i=state.i + 1)


def centralized_h(state: CentralizedState, blocks) -> np.ndarray:
    return np.asarray(blocks) @ state.w


def diffusion_step(state: EstimatorState, batch, blocks, policy) -> EstimatorState:
    """One iteration of combine / adapt / combine / interpolate."""
    blocks = np.asarray(blocks)
    n = policy.n_nodes
    _check(blocks, batch, n)
    if state.w.shape != (n, blocks.shape[2]):
        raise DomainError("state dimension does not match the network/basis")
    A1, A2, C = policy.A1, policy.A2, policy.C
    w_prev = state.w

    phi = np.zeros_like(w_prev)
    for k in range(n):
        for l in np.flatnonzero(A1[:, k]):
            phi[k] += A1[l, k] * w_prev[l]

    g = np.einsum("lmd,lm->ld", blocks, batch.u)  # B_l^T u_l^T
    psi = np.empty_like(w_prev)
    for k in range(n):
        acc = np.zeros(w_prev.shape[1])
        for l in np.flatnonzero(C[:, k]):
            acc += C[l, k] * g[l] * (batch.d[l] - g[l] @ phi[k])
        psi[k] = phi[k] + state.mu[k] * acc

    w = np.zeros_like(w_prev)
    for k in range(n):
        for l in np.flatnonzero(A2[:, k]):
            w[k] += A2[l, k] * psi[l]

    h = np.einsum("kmd,kd->km", blocks, w)
    return replace(state, w=w, h=h, i=state.i + 1)


def atc_step(state: EstimatorState, batch, blocks, A) -> EstimatorState:
    """Adapt on local data, then combine with the left-stochastic ``A``."""
    blocks = np.asarray(blocks)
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    _check(blocks, batch, n)
    if state.w.shape != (n, blocks.shape[2]):
        raise DomainError("state dimension does not match the network/basis")
    g = np.einsum("lmd,lm->ld", blocks, batch.u)
    psi = np.empty_like(state.w)
    for k in range(n):
        psi[k] = state.w[k] + state.mu[k] * g[k] * (batch.d[k] - g[k] @ state.w[k])
    w = np.zeros_like(psi)
    for k in range(n):
        for l in np.flatnonzero(A[:, k]):
            w[k] += A[l, k] * psi[l]
    h = np.einsum("kmd,kd->km", blocks, w)
    return replace(state, w=w, h=h, i=state.i + 1)


# --------------------------------------------------------------------------
# Vectorized ensemble engine
# --------------------------------------------------------------------------


ALGORITHMS = ("diffusion", "atc", "noncooperative", "centralized")


@dataclass
class Trajectory:
    """Per-iteration squared errors of an ensemble of trials.

    With ``reduce=False`` the arrays are indexed ``[trial, iteration, node]``;
    with ``reduce=True`` they are summed over trials, shape
    ``(iteration, node)``.  ``emse`` holds the squared a-priori error
    ``|u_{k,i} (h_k - h_{k,i-1})|^2``.
    """

    msd_w: np.ndarray
    msd_h: np.ndarray
    emse: np.ndarray
    w_final: np.ndarray
    n_trials: int
    checkpoints: dict


def _prepare(algorithm, policy, n):
    if algorithm not in ALGORITHMS:
        raise DomainError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if algorithm == "centralized":
        return None
    if algorithm == "noncooperative":
        eye = np.eye(n)
        return eye, eye, eye
    if policy is None:
        raise DomainError(f"{algorithm} needs a combination policy")
    if policy.n_nodes != n:
        raise DomainError("policy size does not match the number of nodes")
    if algorithm == "atc":
        return None, policy.A2, None
    return policy.A1, policy.A2, policy.C


def simulate(blocks, w_true, streams, mu, horizon: int, algorithm: str = "diffusion",
             policy=None, w_init=None, chunk: int = 256, keep=(), reduce: bool = False,
             h_true=None) -> Trajectory:
    """Run ``len(streams)`` independent trials in lockstep.

    Parameters
    ----------
    blocks : ndarray (N, M, D)
        Interpolation matrices ``B_k``.
    w_true : ndarray (D,)
    streams : sequence
        One data source per trial; each must provide ``draw(n)`` returning
        ``(u, d, v)`` for the next ``n`` iterations.
    mu : float or ndarray (N,)
        Step sizes (the first entry is used by the centralized filter).
    horizon : int
    algorithm : {"diffusion", "atc", "noncooperative", "centralized"}
        ``atc`` uses ``policy.A2`` as the combiner and ignores ``A1``/``C``.
    w_init : ndarray, optional
        Initial estimate, shape (D,) or (N, D); zeros by default.
    keep : iterable of int
        Iterations at which to store the full ensemble of estimates.
    reduce : bool
        Sum the error arrays over trials instead of keeping them per trial.
    h_true : ndarray (N, M), optional
        Parameters that the h-domain and a-priori errors are measured
        against; defaults to ``B_k w_true``.  Needed when the true field is
        not in the span of the basis.
    """
    blocks = np.asarray(blocks, dtype=float)
    n, m, dim = blocks.shape
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    n_trials = len(streams)
    mats = _prepare(algorithm, policy, n)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (n,)).copy()
    w_true = np.asarray(w_true, dtype=float)
    central = algorithm == "centralized"
    h_ref = np.einsum("kmd,d->km", blocks, w_true) if h_true is None else np.asarray(h_true, float)
    if h_ref.shape != (n, m):
        raise DomainError(f"h_true must have shape {(n, m)}")

    if central:
        w = np.zeros((n_trials, dim))
        if w_init is not None:
            w_init = np.asarray(w_init, dtype=float)
            w[:] = w_init if w_init.ndim == 1 else w_init[0]
    else:
        w = np.zeros((n_trials, n, dim))
        if w_init is not None:
            w[:] = w_init
    keep = set(int(i) for i in keep)
    checkpoints = {}

    shape = (horizon, n) if reduce else (n_trials, horizon, n)
    msd_w, msd_h, emse = np.zeros(shape), np.zeros(shape), np.zeros(shape)

    def record(arr, i, val):
        if reduce:
            arr[i] = val.sum(axis=0)
        else:
            arr[:, i] = val

    def node_view(w):
        return np.broadcast_to(w[:, None, :], (n_trials, n, dim)) if central else w

    i = 0
    while i < horizon:
        step = min(chunk, horizon - i)
        drawn = [s.draw(step) for s in streams]
        U = np.stack([x[0] for x in drawn], axis=1)  # (step, T, N, M)
        D = np.stack([x[1] for x in drawn], axis=1)  # (step, T, N)
        G = np.einsum("stkm,kmd->stkd", U, blocks)   # B_k^T u_k^T
        for s in range(step):
            g, d = G[s], D[s]
            h_est = np.einsum("kmd,tkd->tkm", blocks, node_view(w))
            record(emse, i, np.einsum("tkm,tkm->tk", U[s], h_ref - h_est) ** 2)
            if central:
                e = d - np.einsum("tkd,td->tk", g, w)
                w = w + mu[0] * np.einsum("tk,tkd->td", e, g)
            elif algorithm in ("atc", "noncooperative"):
                e = d - np.einsum("tkd,tkd->tk", g, w)
                psi = w + mu[None, :, None] * e[..., None] * g
                w = psi if algorithm == "noncooperative" else np.einsum("lk,tld->tkd", mats[1], psi)
            else:
                A1, A2, C = mats
                phi = np.einsum("lk,tld->tkd", A1, w)
                # residual of node l's data evaluated at node k's combined estimate
                e = d[:, :, None] - np.einsum("tld,tkd->tlk", g, phi)
                psi = phi + mu[None, :, None] * np.matmul(np.swapaxes(C * e, 1, 2), g)
                w = np.einsum("lk,tld->tkd", A2, psi)
            err = w_true - node_view(w)
            record(msd_w, i, np.einsum("tkd,tkd->tk", err, err))
            eh = h_ref - np.einsum("kmd,tkd->tkm", blocks, node_view(w))
            record(msd_h, i, np.einsum("tkm,tkm->tk", eh, eh))
            if i in keep:
                checkpoints[i] = node_view(w).copy()
            i += 1
    return Trajectory(msd_w, msd_h, emse, node_view(w).copy(), n_trials, checkpoints)


def trial_seed(master_seed: int, trial: int) -> np.random.SeedSequence:
    """Seed of Monte-Carlo trial ``trial``: entropy ``master_seed`` with spawn key ``(1, trial)``.

    :class:`numpy.random.SeedSequence` hashes the pair, so trials are
    independent of each other and of the setup stream (spawn key ``(0,)``).
    """
    return np.random.SeedSequence(int(master_seed), spawn_key=(1, int(trial)))


def run_trial(config, seed, trial: int = 0, algorithm: str | None = None) -> Trajectory:
    """Run a single trial of a scenario and return its per-iteration errors.

    ``config`` is a built scenario (anything with ``blocks``, ``truth``,
    ``regressors``, ``policy``, ``mu``, ``horizon`` and ``algorithms``) or an
    object with a ``build()`` method returning one.  The returned arrays
    have shape ``(1, horizon, N)``.
    """
    scen = config.build() if hasattr(config, "build") else config
    algorithm = algorithm or scen.algorithms[0]
    stream = SampleStream(scen.regressors, scen.truth, trial_seed(seed, trial))
    mu = scen.mu_for(algorithm) if hasattr(scen, "mu_for") else scen.mu
    return simulate(scen.blocks, scen.truth.w, [stream], mu, scen.horizon,
                    algorithm=algorithm, policy=scen.policy, w_init=getattr(scen, "w_init", None))
