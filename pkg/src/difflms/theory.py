"""Mean and mean-square performance of diffusion LMS with a basis expansion.

Notation follows the network-level recursions.  For ``N`` nodes and
``D = M * N_b`` coefficients per node the stacked error ``w~_i`` (length
``N D``) obeys, in the mean,

    E[w~_i] = Bm E[w~_{i-1}],      Bm = A2e^T (I - Me Re) A1e^T,

and, for small step sizes, the weighted second moment satisfies

    E||w~_i||^2_S = E||w~_{i-1}||^2_{Bm^T S Bm} + Tr(S Y),
    Y = A2e^T Me G Me A2e,   G = Ce^T diag(s2_k Rbar_k) Ce.

Because ``Rbar_k = B_k^T R_{u,k} B_k`` is rank deficient, ``Bm`` may have
eigenvalues equal to one.  Everything below that involves limits works with
the spectral projector ``P`` onto that eigenspace (along the range of
``I - Bm``) instead of an explicit Jordan form: for a power-convergent ``Bm``

    lim Bm^i = P,    (I - Bm)^- = (I - Bm + P)^{-1} - P,

the latter being the group inverse, which is the reflexive generalized
inverse built from the non-unit Jordan factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, NumericalError, UnsupportedCaseError

UNIT_TOL = 1e-8


@dataclass(frozen=True)
class TheoryArtifacts:
    """Moments and network operators for one configuration.

    Per-node arrays have a leading node axis.  ``blocks`` are the
    interpolation matrices ``B_k``.  For a centralized filter the network has
    a single "node" holding the global estimate while ``blocks``,
    ``Rbar_u`` etc. keep one entry per physical node (see ``centralized``).
    """

    blocks: np.ndarray
    Ru: np.ndarray
    noise_vars: np.ndarray
    mu: np.ndarray
    w_true: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    C: np.ndarray
    Rbar_u: np.ndarray
    rbar_du: np.ndarray
    R: np.ndarray
    r: np.ndarray
    calR: np.ndarray
    calM: np.ndarray
    calB: np.ndarray
    calG: np.ndarray
    calY: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    ranks: np.ndarray
    centralized: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        """Length ``D = M N_b`` of one node's coefficient vector."""
        return self.blocks.shape[2]

    @property
    def n_nodes(self) -> int:
        """Number of physical nodes."""
        return self.blocks.shape[0]

    @property
    def n_agents(self) -> int:
        """Number of estimates being propagated (1 for the centralized filter)."""
        return self.A1.shape[0]

    @property
    def network_dim(self) -> int:
        return self.calB.shape[0]

    @property
    def w_true_network(self) -> np.ndarray:
        return np.tile(self.w_true, self.n_agents)

    @property
    def drive(self) -> np.ndarray:
        """``A2e^T Me r``, the constant input of the mean recursion."""
        A2e = np.kron(self.A2, np.eye(self.dim))
        return A2e.T @ (self.calM @ self.r.reshape(-1))


def _eig_desc(R, tol):
    lam, Q = np.linalg.eigh(R)
    lam, Q = lam[:, ::-1], Q[:, :, ::-1]
    scale = np.maximum(lam[:, :1], 1.0)
    ranks = (lam > tol * scale).sum(axis=1)
    return lam, Q, ranks


def _check_psd(Ru):
    Ru = np.asarray(Ru, dtype=float)
    if not np.allclose(Ru, np.swapaxes(Ru, 1, 2), atol=1e-12):
        raise DomainError("regressor covariances must be symmetric")
    if np.linalg.eigvalsh(Ru).min() < -1e-12:
        raise DomainError("regressor covariances must be positive semidefinite")
    return Ru


def assemble(blocks, Ru, noise_vars, policy, mu, w_true=None, rank_tol: float = 1e-10) -> TheoryArtifacts:
    """Assemble every moment and operator needed by the analysis.

    ``Ru`` may be singular here (the textbook counter-examples use singular
    covariances), but it must be symmetric PSD.
    """
    blocks = np.asarray(blocks, dtype=float)
    n, m, dim = blocks.shape
    Ru = _check_psd(np.broadcast_to(Ru, (n, m, m)))
    s2 = np.broadcast_to(np.asarray(noise_vars, dtype=float), (n,)).copy()
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (n,)).copy()
    if policy.n_nodes != n:
        raise DomainError(f"policy has {policy.n_nodes} nodes, basis has {n}")
    w_true = np.zeros(dim) if w_true is None else np.asarray(w_true, dtype=float)
    if w_true.shape != (dim,):
        raise DomainError(f"w_true must have length {dim}")

    Rbar = np.einsum("kmd,kmn,kne->kde", blocks, Ru, blocks)
    rbar = Rbar @ w_true
    C = policy.C
    R = np.einsum("lk,lde->kde", C, Rbar)
    r = np.einsum("lk,ld->kd", C, rbar)
    calR = sla.block_diag(*R)
    calM = np.kron(np.diag(mu), np.eye(dim))
    A1e, A2e, Ce = policy.extended(dim)
    eye = np.eye(n * dim)
    calB = A2e.T @ (eye - calM @ calR) @ A1e.T
    calG = Ce.T @ sla.block_diag(*(s2[:, None, None] * Rbar)) @ Ce
    calY = A2e.T @ calM @ calG @ calM @ A2e
    lam, Q, ranks = _eig_desc(R, rank_tol)
    return TheoryArtifacts(blocks, Ru, s2, mu, w_true, policy.A1, policy.A2, C, Rbar, rbar,
                           R, r, calR, calM, calB, calG, 0.5 * (calY + calY.T), lam, Q, ranks)


def assemble_centralized(blocks, Ru, noise_vars, mu, w_true=None, rank_tol: float = 1e-10) -> TheoryArtifacts:
    """Operators of the centralized LMS filter seen as a one-agent network:
    ``Bm = I - mu sum_k Rbar_k`` and ``Y = mu^2 sum_k s2_k Rbar_k``."""
    blocks = np.asarray(blocks, dtype=float)
    n, m, dim = blocks.shape
    Ru = _check_psd(np.broadcast_to(Ru, (n, m, m)))
    s2 = np.broadcast_to(np.asarray(noise_vars, dtype=float), (n,)).copy()
    mu = float(np.atleast_1d(mu)[0])
    w_true = np.zeros(dim) if w_true is None else np.asarray(w_true, dtype=float)
    Rbar = np.einsum("kmd,kmn,kne->kde", blocks, Ru, blocks)
    rbar = Rbar @ w_true
    R = Rbar.sum(axis=0)[None]
    r = rbar.sum(axis=0)[None]
    calM = mu * np.eye(dim)
    calB = np.eye(dim) - mu * R[0]
    calG = np.einsum("k,kde->de", s2, Rbar)
    calY = mu**2 * calG
    lam, Q, ranks = _eig_desc(R, rank_tol)
    one = np.ones((1, 1))
    return TheoryArtifacts(blocks, Ru, s2, np.array([mu]), w_true, one, one, one, Rbar, rbar,
                           R, r, R[0].copy(), calM, calB, calG, calY, lam, Q, ranks, centralized=True)


def step_size_bound(art: TheoryArtifacts) -> np.ndarray:
    """Per-agent mean-stability bound ``2 / lambda_max(R_k)``."""
    lmax = art.eigvals[:, 0]
    with np.errstate(divide="ignore"):
        return np.where(lmax > 0, 2.0 / lmax, np.inf)


# --------------------------------------------------------------------------
# Spectral classification and the unit eigenspace
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralClassification:
    """Outcome of the power-convergence test.

    ``verdict`` is one of ``"strictly-stable"``, ``"power-convergent"`` or
    ``"non-convergent"``.  ``algebraic_unit`` counts eigenvalues within
    ``tol`` of 1 and ``geometric_unit`` is ``dim null(I - Bm)``; they differ
    exactly when the eigenvalue 1 has a Jordan block larger than 1x1.
    """

    spectral_radius: float
    verdict: str
    eigenvalues: np.ndarray
    on_unit_circle: np.ndarray
    algebraic_unit: int
    geometric_unit: int
    defective: bool
    reasons: tuple = ()

    @property
    def convergent(self) -> bool:
        return self.verdict != "non-convergent"

    @property
    def unit_circle_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.on_unit_circle]


def _null_tol(X, tol):
    return tol * max(1.0, np.linalg.norm(X, 2))


def classify_matrix(B, tol: float = UNIT_TOL) -> SpectralClassification:
    B = np.asarray(B, dtype=float)
    try:
        gam = np.linalg.eigvals(B)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on a {B.shape} matrix: {exc}") from exc
    mod = np.abs(gam)
    rho = float(mod.max())
    unit = np.abs(mod - 1.0) <= tol
    alg = int(np.sum(np.abs(gam - 1.0) <= tol))
    X = np.eye(B.shape[0]) - B
    sv = np.linalg.svd(X, compute_uv=False)
    geo = int(np.sum(sv <= _null_tol(X, tol)))
    reasons = []
    if rho > 1.0 + tol:
        reasons.append(f"spectral radius {rho:.6g} exceeds one")
    bad = gam[unit & (np.abs(gam - 1.0) > tol)]
    for g in bad:
        reasons.append(f"unit-modulus eigenvalue {complex(g):.6g} is not 1")
    defective = alg != geo
    if defective:
        reasons.append(f"eigenvalue 1 is defective (algebraic {alg}, geometric {geo})")
    if reasons:
        verdict = "non-convergent"
    elif alg == 0:
        verdict = "strictly-stable"
    else:
        verdict = "power-convergent"
    return SpectralClassification(rho, verdict, gam, unit, alg, geo, defective, tuple(reasons))


def classify(art: TheoryArtifacts, tol: float = UNIT_TOL) -> SpectralClassification:
    """Classify the mean-recursion operator ``Bm``."""
    key = ("classify", tol)
    if key not in art._cache:
        art._cache[key] = classify_matrix(art.calB, tol)
    return art._cache[key]


def unit_factors(B, tol: float = UNIT_TOL):
    """Right and left bases of the eigenvalue-one eigenspace.

    Returns ``(Z2, Z2bar)`` with ``B Z2 = Z2``, ``Z2bar B = Z2bar`` and
    ``Z2bar Z2 = I``; both are empty when one is not an eigenvalue.
    """
    B = np.asarray(B, dtype=float)
    X = np.eye(B.shape[0]) - B
    U, s, Vt = np.linalg.svd(X)
    null = s <= _null_tol(X, tol)
    Z2 = Vt[null].T
    Yl = U[:, null]
    if Z2.shape[1] == 0:
        return Z2, Yl.T
    G = Yl.T @ Z2
    return Z2, np.linalg.solve(G, Yl.T)


def unit_projector(art: TheoryArtifacts, tol: float = UNIT_TOL) -> np.ndarray:
    """Spectral projector ``P = Z2 Z2bar`` onto the eigenvalue-one eigenspace.

    Zero for a strictly stable operator; raises :class:`UnsupportedCaseError`
    when the operator is not power convergent.
    """
    key = ("P", tol)
    if key in art._cache:
        return art._cache[key]
    cls = classify(art, tol)
    if not cls.convergent:
        raise UnsupportedCaseError("mean operator is not power convergent: " + "; ".join(cls.reasons))
    nd = art.network_dim
    if cls.verdict == "strictly-stable":
        P = np.zeros((nd, nd))
    else:
        Z2, Z2bar = unit_factors(art.calB, tol)
        P = Z2 @ Z2bar
    art._cache[key] = P
    return P


def group_inverse(art: TheoryArtifacts, tol: float = UNIT_TOL) -> np.ndarray:
    """Reflexive generalized inverse of ``X = I - Bm`` supported on the
    non-unit eigenspace: ``(X + P)^{-1} - P``."""
    key = ("Xg", tol)
    if key not in art._cache:
        P = unit_projector(art, tol)
        X = np.eye(art.network_dim) - art.calB
        art._cache[key] = np.linalg.inv(X + P) - P
    return art._cache[key]


@dataclass(frozen=True)
class JordanFactors:
    """Diagonalizable split ``Bm = Z1 J Z1bar + Z2 Z2bar`` (complex)."""

    Z1: np.ndarray
    J: np.ndarray
    Z1bar: np.ndarray
    Z2: np.ndarray
    Z2bar: np.ndarray


def jordan_factors(B, tol: float = UNIT_TOL, rng=None) -> JordanFactors:
    """Eigenvector-based factors of a diagonalizable power-convergent ``B``.

    With ``rng`` the factors are re-based by random invertible transforms
    that leave ``J`` unchanged (arbitrary mixing inside the unit eigenspace,
    random scaling of the other eigenvectors); limits computed from the
    factors must not depend on that choice.
    """
    gam, V = np.linalg.eig(np.asarray(B, dtype=float))
    Vinv = np.linalg.inv(V)
    unit = np.abs(gam - 1.0) <= tol
    Z1, Z1bar, J = V[:, ~unit], Vinv[~unit], gam[~unit]
    Z2, Z2bar = V[:, unit], Vinv[unit]
    if rng is not None:
        m = Z2.shape[1]
        if m:
            X2 = rng.standard_normal((m, m)) + 3.0 * np.eye(m)
            Z2, Z2bar = Z2 @ X2, np.linalg.solve(X2, Z2bar)
        s = rng.uniform(0.5, 2.0, size=J.size) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=J.size))
        Z1, Z1bar = Z1 * s[None, :], Z1bar / s[:, None]
    return JordanFactors(Z1, J, Z1bar, Z2, Z2bar)


# --------------------------------------------------------------------------
# Mean behaviour
# --------------------------------------------------------------------------


def _network_init(art, w_init):
    nd = art.network_dim
    if w_init is None:
        return np.zeros(nd)
    w_init = np.asarray(w_init, dtype=float).reshape(-1)
    if w_init.size == art.dim:
        return np.tile(w_init, art.n_agents)
    if w_init.size != nd:
        raise DomainError(f"initial estimate must have length {art.dim} or {nd}")
    return w_init


def mean_limit(art: TheoryArtifacts, w_init=None, factors: JordanFactors | None = None,
               tol: float = UNIT_TOL) -> np.ndarray:
    """Limit of ``E[w_i]`` (stacked over agents).

    ``P E[w_{-1}] + (I - Bm)^- A2e^T Me r``.  With ``factors`` the two terms
    are formed from explicit Jordan factors instead of the projector.
    """
    w0 = _network_init(art, w_init)
    cls = classify(art, tol)
    if not cls.convergent:
        raise UnsupportedCaseError("mean operator is not power convergent: " + "; ".join(cls.reasons))
    drive = art.drive
    if factors is not None:
        f = factors
        inv = f.Z1 @ np.diag(1.0 / (1.0 - f.J)) @ f.Z1bar
        return np.real(f.Z2 @ (f.Z2bar @ w0) + inv @ drive)
    return unit_projector(art, tol) @ w0 + group_inverse(art, tol) @ drive


def block_max_norm(x, block: int) -> float:
    """``max_k ||x_k||_2`` over consecutive blocks of length ``block``."""
    x = np.asarray(x, dtype=float).reshape(-1, block)
    return float(np.linalg.norm(x, axis=1).max())


def block_max_matrix_norm(X, block: int) -> float:
    """``max_k sum_l ||X_{kl}||_2``: the norm induced by :func:`block_max_norm`
    for block-diagonal matrices and for ``A kron I`` with ``A`` nonnegative;
    an upper bound otherwise."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0] // block
    blocks = X.reshape(n, block, n, block).transpose(0, 2, 1, 3)
    norms = np.linalg.norm(blocks, ord=2, axis=(2, 3))
    return float(norms.sum(axis=1).max())


def indicator(X) -> np.ndarray:
    """Entrywise ``1`` where ``X > 0`` and ``0`` elsewhere."""
    return (np.asarray(X) > 0).astype(float)


@dataclass(frozen=True)
class MeanErrorBound:
    factor: float
    initial_norm: float
    bound: float
    limit: float
    holds: bool


def mean_error_bound(art: TheoryArtifacts, w_init=None, rank_tol: float = 1e-10,
                     max_doublings: int = 64) -> MeanErrorBound:
    """Bound ``||I - Ind(Lambda)||_{b,inf} ||E w~_{-1}||_{b,inf}`` on the limiting
    block-maximum norm of the mean error, together with that limit
    estimated by iterating the mean recursion (by repeated squaring)."""
    w0 = _network_init(art, w_init)
    err0 = art.w_true_network - w0
    lam = np.where(art.eigvals > rank_tol * np.maximum(art.eigvals[:, :1], 1.0), art.eigvals, 0.0)
    resid = sla.block_diag(*[np.eye(art.dim) - indicator(np.diag(l)) for l in lam])
    factor = block_max_matrix_norm(resid, art.dim)
    init_norm = block_max_norm(err0, art.dim)

    Bk = art.calB.copy()
    x = Bk @ err0
    limit = None
    for _ in range(max_doublings):
        Bk = Bk @ Bk
        nxt = Bk @ err0
        if np.max(np.abs(nxt - x)) <= 1e-13 * max(1.0, np.max(np.abs(x))):
            limit = block_max_norm(nxt, art.dim)
            break
        x = nxt
    if limit is None:
        # no limit (e.g. an eigenvalue at -1): report the largest value seen
        # over a window of plain iterations
        y, worst = x, 0.0
        for _ in range(1000):
            y = art.calB @ y
            worst = max(worst, block_max_norm(y, art.dim))
        limit = worst
    bound = factor * init_norm
    return MeanErrorBound(factor, init_norm, bound, limit, limit <= bound + 1e-10 * max(1.0, init_norm))


# --------------------------------------------------------------------------
# Mean-square behaviour
# --------------------------------------------------------------------------


def msd_emse_weights(art: TheoryArtifacts, k: int):
    """Weighting matrices whose weighted norms give node ``k``'s h-domain MSD
    and EMSE: ``diag(e_k) kron B_k^T B_k`` and ``diag(e_k) kron Rbar_k``."""
    if not 0 <= k < art.n_nodes:
        raise DomainError(f"node index {k} out of range 0..{art.n_nodes - 1}")
    Bk = art.blocks[k]
    if art.centralized:
        return Bk.T @ Bk, art.Rbar_u[k].copy()
    e = np.zeros((art.n_agents, art.n_agents))
    e[k, k] = 1.0
    return np.kron(e, Bk.T @ Bk), np.kron(e, art.Rbar_u[k])


def msd_w_weight(art: TheoryArtifacts, k: int) -> np.ndarray:
    """Weight for the w-domain MSD of node ``k``."""
    if art.centralized:
        return np.eye(art.dim)
    e = np.zeros((art.n_agents, art.n_agents))
    e[k, k] = 1.0
    return np.kron(e, np.eye(art.dim))


def _noise_covariance_series(A, Y, max_doublings=60, rel=1e-14, patience=2):
    """``sum_j A^j Y (A^T)^j`` by doubling: ``S <- S + A^n S (A^n)^T``.

    Each doubling adds the next ``2^n`` terms of the series; iteration stops
    once the trace of the added block stays below ``rel`` times the
    accumulated trace for ``patience`` consecutive doublings.
    """
    S = Y.copy()
    An = A.copy()
    quiet = 0
    for _ in range(max_doublings):
        inc = An @ S @ An.T
        S = S + inc
        tr_inc = abs(np.trace(inc))
        tr_acc = abs(np.trace(S))
        if not np.all(np.isfinite(S)):
            raise NumericalError("noise covariance series diverged")
        if tr_inc <= rel * tr_acc or tr_acc == 0.0:
            quiet += 1
            if quiet >= patience:
                return S
        else:
            quiet = 0
        An = An @ An
    raise NumericalError("noise covariance series did not converge")


def stationary_covariance(art: TheoryArtifacts, w_init=None, method: str = "auto",
                          tol: float = UNIT_TOL) -> np.ndarray:
    """Limit of the small-step error second moment ``E[w~_i w~_i^T]``.

    ``P K0 P^T + sum_j (Bm - P)^j Y ((Bm - P)^T)^j`` with
    ``K0 = w~_{-1} w~_{-1}^T`` for the deterministic initial estimate.
    """
    if method == "kron":
        raise DomainError("the Kronecker path works on a weighting; use steady_state_wmse")
    P = unit_projector(art, tol)
    err0 = art.w_true_network - _network_init(art, w_init)
    Pe = P @ err0
    S = _noise_covariance_series(art.calB - P, art.calY)
    return np.outer(Pe, Pe) + S


KRON_MAX_DIM = 64


def steady_state_wmse(art: TheoryArtifacts, sigma, w_init=None, method: str = "auto",
                      factors: JordanFactors | None = None, tol: float = UNIT_TOL) -> float:
    """Steady-state ``lim E||w~_i||^2_sigma`` for a deterministic initial estimate.

    ``method="kron"`` solves ``(I - F) x = vec(sigma)`` with
    ``F = ((Bm - P) kron (Bm - P))^T``; ``method="series"`` accumulates
    ``sum_j Tr(((Bm-P)^T)^j sigma (Bm-P)^j Y)``.  ``"auto"`` picks the
    Kronecker solve when ``Bm`` has at most ``KRON_MAX_DIM`` rows.
    ``factors`` replaces ``P`` and ``Bm - P`` by their Jordan-factor forms.
    """
    sigma = np.asarray(sigma, dtype=float)
    nd = art.network_dim
    if sigma.shape != (nd, nd):
        raise DomainError(f"weighting must be {nd} x {nd}")
    cls = classify(art, tol)
    if not cls.convergent:
        raise UnsupportedCaseError("mean operator is not power convergent: " + "; ".join(cls.reasons))
    if method == "auto":
        method = "kron" if nd <= KRON_MAX_DIM else "series"
    if factors is not None:
        P = np.real(factors.Z2 @ factors.Z2bar)
        Bs = np.real(factors.Z1 @ np.diag(factors.J) @ factors.Z1bar)
    else:
        P = unit_projector(art, tol)
        Bs = art.calB - P
    err0 = art.w_true_network - _network_init(art, w_init)
    Pe = P @ err0
    bias = float(Pe @ sigma @ Pe)
    if method == "kron":
        F = np.kron(Bs, Bs).T
        x = np.linalg.solve(np.eye(nd * nd) - F, sigma.reshape(-1, order="F"))
        noise = float(art.calY.reshape(-1, order="F") @ x)
    elif method == "series":
        S = _noise_covariance_series(Bs, art.calY)
        noise = float(np.sum(sigma * S.T))
    else:
        raise DomainError(f"unknown method {method!r}")
    return bias + noise


def learning_curve(art: TheoryArtifacts, sigma, horizon: int) -> np.ndarray:
    """Predicted ``E||w~_i||^2_sigma`` for ``i = 0 .. horizon-1`` from a zero start.

    Propagates the weighting ``sigma_{j+1} = Bm^T sigma_j Bm`` and accumulates
    ``Tr(sigma_j Y)``; entry ``i`` is ``||w~_{-1}||^2_{sigma_{i+1}} + sum_{j<=i} Tr(sigma_j Y)``.
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    sigma = np.asarray(sigma, dtype=float)
    err0 = art.w_true_network
    B, Y = art.calB, art.calY
    out = np.empty(horizon)
    acc = 0.0
    S = sigma
    for i in range(horizon):
        acc += float(np.sum(S * Y.T))
        S = B.T @ S @ B
        out[i] = float(err0 @ S @ err0) + acc
    return out


@dataclass
class TheoryCurves:
    """Per-node predicted learning curves, shape ``(horizon, N)``.

    ``emse[i]`` is the a-priori error power at iteration ``i``, which depends
    on the estimate at ``i - 1``.
    """

    msd_w: np.ndarray
    msd_h: np.ndarray
    emse: np.ndarray


def node_metrics(art, K):
    """Per physical node ``(msd_w, msd_h, emse)`` from a network second moment."""
    n, d = art.n_nodes, art.dim
    BtB = np.einsum("kmd,kme->kde", art.blocks, art.blocks)
    if art.centralized:
        msd_w = np.full(n, np.trace(K))
        msd_h = np.einsum("kde,ed->k", BtB, K)
        emse = np.einsum("kde,ed->k", art.Rbar_u, K)
    else:
        Kb = K.reshape(n, d, n, d)[np.arange(n), :, np.arange(n), :]
        msd_w = np.einsum("kdd->k", Kb)
        msd_h = np.einsum("kde,ked->k", BtB, Kb)
        emse = np.einsum("kde,ked->k", art.Rbar_u, Kb)
    return msd_w, msd_h, emse


def learning_curves(art: TheoryArtifacts, horizon: int, w_init=None) -> TheoryCurves:
    """All per-node curves at once by propagating the error second moment
    ``K_i = Bm K_{i-1} Bm^T + Y`` from ``K_{-1} = w~_{-1} w~_{-1}^T``."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    err0 = art.w_true_network - _network_init(art, w_init)
    K = np.outer(err0, err0)
    n = art.n_nodes
    msd_w, msd_h, emse = (np.empty((horizon, n)) for _ in range(3))
    B, Y = art.calB, art.calY
    for i in range(horizon):
        emse[i] = node_metrics(art, K)[2]
        K = B @ K @ B.T + Y
        K = 0.5 * (K + K.T)
        msd_w[i], msd_h[i], _ = node_metrics(art, K)
    return TheoryCurves(msd_w, msd_h, emse)


@dataclass
class SteadyState:
    msd_w: np.ndarray
    msd_h: np.ndarray
    emse: np.ndarray

    @property
    def network(self) -> dict:
        return {"msd_w": float(self.msd_w.mean()), "msd_h": float(self.msd_h.mean()),
                "emse": float(self.emse.mean())}


def steady_state(art: TheoryArtifacts, w_init=None) -> SteadyState:
    """Per-node steady-state MSD (w and h domain) and EMSE."""
    K = stationary_covariance(art, w_init)
    return SteadyState(*node_metrics(art, K))


# --------------------------------------------------------------------------
# Structural identities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralizedInverseReport:
    residual_left: float   # max |X X^- X - X|
    residual_right: float  # max |X^- X X^- - X^-|
    inverse_gap: float     # max |X^- - X^{-1}| when X is invertible, else nan
    factor_residual: float  # max |Z1 Z1bar + Z2 Z2bar - I| with Z1 Z1bar = I - P

    @property
    def max_residual(self) -> float:
        return max(self.residual_left, self.residual_right)


def generalized_inverse_check(art: TheoryArtifacts, tol: float = UNIT_TOL) -> GeneralizedInverseReport:
    """Verify the reflexive generalized-inverse axioms for ``X = I - Bm``."""
    X = np.eye(art.network_dim) - art.calB
    Xg = group_inverse(art, tol)
    P = unit_projector(art, tol)
    left = float(np.abs(X @ Xg @ X - X).max())
    right = float(np.abs(Xg @ X @ Xg - Xg).max())
    gap = float("nan")
    if classify(art, tol).verdict == "strictly-stable":
        gap = float(np.abs(Xg - np.linalg.inv(X)).max())
    Z1Z1bar = X @ Xg  # equals I - P on a power-convergent operator
    fres = float(np.abs(Z1Z1bar + P - np.eye(art.network_dim)).max())
    return GeneralizedInverseReport(left, right, gap, fres)


@dataclass(frozen=True)
class OrthogonalityReport:
    left: float   # max |Z2bar Y|
    right: float  # max |Y Z2bar^T|
    drive: float  # max |Z2bar A2e^T Me r|


def orthogonality_check(art: TheoryArtifacts, tol: float = UNIT_TOL) -> OrthogonalityReport:
    """Residuals of the identities ``Z2bar Y = 0``, ``Y Z2bar^T = 0`` and
    ``Z2bar A2e^T Me r = 0`` on a power-convergent operator."""
    cls = classify(art, tol)
    if not cls.convergent:
        raise UnsupportedCaseError("mean operator is not power convergent")
    _, Z2bar = unit_factors(art.calB, tol)
    if Z2bar.shape[0] == 0:
        return OrthogonalityReport(0.0, 0.0, 0.0)
    return OrthogonalityReport(float(np.abs(Z2bar @ art.calY).max()),
                               float(np.abs(art.calY @ Z2bar.T).max()),
                               float(np.abs(Z2bar @ art.drive).max()))


def noncooperative_operator(art: TheoryArtifacts) -> np.ndarray:
    """``I - Me Re``, the operator that drives non-cooperating nodes."""
    return np.eye(art.network_dim) - art.calM @ art.calR
