"""Independent reference computations used as test oracles.

Nothing here imports production code paths that it is meant to check; the
formulas are written out directly (closed forms, dense Kronecker algebra,
plain loops, Monte-Carlo).
"""

from __future__ import annotations

import numpy as np


def chebyshev_cos(n, x):
    """Shifted Chebyshev polynomial by its trigonometric closed form."""
    t = np.clip(2.0 * np.asarray(x, dtype=float) - 1.0, -1.0, 1.0)
    return np.cos((n - 1) * np.arccos(t))


def chebyshev_power_series(n, x):
    """Same polynomial from numpy's Chebyshev class (monomial-free)."""
    coef = np.zeros(n)
    coef[n - 1] = 1.0
    return np.polynomial.chebyshev.chebval(2.0 * np.asarray(x, float) - 1.0, coef)


def h_termwise(W, x, length=1.0):
    """``h_m(x) = sum_n W[m, n] b_{n+1}(x/L)`` evaluated term by term."""
    W = np.asarray(W, dtype=float)
    return np.array([sum(W[m, n] * chebyshev_cos(n + 1, x / length) for n in range(W.shape[1]))
                     for m in range(W.shape[0])])


def theta_to_h(theta, nu):
    """Hand transcription of the three finite-difference coefficients."""
    out = []
    for k in range(1, len(theta) - 1):
        a, b, c = theta[k - 1], theta[k], theta[k + 1]
        out.append([nu / 4 * (a + 4 * b - c), 1 - 2 * nu * b, nu / 4 * (-a + 4 * b + c)])
    return np.array(out)


def five_point(z, k1, k2, dx):
    """Five-point Laplacian at one full-grid node, written out."""
    return (z[k1 + 1, k2] + z[k1, k2 + 1] + z[k1 - 1, k2] + z[k1, k2 - 1] - 4 * z[k1, k2]) / dx**2


def network_operator_dense(A1, A2, C, Rbar, mu):
    """``B = A2e^T (I - M R) A1e^T`` with explicit loops over blocks."""
    n, d, _ = Rbar.shape
    R = [sum(C[l, k] * Rbar[l] for l in range(n)) for k in range(n)]
    mid = np.zeros((n * d, n * d))
    for k in range(n):
        mid[k * d:(k + 1) * d, k * d:(k + 1) * d] = np.eye(d) - mu[k] * R[k]
    A1e = np.kron(A1, np.eye(d))
    A2e = np.kron(A2, np.eye(d))
    return A2e.T @ mid @ A1e.T


def noise_operator_dense(A2, C, Rbar, mu, s2):
    """``Y = A2e^T M G M A2e`` with ``G = Ce^T diag(s2 Rbar) Ce``."""
    n, d, _ = Rbar.shape
    D = np.zeros((n * d, n * d))
    for k in range(n):
        D[k * d:(k + 1) * d, k * d:(k + 1) * d] = s2[k] * Rbar[k]
    Ce = np.kron(C, np.eye(d))
    Me = np.kron(np.diag(mu), np.eye(d))
    A2e = np.kron(A2, np.eye(d))
    return A2e.T @ Me @ (Ce.T @ D @ Ce) @ Me @ A2e


def power_limit(B, squarings=60):
    """``lim B^i`` by repeated squaring."""
    P = np.array(B, dtype=float)
    for _ in range(squarings):
        P = P @ P
    return P


def mean_recursion(B, drive, w0, steps):
    """Iterate ``E w_i = B E w_{i-1} + drive``."""
    w = np.array(w0, dtype=float)
    for _ in range(steps):
        w = B @ w + drive
    return w


def kron_learning_curve(B, Y, sigma, w0, horizon):
    """Learning curve in vectorized form, ``H = (B kron B)^T``.

    ``eta(i) = vec(w0 w0^T)^T H^{i+1} vec(S) + vec(Y)^T sum_{j<=i} H^j vec(S)``.
    """
    H = np.kron(B, B).T
    s = sigma.reshape(-1, order="F")
    y = Y.reshape(-1, order="F")
    k0 = np.outer(w0, w0).reshape(-1, order="F")
    out, acc, cur = [], 0.0, s.copy()
    for _ in range(horizon):
        acc += y @ cur
        cur = H @ cur
        out.append(k0 @ cur + acc)
    return np.array(out)


def scalar_lms_steady(mu, lam, s2):
    return mu**2 * lam * s2 / (1 - (1 - mu * lam) ** 2)


def scalar_lms_transient(mu, lam, s2, w0, horizon):
    """Closed-form ``eta(i) = a^{i+1} w0^2 + mu^2 lam s2 (1 - a^{i+1}) / (1 - a)``,
    ``a = (1 - mu lam)^2``."""
    a = (1 - mu * lam) ** 2
    i = np.arange(horizon)
    return a ** (i + 1) * w0**2 + mu**2 * lam * s2 * (1 - a ** (i + 1)) / (1 - a)


def noncooperative_limit(R, r, w_init):
    """Per node ``R^+ r + (I - R^+ R) w_init`` via the Moore-Penrose inverse."""
    Rp = np.linalg.pinv(R, rcond=1e-10, hermitian=True)
    return Rp @ r + (np.eye(R.shape[0]) - Rp @ R) @ w_init


def single_lms_run(u, d, mu, dim):
    """Plain stand-alone LMS on one node's data."""
    w = np.zeros(dim)
    traj = []
    for ui, di in zip(u, d):
        w = w + mu * ui * (di - ui @ w)
        traj.append(w.copy())
    return np.array(traj)
