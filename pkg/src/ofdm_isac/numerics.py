"""Small dense linear algebra and feasibility projections.

Fisher matrices here are plain real symmetric PSD ndarrays of size 3K x 3K
(delay rows carry units 1/s^2, so raw entries span many orders of magnitude;
the inverse helpers equilibrate by the diagonal before factorizing).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular


class NotPositiveDefinite(ArithmeticError):
    """Symmetric factorization failed; the matrix is numerically singular."""


def steering_vector(tau: float, n: int, f0: float) -> np.ndarray:
    """Frequency-domain phase ramp [1, e^{-j*2*pi*f0*tau}, ...] of length n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(-2j * np.pi * f0 * tau * np.arange(n))


def steering_derivative(tau: float, n: int, f0: float) -> np.ndarray:
    """Elementwise derivative of ``steering_vector`` with respect to tau."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(n)
    return -2j * np.pi * f0 * idx * np.exp(-2j * np.pi * f0 * tau * idx)


def _equilibrated_cholesky(a: np.ndarray):
    """Factor a = D L L^T D with D = sqrt(diag(a)); returns (L, d).

    Scaling by the diagonal keeps the factorization accurate when delay and
    RCS rows differ by ~N^2*omega0^2 in magnitude. One jitter retry of
    1e-12 on the unit-diagonal matrix covers roundoff-level indefiniteness.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    d = np.sqrt(np.diag(a).clip(min=0.0))
    if np.any(d <= 0.0):
        raise NotPositiveDefinite("nonpositive diagonal entry")
    ah = a / np.outer(d, d)
    try:
        return np.linalg.cholesky(ah), d
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(ah + 1e-12 * np.eye(a.shape[0])), d
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky failed after jitter retry") from None


def inverse_diagonal_psd(a: np.ndarray) -> np.ndarray:
    """Diagonal of a^{-1} for symmetric positive definite a.

    Raises NotPositiveDefinite when the factorization fails (degenerate
    scenario, e.g. an improper prior).
    """
    chol, d = _equilibrated_cholesky(a)
    w = solve_triangular(chol, np.eye(a.shape[0]), lower=True)
    return (w ** 2).sum(axis=0) / d ** 2


def inverse_psd(a: np.ndarray) -> np.ndarray:
    """Full inverse of symmetric positive definite a via Cholesky."""
    chol, d = _equilibrated_cholesky(a)
    w = solve_triangular(chol, np.eye(a.shape[0]), lower=True)
    return (w.T @ w) / np.outer(d, d)


def trace_inverse_psd(a: np.ndarray) -> float:
    """Tr(a^{-1}) for symmetric positive definite a."""
    return float(inverse_diagonal_psd(a).sum())


def fim_scaling(n_subcarriers: int, n_symbols: int, n_targets: int) -> np.ndarray:
    """Per-row normalization [N^-1/2 M^-1/2, N^-1/2 M^-1/2, N^-3/2 M^-1/2] x K.

    Used to compare Fisher matrices across N: delay rows grow like N^3 M
    while RCS rows grow like N M.
    """
    block = np.array([n_subcarriers ** -0.5 * n_symbols ** -0.5,
                      n_subcarriers ** -0.5 * n_symbols ** -0.5,
                      n_subcarriers ** -1.5 * n_symbols ** -0.5])
    return np.tile(block, n_targets)


def is_symmetric_psd(a: np.ndarray, sym_rtol: float = 1e-12,
                     eig_rtol: float = 1e-10) -> bool:
    """Check the Fisher-matrix invariants: symmetry and eigenvalues >= -tol."""
    a = np.asarray(a, dtype=float)
    scale = max(abs(a).max(), 1e-300)
    if abs(a - a.T).max() > sym_rtol * scale:
        return False
    eig = np.linalg.eigvalsh(0.5 * (a + a.T))
    return bool(eig.min() >= -eig_rtol * max(eig.max(), 0.0) - 1e-300)


def _bisect_threshold(v: np.ndarray, cap: float, budget: float,
                      lo: float, hi: float) -> float:
    """Locate nu where sum(clip(v - nu, 0, cap)) crosses the budget.

    Runs until the interval collapses relative to its span (~50 halvings);
    the caller then resolves nu exactly on the identified active set, which
    brings the budget residual below 1e-12 of the budget.
    """
    span = max(abs(lo), abs(hi), 1.0)
    for _ in range(120):
        nu = 0.5 * (lo + hi)
        s = np.minimum(np.maximum(v - nu, 0.0), cap).sum()
        if s > budget:
            lo = nu
        else:
            hi = nu
        if hi - lo <= 1e-14 * span:
            break
    return 0.5 * (lo + hi)


def _finish_projection(v: np.ndarray, cap: float, nu: float,
                       budget: float) -> np.ndarray:
    """Polish the threshold: resolve nu exactly on the identified active set."""
    p = np.clip(v - nu, 0.0, cap)
    free = (p > 0.0) & (p < cap)
    n_free = int(free.sum())
    if n_free > 0:
        capped = float(cap) * int((p >= cap).sum())
        nu_exact = (v[free].sum() - (budget - capped)) / n_free
        p = np.clip(v - nu_exact, 0.0, cap)
    s = p.sum()
    if s > budget and s > 0.0:
        p = p * (budget / s)
    return p


def project_box_capped_simplex(v, cap: float, budget: float) -> np.ndarray:
    """Euclidean projection onto {0 <= p_i <= cap, sum p_i <= budget}.

    KKT form: p_i = clip(v_i - nu, 0, cap) with nu >= 0 and
    nu * (sum p - budget) = 0; nu is located by bisection on the monotone
    map nu -> sum clip(v - nu, 0, cap).
    """
    v = np.asarray(v, dtype=float)
    q = np.clip(v, 0.0, cap)
    if q.sum() <= budget:
        return q
    nu = _bisect_threshold(v, cap, budget, 0.0, float(v.max()))
    return _finish_projection(v, cap, nu, budget)


def project_box_simplex_eq(v, cap: float, budget: float) -> np.ndarray:
    """Euclidean projection onto {0 <= p_i <= cap, sum p_i = budget}.

    Requires cap * len(v) >= budget. Same threshold structure as the
    inequality form but nu may be negative.
    """
    v = np.asarray(v, dtype=float)
    if cap * v.size < budget * (1.0 - 1e-12):
        raise ValueError("equality projection infeasible: cap * len(v) < budget")
    nu = _bisect_threshold(v, cap, budget, float(v.min()) - cap, float(v.max()))
    return _finish_projection(v, cap, nu, budget)
