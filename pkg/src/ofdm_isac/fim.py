"""Exact observation Fisher matrices, prior information, and the Bayesian bound.

The echo on symbol m is y_m = diag(x_m) h + noise with
h = sum_k alpha_k phi(tau_k) and phi the delay steering vector. For a
complex Gaussian likelihood the 3K x 3K observation Fisher matrix has
entries 2/sigma^2 * Re[(d mu/d theta_p)^H (d mu/d theta_q)], which reduce
to weighted power sums

    U_m(dt) = sum_n |x_nm|^2 e^{j w0 (n-1) dt}
    T_m(dt) = sum_n (n-1) |x_nm|^2 e^{j w0 (n-1) dt}
    V_m(dt) = sum_n (n-1)^2 |x_nm|^2 e^{j w0 (n-1) dt}

evaluated at pairwise delay gaps dt = tau_k - tau_l (real for k = l).
``observation_fim`` assembles those closed forms; ``observation_fim_oracle``
rebuilds the same matrix from explicit derivative vectors as an independent
check, optionally replacing the analytic delay derivative by central
finite differences.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import (NotPositiveDefinite, inverse_diagonal_psd,
                       steering_derivative, steering_vector)
from .scenario import (PowerAllocation, ScenarioConfig, SeededStream,
                       SymbolMatrix, TargetDraw, sample_symbols, sample_targets)

# sampled delays closer than this are nudged apart to avoid exactly
# singular observation matrices
_COINCIDENT_DELAY_TOL = 1e-15
_COINCIDENT_DELAY_NUDGE = 1e-12


class Scope(str, Enum):
    """Which diagonal entries of the inverted information matrix to sum."""

    FULL = "full"
    DELAY = "delay"


def scope_indices(scope, n_targets: int) -> np.ndarray:
    scope = Scope(scope)
    if scope is Scope.FULL:
        return np.arange(3 * n_targets)
    return np.arange(2, 3 * n_targets, 3)


@dataclass(frozen=True)
class UTVSums:
    """Per-symbol weighted power sums with weights (n-1)^0, (n-1)^1, (n-1)^2.

    Built either from realized powers |x_nm|^2 or from a power allocation
    P_nm, in which case the entries are the expected sums.
    """

    u: np.ndarray  # (M,)
    t: np.ndarray
    v: np.ndarray

    @property
    def u_total(self) -> float:
        return float(self.u.sum())

    @property
    def t_total(self) -> float:
        return float(self.t.sum())

    @property
    def v_total(self) -> float:
        """Sum over all symbols of the (n-1)^2-weighted powers."""
        return float(self.v.sum())


def utv_sums(weights: np.ndarray) -> UTVSums:
    """Real sums for an N x M matrix of powers (realized or expected)."""
    n1 = np.arange(weights.shape[0])
    return UTVSums(u=weights.sum(axis=0),
                   t=(n1[:, None] * weights).sum(axis=0),
                   v=((n1 ** 2)[:, None] * weights).sum(axis=0))


def utv_cross_sums(weights: np.ndarray, delay_gap: float, omega0: float):
    """Complex cross sums with phase e^{j w0 (n-1) delay_gap}, per symbol."""
    n1 = np.arange(weights.shape[0])
    phased = weights * np.exp(1j * omega0 * n1 * delay_gap)[:, None]
    return (phased.sum(axis=0),
            (n1[:, None] * phased).sum(axis=0),
            ((n1 ** 2)[:, None] * phased).sum(axis=0))


def _separated_delays(delays: np.ndarray) -> np.ndarray:
    """Nudge near-coincident delays apart before any FIM assembly."""
    delays = np.array(delays, dtype=float)
    order = np.argsort(delays)
    for a, b in zip(order[:-1], order[1:]):
        if abs(delays[b] - delays[a]) < _COINCIDENT_DELAY_TOL:
            delays[b] = delays[a] + _COINCIDENT_DELAY_NUDGE
    return delays


def single_target_block(u: float, t: float, v: float, alpha: complex,
                        omega0: float, radar_noise_var: float) -> np.ndarray:
    """Diagonal 3x3 block for one target from its real weighted sums."""
    c13 = omega0 * alpha.imag * t
    c23 = -omega0 * alpha.real * t
    block = np.array([[u, 0.0, c13],
                      [0.0, u, c23],
                      [c13, c23, omega0 ** 2 * abs(alpha) ** 2 * v]])
    return (2.0 / radar_noise_var) * block


def _cross_block(u: complex, t: complex, v: complex, a_k: complex,
                 a_l: complex, omega0: float, radar_noise_var: float) -> np.ndarray:
    """Off-diagonal 3x3 block for targets (k, l), complex sums at gap tau_k - tau_l."""
    tk = a_k * np.conj(t)
    tl = a_l * t
    block = np.array([
        [u.real, -u.imag, omega0 * tl.imag],
        [u.imag, u.real, -omega0 * tl.real],
        [omega0 * tk.imag, -omega0 * tk.real,
         (omega0 ** 2 * np.conj(a_k) * a_l * v).real],
    ])
    return (2.0 / radar_noise_var) * block


def observation_fim(x: SymbolMatrix, theta: TargetDraw,
                    cfg: ScenarioConfig) -> np.ndarray:
    """Closed-form 3K x 3K observation Fisher matrix for one (x, theta)."""
    w = x.powers
    k_targets = theta.n_targets
    delays = _separated_delays(theta.delays)
    omega0 = cfg.omega0
    sums = utv_sums(w)
    j = np.zeros((3 * k_targets, 3 * k_targets))
    for k in range(k_targets):
        j[3 * k:3 * k + 3, 3 * k:3 * k + 3] = single_target_block(
            sums.u_total, sums.t_total, sums.v_total, complex(theta.rcs[k]),
            omega0, cfg.radar_noise_var)
    for k in range(k_targets):
        for l in range(k + 1, k_targets):
            u, t, v = utv_cross_sums(w, delays[k] - delays[l], omega0)
            block = _cross_block(complex(u.sum()), complex(t.sum()), complex(v.sum()),
                                 complex(theta.rcs[k]), complex(theta.rcs[l]),
                                 omega0, cfg.radar_noise_var)
            j[3 * k:3 * k + 3, 3 * l:3 * l + 3] = block
            j[3 * l:3 * l + 3, 3 * k:3 * k + 3] = block.T
    return j


def observation_fim_oracle(x: SymbolMatrix, theta: TargetDraw, cfg: ScenarioConfig,
                           delay_derivative: str = "analytic",
                           fd_step: float = 1e-12) -> np.ndarray:
    """Gram-matrix construction of the observation Fisher matrix.

    Builds the 3K mean-derivative vectors explicitly per symbol and takes
    2/sigma^2 * Re[D^H D]. With delay_derivative="fd" the delay columns are
    central finite differences of the mean, giving a derivation-free check.
    """
    if delay_derivative not in ("analytic", "fd"):
        raise ValueError("delay_derivative must be 'analytic' or 'fd'")
    n, m_symbols = x.symbols.shape
    k_targets = theta.n_targets
    delays = _separated_delays(theta.delays)
    f0 = cfg.subcarrier_spacing_hz
    j = np.zeros((3 * k_targets, 3 * k_targets))
    for m in range(m_symbols):
        xm = x.symbols[:, m]
        deriv = np.empty((n, 3 * k_targets), dtype=complex)
        for k in range(k_targets):
            alpha = complex(theta.rcs[k])
            base = xm * steering_vector(delays[k], n, f0)
            deriv[:, 3 * k] = base
            deriv[:, 3 * k + 1] = 1j * base
            if delay_derivative == "analytic":
                deriv[:, 3 * k + 2] = alpha * xm * steering_derivative(delays[k], n, f0)
            else:
                plus = steering_vector(delays[k] + fd_step, n, f0)
                minus = steering_vector(delays[k] - fd_step, n, f0)
                deriv[:, 3 * k + 2] = alpha * xm * (plus - minus) / (2.0 * fd_step)
        j += (2.0 / cfg.radar_noise_var) * np.real(deriv.conj().T @ deriv)
    return j


@functools.lru_cache(maxsize=256)
def _prior_fim_cached(priors: tuple) -> np.ndarray:
    k_targets = len(priors)
    j = np.zeros((3 * k_targets, 3 * k_targets))
    for k, prior in enumerate(priors):
        chol = prior._chol
        try:
            inv_chol = np.linalg.inv(chol)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("prior covariance is singular") from None
        j[3 * k:3 * k + 3, 3 * k:3 * k + 3] = inv_chol.T @ inv_chol
    j.setflags(write=False)
    return j


def prior_fim(priors) -> np.ndarray:
    """Block-diagonal prior information: inverse covariance per Gaussian target."""
    return _prior_fim_cached(tuple(priors))


def scoped_trace_inverse(a: np.ndarray, scope, n_targets: int) -> float:
    """Sum of selected diagonal entries of a^{-1}."""
    idx = scope_indices(scope, n_targets)
    return float(inverse_diagonal_psd(a)[idx].sum())


def bcrb_given_input(x: SymbolMatrix, theta_samples, cfg: ScenarioConfig,
                     scope=Scope.FULL) -> float:
    """Bayesian bound for one realized input: trace of the inverse of the
    prior-averaged observation information plus the prior information."""
    if not theta_samples:
        raise ValueError("theta_samples must be nonempty")
    mean_j = np.zeros((3 * cfg.n_targets, 3 * cfg.n_targets))
    for theta in theta_samples:
        mean_j += observation_fim(x, theta, cfg)
    mean_j /= len(theta_samples)
    return scoped_trace_inverse(mean_j + prior_fim(cfg.priors), scope, cfg.n_targets)


def expected_bcrb(p: PowerAllocation, cfg: ScenarioConfig, n_x: int, n_theta: int,
                  rng: SeededStream, scope=Scope.FULL):
    """Monte Carlo mean of ``bcrb_given_input`` under Gaussian symbols.

    Draws one fixed set of n_theta prior realizations (substream "theta")
    reused across all n_x symbol draws (substream "symbols"), so repeated
    calls with the same stream are deterministic. Returns (mean, std_error).
    """
    if n_x < 2 or n_theta < 2:
        raise ValueError("n_x and n_theta must be >= 2")
    thetas = sample_targets(cfg.priors, n_theta, rng.child("theta"))
    symbols = sample_symbols(p, n_x, rng.child("symbols"))
    values = np.array([bcrb_given_input(x, thetas, cfg, scope) for x in symbols])
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_x))
