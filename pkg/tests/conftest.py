"""Shared builders and independent oracles for the test suite."""

import numpy as np
import pytest

from ofdm_isac import (PowerAllocation, ScenarioConfig, SeededStream,
                       TargetDraw, TargetPrior, sample_targets)

# omega0 = 1 at this spacing, which keeps hand-computed matrices free of
# unit clutter
F0_UNIT = 1.0 / (2.0 * np.pi)


def make_prior(mean=(0.0, 0.0, 1e-6), cov_diag=(0.5, 0.5, 1e-14), cov=None):
    if cov is None:
        cov = np.diag(cov_diag)
    return TargetPrior(np.asarray(mean, dtype=float), np.asarray(cov, dtype=float))


def make_cfg(n=8, m=1, k=1, f0=15e3, radar_noise=1.0, comm_noise=1.0,
             total_power=None, cap=None, comm_channel=None, priors=None,
             delay_scale=1e-6, delay_var=1e-14):
    if total_power is None:
        total_power = float(n * m)
    if priors is None:
        priors = tuple(make_prior(mean=(0.0, 0.0, (j + 1) * delay_scale),
                                  cov_diag=(0.5, 0.5, delay_var))
                       for j in range(k))
    return ScenarioConfig(
        n_subcarriers=n, n_symbols=m, subcarrier_spacing_hz=f0,
        radar_noise_var=radar_noise, comm_noise_var=comm_noise,
        total_power=total_power, per_entry_power_cap=cap,
        comm_channel=comm_channel, priors=priors)


def random_cfg(rng, n_max=16, m_max=4, k_max=3, f0=15e3, normalized=False,
               zero_mean=False):
    """Random small scenario; normalized=True puts omega0 = 1 and O(1) delays."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    k = int(rng.integers(1, k_max + 1))
    if normalized:
        f0 = F0_UNIT
        delay_scale, delay_var = 1.0, float(rng.uniform(0.01, 1.0))
    else:
        delay_scale, delay_var = 1e-6, float(rng.uniform(1e-16, 1e-14))
    priors = []
    for j in range(k):
        if zero_mean:
            mean = (0.0, 0.0, (j + 1) * delay_scale * rng.uniform(0.5, 1.5))
            cov = np.diag([rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), delay_var])
        else:
            mean = (rng.normal(0, 1), rng.normal(0, 1),
                    (j + 1) * delay_scale * rng.uniform(0.5, 1.5))
            a = rng.normal(size=(3, 3)) * np.array([0.5, 0.5, np.sqrt(delay_var)])
            cov = a.T @ a + np.diag([0.1, 0.1, 0.2 * delay_var])
        priors.append(make_prior(mean=mean, cov=cov))
    total = float(n * m * rng.uniform(0.5, 2.0))
    cap = float(rng.uniform(1.2, 4.0)) * total / (n * m)
    return make_cfg(n=n, m=m, k=k, f0=f0, total_power=total, cap=cap,
                    priors=tuple(priors))


def random_allocation(cfg, rng):
    """Feasible random allocation with the budget active."""
    raw = rng.uniform(0.0, 1.0, size=(cfg.n_subcarriers, cfg.n_symbols))
    raw *= cfg.total_power / raw.sum()
    return PowerAllocation(np.minimum(raw, cfg.per_entry_power_cap))


def random_theta(cfg, rng):
    rcs = rng.normal(size=cfg.n_targets) + 1j * rng.normal(size=cfg.n_targets)
    delays = np.array([prior.mean[2] * rng.uniform(0.8, 1.2)
                       for prior in cfg.priors])
    return TargetDraw(rcs=rcs, delays=delays)


def symmetrize(draws):
    """Mirror the RCS draws so the empirical RCS mean is exactly zero."""
    mirrored = [TargetDraw(rcs=-d.rcs, delays=d.delays) for d in draws]
    return list(draws) + mirrored


def symmetric_theta_set(cfg, count, seed=0):
    return symmetrize(sample_targets(cfg.priors, count,
                                     SeededStream(seed).child("theta")))


def cofactor_trace_inverse(a):
    """Trace of the inverse via adjugate/determinant; no factorization."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    det = np.linalg.det(a)
    total = 0.0
    for i in range(n):
        minor = np.delete(np.delete(a, i, axis=0), i, axis=1)
        total += np.linalg.det(minor)
    return total / det


def random_spd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T + n * np.eye(n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
