import numpy as np
import pytest

from ofdm_isac import (PowerAllocation, Scope, SeededStream, SymbolMatrix,
                       TargetDraw, bcrb_given_input, expected_bcrb,
                       is_symmetric_psd, observation_fim, observation_fim_oracle,
                       prior_fim, sample_symbols, sample_targets, utv_cross_sums,
                       utv_sums)

from conftest import (F0_UNIT, cofactor_trace_inverse, make_cfg, make_prior,
                      random_allocation, random_cfg, random_spd, random_theta)


def unit_omega_cfg(**kw):
    kw.setdefault("f0", F0_UNIT)
    return make_cfg(**kw)


class TestObservationFim:
    def test_hand_example_two_subcarriers(self):
        # unit symbols on two subcarriers, unit RCS, omega0 = 1:
        # weighted sums (U, T, V) = (2, 1, 1)
        cfg = unit_omega_cfg(n=2, m=1)
        x = SymbolMatrix(np.ones((2, 1), dtype=complex))
        theta = TargetDraw(rcs=np.array([1.0 + 0j]), delays=np.array([0.3]))
        j = observation_fim(x, theta, cfg)
        expected = 2.0 * np.array([[2.0, 0.0, 0.0],
                                   [0.0, 2.0, -1.0],
                                   [0.0, -1.0, 1.0]])
        assert np.allclose(j, expected, atol=1e-12)
        oracle = observation_fim_oracle(x, theta, cfg)
        assert np.allclose(j, oracle, atol=1e-12)

    def test_zero_input_gives_zero_information(self, rng):
        cfg = make_cfg(n=6, m=2, k=2)
        x = SymbolMatrix(np.zeros((6, 2), dtype=complex))
        assert np.all(observation_fim(x, random_theta(cfg, rng), cfg) == 0.0)

    def test_quadratic_scaling(self, rng):
        cfg = make_cfg(n=5, m=2, k=2)
        theta = random_theta(cfg, rng)
        x = SymbolMatrix(rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2)))
        j1 = observation_fim(x, theta, cfg)
        j2 = observation_fim(SymbolMatrix(3.0 * x.symbols), theta, cfg)
        assert np.allclose(j2, 9.0 * j1, rtol=1e-12)

    def test_matches_analytic_oracle(self, rng):
        for _ in range(20):
            cfg = random_cfg(rng)
            theta = random_theta(cfg, rng)
            x = sample_symbols(random_allocation(cfg, rng), 1,
                               SeededStream(int(rng.integers(1 << 30))))[0]
            j = observation_fim(x, theta, cfg)
            oracle = observation_fim_oracle(x, theta, cfg)
            assert np.linalg.norm(j - oracle) <= 1e-10 * max(
                np.linalg.norm(oracle), 1e-300)

    def test_matches_finite_difference_oracle(self, rng):
        for _ in range(10):
            cfg = random_cfg(rng)
            theta = random_theta(cfg, rng)
            x = sample_symbols(random_allocation(cfg, rng), 1,
                               SeededStream(int(rng.integers(1 << 30))))[0]
            j = observation_fim(x, theta, cfg)
            oracle = observation_fim_oracle(x, theta, cfg, delay_derivative="fd")
            assert np.linalg.norm(j - oracle) <= 1e-5 * np.linalg.norm(oracle)

    def test_symmetric_psd(self, rng):
        for _ in range(20):
            cfg = random_cfg(rng)
            x = sample_symbols(random_allocation(cfg, rng), 1,
                               SeededStream(int(rng.integers(1 << 30))))[0]
            assert is_symmetric_psd(observation_fim(x, random_theta(cfg, rng), cfg))

    def test_coincident_targets_singular(self):
        cfg = make_cfg(n=8, m=1, k=2)
        theta = TargetDraw(rcs=np.array([1 + 0.5j, 1 + 0.5j]),
                           delays=np.array([1e-6, 1e-6]))
        x = SymbolMatrix(np.ones((8, 1), dtype=complex))
        eig = np.linalg.eigvalsh(observation_fim(x, theta, cfg))
        assert eig[0] <= 1e-5 * eig[-1]

    def test_target_permutation_consistency(self, rng):
        cfg = make_cfg(n=6, m=1, k=2)
        theta = random_theta(cfg, rng)
        x = sample_symbols(random_allocation(cfg, rng), 1, SeededStream(4))[0]
        j = observation_fim(x, theta, cfg)
        swapped = TargetDraw(rcs=theta.rcs[::-1], delays=theta.delays[::-1])
        j_swapped = observation_fim(x, swapped, cfg)
        perm = [3, 4, 5, 0, 1, 2]
        assert np.allclose(j_swapped, j[np.ix_(perm, perm)], rtol=1e-12)


class TestUTV:
    def test_cross_conjugate_symmetry(self, rng):
        w = rng.uniform(size=(7, 2))
        u1, t1, v1 = utv_cross_sums(w, 3e-7, 2 * np.pi * 15e3)
        u2, t2, v2 = utv_cross_sums(w, -3e-7, 2 * np.pi * 15e3)
        assert np.allclose(u1, np.conj(u2))
        assert np.allclose(t1, np.conj(t2))
        assert np.allclose(v1, np.conj(v2))

    def test_zero_gap_reduces_to_real_sums(self, rng):
        w = rng.uniform(size=(5, 3))
        sums = utv_sums(w)
        u, t, v = utv_cross_sums(w, 0.0, 1.0)
        assert np.allclose(u, sums.u) and np.allclose(t, sums.t)
        assert np.allclose(v, sums.v)
        assert np.all(sums.u >= 0) and np.all(sums.t >= 0) and np.all(sums.v >= 0)


class TestPriorFim:
    def test_diagonal_covariance(self):
        prior = make_prior(cov_diag=(2.0, 4.0, 0.5))
        j = prior_fim((prior,))
        assert np.allclose(j, np.diag([0.5, 0.25, 2.0]), rtol=1e-12)

    def test_block_diagonal_for_independent_targets(self, rng):
        p1 = make_prior(cov=random_spd(rng, 3, scale=0.1))
        p2 = make_prior(cov=random_spd(rng, 3, scale=0.2))
        j = prior_fim((p1, p2))
        assert np.all(j[:3, 3:] == 0.0) and np.all(j[3:, :3] == 0.0)
        assert np.allclose(j[:3, :3], np.linalg.inv(p1.covariance), rtol=1e-10)

    def test_inverse_identity(self, rng):
        cov = random_spd(rng, 3)
        j = prior_fim((make_prior(cov=cov),))
        assert np.allclose(j @ cov, np.eye(3), atol=1e-10)


class TestBcrb:
    def test_zero_input_prior_only(self, rng):
        cfg = make_cfg(n=4, m=1, k=2)
        x = SymbolMatrix(np.zeros((4, 1), dtype=complex))
        thetas = sample_targets(cfg.priors, 8, SeededStream(0))
        jp_diag = np.diag(np.linalg.inv(prior_fim(cfg.priors)))
        assert bcrb_given_input(x, thetas, cfg, Scope.FULL) == pytest.approx(
            jp_diag.sum(), rel=1e-10)
        assert bcrb_given_input(x, thetas, cfg, Scope.DELAY) == pytest.approx(
            jp_diag[2::3].sum(), rel=1e-10)

    def test_doubling_power_decreases_bound(self, rng):
        cfg = make_cfg(n=6, m=1)
        thetas = sample_targets(cfg.priors, 8, SeededStream(1))
        x = sample_symbols(random_allocation(cfg, rng), 1, SeededStream(2))[0]
        x2 = SymbolMatrix(np.sqrt(2.0) * x.symbols)
        assert (bcrb_given_input(x2, thetas, cfg)
                < bcrb_given_input(x, thetas, cfg))

    def test_closed_three_by_three(self):
        # information 2*[[2,0,0],[0,2,-1],[0,-1,1]] plus unit prior
        cfg = unit_omega_cfg(n=2, m=1,
                             priors=(make_prior(mean=(0, 0, 0.3),
                                                cov=np.eye(3)),))
        x = SymbolMatrix(np.ones((2, 1), dtype=complex))
        theta = TargetDraw(rcs=np.array([1.0 + 0j]), delays=np.array([0.3]))
        a = 2.0 * np.array([[2.0, 0, 0], [0, 2.0, -1.0], [0, -1.0, 1.0]]) + np.eye(3)
        expected = cofactor_trace_inverse(a)
        assert bcrb_given_input(x, [theta], cfg) == pytest.approx(expected, rel=1e-10)

    def test_relabeling_invariance(self, rng):
        cfg = make_cfg(n=5, m=1, k=2)
        cfg_swapped = make_cfg(n=5, m=1, k=2, priors=cfg.priors[::-1])
        thetas = sample_targets(cfg.priors, 6, SeededStream(5))
        swapped = [TargetDraw(rcs=t.rcs[::-1], delays=t.delays[::-1])
                   for t in thetas]
        x = sample_symbols(random_allocation(cfg, rng), 1, SeededStream(6))[0]
        b1 = bcrb_given_input(x, thetas, cfg)
        b2 = bcrb_given_input(x, swapped, cfg_swapped)
        assert b1 == pytest.approx(b2, rel=1e-10)

    def test_bound_below_prior_only(self, rng):
        cfg = make_cfg(n=6, m=1, k=2)
        thetas = sample_targets(cfg.priors, 8, SeededStream(3))
        prior_only = float(np.diag(np.linalg.inv(prior_fim(cfg.priors))).sum())
        for _ in range(5):
            x = sample_symbols(random_allocation(cfg, rng), 1,
                               SeededStream(int(rng.integers(1 << 30))))[0]
            assert bcrb_given_input(x, thetas, cfg) <= prior_only + 1e-12


class TestExpectedBcrb:
    def test_zero_allocation_degenerate(self):
        cfg = make_cfg(n=4, m=1)
        p = PowerAllocation(np.zeros((4, 1)))
        mean, se = expected_bcrb(p, cfg, 8, 8, SeededStream(0))
        prior_only = float(np.diag(np.linalg.inv(prior_fim(cfg.priors))).sum())
        assert mean == pytest.approx(prior_only, rel=1e-10)
        assert se == 0.0

    def test_monotone_under_nested_allocations(self):
        cfg = make_cfg(n=8, m=1, cap=4.0)
        p1 = PowerAllocation.uniform(cfg, level=0.5)
        p2 = PowerAllocation.uniform(cfg, level=1.0)
        m1, _ = expected_bcrb(p1, cfg, 16, 16, SeededStream(9))
        m2, _ = expected_bcrb(p2, cfg, 16, 16, SeededStream(9))
        assert m2 < m1

    def test_deterministic(self):
        cfg = make_cfg(n=4, m=2)
        p = PowerAllocation.uniform(cfg)
        a = expected_bcrb(p, cfg, 4, 4, SeededStream(7), Scope.DELAY)
        b = expected_bcrb(p, cfg, 4, 4, SeededStream(7), Scope.DELAY)
        assert a == b

    def test_asymptotic_gap_shrinks_with_n(self):
        # matched per-subcarrier SNR: uniform unit power at every width
        from ofdm_isac import acrb, sample_targets
        gaps = []
        for n in (64, 1024):
            cfg = make_cfg(n=n, total_power=float(n), cap=1.25)
            stream = SeededStream(21)
            thetas = sample_targets(cfg.priors, 32, stream.child("theta"))
            p = PowerAllocation.uniform(cfg)
            mean, _ = expected_bcrb(p, cfg, 64, 32, stream, Scope.DELAY)
            reference = acrb(p, thetas, cfg, Scope.DELAY)
            gaps.append(abs(mean - reference) / reference)
        assert gaps[1] < gaps[0]
