from types import SimpleNamespace

import numpy as np
import pytest

from thzris.bench import (STAND_IN_LABEL, alternating_single_hop, brute_force_oracle, identity_phase_rate,
                          phase_grid, scalar_alignment_optimum, zf_no_ris)
from thzris.errors import RejectedInputError
from thzris.system import SystemConfig, sum_rate

from helpers import crandn, random_instance

NOISE = 4.8e-11


def scalar_channel(g, h, w):
    """``M = K = I = 1`` channel with per-element gains ``g`` (RIS->user) and ``h`` (BS->RIS)."""
    g, h = np.atleast_1d(g).astype(complex), np.atleast_1d(h).astype(complex)
    return SimpleNamespace(hops=[h[:, None]], last_hop=g[None, :], direct=np.array([[w]], dtype=complex),
                           num_users=1, num_antennas=1)


def two_antenna_one_element_optimum(ch, P_t, noise):
    """max over phi of ||phi a + b||^2 = |a|^2 + |b|^2 + 2|a^H b| for one element, M = 2."""
    a = ch.last_hop[0, 0] * ch.hops[0][0]
    b = ch.direct[0]
    gain = np.linalg.norm(a) ** 2 + np.linalg.norm(b) ** 2 + 2 * abs(np.vdot(a, b))
    return float(np.log2(1 + P_t * gain / noise))


class TestZfNoRis:
    def test_orthonormal_rows(self):
        rng = np.random.default_rng(0)
        U, _ = np.linalg.qr(crandn(rng, 4, 4))
        W = U[:3]
        sol = zf_no_ris(W, 10.0, NOISE)
        for k in range(3):
            ratio = sol.F[:, k] / W[k].conj()
            np.testing.assert_allclose(ratio, ratio[0], rtol=1e-10)
        assert not sol.meta["fallback"]

    def test_single_user_matched(self):
        w = crandn(np.random.default_rng(1), 1, 3)
        sol = zf_no_ris(w, 10.0, NOISE)
        np.testing.assert_allclose(sol.F[:, 0], np.sqrt(10.0) * w[0].conj() / np.linalg.norm(w), atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_interference(self, seed):
        W = crandn(np.random.default_rng(seed), 3, 4)
        sol = zf_no_ris(W, 10.0, NOISE)
        A = np.abs(W @ sol.F) ** 2
        assert np.max((A - np.diag(np.diag(A))) / np.diag(A)[:, None]) <= 1e-9
        assert np.real(np.trace(sol.F.conj().T @ sol.F)) == pytest.approx(10.0, rel=1e-12)
        assert sol.is_feasible(10.0)

    def test_rank_deficient_fallback(self):
        rng = np.random.default_rng(2)
        w = crandn(rng, 1, 3)
        W = np.vstack([w, 2 * w])
        sol = zf_no_ris(W, 10.0, NOISE)
        assert sol.meta["fallback"]
        assert sol.is_feasible(10.0)

    def test_rejects_wide(self):
        with pytest.raises(RejectedInputError):
            zf_no_ris(np.ones((3, 2)), 10.0, NOISE)


class TestScalarOptimum:
    def test_closed_form(self):
        ch = scalar_channel(0.5 * np.exp(0.3j), 2e-4 * np.exp(-1.1j), 1e-4 * np.exp(2.0j))
        sol, rate = scalar_alignment_optimum(ch, 10.0, NOISE)
        assert rate == pytest.approx(np.log2(1 + 10.0 * (1e-4 + 1e-4) ** 2 / NOISE), rel=1e-12)
        assert sum_rate(sol, ch, NOISE) == pytest.approx(rate, rel=1e-12)
        assert np.angle(sol.phases[0][0]) == pytest.approx(2.0 - (0.3 - 1.1), abs=1e-12)

    def test_oracle_matches(self):
        rng = np.random.default_rng(3)
        cfg = SystemConfig(M=1, K=1, I=1, N=(1,))
        g, h, w = crandn(rng, 1)[0], 1e-4 * crandn(rng, 1)[0], 1e-4 * crandn(rng, 1)[0]
        ch = scalar_channel(g, h, w)
        sol, rate = brute_force_oracle(cfg, ch, 64)
        _, exact = scalar_alignment_optimum(ch, cfg.P_t, NOISE)
        assert rate == pytest.approx(exact, rel=1e-3)
        best = np.angle(w) - np.angle(g * h)
        step = 2 * np.pi / 64
        diff = np.angle(sol.phases[0][0] * np.exp(-1j * best))
        assert abs(diff) <= step

    def test_zero_direct_link(self):
        rng = np.random.default_rng(4)
        cfg = SystemConfig(M=1, K=1, I=1, N=(1,))
        g, h = crandn(rng, 1)[0], 1e-4 * crandn(rng, 1)[0]
        ch = scalar_channel(g, h, 0.0)
        _, rate = brute_force_oracle(cfg, ch, 16)
        assert rate == pytest.approx(np.log2(1 + cfg.P_t * abs(g * h) ** 2 / NOISE), rel=1e-3)

    def test_rejects_multiantenna(self):
        rng = np.random.default_rng(5)
        _, ch = random_instance(rng, 2, 1)
        with pytest.raises(RejectedInputError):
            scalar_alignment_optimum(ch, 10.0, NOISE)


class TestOracle:
    def test_guard(self):
        rng = np.random.default_rng(0)
        cfg, ch = random_instance(rng, 2, 1, I=1, N=(5,))
        with pytest.raises(RejectedInputError):
            brute_force_oracle(cfg, ch, 4)
        cfg, ch = random_instance(rng, 2, 1, I=1, N=(2,))
        with pytest.raises(RejectedInputError):
            brute_force_oracle(cfg, ch, 65)

    @pytest.mark.parametrize("seed", range(10))
    def test_two_antenna_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        cfg, ch = random_instance(rng, 2, 1, I=1, N=(1,))
        _, rate = brute_force_oracle(cfg, ch, 64)
        assert rate == pytest.approx(two_antenna_one_element_optimum(ch, cfg.P_t, cfg.noise_power), rel=1e-3)

    @pytest.mark.parametrize("seed", range(10))
    def test_dominates_baseline(self, seed):
        rng = np.random.default_rng(50 + seed)
        cfg, ch = random_instance(rng, 2, 1, I=1, N=(2,))
        sol, rate = brute_force_oracle(cfg, ch, 64)
        alt = alternating_single_hop(ch, cfg.P_t, cfg.noise_power)
        assert rate >= alt.meta["sum_rate"] * (1 - 1e-3)
        assert sum_rate(sol, ch, cfg.noise_power) == pytest.approx(rate, rel=1e-10)
        assert sol.is_feasible(cfg.P_t)

    def test_multiuser_path(self):
        rng = np.random.default_rng(6)
        cfg, ch = random_instance(rng, 2, 2, I=1, N=(2,))
        sol, rate = brute_force_oracle(cfg, ch, 8)
        assert rate >= identity_phase_rate(cfg, ch) - 1e-9
        assert sum_rate(sol, ch, cfg.noise_power) == pytest.approx(rate, rel=1e-9)


class TestAlternating:
    @pytest.mark.parametrize("seed", range(6))
    def test_nondecreasing_and_dominates_start(self, seed):
        rng = np.random.default_rng(seed)
        cfg, ch = random_instance(rng, 4, 2, I=1, N=(6,))
        sol = alternating_single_hop(ch, cfg.P_t, cfg.noise_power)
        h = np.array(sol.meta["history"])
        assert np.all(np.diff(h) >= -1e-12)
        assert sol.meta["sum_rate"] >= identity_phase_rate(cfg, ch) - 1e-12
        assert sol.meta["label"] == STAND_IN_LABEL
        assert sol.is_feasible(cfg.P_t)
        assert sum_rate(sol, ch, cfg.noise_power) == pytest.approx(sol.meta["sum_rate"], rel=1e-12)

    def test_scalar_case(self):
        rng = np.random.default_rng(7)
        ch = scalar_channel(crandn(rng, 1)[0], 1e-4 * crandn(rng, 1)[0], 1e-4 * crandn(rng, 1)[0])
        rate = alternating_single_hop(ch, 10.0, NOISE).meta["sum_rate"]
        _, exact = scalar_alignment_optimum(ch, 10.0, NOISE)
        assert rate == pytest.approx(exact, rel=5e-3)

    def test_rejects_two_hops(self):
        rng = np.random.default_rng(8)
        _, ch = random_instance(rng, 2, 1, I=2)
        with pytest.raises(RejectedInputError):
            alternating_single_hop(ch, 10.0, NOISE)


def test_phase_grid():
    g = phase_grid(4)
    np.testing.assert_allclose(g, [1, 1j, -1, -1j], atol=1e-15)
