import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thzris.errors import RejectedInputError
from thzris.system import (BeamformingSolution, SystemConfig, composite_channel, composite_channels,
                           identity_phases, normalize_power, project_phases, random_phases, sinr,
                           sinrs, sum_rate)

from helpers import crandn, random_instance


def fake_channel(hops, last_hop, direct):
    return SimpleNamespace(hops=list(hops), last_hop=last_hop, direct=direct, num_users=direct.shape[0])


def expand_composite(ch, phases, k, M):
    """g_k^T Phi_I H_I ... Phi_1 H_1 + w_k^T written out as nested sums."""
    out = []
    for m in range(M):
        # vector over the elements of the current hop, starting at the BS side
        v = [ch.hops[0][n, m] * phases[0][n] for n in range(ch.hops[0].shape[0])]
        for i in range(1, len(ch.hops)):
            H = ch.hops[i]
            v = [phases[i][a] * sum(H[a, b] * v[b] for b in range(H.shape[1])) for a in range(H.shape[0])]
        out.append(sum(ch.last_hop[k, n] * v[n] for n in range(len(v))) + ch.direct[k, m])
    return np.array(out)


def scalar_sum_rate(G, F, noise):
    K, M = G.shape
    total = 0.0
    for k in range(K):
        gains = []
        for j in range(K):
            acc = 0j
            for m in range(M):
                acc += G[k, m] * F[m, j]
            gains.append(abs(acc) ** 2)
        s = gains[k]
        i = sum(gains) - s
        total += math.log2(1 + s / (i + noise))
    return total


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(M=1, K=2, I=0, N=()), dict(M=2, K=0, I=0, N=()),
                                    dict(M=2, K=1, I=1, N=()), dict(M=2, K=1, I=1, N=(0,)),
                                    dict(M=2, K=1, I=0, N=(), P_t=0.0),
                                    dict(M=2, K=1, I=0, N=(), noise_power=-1.0)])
    def test_rejects(self, kw):
        with pytest.raises(RejectedInputError):
            SystemConfig(**kw)

    def test_rho0(self):
        cfg = SystemConfig(M=4, K=2, I=0, N=())
        assert cfg.rho0 == pytest.approx(10.0 / (2 * 4.8e-11))


class TestComposite:
    def test_no_ris_is_direct(self):
        rng = np.random.default_rng(0)
        W = crandn(rng, 2, 3)
        ch = fake_channel([], np.zeros((2, 0)), W)
        np.testing.assert_array_equal(composite_channel(ch, [], 1), W[1])

    def test_pass_through(self):
        rng = np.random.default_rng(1)
        H = np.eye(3, dtype=complex)
        g = np.zeros((1, 3), dtype=complex)
        g[0, 0] = 1
        w = crandn(rng, 1, 3)
        ch = fake_channel([H], g, w)
        np.testing.assert_allclose(composite_channel(ch, [np.ones(3)], 0), H[0] + w[0], atol=0)

    def test_expansion_oracle(self):
        rng = np.random.default_rng(2)
        hops = [crandn(rng, 2, 2), crandn(rng, 2, 2)]
        ch = fake_channel(hops, crandn(rng, 2, 2), crandn(rng, 2, 2))
        phases = [np.exp(1j * rng.uniform(0, 6.3, 2)) for _ in range(2)]
        for k in range(2):
            np.testing.assert_allclose(composite_channel(ch, phases, k), expand_composite(ch, phases, k, 2),
                                       rtol=0, atol=1e-12)

    def test_expansion_oracle_uneven(self):
        rng = np.random.default_rng(3)
        hops = [crandn(rng, 3, 2), crandn(rng, 1, 3), crandn(rng, 2, 1)]
        ch = fake_channel(hops, crandn(rng, 3, 2), crandn(rng, 3, 2))
        phases = [np.exp(1j * rng.uniform(0, 6.3, h.shape[0])) for h in hops]
        G = composite_channels(ch, phases)
        for k in range(3):
            np.testing.assert_allclose(G[k], expand_composite(ch, phases, k, 2), atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(4)
        hops = [crandn(rng, 3, 2), crandn(rng, 2, 3)]
        last, direct = crandn(rng, 2, 2), crandn(rng, 2, 2)
        phases = [np.exp(1j * rng.uniform(0, 6.3, h.shape[0])) for h in hops]
        dH = crandn(rng, 2, 3)
        a, b = 0.7 - 0.2j, -1.3
        base = composite_channels(fake_channel(hops, last, direct), phases)
        pert = composite_channels(fake_channel([hops[0], dH], last, np.zeros_like(direct)), phases)
        mix = composite_channels(fake_channel([hops[0], a * hops[1] + b * dH], last, a * direct), phases)
        np.testing.assert_allclose(mix, a * base + b * pert, atol=1e-12)

    def test_errors(self):
        rng = np.random.default_rng(5)
        ch = fake_channel([crandn(rng, 2, 2)], crandn(rng, 1, 2), crandn(rng, 1, 2))
        with pytest.raises(RejectedInputError):
            composite_channel(ch, [np.ones(3)], 0)
        with pytest.raises(RejectedInputError):
            composite_channel(ch, [], 0)
        with pytest.raises(RejectedInputError):
            composite_channel(ch, [np.ones(2)], 1)


class TestSinr:
    def test_single_user(self):
        rng = np.random.default_rng(0)
        cfg, ch = random_instance(rng, 2, 1)
        sol = BeamformingSolution(normalize_power(crandn(rng, 2, 1), cfg.P_t), random_phases(cfg, rng))
        g = composite_channel(ch, sol.phases, 0)
        assert sinr(sol, ch, 0, cfg.noise_power) == pytest.approx(abs(g @ sol.F[:, 0]) ** 2 / cfg.noise_power,
                                                                  rel=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_scalar_oracle(self, seed):
        rng = np.random.default_rng(seed)
        M = int(rng.integers(1, 4))
        K = int(rng.integers(1, M + 1))
        cfg, ch = random_instance(rng, M, K, I=2, N=tuple(rng.integers(1, 4, size=2)))
        sol = BeamformingSolution(normalize_power(crandn(rng, M, K), cfg.P_t), random_phases(cfg, rng))
        G = composite_channels(ch, sol.phases)
        assert sum_rate(sol, ch, cfg.noise_power) == pytest.approx(
            scalar_sum_rate(G, sol.F, cfg.noise_power), rel=1e-10)

    def test_common_phase_invariance(self):
        rng = np.random.default_rng(11)
        cfg, ch = random_instance(rng, 4, 3)
        sol = BeamformingSolution(normalize_power(crandn(rng, 4, 3), cfg.P_t), random_phases(cfg, rng))
        rot = sol.copy()
        rot.F = rot.F * np.exp(1j * rng.uniform(0, 6.3, 3))[None, :]
        np.testing.assert_allclose(sinrs(rot, ch, cfg.noise_power), sinrs(sol, ch, cfg.noise_power), rtol=1e-12)

    def test_homogeneity(self):
        rng = np.random.default_rng(12)
        cfg, ch = random_instance(rng, 3, 2)
        sol = BeamformingSolution(normalize_power(crandn(rng, 3, 2), cfg.P_t), random_phases(cfg, rng))
        scaled = BeamformingSolution(normalize_power(sol.F, 7 * cfg.P_t), sol.phases)
        np.testing.assert_allclose(sinrs(scaled, ch, 7 * cfg.noise_power), sinrs(sol, ch, cfg.noise_power),
                                   rtol=1e-12)


class TestSumRate:
    def test_zero_precoder(self):
        rng = np.random.default_rng(0)
        cfg, ch = random_instance(rng, 2, 2)
        assert sum_rate(BeamformingSolution(np.zeros((2, 2), complex), identity_phases(cfg)), ch, 1.0) == 0.0

    def test_unit_sinr(self):
        ch = fake_channel([], np.zeros((1, 0)), np.array([[1.0 + 0j]]))
        sol = BeamformingSolution(np.array([[1.0 + 0j]]), [])
        assert sum_rate(sol, ch, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_equal_sinr_three(self):
        ch = fake_channel([], np.zeros((3, 0)), np.eye(3, dtype=complex))
        sol = BeamformingSolution(np.sqrt(3.0) * np.eye(3, dtype=complex), [])
        assert sum_rate(sol, ch, 1.0) == pytest.approx(6.0, abs=1e-14)


class TestNormalize:
    def test_feasible_unchanged(self):
        F = np.array([[2.0 + 0j, 0], [0, 2.0j]])
        np.testing.assert_allclose(normalize_power(F, 8.0), F, rtol=1e-15)

    def test_halving(self):
        F = np.array([[2.0 + 0j], [0]])
        np.testing.assert_allclose(normalize_power(F, 1.0), F / 2, rtol=1e-15)

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1e6))
    def test_trace(self, seed, P_t):
        rng = np.random.default_rng(seed)
        F = crandn(rng, 3, 2) * 10 ** rng.uniform(-8, 8)
        out = normalize_power(F, P_t)
        assert np.real(np.trace(out.conj().T @ out)) == pytest.approx(P_t, rel=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(RejectedInputError):
            normalize_power(np.zeros((2, 2)), 1.0)


class TestProjectPhases:
    def test_examples(self):
        unit = np.exp(1j * np.linspace(0, 6, 7))
        out = project_phases([unit, np.array([2 + 0j, 0j])])
        np.testing.assert_allclose(out[0], unit, atol=1e-15)
        np.testing.assert_array_equal(out[1], [1 + 0j, 1 + 0j])

    def test_feasibility_flag(self):
        sol = BeamformingSolution(np.eye(2, dtype=complex), [np.array([1.0 + 0j, 1.1 + 0j])])
        assert not sol.is_feasible(2.0)
        sol.phases = project_phases(sol.phases)
        assert sol.is_feasible(2.0)
        assert not sol.is_feasible(1.5)
