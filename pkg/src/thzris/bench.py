"""Baselines and verification oracles.

* :func:`zf_no_ris` is full-digital zero forcing on the direct links only.
* :func:`alternating_single_hop` is a simplified stand-in for an alternating
  optimization benchmark on one RIS: max-min precoding at fixed phases
  alternated with grid coordinate ascent over the phases. Its output carries
  ``meta["label"] == "simplified-alternating-stand-in"``.
* :func:`brute_force_oracle` enumerates a uniform phase grid on tiny
  instances.
* :func:`scalar_alignment_optimum` is the closed-form optimum for a
  single-antenna, single-user, single-RIS link.
"""

import itertools

import numpy as np

from .errors import RejectedInputError
from .initsolvers import init_method2_maxmin, maxmin_from_composite, zf_from_composite
from .system import BeamformingSolution, composite_channels, identity_phases, sum_rate

STAND_IN_LABEL = "simplified-alternating-stand-in"
MAX_SEARCH = 64 ** 4
RANK_TOL = 1e-10


def zf_no_ris(direct, P_t, noise):
    """Pseudo-inverse zero forcing on the stacked direct channels ``w_k^T``.

    Columns get equal power ``P_t / K``. If the stack is rank deficient the
    null-space construction is used instead and ``meta["fallback"]`` is set.
    ``noise`` only enters the reported ``meta["sum_rate"]``.
    """
    W = np.atleast_2d(np.asarray(direct, dtype=complex))
    K, M = W.shape
    if M < K:
        raise RejectedInputError(f"zero forcing needs M >= K, got M={M}, K={K}")
    sv = np.linalg.svd(W, compute_uv=False)
    fallback = not sv[-1] > RANK_TOL * sv[0]
    if fallback:
        F = zf_from_composite(W, P_t)
    else:
        F = np.linalg.pinv(W)
        F = F / np.linalg.norm(F, axis=0)[None, :] * np.sqrt(P_t / K)
    rate = float(np.sum(np.log2(1.0 + _sinr_batch(W[None], F, noise)[0])))
    return BeamformingSolution(F, [], {"scheme": "no_ris_zf", "fallback": fallback, "sum_rate": rate})


def _sinr_batch(Gs, F, noise):
    """SINRs for a stack of composite matrices ``Gs`` (``B x K x M``)."""
    A = np.abs(Gs @ F) ** 2
    signal = np.diagonal(A, axis1=1, axis2=2)
    return signal / (A.sum(axis=2) - signal + noise)


def _rates_batch(Gs, F, noise):
    return np.sum(np.log2(1.0 + _sinr_batch(Gs, F, noise)), axis=1)


def phase_grid(points):
    return np.exp(2j * np.pi * np.arange(points) / points)


def alternating_single_hop(ch, P_t, noise, outer_iters=20, grid_points=64, tol=1e-4):
    """Alternate max-min precoding and per-element phase grid search (I = 1).

    A new precoder is kept only if it does not lower the sum rate, and each
    coordinate step keeps the current phase unless a grid point does better,
    so the recorded sum-rate sequence ``meta["history"]`` is nondecreasing.
    Stops when an outer iteration gains less than ``tol``.
    """
    if len(ch.hops) != 1:
        raise RejectedInputError("alternating_single_hop needs exactly one RIS hop")
    H = ch.hops[0]
    N = H.shape[0]
    phi = np.ones(N, dtype=complex)
    F = init_method2_maxmin(ch, [phi], P_t, noise).F
    rate = _rate(ch, F, phi, noise)
    history = [rate]
    grid = phase_grid(grid_points)
    for _ in range(outer_iters):
        F_new = init_method2_maxmin(ch, [phi], P_t, noise).F
        if _rate(ch, F_new, phi, noise) >= rate:
            F = F_new
        for n in range(N):
            # composite rows are affine in phi_n: G = rest + phi_n * A_n
            A_n = ch.last_hop[:, n][:, None] * H[n][None, :]
            rest = composite_channels(ch, [phi]) - phi[n] * A_n
            candidates = np.concatenate([[phi[n]], grid])
            rates = _rates_batch(rest[None] + candidates[:, None, None] * A_n[None], F, noise)
            phi[n] = candidates[int(np.argmax(rates))]
        new_rate = _rate(ch, F, phi, noise)
        history.append(new_rate)
        gain = new_rate - rate
        rate = max(rate, new_rate)
        if gain < tol:
            break
    return BeamformingSolution(F, [phi], {"scheme": "single_hop_alt", "label": STAND_IN_LABEL,
                                          "history": history, "sum_rate": rate})


def _rate(ch, F, phi, noise):
    return sum_rate(BeamformingSolution(F, [phi]), ch, noise)


def brute_force_oracle(cfg, ch, grid_points=16):
    """Global optimum over a uniform phase grid, Method II precoding per point.

    Returns
    -------
    (BeamformingSolution, float)
        Best solution and its sum rate.
    """
    entries = sum(cfg.N)
    if entries > 4 or grid_points > 64 or grid_points ** entries > MAX_SEARCH:
        raise RejectedInputError(
            f"search size {grid_points}^{entries} exceeds the oracle guard (<= 4 entries, <= 64 points)")
    grid = phase_grid(grid_points)
    combos = np.array(list(itertools.product(grid, repeat=entries))) if entries else np.ones((1, 0))
    splits = np.cumsum(cfg.N)[:-1]
    if cfg.K == 1:
        # max-min precoding for one user is the full-power matched filter
        Gs = np.stack([composite_channels(ch, np.split(c, splits)) for c in combos])[:, 0, :]
        gains = np.sum(np.abs(Gs) ** 2, axis=1)
        best = int(np.argmax(gains))
        g = Gs[best]
        F = (np.conj(g) / np.linalg.norm(g) * np.sqrt(cfg.P_t))[:, None]
        rate = float(np.log2(1.0 + cfg.P_t * gains[best] / cfg.noise_power))
    else:
        best, rate, F = 0, -np.inf, None
        for i, c in enumerate(combos):
            G = composite_channels(ch, np.split(c, splits))
            F_i = maxmin_from_composite(G, cfg.P_t, cfg.noise_power).F
            r = float(np.sum(np.log2(1.0 + _sinr_batch(G[None], F_i, cfg.noise_power)[0])))
            if r > rate:
                best, rate, F = i, r, F_i
    phases = [p.copy() for p in np.split(combos[best], splits)]
    sol = BeamformingSolution(F, phases, {"scheme": "brute_force", "grid_points": grid_points, "sum_rate": rate})
    return sol, rate


def scalar_alignment_optimum(ch, P_t, noise):
    """Closed-form optimum for ``M = K = I = 1``-antenna/user/hop links.

    Every element is co-phased with the direct link,
    ``phi_n = arg(w) - arg(g_n h_n)``, giving rate
    ``log2(1 + P_t (sum_n |g_n h_n| + |w|)^2 / noise)``.
    """
    if len(ch.hops) != 1 or ch.num_antennas != 1 or ch.num_users != 1:
        raise RejectedInputError("scalar closed form needs M = K = I = 1")
    gh = ch.last_hop[0] * ch.hops[0][:, 0]
    w = ch.direct[0, 0]
    phi = np.exp(1j * (np.angle(w) - np.angle(gh)))
    amp = np.sum(np.abs(gh)) + np.abs(w)
    rate = float(np.log2(1.0 + P_t * amp ** 2 / noise))
    F = np.array([[np.sqrt(P_t) * np.exp(-1j * np.angle(w))]])
    return BeamformingSolution(F, [phi], {"scheme": "scalar_closed_form", "sum_rate": rate}), rate


def identity_phase_rate(cfg, ch):
    """Sum rate of Method II precoding at all-ones phases."""
    phases = identity_phases(cfg)
    return sum_rate(BeamformingSolution(init_method2_maxmin(ch, phases, cfg.P_t, cfg.noise_power).F, phases),
                    ch, cfg.noise_power)
