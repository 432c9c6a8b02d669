"""Action initializers for fixed RIS phases.

* :func:`init_method1_zf` places each user's beam in the null space of the
  other users' composite channels (zero forcing, equal power split).
* :func:`init_method2_maxmin` balances the downlink SINRs through the
  uplink-downlink duality fixed point.

Internally the max-min iteration works with conjugated composite channels
``h_k = conj(g~_k)`` so the signal term is ``|h_k^H f|^2``, and with powers
normalized by ``P_t / K`` so the noise term becomes ``1 / rho0`` with
``rho0 = P_t / (K sigma^2)``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .cxmat import null_space_basis, solve_hpd
from .errors import InfeasibleError, RejectedInputError
from .system import composite_channels, sinr_from_composite

log = logging.getLogger(__name__)

BALANCE_FACTOR = 1e-2
BALANCE_MAX_STEPS = 5000


def zf_from_composite(G, P_t):
    """Null-space zero forcing on composite rows ``G`` (``K x M``).

    Each ``f_k`` is the unit vector of the null space of the other rows that
    maximizes ``|g~_k^T f_k|`` (the projection of ``conj(g~_k)`` onto that
    null space), scaled to power ``P_t / K``.
    """
    G = np.asarray(G, dtype=complex)
    K, M = G.shape
    if M < K:
        raise RejectedInputError(f"zero forcing needs M >= K, got M={M}, K={K}")
    F = np.zeros((M, K), dtype=complex)
    for k in range(K):
        others = np.delete(G, k, axis=0)
        V = np.column_stack(null_space_basis(others))
        target = V @ (V.conj().T @ np.conj(G[k]))
        norm = np.linalg.norm(target)
        F[:, k] = target / norm if norm > 0 else V[:, 0]
    return F * np.sqrt(P_t / K)


def init_method1_zf(ch, phases, P_t):
    """Zero-forcing precoder for the composite channels at ``phases``."""
    return zf_from_composite(composite_channels(ch, phases), P_t)


@dataclass
class MaxMinState:
    """Iterate of the max-min fixed point; powers in Watts."""

    q: np.ndarray
    p: np.ndarray
    v: np.ndarray
    eta: float


@dataclass
class MaxMinResult:
    F: np.ndarray
    converged: bool
    iterations: int
    eta: float
    sinrs: np.ndarray
    history: list = field(default_factory=list)
    state: MaxMinState = None


def _mmse_directions(H, qbar, rho0):
    """Unit MMSE directions ``(sum_{l!=k} q_l h_l h_l^H + I/rho0)^-1 h_k`` and the
    quadratic forms ``h_k^H (...)^-1 h_k``."""
    M, K = H.shape
    V = np.zeros((M, K), dtype=complex)
    quad = np.zeros(K)
    for k in range(K):
        others = [l for l in range(K) if l != k]
        Hk = H[:, others]
        A = (Hk * qbar[others]) @ Hk.conj().T + np.eye(M) / rho0
        x = solve_hpd(A, H[:, k])
        quad[k] = float(np.real(np.vdot(H[:, k], x)))
        V[:, k] = x / np.linalg.norm(x)
    return V, quad


def downlink_gains(H, V):
    """``C[k, l] = |h_k^H v_l|^2`` for unit-norm columns ``v_l``."""
    return np.abs(H.conj().T @ V) ** 2


def _downlink_sinr(C, pbar, rho0):
    signal = np.diag(C) * pbar
    interference = C @ pbar - signal
    return signal / (interference + 1.0 / rho0)


def _balance_downlink(C, pbar, rho0, tol, max_steps=BALANCE_MAX_STEPS):
    """Repeat ``p <- P p / SINR(p)`` (renormalized) for fixed directions."""
    K = pbar.size
    xi = _downlink_sinr(C, pbar, rho0)
    for _ in range(max_steps):
        if (xi.max() - xi.min()) / xi.min() <= tol:
            break
        ptilde = pbar / xi
        pbar = K * ptilde / ptilde.sum()
        xi = _downlink_sinr(C, pbar, rho0)
    return pbar, xi


def init_method2_maxmin(ch, phases, P_t, noise_power, tol=1e-6, max_iter=500):
    """Max-min SINR precoder by the uplink-downlink duality iteration.

    One iteration computes the dual auxiliary variables, renormalizes the
    dual uplink powers to ``P_t``, takes the MMSE directions for those
    powers, and then alternates downlink auxiliary variables
    ``p_l / SINR_l`` with downlink renormalization until the downlink SINRs
    are balanced for the new directions. Balancing fully at every iteration
    makes the minimum SINR nondecreasing from one iteration to the next
    (a single balancing step per iteration does not). The loop stops once
    the relative spread of the downlink SINRs and the relative change of
    their minimum are both at most ``tol``.

    Returns
    -------
    MaxMinResult
        ``F`` has columns ``sqrt(p_k) v_k`` and ``trace(F^H F) = P_t``. When
        ``max_iter`` is exhausted the best iterate (largest minimum SINR) is
        returned with ``converged=False``.
    """
    if not tol > 0:
        raise RejectedInputError("tol must be positive")
    G = composite_channels(ch, phases)
    return maxmin_from_composite(G, P_t, noise_power, tol=tol, max_iter=max_iter)


def maxmin_from_composite(G, P_t, noise_power, tol=1e-6, max_iter=500):
    G = np.asarray(G, dtype=complex)
    K, M = G.shape
    if not np.any(G):
        raise RejectedInputError("all composite channels are zero")
    H = np.conj(G).T
    rho0 = P_t / (K * noise_power)
    qbar = np.ones(K)
    pbar = np.ones(K)
    V = H / np.maximum(np.linalg.norm(H, axis=0), np.finfo(float).tiny)
    history = []
    best = None
    converged = False
    prev_eta = None
    it = 0
    for it in range(1, max_iter + 1):
        # steps 1-2: dual uplink powers
        _, quad = _mmse_directions(H, qbar, rho0)
        qtilde = 1.0 / quad
        qbar = K * qtilde / qtilde.sum()
        # step 5: directions for the new dual powers
        V, _ = _mmse_directions(H, qbar, rho0)
        # steps 3-4, repeated until the downlink SINRs balance for these directions
        pbar, xi = _balance_downlink(downlink_gains(H, V), pbar, rho0, tol * BALANCE_FACTOR)
        eta = float(xi.min())
        history.append(eta)
        if best is None or eta >= best[0]:
            best = (eta, pbar.copy(), V.copy(), qbar.copy(), xi.copy())
        spread = (xi.max() - xi.min()) / xi.min()
        if spread <= tol and prev_eta is not None and abs(eta - prev_eta) <= tol * eta:
            converged = True
            break
        prev_eta = eta
    if converged:
        best = (eta, pbar, V, qbar, xi)
    else:
        log.warning("max-min iteration stopped after %d steps without converging", max_iter)
    eta, pbar, V, qbar, xi = best
    p = pbar * P_t / K
    F = V * np.sqrt(p)[None, :]
    state = MaxMinState(q=qbar * P_t / K, p=p, v=V, eta=eta)
    return MaxMinResult(F=F, converged=converged, iterations=it, eta=eta,
                        sinrs=sinr_from_composite(G, F, noise_power), history=history, state=state)


def coupling_matrices(G, V):
    """``Gamma`` (diagonal entries) and ``F0`` for directions ``V``.

    ``Gamma_k = ||v_k||^2 / |h_k^H v_k|^2`` and, off the diagonal,
    ``F0[k, l] = |h_k^H v_l|^2 / ||v_l||^2``.
    """
    H = np.conj(np.asarray(G, dtype=complex)).T
    norms = np.linalg.norm(V, axis=0) ** 2
    C = np.abs(H.conj().T @ V) ** 2 / norms[None, :]
    gamma = 1.0 / np.diag(C)
    F0 = C.copy()
    np.fill_diagonal(F0, 0.0)
    return gamma, F0


def maxmin_power_closed_form(gamma, F0, eta, rho0):
    """Powers giving every user SINR ``eta``: ``(eta/rho0)(I - eta Gamma F0)^-1 Gamma 1``.

    ``gamma`` may be the diagonal of Gamma or the full diagonal matrix. The
    powers are in the normalized units where the noise is ``1 / rho0``.

    Raises
    ------
    InfeasibleError
        If the spectral radius of ``eta Gamma F0`` is not below one.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim == 2:
        gamma = np.diag(gamma)
    F0 = np.asarray(F0, dtype=float)
    K = gamma.size
    B = eta * gamma[:, None] * F0
    radius = float(np.max(np.abs(np.linalg.eigvals(B)))) if K else 0.0
    if radius >= 1.0:
        raise InfeasibleError(f"spectral radius {radius:.4g} >= 1: eta={eta:.4g} is not achievable")
    p = (eta / rho0) * np.linalg.solve(np.eye(K) - B, gamma)
    if np.any(p <= 0):
        raise InfeasibleError("closed-form powers are not all positive")
    return p
