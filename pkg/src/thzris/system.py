"""Multiuser downlink signal model: composite channels, SINR and sum rate.

Conventions
-----------
The RIS chain is shared by all users (one set of phase vectors). The
composite channel of user ``k`` is the row vector::

    g_k^T diag(phi_I) H_I ... diag(phi_1) H_1 + w_k^T

so the received signal is ``g~_k^T F s``. The interference seen by user
``k`` is ``sum_{j != k} |g~_k^T f_j|^2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .cxmat import unit_modulus
from .errors import RejectedInputError

POWER_TOL = 1e-9
MODULUS_TOL = 1e-12


@dataclass(frozen=True)
class SystemConfig:
    M: int
    K: int
    I: int
    N: tuple
    P_t: float = 10.0
    noise_power: float = 4.8e-11
    frequency: float = 0.12e12
    bandwidth: float = 12e9

    def __post_init__(self):
        object.__setattr__(self, "N", tuple(int(n) for n in self.N))
        if not (self.M >= self.K >= 1):
            raise RejectedInputError(f"need M >= K >= 1, got M={self.M}, K={self.K}")
        if self.I < 0 or len(self.N) != self.I:
            raise RejectedInputError(f"N must list one element count per hop (I={self.I}, N={self.N})")
        if any(n < 1 for n in self.N):
            raise RejectedInputError("every RIS needs at least one element")
        if not self.P_t > 0:
            raise RejectedInputError("P_t must be positive")
        if not self.noise_power > 0:
            raise RejectedInputError("noise_power must be positive")
        if not (self.frequency > 0 and self.bandwidth > 0):
            raise RejectedInputError("frequency and bandwidth must be positive")

    @property
    def rho0(self):
        """Per-user transmit SNR ``P_t / (K sigma^2)``."""
        return self.P_t / (self.K * self.noise_power)


@dataclass
class BeamformingSolution:
    """Digital precoder ``F`` (``M x K``) and one phase vector per RIS."""

    F: np.ndarray
    phases: list
    meta: dict = field(default_factory=dict)

    def is_feasible(self, P_t):
        power_ok = np.real(np.trace(self.F.conj().T @ self.F)) <= P_t + POWER_TOL
        modulus_ok = all(np.all(np.abs(np.abs(phi) - 1.0) <= MODULUS_TOL) for phi in self.phases)
        return bool(power_ok and modulus_ok and np.all(np.isfinite(self.F)))

    def copy(self):
        return BeamformingSolution(self.F.copy(), [p.copy() for p in self.phases], dict(self.meta))


def identity_phases(cfg):
    return [np.ones(n, dtype=complex) for n in cfg.N]


def random_phases(cfg, rng):
    return [np.exp(2j * np.pi * rng.random(n)) for n in cfg.N]


def _cascade_rows(ch, phases):
    """``K x M`` matrix whose rows are the RIS parts of the composite channels."""
    if len(phases) != len(ch.hops):
        raise RejectedInputError(f"{len(phases)} phase vectors for {len(ch.hops)} hops")
    rows = ch.last_hop
    for phi, hop in zip(reversed(phases), reversed(ch.hops)):
        phi = np.asarray(phi)
        if phi.shape != (hop.shape[0],) or rows.shape[1] != hop.shape[0]:
            raise RejectedInputError("phase vector length does not match its hop matrix")
        rows = (rows * phi[None, :]) @ hop
    return rows


def composite_channels(ch, phases):
    """All composite channels stacked as rows (``K x M``)."""
    if not ch.hops:
        if len(phases):
            raise RejectedInputError("phases given for a channel without RIS hops")
        return ch.direct.copy()
    return _cascade_rows(ch, phases) + ch.direct


def composite_channel(ch, phases, k):
    """Composite channel of user ``k`` as a length-``M`` vector."""
    if not 0 <= k < ch.num_users:
        raise RejectedInputError(f"user index {k} out of range")
    return composite_channels(ch, phases)[k]


def sinr_from_composite(G, F, noise_power):
    """Per-user SINRs for composite rows ``G`` (``K x M``) and precoder ``F``."""
    A = np.abs(G @ F) ** 2
    signal = np.diag(A)
    interference = A.sum(axis=1) - signal
    return signal / (interference + noise_power)


def sinrs(sol, ch, noise_power):
    return sinr_from_composite(composite_channels(ch, sol.phases), sol.F, noise_power)


def sinr(sol, ch, k, noise_power):
    return float(sinrs(sol, ch, noise_power)[k])


def sum_rate(sol, ch, noise_power):
    """Sum over users of ``log2(1 + SINR)`` in bits/s/Hz."""
    return float(np.sum(np.log2(1.0 + sinrs(sol, ch, noise_power))))


def rate_from_composite(G, F, noise_power):
    return float(np.sum(np.log2(1.0 + sinr_from_composite(G, F, noise_power))))


def normalize_power(F, P_t):
    """Scale ``F`` so that ``trace(F^H F) = P_t``.

    Raises
    ------
    RejectedInputError
        For an all-zero precoder (degenerate actor output).
    """
    F = np.asarray(F, dtype=complex)
    power = float(np.sum(np.abs(F) ** 2))
    if not power > 0 or not np.isfinite(power):
        raise RejectedInputError("cannot normalize a zero or non-finite precoder")
    return F * np.sqrt(P_t / power)


def project_phases(raw):
    return [unit_modulus(np.asarray(phi, dtype=complex)) for phi in raw]
