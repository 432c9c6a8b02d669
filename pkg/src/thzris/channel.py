"""THz propagation gains and Rician channel realizations for a RIS chain.

Large-scale model
-----------------
Every RIS element reflects specularly, so a path BS -> RIS_1 -> ... -> RIS_I
-> user carries the reflected line-of-sight gain over the *total* path
length ``D``::

    reflection_amplitude**I * c / (4 pi f D) * exp(-alpha D / 2)

which for one hop is exactly :func:`nlos_gain`. The cascade gain is split
over the hop matrices with cumulative distances ``D_1 < D_2 < ...`` so that
the product of per-hop amplitudes reproduces it for every element path:

* ``H_1``      : ``r * los(D_1)``
* ``H_{i+1}``  : ``r * los(D_{i+1}) / los(D_i)``
* ``g_k``      : ``los(D_user,k) / los(D_I)``
* ``w_k``      : ``los(|BS - user_k|)``

Small-scale model
-----------------
Each link is ``sqrt(K/(K+1)) * Hbar + sqrt(1/(K+1)) * Htilde`` with
``Htilde`` i.i.d. CN(0, 1). The deterministic part ``Hbar`` is the
unit-modulus spherical-wave phase ``exp(-j 2 pi |r_n - t_m| / lambda)``
between element positions. All arrays are uniform linear arrays along the
y axis with ``element_spacing_wl`` wavelengths between elements.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInputError

SPEED_OF_LIGHT = 299_792_458.0


def calibrate_alpha(frequency=0.12e12, distance=10.0, total_loss_db=100.0):
    """Absorption coefficient (1/m) making the LoS loss at ``distance`` equal
    ``total_loss_db``."""
    spread_db = -20.0 * np.log10(spreading_gain(frequency, distance))
    absorb_db = total_loss_db - spread_db
    if absorb_db < 0:
        raise RejectedInputError("target loss is below the spreading loss alone")
    return float(absorb_db * np.log(10.0) / (10.0 * distance))


@dataclass(frozen=True)
class ThzLinkParams:
    """Propagation parameters shared by every link of a scenario.

    ``alpha_molec`` folds temperature and pressure into one coefficient; the
    default is calibrated to 100 dB total loss at 10 m and 0.12 THz.
    ``k_h``, ``k_g`` and ``k_w`` are the Rician factors of the RIS-to-RIS
    hops, the last hop, and the direct links.
    """

    frequency: float = 0.12e12
    alpha_molec: float = field(default_factory=calibrate_alpha)
    reflection_amplitude: float = 0.9
    k_h: float = 1.0
    k_g: float = 1.0
    k_w: float = 1.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise RejectedInputError("frequency must be positive")
        if not self.alpha_molec >= 0:
            raise RejectedInputError("alpha_molec must be nonnegative")
        if not 0 < self.reflection_amplitude <= 1:
            raise RejectedInputError("reflection_amplitude must lie in (0, 1]")
        for name in ("k_h", "k_g", "k_w"):
            if not getattr(self, name) >= 0:
                raise RejectedInputError(f"{name} must be nonnegative")

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.frequency


@dataclass
class Topology:
    """Node positions in meters; RIS positions are ordered hop 1 ... I."""

    bs_position: np.ndarray
    ris_positions: list
    user_positions: list
    element_spacing_wl: float = 2.0

    def __post_init__(self):
        self.bs_position = np.asarray(self.bs_position, dtype=float).reshape(3)
        self.ris_positions = [np.asarray(p, dtype=float).reshape(3) for p in self.ris_positions]
        self.user_positions = [np.asarray(p, dtype=float).reshape(3) for p in self.user_positions]
        chain = [self.bs_position] + self.ris_positions
        for a, b in zip(chain[:-1], chain[1:]):
            if np.linalg.norm(b - a) <= 0:
                raise RejectedInputError("hop distances must be strictly positive")
        for u in self.user_positions:
            if np.linalg.norm(u - chain[-1]) <= 0 or np.linalg.norm(u - self.bs_position) <= 0:
                raise RejectedInputError("hop distances must be strictly positive")

    def hop_distances(self):
        chain = [self.bs_position] + self.ris_positions
        return [float(np.linalg.norm(b - a)) for a, b in zip(chain[:-1], chain[1:])]

    def user_distance(self, k, from_node=None):
        src = self.bs_position if from_node is None else from_node
        return float(np.linalg.norm(self.user_positions[k] - src))


@dataclass
class ChannelSet:
    """One realization of every link.

    ``hops[i]`` is ``H_{i+1}`` (``N_1 x M`` first, then ``N_{i+1} x N_i``),
    ``last_hop`` stacks the ``g_k`` as rows (``K x N_I``), ``direct`` stacks
    the ``w_k`` as rows (``K x M``).
    """

    hops: list
    last_hop: np.ndarray
    direct: np.ndarray

    @property
    def num_users(self):
        return self.direct.shape[0]

    @property
    def num_antennas(self):
        return self.direct.shape[1]

    def check(self, cfg):
        M, K, I = cfg.M, cfg.K, cfg.I
        if self.direct.shape != (K, M):
            raise RejectedInputError(f"direct links have shape {self.direct.shape}, expected {(K, M)}")
        if len(self.hops) != I:
            raise RejectedInputError(f"{len(self.hops)} hop matrices for I={I}")
        cols = M
        for i, h in enumerate(self.hops):
            if h.shape != (cfg.N[i], cols):
                raise RejectedInputError(f"hop {i + 1} has shape {h.shape}, expected {(cfg.N[i], cols)}")
            cols = cfg.N[i]
        last = cfg.N[-1] if I else 0
        if self.last_hop.shape != (K, last):
            raise RejectedInputError(f"last hop has shape {self.last_hop.shape}, expected {(K, last)}")
        for arr in [self.direct, self.last_hop, *self.hops]:
            if not np.all(np.isfinite(arr)):
                raise RejectedInputError("channel has non-finite entries")
        return self


def spreading_gain(f, d):
    """Free-space amplitude ``c / (4 pi f d)``."""
    if not f > 0:
        raise RejectedInputError("frequency must be positive")
    if not d > 0:
        raise RejectedInputError("distance must be positive")
    return SPEED_OF_LIGHT / (4.0 * np.pi * f * d)


def molecular_gain(d, alpha):
    """Absorption amplitude ``exp(-alpha d / 2)``."""
    if d < 0 or alpha < 0:
        raise RejectedInputError("distance and alpha must be nonnegative")
    return float(np.exp(-0.5 * alpha * d))


def los_gain(p, d):
    return spreading_gain(p.frequency, d) * molecular_gain(d, p.alpha_molec)


def nlos_gain(p, d1, d2):
    """Single reflected ray: reflection, spreading and absorption over ``d1 + d2``."""
    if not (d1 > 0 and d2 > 0):
        raise RejectedInputError("reflected-path distances must be positive")
    return p.reflection_amplitude * los_gain(p, d1 + d2)


def power_db(amplitude):
    return 20.0 * np.log10(amplitude)


def sample_rician(rows, cols, k_factor, los, rng):
    """Rician matrix ``sqrt(K/(K+1)) los + sqrt(1/(K+1)) CN(0, 1)``.

    ``k_factor=np.inf`` returns ``los`` exactly. The Gaussian part is drawn
    in every case so that the random stream advances identically.
    """
    los = np.asarray(los, dtype=complex)
    if los.shape != (rows, cols):
        raise RejectedInputError(f"LoS component shape {los.shape} != {(rows, cols)}")
    if not k_factor >= 0:
        raise RejectedInputError("k_factor must be nonnegative")
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    if np.isinf(k_factor):
        return los.copy()
    return np.sqrt(k_factor / (k_factor + 1.0)) * los + np.sqrt(1.0 / (k_factor + 1.0)) * nlos


def element_positions(center, count, spacing):
    offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
    pos = np.repeat(np.asarray(center, dtype=float)[None, :], count, axis=0)
    pos[:, 1] += offsets
    return pos


def los_component(rx_center, n_rx, tx_center, n_tx, wavelength, spacing_wl):
    """Unit-modulus spherical-wave phase matrix (``n_rx x n_tx``)."""
    spacing = spacing_wl * wavelength
    rx = element_positions(rx_center, n_rx, spacing)
    tx = element_positions(tx_center, n_tx, spacing)
    dist = np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)
    return np.exp(-2j * np.pi * dist / wavelength)


def large_scale_amplitudes(topo, p):
    """Per-link amplitudes of the cascaded specular model (see module doc)."""
    r = p.reflection_amplitude
    hop_d = topo.hop_distances()
    cumulative = np.cumsum(hop_d) if hop_d else np.array([])
    hops = []
    for i, dist in enumerate(cumulative):
        if i == 0:
            hops.append(r * los_gain(p, dist))
        else:
            hops.append(r * los_gain(p, dist) / los_gain(p, cumulative[i - 1]))
    direct = [los_gain(p, topo.user_distance(k)) for k in range(len(topo.user_positions))]
    last = []
    if hop_d:
        d_last = cumulative[-1]
        for k in range(len(topo.user_positions)):
            d_user = d_last + topo.user_distance(k, topo.ris_positions[-1])
            last.append(los_gain(p, d_user) / los_gain(p, d_last))
    return {"hops": hops, "last_hop": last, "direct": direct}


def los_components(cfg, topo, p):
    """Deterministic LoS parts for every link of the topology."""
    lam, s = p.wavelength, topo.element_spacing_wl
    nodes = [(topo.bs_position, cfg.M)] + list(zip(topo.ris_positions, cfg.N))
    hops = [los_component(nodes[i + 1][0], nodes[i + 1][1], nodes[i][0], nodes[i][1], lam, s)
            for i in range(cfg.I)]
    last, direct = [], []
    for u in topo.user_positions:
        if cfg.I:
            last.append(los_component(u, 1, nodes[-1][0], nodes[-1][1], lam, s)[0])
        direct.append(los_component(u, 1, topo.bs_position, cfg.M, lam, s)[0])
    last = np.array(last) if cfg.I else np.zeros((cfg.K, 0), dtype=complex)
    return hops, last, np.array(direct)


def realize_channels(cfg, topo, p, rng):
    """Draw one :class:`ChannelSet` for ``cfg`` on ``topo``."""
    if len(topo.ris_positions) != cfg.I or len(topo.user_positions) != cfg.K:
        raise RejectedInputError(
            f"topology has {len(topo.ris_positions)} RISs and {len(topo.user_positions)} users; "
            f"config expects I={cfg.I}, K={cfg.K}")
    if not np.isclose(cfg.frequency, p.frequency):
        raise RejectedInputError("system and link frequencies differ")
    amps = large_scale_amplitudes(topo, p)
    los_hops, los_last, los_direct = los_components(cfg, topo, p)
    hops = [amps["hops"][i] * sample_rician(*h.shape, p.k_h, h, rng) for i, h in enumerate(los_hops)]
    if cfg.I:
        last = np.array([amps["last_hop"][k] * sample_rician(1, cfg.N[-1], p.k_g, los_last[k][None, :], rng)[0]
                         for k in range(cfg.K)])
    else:
        last = np.zeros((cfg.K, 0), dtype=complex)
    direct = np.array([amps["direct"][k] * sample_rician(1, cfg.M, p.k_w, los_direct[k][None, :], rng)[0]
                       for k in range(cfg.K)])
    return ChannelSet(hops=hops, last_hop=last, direct=direct).check(cfg)
