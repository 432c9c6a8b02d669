import numpy as np

from thzris.channel import ThzLinkParams, Topology, realize_channels
from thzris.system import SystemConfig


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def line_topology(I, K, distance=8.0, rng=None):
    """RISs evenly along +x, users scattered around ``distance``."""
    rng = np.random.default_rng(0) if rng is None else rng
    ris = [[distance * (i + 1) / (I + 1), 0.5, 0.0] for i in range(I)]
    users = [[distance + rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0] for _ in range(K)]
    return Topology([0.0, 0.0, 0.0], ris, users)


def random_instance(rng, M, K, I=1, N=None, link=None, distance=8.0):
    N = tuple(N) if N is not None else (2,) * I
    cfg = SystemConfig(M=M, K=K, I=I, N=N)
    topo = line_topology(I, K, distance, rng)
    return cfg, realize_channels(cfg, topo, link or ThzLinkParams(), rng)
