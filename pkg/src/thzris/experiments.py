"""Sweeps and aggregate metrics built on training runs and baselines.

Every (scheme, distance) task draws from its own random stream derived from
the run seed, the scheme, and the distance in millimeters, so results do
not depend on task order or on the number of workers.
"""

import csv
import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats

from .bench import alternating_single_hop, zf_no_ris
from .channel import Topology, realize_channels
from .ddpg import run_training
from .errors import RejectedInputError
from .scenario import SCHEMES
from .system import SystemConfig


def place_topology(I, K, placement, distance=None):
    """Node positions for ``I`` RISs and ``K`` users (see :class:`Placement`)."""
    d = placement.distance_m if distance is None else float(distance)
    if not 0 < d <= placement.circle_diameter_m:
        raise RejectedInputError(f"distance {d} m outside (0, {placement.circle_diameter_m}] m")
    rng = np.random.default_rng(placement.placement_seed)
    radius = min(placement.user_radius_m, 0.25 * d)
    r = radius * np.sqrt(rng.random(K))
    theta = 2 * np.pi * rng.random(K)
    users = [[d + ri * np.cos(ti), ri * np.sin(ti), 0.0] for ri, ti in zip(r, theta)]
    ris = [[d * (i + 1) / (I + 1), placement.ris_lateral_m, 0.0] for i in range(I)]
    return Topology([0.0, 0.0, 0.0], ris, users)


def scheme_config(cfg, scheme):
    """System configuration a scheme runs on, derived from the scenario's."""
    if scheme not in SCHEMES:
        raise RejectedInputError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    base = dataclasses.asdict(cfg)
    if scheme == "no_ris_zf":
        base.update(I=0, N=())
    elif scheme in ("single_hop_alt", "single_hop_drl"):
        if cfg.I < 1:
            raise RejectedInputError(f"{scheme} needs at least one RIS in the scenario (I={cfg.I})")
        base.update(I=1, N=(cfg.N[0],))
    elif cfg.I < 2:
        raise RejectedInputError(f"multi_hop_drl needs I >= 2 hops, scenario has I={cfg.I}")
    return SystemConfig(**base)


def task_seed(seed, scheme, distance):
    return np.random.SeedSequence(entropy=int(seed),
                                  spawn_key=(SCHEMES.index(scheme), int(round(distance * 1000))))


def evaluate_scheme(sc, scheme, distance):
    """Per-draw sum rates (bits/s/Hz) of ``scheme`` over ``n_mc`` channel draws.

    DRL schemes train one agent over ``n_mc`` episodes, one draw each, and
    report the best sum rate found in each episode.
    """
    cfg = scheme_config(sc.system, scheme)
    topo = place_topology(cfg.I, cfg.K, sc.placement, distance)
    seq = task_seed(sc.run.seed, scheme, distance)
    n = sc.run.n_mc
    if scheme.endswith("_drl"):
        hyper = dataclasses.replace(sc.hyper, episodes=n)
        res = run_training(cfg, topo, sc.link, hyper, sc.run.init_method, seed=seq)
        return np.array(res.episode_best)
    rng = np.random.default_rng(seq)
    rates = np.empty(n)
    for i in range(n):
        ch = realize_channels(cfg, topo, sc.link, rng)
        if scheme == "no_ris_zf":
            rates[i] = zf_no_ris(ch.direct, cfg.P_t, cfg.noise_power).meta["sum_rate"]
        else:
            rates[i] = alternating_single_hop(ch, cfg.P_t, cfg.noise_power).meta["sum_rate"]
    return rates


def _evaluate_task(args):
    sc, scheme, distance = args
    return evaluate_scheme(sc, scheme, distance)


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def sweep_distance(sc, distances=None, schemes=None, workers=1):
    """Mean throughput of each scheme at each distance.

    Returns
    -------
    rows : list of (scheme, distance_m, throughput_bps)
    samples : dict
        ``(scheme, distance) -> per-draw throughput array``.
    """
    distances = tuple(sc.run.distances if distances is None else distances)
    schemes = tuple(sc.run.schemes if schemes is None else schemes)
    if any(d <= 0 for d in distances) or list(distances) != sorted(set(distances)):
        raise RejectedInputError("distances must be positive and strictly ascending")
    for s in schemes:
        scheme_config(sc.system, s)
    tasks = [(sc, s, d) for s in schemes for d in distances]
    results = _map(_evaluate_task, tasks, workers)
    rows, samples = [], {}
    for (_, s, d), rates in zip(tasks, results):
        tput = sc.system.bandwidth * rates
        samples[(s, d)] = tput
        rows.append((s, d, float(np.mean(tput))))
    return rows, samples


def episode_average_rewards(result):
    """Average reward of each episode (the running mean at its last step)."""
    T = result.metrics["steps_per_episode"]
    return result.rewards.reshape(-1, T).mean(axis=1)


def empirical_cdf(values):
    """Distinct sorted values and the fraction of samples at or below each."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise RejectedInputError("empirical CDF of an empty sample")
    uniq, counts = np.unique(values, return_counts=True)
    return uniq, np.cumsum(counts) / values.size


def reward_cdf(scenarios, workers=1):
    """Rows ``(label, reward, cdf)`` over per-episode average rewards."""
    results = _map(_train_task, list(scenarios), workers)
    rows = []
    for sc, res in zip(scenarios, results):
        vals, cdf = empirical_cdf(episode_average_rewards(res))
        rows.extend((sc.run.label, float(v), float(c)) for v, c in zip(vals, cdf))
    return rows


def _train_task(sc):
    topo = place_topology(sc.system.I, sc.system.K, sc.placement)
    return run_training(sc.system, topo, sc.link, sc.hyper, sc.run.init_method, seed=sc.run.seed)


def lr_study(sc, rates=None, workers=1):
    """Rows ``(learning_rate, step, average_reward)``: one run per rate with
    ``mu_a = mu_c = rate`` and a shared seed; the average runs over all steps."""
    rates = tuple(sc.run.learning_rates if rates is None else rates)
    if not rates or any(not r > 0 for r in rates):
        raise RejectedInputError("learning rates must be positive")
    scs = [sc.with_hyper(mu_a=float(r), mu_c=float(r)) for r in rates]
    results = _map(_train_task, scs, workers)
    rows = []
    for r, res in zip(rates, results):
        avg = np.cumsum(res.rewards) / np.arange(1, res.rewards.size + 1)
        rows.extend((float(r), i, float(a)) for i, a in enumerate(avg))
    return rows


def bootstrap_gap_lower(a, b, confidence=0.95, n_resamples=9999, seed=0):
    """One-sided lower confidence bound on ``mean(a) - mean(b)`` (independent
    samples, percentile bootstrap)."""
    res = stats.bootstrap((np.asarray(a, float), np.asarray(b, float)),
                          lambda x, y, axis: np.mean(x, axis=axis) - np.mean(y, axis=axis),
                          confidence_level=confidence, n_resamples=n_resamples, method="percentile",
                          alternative="greater", random_state=np.random.default_rng(seed))
    return float(res.confidence_interval.low)


def format_csv(header, rows):
    """CSV text with a header row; floats use their shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(header, rows))
