"""Self-check suite behind ``thzris check``.

Each check returns ``(passed, detail)``. :func:`run_checks` runs all of them
once, in a fixed order, and :func:`format_report` renders a tab-separated
table with a header row.
"""

import numpy as np

from .bench import alternating_single_hop, brute_force_oracle, zf_no_ris
from .channel import Topology, ThzLinkParams, realize_channels
from .ddpg import (DDPGAgent, Experience, Hyper, ReplayBuffer, action_dim, action_length, decode_action,
                   encode_state, state_dim, state_length)
from .initsolvers import init_method1_zf, init_method2_maxmin
from .neural import make_network
from .system import SystemConfig, random_phases, sinr_from_composite, composite_channels


FD_FLOOR = 1e-6


def fd_gradient_error(f, params, analytic, h=1e-6):
    """Largest per-array relative error ``||fd - g|| / max(||fd|| + ||g||, FD_FLOOR)``
    between ``analytic`` and central differences of the scalar ``f()``.

    Entries of ``params`` are perturbed in place and restored. The floor keeps
    arrays whose true gradient is zero (a bias feeding batch norm) from being
    judged on roundoff alone.
    """
    worst = 0.0
    for p, g in zip(params, analytic):
        fd = np.zeros(p.shape)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + h
            up = f()
            p[idx] = orig - h
            down = f()
            p[idx] = orig
            fd[idx] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(fd) + np.linalg.norm(g), FD_FLOOR)
        worst = max(worst, float(np.linalg.norm(fd - g) / denom))
    return worst


def network_gradient_error(rng, batch=4, max_width=16):
    """FD check of parameter and input gradients of a random train-mode net."""
    n_in, h1, h2, n_out = rng.integers(2, max_width + 1, size=4)
    acts = ("relu", "tanh", "linear")
    net = make_network(int(n_in), int(n_out), (int(h1), int(h2)), acts[rng.integers(2)],
                       acts[rng.integers(3)], rng)
    # zero biases put dead ReLU units exactly on the kink, where differences are meaningless
    net.set_parameters([p + 0.1 * rng.standard_normal(p.shape) for p in net.parameters()])
    x = rng.standard_normal((batch, int(n_in)))
    up = rng.standard_normal((batch, int(n_out)))

    def loss():
        return float(np.sum(net.forward(x, mode="train") * up))

    loss()
    grads, dx = net.backward(up)
    worst = fd_gradient_error(loss, net.parameters(), grads)
    return max(worst, fd_gradient_error(loss, [x], [dx]))


def actor_chain_error(rng, width=8):
    """FD check of the actor gradient through projection and critic."""
    cfg = SystemConfig(M=2, K=1, I=1, N=(2,))
    hyper = Hyper(hidden=(width, width), minibatch=4, buffer_size=8, net_dtype="float64")
    agent = DDPGAgent(cfg, hyper, rng)
    states = rng.standard_normal((5, agent.ds))
    for s in states:
        agent.whitener.update(s)
    agent.critic_target.forward(rng.standard_normal((6, agent.ds + agent.da)), mode="train")
    _, grads = agent.actor_objective_and_grads(states)
    critic = agent.critic_target

    def neg_q():
        s_w = agent.whitener(states)
        a = agent.projection.forward(agent.actor.forward(s_w, mode="train") * hyper.action_scale)
        return -float(critic.forward(np.concatenate([s_w, a], axis=1), mode="eval")[:, 0].mean())

    return fd_gradient_error(neg_q, agent.actor.parameters(), grads)


def _random_instance(rng, M, K, I=1, N=(2,)):
    cfg = SystemConfig(M=M, K=K, I=I, N=N)
    users = [[8.0 + rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0] for _ in range(K)]
    ris = [[4.0 * (i + 1) / (I + 1) * 2, 0.5, 0.0] for i in range(I)]
    topo = Topology([0.0, 0.0, 0.0], ris, users)
    return cfg, realize_channels(cfg, topo, ThzLinkParams(), rng)


def check_gradients(seed=0, count=10):
    rng = np.random.default_rng(seed)
    worst = max(network_gradient_error(rng) for _ in range(count))
    return worst <= 1e-4, f"max rel err {worst:.2e} over {count} nets"


def check_actor_chain(seed=0, count=3):
    rng = np.random.default_rng(seed)
    worst = max(actor_chain_error(rng) for _ in range(count))
    return worst <= 1e-3, f"max rel err {worst:.2e} over {count} actor/critic pairs"


def relative_interference(G, F):
    """Largest ``sum_{j!=k} |g_k^T f_j|^2 / |g_k^T f_k|^2`` over users."""
    A = np.abs(G @ F) ** 2
    signal = np.diag(A).copy()
    np.fill_diagonal(A, 0.0)
    return float(np.max(A.sum(axis=1) / signal))


def check_zero_forcing(seed=0, count=20):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        cfg, ch = _random_instance(rng, 4, 3)
        phases = random_phases(cfg, rng)
        G = composite_channels(ch, phases)
        worst = max(worst, relative_interference(G, init_method1_zf(ch, phases, cfg.P_t)),
                    relative_interference(ch.direct, zf_no_ris(ch.direct, cfg.P_t, cfg.noise_power).F))
    return worst <= 1e-9, f"max relative interference {worst:.2e}"


def check_maxmin(seed=0, count=10, tol=1e-6):
    rng = np.random.default_rng(seed)
    worst_spread, monotone = 0.0, True
    for i in range(count):
        cfg, ch = _random_instance(rng, 4, 2 + i % 2)
        phases = random_phases(cfg, rng)
        res = init_method2_maxmin(ch, phases, cfg.P_t, cfg.noise_power, tol=tol)
        xi = sinr_from_composite(composite_channels(ch, phases), res.F, cfg.noise_power)
        worst_spread = max(worst_spread, float((xi.max() - xi.min()) / xi.min()))
        h = np.array(res.history)
        monotone &= bool(np.all(np.diff(h) >= -1e-8 * h[1:]))
    ok = worst_spread <= tol and monotone
    return ok, f"max SINR spread {worst_spread:.2e}, monotone={monotone}"


def check_oracle_dominance(seed=0, count=5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        cfg, ch = _random_instance(rng, int(rng.integers(1, 3)), 1, 1, (int(rng.integers(1, 3)),))
        _, oracle = brute_force_oracle(cfg, ch, 64)
        alt = alternating_single_hop(ch, cfg.P_t, cfg.noise_power).meta["sum_rate"]
        worst = max(worst, (alt - oracle) / oracle)
    return worst <= 1e-3, f"max baseline excess over oracle {worst:.2e}"


def check_dimensions(seed=0, count=20):
    rng = np.random.default_rng(seed)
    # published full-scale setting; K > M there, so only the formulas apply
    if state_length(8, 32, (128, 128)) != 44032 or action_length(8, 32, (128, 128)) != 1024:
        return False, "published setting does not give D_s=44032, D_a=1024"
    cases = [SystemConfig(M=8, K=8, I=2, N=(128, 128))]
    for _ in range(count):
        K = int(rng.integers(1, 4))
        I = int(rng.integers(0, 4))
        cases.append(SystemConfig(M=K + int(rng.integers(0, 3)), K=K, I=I,
                                  N=tuple(int(n) for n in rng.integers(1, 6, size=I))))
    for cfg in cases:
        M, K, N = cfg.M, cfg.K, cfg.N
        ds = 2 * M * K + 2 * sum(N)
        if cfg.I:
            ds += 2 * M * N[0] + 2 * sum(a * b for a, b in zip(N[:-1], N[1:])) + 2 * K * N[-1]
        if state_dim(cfg) != ds or action_dim(cfg) != 2 * M * K + 2 * sum(N):
            return False, f"formula mismatch at {cfg}"
        if cfg.I and cfg.M <= 4:
            topo = Topology([0, 0, 0], [[2.0 * (i + 1), 0.5, 0] for i in range(cfg.I)],
                            [[2.0 * cfg.I + 3, 0.2 * k, 0] for k in range(K)])
            ch = realize_channels(cfg, topo, ThzLinkParams(), rng)
            sol = decode_action(rng.standard_normal(action_dim(cfg)), cfg)
            if encode_state(ch, sol).size != ds:
                return False, f"encoded length mismatch at {cfg}"
    return True, f"{len(cases)} configurations plus D_s=44032, D_a=1024 at M=8, K=32, N_i=128"


def check_feasibility(seed=0, count=50):
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(M=4, K=2, I=2, N=(3, 5))
    bad = sum(not decode_action(rng.standard_normal(action_dim(cfg)) * 10 ** rng.uniform(-6, 6), cfg)
              .is_feasible(cfg.P_t) for _ in range(count))
    return bad == 0, f"{bad} infeasible decodes of {count}"


def check_replay_fifo(capacity=5):
    buf = ReplayBuffer(capacity, np.random.default_rng(0))
    exps = [Experience(np.array([float(i)]), np.zeros(1), float(i), np.zeros(1)) for i in range(capacity + 1)]
    for e in exps:
        buf.add(e)
    ok = len(buf) == capacity and all(e is not exps[0] for e in buf) and buf.oldest() is exps[1]
    return ok, f"size {len(buf)} after {capacity + 1} inserts"


CHECKS = (
    ("gradient_network", check_gradients),
    ("gradient_actor_chain", check_actor_chain),
    ("zero_forcing_interference", check_zero_forcing),
    ("maxmin_equalization", check_maxmin),
    ("oracle_dominance", check_oracle_dominance),
    ("dimension_conformance", check_dimensions),
    ("action_feasibility", check_feasibility),
    ("replay_fifo", check_replay_fifo),
)


def run_checks():
    """``[(name, passed, detail)]``; an exception counts as a failure."""
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed report
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results


def format_report(results):
    lines = ["check\tstatus\tdetail"]
    lines += [f"{name}\t{'PASS' if ok else 'FAIL'}\t{detail}" for name, ok, detail in results]
    return "\n".join(lines)
