"""DDPG agent and environment loop for joint precoder / RIS-phase design.

Vector layouts
--------------
State (``encode_state``), in order:

1. ``Re(F)``, ``Im(F)`` of the previous precoder, row-major (``2MK``)
2. ``Re(phi_i)``, ``Im(phi_i)`` for ``i = 1..I`` (``2 sum N_i``)
3. ``Re(H_1)``, ``Im(H_1)`` row-major (``2 M N_1``)
4. ``Re(H_i)``, ``Im(H_i)`` for ``i = 2..I`` (``2 sum N_{i-1} N_i``)
5. ``Re(G)``, ``Im(G)`` with ``G`` the ``K x N_I`` last-hop rows (``2 K N_I``)
6. optionally ``Re(W)``, ``Im(W)`` of the direct links (``2MK``)

Action (``encode_action`` / ``decode_action``): blocks 1 and 2 of the same
layout, with the precoder divided by ``sqrt(P_t)`` so that feasible actions
have entries of order one.
"""

import logging
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .channel import realize_channels
from .errors import RejectedInputError
from .initsolvers import init_method1_zf, init_method2_maxmin
from .neural import AdamState, adam_step, make_network, soft_update, DenseNet
from .system import (BeamformingSolution, identity_phases, normalize_power, project_phases,
                     random_phases, sum_rate)

log = logging.getLogger(__name__)

INIT_METHODS = ("method1", "method2", "random")
WHITEN_CLIP = 5.0


@dataclass
class Hyper:
    """Training hyperparameters; defaults follow the full-scale table values.

    The fields after ``exploration_decay`` are implementation knobs:
    ``hidden`` widths of both networks, ``action_scale`` of the actor's tanh
    head, ``reward_scale`` applied to rewards before they enter the critic,
    ``penalty_coeff`` of the action-displacement penalty,
    ``include_direct_in_state`` to append the direct links to the state,
    ``whiten_momentum`` of the running state statistics, ``random_init_phases``
    to start episodes from uniform-random instead of all-ones phases, and
    ``actor_uses_target_critic`` to differentiate the target (instead of the
    training) critic in the actor update. ``net_dtype`` is the floating
    type of the network weights.
    ``final_init`` bounds the uniform initialization of both output layers
    (0 keeps the default Glorot range).
    """

    beta: float = 0.99
    mu_c: float = 1e-3
    mu_a: float = 1e-3
    tau_c: float = 1e-3
    tau_a: float = 1e-3
    lambda_c: float = 0.005
    lambda_a: float = 0.005
    buffer_size: int = 100_000
    episodes: int = 5000
    steps_per_episode: int = 20_000
    minibatch: int = 16
    sync_interval: int = 1
    exploration_sigma0: float = 0.1
    exploration_decay: float = 0.999
    hidden: tuple = (256, 128)
    action_scale: float = 1.0
    reward_scale: float = 0.01
    penalty_coeff: float = 0.0
    include_direct_in_state: bool = False
    whiten_momentum: float = 0.999
    random_init_phases: bool = False
    actor_uses_target_critic: bool = True
    net_dtype: str = "float32"
    final_init: float = 3e-3

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0 <= self.beta < 1:
            raise RejectedInputError("beta must lie in [0, 1)")
        positive = ("mu_c", "mu_a", "tau_c", "tau_a", "buffer_size", "episodes",
                    "steps_per_episode", "minibatch", "sync_interval", "action_scale", "reward_scale")
        for name in positive:
            if not getattr(self, name) > 0:
                raise RejectedInputError(f"{name} must be positive")
        if not (0 < self.tau_c <= 1 and 0 < self.tau_a <= 1):
            raise RejectedInputError("tau_c and tau_a must lie in (0, 1]")
        if not (0 <= self.lambda_c < 1 and 0 <= self.lambda_a < 1):
            raise RejectedInputError("lambda_c and lambda_a must lie in [0, 1)")
        if self.minibatch > self.buffer_size:
            raise RejectedInputError("minibatch W must not exceed buffer_size D")
        if not self.exploration_sigma0 >= 0:
            raise RejectedInputError("exploration_sigma0 must be nonnegative")
        if not 0 < self.exploration_decay <= 1:
            raise RejectedInputError("exploration_decay must lie in (0, 1]")
        if self.net_dtype not in ("float32", "float64"):
            raise RejectedInputError("net_dtype must be 'float32' or 'float64'")
        if not self.final_init >= 0:
            raise RejectedInputError("final_init must be nonnegative")
        if len(self.hidden) != 2 or min(self.hidden) < 1:
            raise RejectedInputError("hidden must hold two positive widths")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def state_length(M, K, N, include_direct=False):
    """State length for raw dimensions; needs no ``M >= K`` check, so it can be
    evaluated at settings a :class:`SystemConfig` would reject."""
    N = tuple(N)
    d = 2 * M * K + 2 * sum(N)
    if N:
        d += 2 * M * N[0] + 2 * sum(a * b for a, b in zip(N[:-1], N[1:])) + 2 * K * N[-1]
    if include_direct:
        d += 2 * M * K
    return d


def action_length(M, K, N):
    return 2 * M * K + 2 * sum(N)


def state_dim(cfg, include_direct=False):
    return state_length(cfg.M, cfg.K, cfg.N, include_direct)


def action_dim(cfg):
    return action_length(cfg.M, cfg.K, cfg.N)


def _ri(x):
    x = np.asarray(x).ravel()
    return np.concatenate([x.real, x.imag])


def encode_state(ch, prev, include_direct=False):
    """Real state vector for channels ``ch`` after action ``prev``."""
    parts = [_ri(prev.F)] + [_ri(phi) for phi in prev.phases] + [_ri(h) for h in ch.hops]
    if ch.hops:
        parts.append(_ri(ch.last_hop))
    if include_direct:
        parts.append(_ri(ch.direct))
    return np.concatenate(parts)


def _split_complex(vec, offset, shape):
    n = int(np.prod(shape))
    re = vec[offset:offset + n]
    im = vec[offset + n:offset + 2 * n]
    return (re + 1j * im).reshape(shape), offset + 2 * n


def decode_state_action_part(state, cfg):
    """Previous precoder and phases stored at the head of a state vector."""
    F, off = _split_complex(state, 0, (cfg.M, cfg.K))
    phases = []
    for n in cfg.N:
        phi, off = _split_complex(state, off, (n,))
        phases.append(phi)
    return BeamformingSolution(F, phases)


def encode_action(sol, P_t):
    return np.concatenate([_ri(sol.F / np.sqrt(P_t))] + [_ri(phi) for phi in sol.phases])


def decode_action(raw, cfg, prev=None, counters=None):
    """Feasible solution from a raw action vector.

    The precoder block is normalized to ``trace(F^H F) = P_t`` and each phase
    entry is projected to the unit circle. An all-zero precoder block is
    replaced by ``prev.F`` and counted under ``counters['degenerate_actions']``.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (action_dim(cfg),):
        raise RejectedInputError(f"action has length {raw.size}, expected {action_dim(cfg)}")
    F, off = _split_complex(raw, 0, (cfg.M, cfg.K))
    phases = []
    for n in cfg.N:
        phi, off = _split_complex(raw, off, (n,))
        phases.append(phi)
    try:
        F = normalize_power(F, cfg.P_t)
    except RejectedInputError:
        if prev is None:
            raise
        F = prev.F.copy()
        if counters is not None:
            counters["degenerate_actions"] = counters.get("degenerate_actions", 0) + 1
    return BeamformingSolution(F, project_phases(phases))


class FeasibilityLayer:
    """Differentiable projection of raw actions onto feasible action vectors.

    The precoder block is scaled to unit Euclidean norm (that is, ``F`` with
    ``trace(F^H F) = P_t`` divided by ``sqrt(P_t)``); each (Re, Im) phase pair
    is scaled to unit modulus, with ``(0, 0)`` mapped to ``(1, 0)``.
    """

    def __init__(self, cfg):
        self.nF = 2 * cfg.M * cfg.K
        self.nphi = sum(cfg.N)
        self.N = cfg.N
        self._cache = None
        # column indices of the real and imaginary part of each phase entry
        re_idx, im_idx, off = [], [], self.nF
        for n in cfg.N:
            re_idx.extend(range(off, off + n))
            im_idx.extend(range(off + n, off + 2 * n))
            off += 2 * n
        self.re_idx = np.array(re_idx, dtype=int)
        self.im_idx = np.array(im_idx, dtype=int)

    def forward(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.empty_like(x)
        xf = x[:, :self.nF]
        fnorm = np.linalg.norm(xf, axis=1, keepdims=True)
        safe_f = np.where(fnorm > 0, fnorm, 1.0)
        y[:, :self.nF] = np.where(fnorm > 0, xf / safe_f, 1.0 / np.sqrt(self.nF))
        re, im = x[:, self.re_idx], x[:, self.im_idx]
        r = np.hypot(re, im)
        safe_r = np.where(r > 0, r, 1.0)
        y[:, self.re_idx] = np.where(r > 0, re / safe_r, 1.0)
        y[:, self.im_idx] = np.where(r > 0, im / safe_r, 0.0)
        self._cache = (fnorm, r, y)
        return y

    def backward(self, dy):
        fnorm, r, y = self._cache
        dx = np.zeros_like(dy)
        u = y[:, :self.nF]
        g = dy[:, :self.nF]
        inv_f = np.where(fnorm > 0, 1.0 / np.where(fnorm > 0, fnorm, 1.0), 0.0)
        dx[:, :self.nF] = (g - u * np.sum(u * g, axis=1, keepdims=True)) * inv_f
        ure, uim = y[:, self.re_idx], y[:, self.im_idx]
        gre, gim = dy[:, self.re_idx], dy[:, self.im_idx]
        dot = ure * gre + uim * gim
        inv_r = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
        dx[:, self.re_idx] = (gre - ure * dot) * inv_r
        dx[:, self.im_idx] = (gim - uim * dot) * inv_r
        return dx


def reward(sol, ch, noise, penalty_coeff, prev, P_t=None):
    """Sum rate minus ``penalty_coeff`` times the normalized action displacement.

    The displacement is ``||F - F_prev||_F^2 / P_t + sum_i ||phi_i - phi_i,prev||^2 / N_i``
    with ``P_t`` defaulting to the power of ``prev.F``.
    """
    rate = sum_rate(sol, ch, noise)
    if penalty_coeff == 0 or prev is None:
        return rate
    if P_t is None:
        P_t = float(np.sum(np.abs(prev.F) ** 2))
    disp = np.sum(np.abs(sol.F - prev.F) ** 2) / P_t
    disp += sum(np.sum(np.abs(a - b) ** 2) / a.size for a, b in zip(sol.phases, prev.phases))
    return rate - penalty_coeff * float(disp)


def critic_target(r, q_next, beta, terminal=False):
    return r if terminal else r + beta * q_next


def average_reward(trace, L):
    """Mean of the first ``L`` rewards of ``trace``."""
    trace = np.asarray(trace, dtype=float)
    if not 1 <= L <= trace.size:
        raise RejectedInputError(f"L={L} outside 1..{trace.size}")
    return float(trace[:L].mean())


def running_average(trace):
    trace = np.asarray(trace, dtype=float)
    return np.cumsum(trace) / np.arange(1, trace.size + 1)


@dataclass
class Experience:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool = False


class ReplayBuffer:
    """Bounded FIFO of experiences with uniform minibatch sampling."""

    def __init__(self, capacity, rng):
        if capacity < 1:
            raise RejectedInputError("capacity must be positive")
        self.capacity = int(capacity)
        self.rng = rng
        self._items = []
        self._head = 0

    def __len__(self):
        return len(self._items)

    def add(self, exp):
        if len(self._items) < self.capacity:
            self._items.append(exp)
        else:
            self._items[self._head] = exp
            self._head = (self._head + 1) % self.capacity

    def oldest(self):
        return self._items[self._head] if len(self._items) == self.capacity else self._items[0]

    def __iter__(self):
        n = len(self._items)
        start = self._head if n == self.capacity else 0
        for i in range(n):
            yield self._items[(start + i) % n]

    def sample(self, size):
        """Uniform sample without replacement, stacked into arrays."""
        if size > len(self._items):
            raise RejectedInputError("not enough experiences to sample")
        idx = self.rng.choice(len(self._items), size=size, replace=False)
        batch = [self._items[i] for i in idx]
        return (np.stack([e.state for e in batch]),
                np.stack([e.action for e in batch]),
                np.array([e.reward for e in batch]),
                np.stack([e.next_state for e in batch]),
                np.array([e.terminal for e in batch], dtype=float))


class Whitener:
    """Running per-feature mean and variance of states.

    The effective momentum is ``min(momentum, 1 - 1/count)`` so early
    statistics are plain averages. Whitened values are clipped to
    ``+-WHITEN_CLIP``.
    """

    def __init__(self, dim, momentum=0.999):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 0
        self.momentum = momentum

    def update(self, x):
        self.count += 1
        if self.count == 1:
            self.mean = np.array(x, dtype=float)
            self.var = np.zeros_like(self.mean)
            return
        m = min(self.momentum, 1.0 - 1.0 / self.count)
        delta = x - self.mean
        self.mean = self.mean + (1.0 - m) * delta
        self.var = m * (self.var + (1.0 - m) * delta * delta)

    def __call__(self, x):
        scale = np.sqrt(self.var) + 1e-8 * (np.abs(self.mean) + np.sqrt(self.var)) + 1e-300
        return np.clip((x - self.mean) / scale, -WHITEN_CLIP, WHITEN_CLIP)


class DDPGAgent:
    """Actor, critic, their target copies, optimizers and replay memory."""

    def __init__(self, cfg, hyper, rng):
        self.cfg = cfg
        self.hyper = hyper
        self.ds = state_dim(cfg, hyper.include_direct_in_state)
        self.da = action_dim(cfg)
        net_rng, buf_rng, noise_rng = rng.spawn(3)
        dt = np.dtype(hyper.net_dtype)
        self.actor = make_network(self.ds, self.da, hyper.hidden, "relu", "tanh", net_rng, dt)
        self.critic = make_network(self.ds + self.da, 1, hyper.hidden, "tanh", "linear", net_rng, dt)
        if hyper.final_init > 0:
            for net in (self.actor, self.critic):
                out = net.layers[-1]
                out.W[...] = net_rng.uniform(-hyper.final_init, hyper.final_init, out.W.shape)
                out.b[...] = net_rng.uniform(-hyper.final_init, hyper.final_init, out.b.shape)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamState(self.actor, hyper.mu_a, hyper.lambda_a)
        self.critic_opt = AdamState(self.critic, hyper.mu_c, hyper.lambda_c)
        self.buffer = ReplayBuffer(hyper.buffer_size, buf_rng)
        self.whitener = Whitener(self.ds, hyper.whiten_momentum)
        self.projection = FeasibilityLayer(cfg)
        self.noise_rng = noise_rng
        self.sigma = hyper.exploration_sigma0
        self.updates = 0
        self.counters = {"degenerate_actions": 0, "overflow_events": 0, "feasibility_violations": 0}

    # acting -----------------------------------------------------------------
    def act(self, state, explore=True):
        """Feasible action vector for one raw state (actor in eval mode)."""
        s = self.whitener(state)[None, :]
        raw = self.actor.forward(s, mode="eval")[0] * self.hyper.action_scale
        if explore and self.sigma > 0:
            raw = raw + self.sigma * self.noise_rng.standard_normal(raw.shape)
        return self.projection.forward(raw)[0]

    # learning ---------------------------------------------------------------
    def _critic_in(self, s_w, a):
        return np.concatenate([s_w, a], axis=1)

    def _policy(self, net, s_w, mode):
        return self.projection.forward(net.forward(s_w, mode=mode) * self.hyper.action_scale)

    def critic_loss_and_grads(self, s, a, r, s2, term):
        h = self.hyper
        s_w, s2_w = self.whitener(s), self.whitener(s2)
        a2 = self._policy(self.actor_target, s2_w, "eval")
        q_next = self.critic_target.forward(self._critic_in(s2_w, a2), mode="eval")[:, 0]
        y = r * h.reward_scale + h.beta * (1.0 - term) * q_next
        q = self.critic.forward(self._critic_in(s_w, a), mode="train")[:, 0]
        diff = q - y
        loss = float(np.mean(diff ** 2))
        grads, _ = self.critic.backward((2.0 * diff / diff.size)[:, None])
        return loss, grads

    def actor_objective_and_grads(self, s):
        """Mean critic value of the actor's feasible actions and the gradient
        of ``-value`` with respect to the actor parameters."""
        critic = self.critic_target if self.hyper.actor_uses_target_critic else self.critic
        s_w = self.whitener(s)
        a = self._policy(self.actor, s_w, "train")
        q = critic.forward(self._critic_in(s_w, a), mode="eval")[:, 0]
        _, d_in = critic.backward(np.full((q.size, 1), -1.0 / q.size))
        d_a = self.projection.backward(d_in[:, self.ds:]) * self.hyper.action_scale
        grads, _ = self.actor.backward(d_a)
        return float(q.mean()), grads

    def update(self):
        """One critic and one actor step on a fresh minibatch."""
        h = self.hyper
        s, a, r, s2, term = self.buffer.sample(h.minibatch)
        with np.errstate(over="ignore", invalid="ignore"):
            loss, c_grads = self.critic_loss_and_grads(s, a, r, s2, term)
            if not _all_finite(loss, c_grads):
                return self._overflow("critic")
            adam_step(self.critic, c_grads, self.critic_opt)
            q_mean, a_grads = self.actor_objective_and_grads(s)
            if not _all_finite(q_mean, a_grads):
                return self._overflow("actor")
            adam_step(self.actor, a_grads, self.actor_opt)
        self.updates += 1
        if self.updates % h.sync_interval == 0:
            soft_update(self.critic_target, self.critic, h.tau_c)
            soft_update(self.actor_target, self.actor, h.tau_a)
        return {"critic_loss": loss, "actor_q": q_mean}

    def _overflow(self, where):
        self.counters["overflow_events"] += 1
        self.actor_opt.lr *= 0.5
        self.critic_opt.lr *= 0.5
        log.warning("non-finite %s update skipped; learning rates halved to %.3g / %.3g",
                    where, self.actor_opt.lr, self.critic_opt.lr)
        return None

    def end_episode(self):
        self.actor_opt.decay_lr()
        self.critic_opt.decay_lr()
        self.sigma *= self.hyper.exploration_decay

    def save(self, directory):
        import os
        os.makedirs(directory, exist_ok=True)
        for name in ("actor", "critic", "actor_target", "critic_target"):
            getattr(self, name).save(os.path.join(directory, f"{name}.npz"))
        np.savez(os.path.join(directory, "whitener.npz"), mean=self.whitener.mean,
                 var=self.whitener.var, count=self.whitener.count)

    def load(self, directory):
        import os
        for name in ("actor", "critic", "actor_target", "critic_target"):
            setattr(self, name, DenseNet.load(os.path.join(directory, f"{name}.npz")))
        with np.load(os.path.join(directory, "whitener.npz")) as w:
            self.whitener.mean = w["mean"].copy()
            self.whitener.var = w["var"].copy()
            self.whitener.count = int(w["count"])


def _all_finite(value, arrays):
    return np.isfinite(value) and all(np.all(np.isfinite(g)) for g in arrays)


@dataclass
class EnvState:
    """Channel realization of the running episode and the last applied action."""

    ch: object
    prev: BeamformingSolution
    state: np.ndarray
    step: int = 0


def initial_solution(cfg, ch, method, rng, random_init_phases=False):
    """Starting action of an episode."""
    if method not in INIT_METHODS:
        raise RejectedInputError(f"unknown init method {method!r}")
    phases = random_phases(cfg, rng) if (random_init_phases or method == "random") else identity_phases(cfg)
    if method == "method1":
        F = init_method1_zf(ch, phases, cfg.P_t)
    elif method == "method2":
        F = init_method2_maxmin(ch, phases, cfg.P_t, cfg.noise_power).F
    else:
        F = rng.standard_normal((cfg.M, cfg.K)) + 1j * rng.standard_normal((cfg.M, cfg.K))
        F = normalize_power(F, cfg.P_t)
    return BeamformingSolution(F, phases, {"init": method})


def train_step(agent, env, hyper, init_action=None):
    """Act, observe, store, and (once the memory holds a minibatch) learn.

    ``init_action`` (a feasible solution) replaces the actor's choice; it is
    used for the first step of each episode.

    Returns
    -------
    dict
        ``reward``, the applied ``solution``, and update metrics if any.
    """
    cfg = agent.cfg
    agent.whitener.update(env.state)
    if init_action is not None:
        sol = init_action
        a_vec = encode_action(sol, cfg.P_t)
    else:
        a_vec = agent.act(env.state)
        sol = decode_action(a_vec, cfg, prev=env.prev, counters=agent.counters)
    if not sol.is_feasible(cfg.P_t):
        agent.counters["feasibility_violations"] += 1
    r = reward(sol, env.ch, cfg.noise_power, hyper.penalty_coeff, env.prev, cfg.P_t)
    next_state = encode_state(env.ch, sol, hyper.include_direct_in_state)
    terminal = env.step == hyper.steps_per_episode - 1
    agent.buffer.add(Experience(env.state, a_vec, r, next_state, terminal))
    metrics = {"reward": r, "solution": sol}
    if len(agent.buffer) >= hyper.minibatch:
        upd = agent.update()
        if upd:
            metrics.update(upd)
    env.prev = sol
    env.state = next_state
    env.step += 1
    return metrics


@dataclass
class TrainingResult:
    best_solution: BeamformingSolution
    best_rate: float
    best_episode: int
    rewards: np.ndarray
    episodes: np.ndarray
    steps: np.ndarray
    episode_best: list
    init_rates: list
    metrics: dict = field(default_factory=dict)
    agent: DDPGAgent = None
    channels: list = None

    def trace_rows(self):
        """``(episode, step, instant_reward, average_reward)`` rows; the average
        runs over the steps of each episode."""
        rows = []
        for z in np.unique(self.episodes):
            mask = self.episodes == z
            avg = running_average(self.rewards[mask])
            for t, r, a in zip(self.steps[mask], self.rewards[mask], avg):
                rows.append((int(z), int(t), float(r), float(a)))
        return rows


def run_training(cfg, topo, link, hyper, init_method="method2", seed=0, keep_channels=False,
                 channel_sampler=None):
    """Outer loop: ``Z`` episodes of ``T`` DDPG steps on fresh channel draws.

    Every episode starts from the initializer's solution, which is applied as
    the first action. The best applied solution of each episode and overall
    is tracked by sum rate.
    """
    t0 = time.perf_counter()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    chan_seq, agent_seq, init_seq = root.spawn(3)
    chan_rng = np.random.default_rng(chan_seq)
    init_rng = np.random.default_rng(init_seq)
    agent = DDPGAgent(cfg, hyper, np.random.default_rng(agent_seq))
    Z, T = hyper.episodes, hyper.steps_per_episode
    rewards = np.zeros(Z * T)
    best = (None, -np.inf, -1)
    episode_best, init_rates, channels = [], [], []
    losses = []
    for z in range(Z):
        if channel_sampler is not None:
            ch = channel_sampler(z, chan_rng)
        else:
            ch = realize_channels(cfg, topo, link, chan_rng)
        if keep_channels:
            channels.append(ch)
        init = initial_solution(cfg, ch, init_method, init_rng, hyper.random_init_phases)
        init_rates.append(sum_rate(init, ch, cfg.noise_power))
        env = EnvState(ch=ch, prev=init, state=encode_state(ch, init, hyper.include_direct_in_state))
        ep_best = (None, -np.inf)
        for t in range(T):
            m = train_step(agent, env, hyper, init_action=init if t == 0 else None)
            rewards[z * T + t] = m["reward"]
            rate = m["reward"] if hyper.penalty_coeff == 0 else sum_rate(m["solution"], ch, cfg.noise_power)
            if rate > ep_best[1]:
                ep_best = (m["solution"], rate)
            if "critic_loss" in m:
                losses.append(m["critic_loss"])
        episode_best.append(ep_best[1])
        if ep_best[1] > best[1]:
            best = (ep_best[0].copy(), ep_best[1], z)
        agent.end_episode()
    metrics = dict(agent.counters)
    metrics.update({
        "episodes": Z,
        "steps_per_episode": T,
        "updates": agent.updates,
        "mean_critic_loss": float(np.mean(losses)) if losses else float("nan"),
        "wall_time_s": time.perf_counter() - t0,
    })
    episodes = np.repeat(np.arange(Z), T)
    steps = np.tile(np.arange(T), Z)
    return TrainingResult(best_solution=best[0], best_rate=float(best[1]), best_episode=best[2],
                          rewards=rewards, episodes=episodes, steps=steps,
                          episode_best=episode_best, init_rates=init_rates, metrics=metrics,
                          agent=agent, channels=channels if keep_channels else None)
