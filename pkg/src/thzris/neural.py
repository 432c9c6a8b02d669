"""Small dense networks with hand-written backpropagation.

A :class:`DenseNet` is a sequence of :class:`Dense` and :class:`BatchNorm`
layers operating on row-major batches (``batch x features``). The actor and
critic share the layout built by :func:`make_network`::

    Dense(in, h1, act) -> BatchNorm(h1) -> Dense(h1, h2, act) -> Dense(h2, out, out_act)

Networks are saved as ``.npz`` archives holding every array under
``layer{i}.{name}`` plus a JSON description of the layer stack under
``__arch__``.
"""

import json

import numpy as np

from .errors import RejectedInputError, UsageError

BN_EPS = 1e-5
BN_MOMENTUM = 0.99

ACTIVATIONS = ("relu", "tanh", "linear")


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z, y, kind):
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "tanh":
        return 1.0 - y * y
    return np.ones_like(z)


class Dense:
    """Affine map followed by an elementwise activation."""

    param_names = ("W", "b")
    buffer_names = ()

    def __init__(self, n_in, n_out, activation="linear", rng=None, dtype=np.float64):
        if activation not in ACTIVATIONS:
            raise RejectedInputError(f"unknown activation {activation!r}")
        rng = np.random.default_rng() if rng is None else rng
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.W = rng.uniform(-limit, limit, size=(n_in, n_out)).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self.activation = activation
        self._cache = None

    @property
    def n_in(self):
        return self.W.shape[0]

    @property
    def n_out(self):
        return self.W.shape[1]

    def describe(self):
        return {"type": "dense", "n_in": self.n_in, "n_out": self.n_out, "activation": self.activation,
                "dtype": self.W.dtype.name}

    def forward(self, x, train):
        z = x @ self.W + self.b
        y = _activate(z, self.activation)
        self._cache = (x, z, y)
        return y

    def backward(self, dy):
        if self._cache is None:
            raise UsageError("backward called before forward")
        x, z, y = self._cache
        dz = dy * _activation_grad(z, y, self.activation)
        grads = {"W": x.T @ dz, "b": dz.sum(axis=0)}
        return dz @ self.W.T, grads


class BatchNorm:
    """Per-feature batch normalization with running statistics."""

    param_names = ("gamma", "beta")
    buffer_names = ("running_mean", "running_var")

    def __init__(self, n, eps=BN_EPS, momentum=BN_MOMENTUM, dtype=np.float64):
        self.gamma = np.ones(n, dtype=dtype)
        self.beta = np.zeros(n, dtype=dtype)
        self.running_mean = np.zeros(n, dtype=dtype)
        self.running_var = np.ones(n, dtype=dtype)
        self.eps = eps
        self.momentum = momentum
        self._cache = None

    @property
    def n_in(self):
        return self.gamma.size

    n_out = n_in

    def describe(self):
        return {"type": "batchnorm", "n": self.n_in, "eps": self.eps, "momentum": self.momentum,
                "dtype": self.gamma.dtype.name}

    def forward(self, x, train):
        if train:
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            m = self.momentum
            self.running_mean = m * self.running_mean + (1.0 - m) * mean
            self.running_var = m * self.running_var + (1.0 - m) * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, train)
        return self.gamma * xhat + self.beta

    def backward(self, dy):
        if self._cache is None:
            raise UsageError("backward called before forward")
        xhat, inv_std, train = self._cache
        grads = {"gamma": (dy * xhat).sum(axis=0), "beta": dy.sum(axis=0)}
        dxhat = dy * self.gamma
        if not train:
            return dxhat * inv_std, grads
        n = dy.shape[0]
        dx = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return dx, grads


class DenseNet:
    """Sequential stack of dense and batch-norm layers.

    ``mode`` is ``"train"`` (batch statistics, running averages updated) or
    ``"eval"`` (running statistics, pure function of the input).
    """

    def __init__(self, layers):
        self.layers = list(layers)
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            if a.n_out != b.n_in:
                raise RejectedInputError(f"layer widths do not chain: {a.n_out} -> {b.n_in}")
        self.mode = "eval"
        self._forwarded = False

    @property
    def n_in(self):
        return self.layers[0].n_in

    @property
    def n_out(self):
        return self.layers[-1].n_out

    @property
    def dtype(self):
        return self.parameters()[0].dtype

    def train(self):
        self.mode = "train"
        return self

    def eval(self):
        self.mode = "eval"
        return self

    def forward(self, x, mode=None):
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.n_in:
            raise RejectedInputError(f"input width {x.shape[1]} != network width {self.n_in}")
        train = (mode or self.mode) == "train"
        for layer in self.layers:
            x = layer.forward(x, train)
        self._forwarded = True
        return x

    def backward(self, upstream):
        """Backpropagate ``d loss / d output``.

        Returns
        -------
        grads : list of ndarray
            Aligned with :meth:`parameters`.
        d_input : ndarray
            Gradient with respect to the network input.
        """
        if not self._forwarded:
            raise UsageError("backward called before forward")
        dy = np.asarray(upstream, dtype=self.dtype)
        per_layer = []
        for layer in reversed(self.layers):
            dy, g = layer.backward(dy)
            per_layer.append(g)
        per_layer.reverse()
        grads = [g[name] for layer, g in zip(self.layers, per_layer) for name in layer.param_names]
        return grads, dy

    def parameters(self):
        return [getattr(layer, name) for layer in self.layers for name in layer.param_names]

    def set_parameters(self, values):
        it = iter(values)
        for layer in self.layers:
            for name in layer.param_names:
                setattr(layer, name, next(it))

    def state_arrays(self):
        """Every blended quantity: parameters followed by batch-norm buffers."""
        return [(layer, name) for layer in self.layers
                for name in layer.param_names + layer.buffer_names]

    def architecture(self):
        return [layer.describe() for layer in self.layers]

    def copy(self):
        clone = DenseNet.from_architecture(self.architecture())
        for (dst, name), (src, _) in zip(clone.state_arrays(), self.state_arrays()):
            setattr(dst, name, getattr(src, name).copy())
        clone.mode = self.mode
        return clone

    @classmethod
    def from_architecture(cls, arch):
        layers = []
        for spec in arch:
            if spec["type"] == "dense":
                layers.append(Dense(spec["n_in"], spec["n_out"], spec["activation"],
                                    rng=np.random.default_rng(0), dtype=spec.get("dtype", "float64")))
            elif spec["type"] == "batchnorm":
                layers.append(BatchNorm(spec["n"], spec.get("eps", BN_EPS), spec.get("momentum", BN_MOMENTUM),
                                        dtype=spec.get("dtype", "float64")))
            else:
                raise RejectedInputError(f"unknown layer type {spec['type']!r}")
        return cls(layers)

    def save(self, path):
        arrays = {f"layer{i}.{name}": getattr(layer, name)
                  for i, layer in enumerate(self.layers)
                  for name in layer.param_names + layer.buffer_names}
        arrays["__arch__"] = np.array(json.dumps(self.architecture()))
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            net = cls.from_architecture(json.loads(str(data["__arch__"])))
            for i, layer in enumerate(net.layers):
                for name in layer.param_names + layer.buffer_names:
                    setattr(layer, name, data[f"layer{i}.{name}"].copy())
        return net


def make_network(n_in, n_out, hidden=(256, 128), hidden_activation="relu",
                 output_activation="linear", rng=None, dtype=np.float64):
    """Input layer, two hidden layers with batch norm between them, output layer."""
    h1, h2 = hidden
    rng = np.random.default_rng() if rng is None else rng
    return DenseNet([
        Dense(n_in, h1, hidden_activation, rng, dtype),
        BatchNorm(h1, dtype=dtype),
        Dense(h1, h2, hidden_activation, rng, dtype),
        Dense(h2, n_out, output_activation, rng, dtype),
    ])


def forward(net, batch):
    return net.forward(batch)


def backward(net, upstream):
    return net.backward(upstream)


class AdamState:
    """Adaptive-moment optimizer state for one network.

    The learning rate decays geometrically, ``lr <- (1 - decay) * lr``, each
    time :meth:`decay_lr` is called (once per episode).
    """

    def __init__(self, net, lr=1e-3, decay=0.005, beta1=0.9, beta2=0.999, eps=1e-8):
        if not lr > 0:
            raise RejectedInputError("learning rate must be positive")
        if not 0 <= decay < 1:
            raise RejectedInputError("decay must lie in [0, 1)")
        self.lr = lr
        self.decay = decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]
        self.t = 0

    def decay_lr(self):
        self.lr *= 1.0 - self.decay


def adam_step(net, grads, st):
    """Apply one bias-corrected Adam update to the parameter arrays in place;
    returns ``(net, st)``."""
    params = net.parameters()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise RejectedInputError("gradient shapes do not match the network parameters")
    st.t += 1
    c1 = 1.0 - st.beta1 ** st.t
    c2 = 1.0 - st.beta2 ** st.t
    for p, g, m, v in zip(params, grads, st.m, st.v):
        m *= st.beta1
        m += (1.0 - st.beta1) * g
        v *= st.beta2
        v += (1.0 - st.beta2) * (g * g)
        denom = np.sqrt(v / c2)
        denom += st.eps
        step = m / denom
        step *= st.lr / c1
        p -= step
    return net, st


def soft_update(target, train, tau):
    """Blend ``target <- tau * train + (1 - tau) * target``, batch-norm buffers included."""
    if not 0 < tau <= 1:
        raise RejectedInputError("tau must lie in (0, 1]")
    if target.architecture() != train.architecture():
        raise RejectedInputError("soft_update needs identical architectures")
    for (t_layer, name), (s_layer, _) in zip(target.state_arrays(), train.state_arrays()):
        src = getattr(s_layer, name)
        dst = getattr(t_layer, name)
        if tau == 1.0:
            dst[...] = src
        else:
            dst *= 1.0 - tau
            dst += tau * src
    return target
