"""Dense numeric core: LSTM layers, softmax head, losses, Adam, gradient check.

Everything is float64 numpy. Shapes:

  token windows     (B, T)      int indices into the vocabulary
  one-hot input     (B, T, V)   PAD row is all zeros
  embedding         (V, d)      PAD row pinned to zero
  per layer         wx (d_in, 4H), wh (H, 4H), b (4H,)
  head              w_out (H, V), b_out (V,)

Gate order inside the 4H axis is input, forget, candidate, output. The
forget-gate bias is initialized to 1; all other biases to 0, which keeps a
freshly initialized cell state at exactly zero on zero input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DivergenceError(FloatingPointError):
    """Raised when a loss evaluates to a non-finite value."""


@dataclass(frozen=True)
class RegularizationSpec:
    l1: float = 0.0
    l2: float = 0.0
    dropout: float = 0.0

    def __post_init__(self):
        if self.l1 < 0 or self.l2 < 0:
            raise ValueError("penalty coefficients must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")


@dataclass
class LstmLayer:
    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.wh.shape[0]


@dataclass
class NetworkParams:
    vocab_size: int
    pad_index: int
    embedding: np.ndarray | None
    layers: list[LstmLayer]
    w_out: np.ndarray
    b_out: np.ndarray

    def items(self) -> list[tuple[str, np.ndarray]]:
        """(name, array) pairs in a fixed order; names key optimizer state."""
        out = []
        if self.embedding is not None:
            out.append(("embedding", self.embedding))
        for i, layer in enumerate(self.layers):
            out += [(f"l{i}.wx", layer.wx), (f"l{i}.wh", layer.wh), (f"l{i}.b", layer.b)]
        out += [("w_out", self.w_out), ("b_out", self.b_out)]
        return out

    def penalized_names(self) -> tuple[str, ...]:
        """Matrices subject to L1/L2: embedding and recurrent-layer kernels.

        Biases are exempt, and so is the softmax head: penalizing it caps
        the achievable logit separation and leaks probability mass to
        impossible tokens at every step, which compounds across a sampled
        trace. The recurrent kernels are where sequence memorization
        lives, so the overfitting pressure stays where it belongs.
        """
        return tuple(
            n
            for n, _ in self.items()
            if n == "embedding" or n.endswith(".wx") or n.endswith(".wh")
        )

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            vocab_size=self.vocab_size,
            pad_index=self.pad_index,
            embedding=None if self.embedding is None else self.embedding.copy(),
            layers=[LstmLayer(l.wx.copy(), l.wh.copy(), l.b.copy()) for l in self.layers],
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
        )


def embedding_dim(vocab_size: int) -> int:
    """Fourth root of the vocabulary size, rounded up."""
    return math.ceil(vocab_size ** 0.25)


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    limit = math.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def init_params(
    vocab_size: int,
    pad_index: int,
    hidden_size: int,
    n_layers: int,
    use_embedding: bool,
    seed: int,
) -> NetworkParams:
    rng = np.random.default_rng(seed)
    if use_embedding:
        d_in = embedding_dim(vocab_size)
        embedding = _glorot(rng, (vocab_size, d_in))
        embedding[pad_index] = 0.0
    else:
        d_in = vocab_size
        embedding = None
    layers = []
    for _ in range(n_layers):
        h = hidden_size
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0  # forget gate
        layers.append(LstmLayer(wx=_glorot(rng, (d_in, 4 * h)), wh=_glorot(rng, (h, 4 * h)), b=b))
        d_in = h
    return NetworkParams(
        vocab_size=vocab_size,
        pad_index=pad_index,
        embedding=embedding,
        layers=layers,
        w_out=_glorot(rng, (hidden_size, vocab_size)),
        b_out=np.zeros(vocab_size),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _embed(params: NetworkParams, tokens: np.ndarray) -> np.ndarray:
    """(B, T) indices -> (B, T, d_in); PAD contributes a zero row either way."""
    if np.any(tokens < 0) or np.any(tokens >= params.vocab_size):
        raise IndexError("token index out of vocabulary")
    if params.embedding is not None:
        return params.embedding[tokens]
    table = np.eye(params.vocab_size)
    table[params.pad_index] = 0.0
    return table[tokens]


@dataclass
class _LayerCache:
    x: np.ndarray          # (B, T, d_in) layer input
    i: np.ndarray          # (T, B, H) post-activation gates
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray          # (T, B, H) cell states
    h: np.ndarray          # (T, B, H) hidden states


def _lstm_layer_forward(layer: LstmLayer, x: np.ndarray) -> _LayerCache:
    B, T, _ = x.shape
    H = layer.hidden
    i = np.empty((T, B, H)); f = np.empty((T, B, H))
    g = np.empty((T, B, H)); o = np.empty((T, B, H))
    c = np.empty((T, B, H)); h = np.empty((T, B, H))
    h_prev = np.zeros((B, H))
    c_prev = np.zeros((B, H))
    for t in range(T):
        z = x[:, t] @ layer.wx + h_prev @ layer.wh + layer.b
        i[t] = _sigmoid(z[:, :H])
        f[t] = _sigmoid(z[:, H:2 * H])
        g[t] = np.tanh(z[:, 2 * H:3 * H])
        o[t] = _sigmoid(z[:, 3 * H:])
        c[t] = f[t] * c_prev + i[t] * g[t]
        h[t] = o[t] * np.tanh(c[t])
        h_prev = h[t]
        c_prev = c[t]
    return _LayerCache(x=x, i=i, f=f, g=g, o=o, c=c, h=h)


def _lstm_layer_backward(
    layer: LstmLayer, cache: _LayerCache, dh_out: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Backprop through time for one layer.

    ``dh_out`` is (T, B, H): the gradient flowing into each step's hidden
    output from above (zero except at the last step for the top layer).
    Returns the gradient w.r.t. the layer input and the weight gradients.
    """
    x, i, f, g, o, c, h = cache.x, cache.i, cache.f, cache.g, cache.o, cache.c, cache.h
    B, T, _ = x.shape
    H = layer.hidden
    d_wx = np.zeros_like(layer.wx)
    d_wh = np.zeros_like(layer.wh)
    d_b = np.zeros_like(layer.b)
    dx = np.empty_like(x)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        dh = dh_out[t] + dh_next
        tc = np.tanh(c[t])
        do = dh * tc
        dc = dc_next + dh * o[t] * (1.0 - tc * tc)
        c_prev = c[t - 1] if t > 0 else np.zeros((B, H))
        h_prev = h[t - 1] if t > 0 else np.zeros((B, H))
        di = dc * g[t]
        dg = dc * i[t]
        df = dc * c_prev
        dz[:, :H] = di * i[t] * (1.0 - i[t])
        dz[:, H:2 * H] = df * f[t] * (1.0 - f[t])
        dz[:, 2 * H:3 * H] = dg * (1.0 - g[t] * g[t])
        dz[:, 3 * H:] = do * o[t] * (1.0 - o[t])
        d_wx += x[:, t].T @ dz
        d_wh += h_prev.T @ dz
        d_b += dz.sum(axis=0)
        dx[:, t] = dz @ layer.wx.T
        dh_next = dz @ layer.wh.T
        dc_next = dc * f[t]
    return dx, {"wx": d_wx, "wh": d_wh, "b": d_b}


def _dropout_mask(
    shape: tuple[int, ...], rate: float, rng: np.random.Generator
) -> np.ndarray:
    """Inverted-dropout mask: zero a ``rate`` fraction, rescale the rest."""
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _as_batch(prefixes: np.ndarray) -> tuple[np.ndarray, bool]:
    arr = np.asarray(prefixes, dtype=np.int64)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def forward(
    params: NetworkParams,
    prefixes: np.ndarray,
    mode: str = "infer",
    dropout: float = 0.0,
    dropout_rng=None,
) -> np.ndarray:
    """Probability vector(s) over the vocabulary for token window(s).

    ``mode`` "infer" disables dropout; "train" zeroes a seeded random
    fraction of the final recurrent layer's output (inverted scaling).
    """
    if mode not in ("infer", "train"):
        raise ValueError("mode must be 'infer' or 'train'")
    tokens, single = _as_batch(prefixes)
    x = _embed(params, tokens)
    for layer in params.layers:
        cache = _lstm_layer_forward(layer, x)
        x = np.moveaxis(cache.h, 0, 1)
    h_last = x[:, -1]
    if mode == "train" and dropout > 0.0:
        h_last = h_last * _dropout_mask(h_last.shape, dropout, _as_rng(dropout_rng))
    probs = softmax(h_last @ params.w_out + params.b_out)
    return probs[0] if single else probs


def loss_and_gradients(
    params: NetworkParams,
    prefixes: np.ndarray,
    targets: np.ndarray,
    reg: RegularizationSpec,
    dropout_rng=None,
    train: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean crossentropy plus penalties, and gradients for every parameter.

    The L1/L2 penalty covers the weight matrices (embedding included when
    present, the PAD row excluded by construction) but no biases.
    """
    tokens, _ = _as_batch(prefixes)
    targets = np.asarray(targets, dtype=np.int64)
    B = tokens.shape[0]
    if B == 0:
        raise ValueError("empty batch")

    x = _embed(params, tokens)
    caches: list[_LayerCache] = []
    for layer in params.layers:
        cache = _lstm_layer_forward(layer, x)
        caches.append(cache)
        x = np.moveaxis(cache.h, 0, 1)
    h_last = x[:, -1]

    if train and reg.dropout > 0.0:
        mask = _dropout_mask(h_last.shape, reg.dropout, _as_rng(dropout_rng))
    else:
        mask = None
    h_drop = h_last if mask is None else h_last * mask

    logits = h_drop @ params.w_out + params.b_out
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    ce = -log_probs[np.arange(B), targets].mean()

    penalty = 0.0
    if reg.l1 or reg.l2:
        for name, arr in params.items():
            if name in params.penalized_names():
                penalty += reg.l1 * np.abs(arr).sum() + reg.l2 * (arr * arr).sum()
    loss = ce + penalty
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss: {loss}")

    grads: dict[str, np.ndarray] = {}
    probs = np.exp(log_probs)
    dlogits = probs
    dlogits[np.arange(B), targets] -= 1.0
    dlogits /= B
    grads["w_out"] = h_drop.T @ dlogits
    grads["b_out"] = dlogits.sum(axis=0)
    dh_last = dlogits @ params.w_out.T
    if mask is not None:
        dh_last = dh_last * mask

    T = tokens.shape[1]
    dh_out = None
    dx = None
    for idx in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[idx]
        H = layer.hidden
        dh_out = np.zeros((T, B, H))
        if idx == len(params.layers) - 1:
            dh_out[T - 1] = dh_last
        else:
            dh_out[:] = np.moveaxis(dx, 0, 1)
        dx, layer_grads = _lstm_layer_backward(layer, caches[idx], dh_out)
        grads[f"l{idx}.wx"] = layer_grads["wx"]
        grads[f"l{idx}.wh"] = layer_grads["wh"]
        grads[f"l{idx}.b"] = layer_grads["b"]

    if params.embedding is not None:
        d_emb = np.zeros_like(params.embedding)
        np.add.at(d_emb, tokens.reshape(-1), dx.reshape(-1, dx.shape[-1]))
        d_emb[params.pad_index] = 0.0
        grads["embedding"] = d_emb

    if reg.l1 or reg.l2:
        for name, arr in params.items():
            if name in params.penalized_names():
                grads[name] = grads[name] + reg.l1 * np.sign(arr) + 2.0 * reg.l2 * arr

    return float(loss), grads


@dataclass
class OptimizerState:
    """Adam accumulators; decay rates 0.9 / 0.999, epsilon 1e-8."""

    learning_rate: float
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_optimizer(params: NetworkParams, learning_rate: float) -> OptimizerState:
    state = OptimizerState(learning_rate=learning_rate)
    for name, arr in params.items():
        state.m[name] = np.zeros_like(arr)
        state.v[name] = np.zeros_like(arr)
    return state


def adam_step(
    state: OptimizerState, params: NetworkParams, grads: dict[str, np.ndarray]
) -> tuple[OptimizerState, NetworkParams]:
    """One bias-corrected adaptive-moment update, in place."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, arr in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        arr -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return state, params


def finite_difference_check(
    loss_fn,
    arrays: dict[str, np.ndarray],
    analytic: dict[str, np.ndarray],
    epsilon: float = 1e-5,
    n_sample: int = 200,
    seed: int = 0,
    exclude: dict[str, frozenset[int]] | None = None,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Perturbs a random subsample of at least ``n_sample`` coordinates across
    all arrays (all of them when fewer exist). ``loss_fn`` is re-evaluated
    at w +/- epsilon, so it must be deterministic. ``exclude`` skips flat
    indices whose values are pinned rather than trained.
    """
    exclude = exclude or {}
    coords = [
        (name, idx)
        for name, arr in arrays.items()
        for idx in range(arr.size)
        if idx not in exclude.get(name, frozenset())
    ]
    rng = np.random.default_rng(seed)
    if len(coords) > n_sample:
        picked = rng.choice(len(coords), size=n_sample, replace=False)
        coords = [coords[i] for i in sorted(picked)]
    worst = 0.0
    for name, flat_idx in coords:
        arr = arrays[name]
        orig = arr.flat[flat_idx]
        arr.flat[flat_idx] = orig + epsilon
        up = loss_fn()
        arr.flat[flat_idx] = orig - epsilon
        down = loss_fn()
        arr.flat[flat_idx] = orig
        numeric = (up - down) / (2.0 * epsilon)
        a = analytic[name].flat[flat_idx]
        denom = max(abs(a) + abs(numeric), 1e-8)
        worst = max(worst, abs(a - numeric) / denom)
    return worst


def gradient_check(
    params: NetworkParams,
    prefixes: np.ndarray,
    targets: np.ndarray,
    reg: RegularizationSpec | None = None,
    epsilon: float = 1e-5,
    n_sample: int = 200,
    seed: int = 0,
) -> float:
    """Finite-difference verification of :func:`loss_and_gradients`.

    Dropout is forced off; the regularization penalties are kept so their
    gradients are verified too.
    """
    reg = reg or RegularizationSpec()
    reg = RegularizationSpec(l1=reg.l1, l2=reg.l2, dropout=0.0)
    arrays = dict(params.items())
    exclude = {}
    if params.embedding is not None:
        # The PAD embedding row is pinned to zero, not trained.
        d = params.embedding.shape[1]
        exclude["embedding"] = frozenset(range(params.pad_index * d, (params.pad_index + 1) * d))
    _, analytic = loss_and_gradients(params, prefixes, targets, reg, train=False)

    def loss_fn() -> float:
        value, _ = loss_and_gradients(params, prefixes, targets, reg, train=False)
        return value

    return finite_difference_check(
        loss_fn, arrays, analytic, epsilon, n_sample, seed, exclude=exclude
    )
