"""Graph attention auto-encoder over the lncRNA-disease association graph.

Each attention layer runs ``K`` heads. Head ``k`` projects node features
with ``W[k]`` (out x in), scores every edge ``(i, j)`` as
``leaky_relu(a[k] . [W f_i || W f_j])``, softmax-normalises the scores over
the neighbourhood of ``i`` and aggregates the projected neighbours. Heads are
averaged before the activation:

    f'_i = leaky_relu( (1/K) sum_k sum_{t in N(i)} s^k_it W[k] f_t )

The encoder maps the linear features down to the latent width, the decoder
mirrors it back, and training minimises the mean squared reconstruction
error with Adam. Gradients are derived by hand (see :func:`backward`).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .ingest import AssociationMatrix
from .numerics import (
    AdamState,
    ShapeError,
    adam_step,
    glorot_uniform,
    leaky_relu,
    leaky_relu_grad,
    make_rng,
    masked_softmax,
)

CHECKPOINT_FORMAT = "hgatelda-gate"
CHECKPOINT_VERSION = 1


class DivergenceError(FloatingPointError):
    def __init__(self, epoch, loss, what="GATE"):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"{what} training diverged at epoch {epoch} (loss={loss})")


@dataclass(frozen=True)
class AttentionGraph:
    """Bipartite lncRNA-disease graph plus self-loops, as a dense neighbour mask.

    ``mask[i, j]`` is true when ``j`` is in the neighbourhood of ``i``.
    """

    mask: np.ndarray
    p: int

    @property
    def n(self):
        return self.mask.shape[0]

    def neighbors(self, i):
        return np.flatnonzero(self.mask[i])

    @property
    def n_entries(self):
        return int(self.mask.sum())


def build_graph(ld):
    values = ld.values if isinstance(ld, AssociationMatrix) else np.asarray(ld)
    p, q = values.shape
    mask = np.eye(p + q, dtype=bool)
    linked = values > 0
    mask[:p, p:] = linked
    mask[p:, :p] = linked.T
    mask.setflags(write=False)
    return AttentionGraph(mask, p)


@dataclass
class AttentionLayer:
    W: np.ndarray  # (K, out_dim, in_dim)
    a: np.ndarray  # (K, 2 * out_dim)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.W.ndim != 3 or self.a.shape != (self.W.shape[0], 2 * self.W.shape[1]):
            raise ShapeError(f"inconsistent layer shapes W{self.W.shape} a{self.a.shape}")

    @property
    def heads(self):
        return self.W.shape[0]

    @property
    def out_dim(self):
        return self.W.shape[1]

    @property
    def in_dim(self):
        return self.W.shape[2]

    @classmethod
    def init(cls, in_dim, out_dim, heads, rng):
        W = glorot_uniform(rng, out_dim, in_dim, shape=(heads, out_dim, in_dim))
        a = glorot_uniform(rng, 1, 2 * out_dim, shape=(heads, 2 * out_dim))
        return cls(W, a)


@dataclass
class GateModel:
    encoder: list
    decoder: list
    slope: float = 0.2

    @property
    def layers(self):
        return [*self.encoder, *self.decoder]

    @property
    def dims(self):
        return [self.encoder[0].in_dim] + [layer.out_dim for layer in self.layers]

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.a))
        return out

    def parameter_names(self):
        names = []
        for part, layers in (("encoder", self.encoder), ("decoder", self.decoder)):
            for i in range(len(layers)):
                names.extend((f"{part}.{i}.W", f"{part}.{i}.a"))
        return names

    def set_parameters(self, params):
        params = list(params)
        for layer in self.layers:
            layer.W, layer.a = params.pop(0), params.pop(0)


def init_gate(in_dim, hidden=(128, 64), heads=4, rng=None, slope=0.2):
    """Encoder ``in -> hidden[0] -> ... -> hidden[-1]``, decoder mirrored back to ``in``."""
    if heads < 1:
        raise ValueError("need at least one attention head")
    rng = rng if rng is not None else make_rng(0)
    dims = [in_dim, *hidden]
    encoder = [AttentionLayer.init(dims[i], dims[i + 1], heads, rng) for i in range(len(hidden))]
    back = dims[::-1]
    decoder = [AttentionLayer.init(back[i], back[i + 1], heads, rng) for i in range(len(hidden))]
    return GateModel(encoder, decoder, slope)


def _check_input(layer, f, graph):
    if f.ndim != 2 or f.shape[1] != layer.in_dim:
        raise ShapeError(f"layer expects {layer.in_dim} input columns, got features {f.shape}")
    if f.shape[0] != graph.n:
        raise ShapeError(f"features have {f.shape[0]} rows but the graph has {graph.n} nodes")


def attention_scores(layer, f, graph, k, slope=0.2):
    """Raw edge scores of head ``k``; entries outside the neighbourhood are 0."""
    f = np.asarray(f, dtype=np.float64)
    _check_input(layer, f, graph)
    h = f @ layer.W[k].T
    out = layer.out_dim
    e = (h @ layer.a[k, :out])[:, None] + (h @ layer.a[k, out:])[None, :]
    return np.where(graph.mask, leaky_relu(e, slope), 0.0)


def normalize_attention(scores, graph):
    return masked_softmax(scores, graph.mask)


def head_forward(layer, f, graph, k, slope=0.2):
    f = np.asarray(f, dtype=np.float64)
    coef = normalize_attention(attention_scores(layer, f, graph, k, slope), graph)
    return leaky_relu(coef @ (f @ layer.W[k].T), slope)


def _layer_forward(layer, x, graph, slope):
    _check_input(layer, x, graph)
    out = layer.out_dim
    h = x @ layer.W.transpose(0, 2, 1)  # (K, n, out)
    src = h @ layer.a[:, :out, None]  # (K, n, 1)
    dst = h @ layer.a[:, out:, None]
    e = src + dst.transpose(0, 2, 1)  # (K, n, n)
    mask = np.broadcast_to(graph.mask, e.shape)
    s = masked_softmax(leaky_relu(e, slope), mask)
    m = (s @ h).mean(axis=0)
    y = leaky_relu(m, slope)
    return y, {"x": x, "h": h, "e": e, "s": s, "m": m}


def layer_forward(layer, f, graph, slope=0.2):
    return _layer_forward(layer, np.asarray(f, dtype=np.float64), graph, slope)[0]


def _layer_backward(layer, cache, dy, slope):
    x, h, e, s, m = cache["x"], cache["h"], cache["e"], cache["s"], cache["m"]
    out = layer.out_dim
    heads = layer.heads
    dm = dy * leaky_relu_grad(m, slope)
    dagg = np.broadcast_to(dm / heads, h.shape)  # same upstream for every head
    ds = dagg @ h.transpose(0, 2, 1)  # (K, n, n)
    dh = s.transpose(0, 2, 1) @ dagg
    # softmax backward, row-wise; masked entries have s == 0 and drop out
    dz = s * (ds - np.sum(s * ds, axis=-1, keepdims=True))
    de = dz * leaky_relu_grad(e, slope)
    dsrc = de.sum(axis=2)  # (K, n)
    ddst = de.sum(axis=1)
    a_src, a_dst = layer.a[:, :out], layer.a[:, out:]
    da = np.concatenate(
        [np.einsum("kno,kn->ko", h, dsrc), np.einsum("kno,kn->ko", h, ddst)], axis=1
    )
    dh = dh + dsrc[:, :, None] * a_src[:, None, :] + ddst[:, :, None] * a_dst[:, None, :]
    dW = dh.transpose(0, 2, 1) @ x  # (K, out, in)
    dx = np.sum(dh @ layer.W, axis=0)
    return dx, dW, da


def _forward(model, f, graph):
    caches = []
    x = f
    for layer in model.encoder:
        x, cache = _layer_forward(layer, x, graph, model.slope)
        caches.append(cache)
    latent = x
    for layer in model.decoder:
        x, cache = _layer_forward(layer, x, graph, model.slope)
        caches.append(cache)
    return latent, x, caches


def forward(model, f, graph):
    """Returns ``(latent, reconstruction)``."""
    latent, recon, _ = _forward(model, np.asarray(f, dtype=np.float64), graph)
    return latent, recon


def attention_coefficients(model, f, graph):
    """Per-layer normalised attention, each of shape (K, n, n)."""
    _, _, caches = _forward(model, np.asarray(f, dtype=np.float64), graph)
    return [c["s"] for c in caches]


def reconstruction_loss(f, recon):
    f = np.asarray(f, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    if f.shape != recon.shape:
        raise ShapeError(f"reconstruction {recon.shape} does not match input {f.shape}")
    return float(np.mean((recon - f) ** 2))


def backward(model, f, graph, scale=1.0, target=None):
    """Loss and exact gradients of ``scale * MSE`` for every parameter.

    The reconstruction target defaults to the input ``f``. Gradients come
    back in the order of :meth:`GateModel.parameters`.
    """
    f = np.asarray(f, dtype=np.float64)
    target = f if target is None else np.asarray(target, dtype=np.float64)
    _, recon, caches = _forward(model, f, graph)
    loss = scale * reconstruction_loss(target, recon)
    dy = scale * 2.0 * (recon - target) / target.size
    grads = []
    for layer, cache in zip(reversed(model.layers), reversed(caches)):
        dy, dW, da = _layer_backward(layer, cache, dy, model.slope)
        grads.append((dW, da))
    flat = []
    for dW, da in reversed(grads):
        flat.extend((dW, da))
    return loss, flat


@dataclass(frozen=True)
class GateConfig:
    hidden: tuple = (128, 64)
    heads: int = 4
    epochs: int = 300
    lr: float = 1e-3
    slope: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"GATE epochs must be >= 1, got {self.epochs}")
        if self.heads < 1:
            raise ValueError(f"GATE heads must be >= 1, got {self.heads}")
        if not self.hidden:
            raise ValueError("GATE needs at least one encoder layer")


@dataclass
class GateResult:
    model: GateModel
    latent: np.ndarray
    losses: list = field(default_factory=list)


def train_gate(config, f, graph, rng=None, on_epoch=None):
    """Fit the auto-encoder on ``f`` and return the encoder output as node features.

    ``on_epoch(epoch, model, loss)`` is called before each update.
    """
    f = np.asarray(f, dtype=np.float64)
    rng = rng if rng is not None else make_rng(config.seed)
    model = init_gate(f.shape[1], config.hidden, config.heads, rng, config.slope)
    states = [AdamState.like(p, lr=config.lr) for p in model.parameters()]
    losses = []
    for epoch in range(1, config.epochs + 1):
        loss, grads = backward(model, f, graph)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise DivergenceError(epoch, loss)
        losses.append(loss)
        if on_epoch is not None:
            on_epoch(epoch, model, loss)
        params = []
        for i, (param, grad) in enumerate(zip(model.parameters(), grads)):
            new, states[i] = adam_step(states[i], param, grad)
            params.append(new)
        model.set_parameters(params)
    latent, _ = forward(model, f, graph)
    return GateResult(model, latent, losses)


def gate_to_dict(model):
    def layer_dict(layer):
        return {"W": layer.W.tolist(), "a": layer.a.tolist()}

    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "slope": model.slope,
        "dims": model.dims,
        "heads": model.encoder[0].heads,
        "encoder": [layer_dict(layer) for layer in model.encoder],
        "decoder": [layer_dict(layer) for layer in model.decoder],
    }


def gate_from_dict(data):
    if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION} checkpoint")
    encoder = [AttentionLayer(layer["W"], layer["a"]) for layer in data["encoder"]]
    decoder = [AttentionLayer(layer["W"], layer["a"]) for layer in data["decoder"]]
    return GateModel(encoder, decoder, data["slope"])


def save_gate(path, model):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(gate_to_dict(model), fh)


def load_gate(path):
    with open(path, encoding="utf-8") as fh:
        return gate_from_dict(json.load(fh))
