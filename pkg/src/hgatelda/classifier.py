"""Pair fusion and the feed-forward association classifier.

A pair vector is ``[linear lncRNA | latent lncRNA | linear disease | latent disease]``.
The classifier is a leaky-ReLU MLP with inverted dropout on the hidden
layers and a sigmoid output, trained on binary cross-entropy with Adam.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .gate import DivergenceError
from .ingest import AssociationMatrix
from .numerics import AdamState, ShapeError, adam_step, leaky_relu, leaky_relu_grad, make_rng

CHECKPOINT_FORMAT = "hgatelda-classifier"
CHECKPOINT_VERSION = 1


def fuse(i, j, fl, fl_latent, fd, fd_latent):
    if not (0 <= i < len(fl) and 0 <= j < len(fd)):
        raise IndexError(f"pair ({i}, {j}) out of range for {len(fl)} lncRNAs x {len(fd)} diseases")
    return np.concatenate([fl[i], fl_latent[i], fd[j], fd_latent[j]])


def segment_mask(lin_dim, latent_dim, linear=True, nonlinear=True):
    """0/1 mask over a fused pair vector keeping the chosen feature families."""
    lnc = [float(linear)] * lin_dim + [float(nonlinear)] * latent_dim
    return np.array(lnc + lnc)


def pair_features(pairs, linear, latent, p, mask=None):
    """Fused vectors for many ``(lncRNA, disease)`` index pairs at once.

    ``linear`` and ``latent`` are the stacked node matrices (lncRNAs first).
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    q = linear.shape[0] - p
    if pairs.size and (pairs[:, 0].min() < 0 or pairs[:, 0].max() >= p
                       or pairs[:, 1].min() < 0 or pairs[:, 1].max() >= q):
        raise IndexError("pair index out of range")
    lnc = np.hstack([linear[:p], latent[:p]])
    dis = np.hstack([linear[p:], latent[p:]])
    x = np.hstack([lnc[pairs[:, 0]], dis[pairs[:, 1]]])
    return x * mask if mask is not None else x


def sample_negatives(ld, count, rng, exclude=()):
    """Uniformly sample ``count`` unknown pairs without replacement."""
    values = ld.values if isinstance(ld, AssociationMatrix) else np.asarray(ld)
    free = values == 0
    for i, j in exclude:
        free[i, j] = False
    candidates = np.flatnonzero(free)
    if count > candidates.size:
        raise ValueError(f"asked for {count} negatives but only {candidates.size} unknown pairs exist")
    if count == 0:
        return []
    picked = np.sort(rng.choice(candidates.size, size=count, replace=False))
    rows, cols = np.unravel_index(candidates[picked], values.shape)
    return list(zip(rows.tolist(), cols.tolist()))


@dataclass
class ClassifierModel:
    weights: list  # each (in, out)
    biases: list
    slope: float = 0.2
    dropout: float = 0.2

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_parameters(self, params):
        params = list(params)
        self.weights = params[0::2]
        self.biases = params[1::2]


def init_classifier(in_dim, hidden=(128, 64, 32), rng=None, slope=0.2, dropout=0.2, zero=False):
    """Fan-in scaled uniform weights and zero biases; ``zero=True`` gives an all-zero model."""
    rng = rng if rng is not None else make_rng(0)
    dims = [in_dim, *hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        if zero:
            weights.append(np.zeros((fan_in, fan_out)))
        else:
            limit = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ClassifierModel(weights, biases, slope, dropout)


def dropout_masks(model, n, rng):
    """Inverted-dropout keep masks for each hidden layer (already scaled)."""
    keep = 1.0 - model.dropout
    return [
        (rng.random((n, w.shape[1])) < keep) / keep
        for w in model.weights[:-1]
    ]


def _forward(model, x, masks=None):
    acts = [x]
    pre = []
    h = x
    last = len(model.weights) - 1
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if layer == last:
            return z[:, 0], (acts, pre)
        pre.append(z)
        h = leaky_relu(z, model.slope)
        if masks is not None:
            h = h * masks[layer]
        acts.append(h)


def logits(model, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.in_dim:
        raise ShapeError(f"pair vectors have {x.shape[1]} entries, classifier expects {model.in_dim}")
    return _forward(model, x)[0]


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def predict(model, x):
    """Association scores in (0, 1); a single vector gives a scalar."""
    x = np.asarray(x, dtype=np.float64)
    scores = sigmoid(logits(model, x))
    return float(scores[0]) if x.ndim == 1 else scores


def bce_loss(z, y):
    """Mean binary cross-entropy computed from logits."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def classifier_backward(model, x, y, masks=None):
    z, (acts, pre) = _forward(model, x, masks)
    loss = bce_loss(z, y)
    dz = (sigmoid(z) - y)[:, None] / len(y)
    grads = [None] * (2 * len(model.weights))
    for layer in range(len(model.weights) - 1, -1, -1):
        grads[2 * layer] = acts[layer].T @ dz
        grads[2 * layer + 1] = dz.sum(axis=0)
        if layer == 0:
            break
        dh = dz @ model.weights[layer].T
        if masks is not None:
            dh = dh * masks[layer - 1]
        dz = dh * leaky_relu_grad(pre[layer - 1], model.slope)
    return loss, grads


@dataclass(frozen=True)
class ClassifierConfig:
    hidden: tuple = (128, 64, 32)
    dropout: float = 0.2
    epochs: int = 100
    lr: float = 1e-3
    slope: float = 0.2
    batch_size: int = 0  # 0 means full batch
    paper_literal_init: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"classifier epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")


@dataclass
class ClassifierResult:
    model: ClassifierModel
    losses: list = field(default_factory=list)


def train_classifier(config, x, y, rng=None):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0 or len(np.unique(y)) < 2:
        raise ValueError("training set must contain both positive and negative pairs")
    rng = rng if rng is not None else make_rng(config.seed)
    model = init_classifier(
        x.shape[1], config.hidden, rng, config.slope, config.dropout, zero=config.paper_literal_init
    )
    states = [AdamState.like(p, lr=config.lr) for p in model.parameters()]
    n = len(y)
    batch = config.batch_size if 0 < config.batch_size < n else n
    losses = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if batch < n else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            masks = dropout_masks(model, len(idx), rng) if model.dropout > 0 else None
            loss, grads = classifier_backward(model, x[idx], y[idx], masks)
            if not np.isfinite(loss):
                raise DivergenceError(epoch, loss, "classifier")
            epoch_loss += loss * len(idx)
            params = []
            for k, (param, grad) in enumerate(zip(model.parameters(), grads)):
                new, states[k] = adam_step(states[k], param, grad)
                params.append(new)
            model.set_parameters(params)
        losses.append(epoch_loss / n)
    return ClassifierResult(model, losses)


def classifier_to_dict(model):
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "slope": model.slope,
        "dropout": model.dropout,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def classifier_from_dict(data):
    if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION} checkpoint")
    weights = [np.array(w, dtype=np.float64).reshape(len(w), -1) for w in data["weights"]]
    biases = [np.array(b, dtype=np.float64) for b in data["biases"]]
    return ClassifierModel(weights, biases, data["slope"], data["dropout"])


def save_classifier(path, model):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(classifier_to_dict(model), fh)


def load_classifier(path):
    with open(path, encoding="utf-8") as fh:
        return classifier_from_dict(json.load(fh))
