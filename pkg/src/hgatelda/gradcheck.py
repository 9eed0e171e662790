"""Finite-difference verification of the hand-written gradients."""

import numpy as np

from . import classifier as clf
from . import gate
from .numerics import finite_diff_grad, make_rng, max_relative_error

TOLERANCE = 1e-4


def gate_instance(seed=0, nodes=10, in_dim=6, latent=4, heads=2, p=4):
    rng = make_rng(seed)
    ld = (rng.random((p, nodes - p)) < 0.4).astype(float)
    graph = gate.build_graph(ld)
    f = rng.random((nodes, in_dim))
    model = gate.init_gate(in_dim, (in_dim - 1, latent), heads, rng)
    return model, f, graph


def check_gate(model, f, graph, h=1e-5):
    """``{parameter name: max relative error}`` between analytic and numeric gradients."""
    _, grads = gate.backward(model, f, graph)
    base = [p.copy() for p in model.parameters()]
    errors = {}
    for idx, name in enumerate(model.parameter_names()):
        def loss(x, idx=idx):
            params = list(base)
            params[idx] = x
            model.set_parameters(params)
            return gate.reconstruction_loss(f, gate.forward(model, f, graph)[1])

        numeric = finite_diff_grad(loss, base[idx], h)
        model.set_parameters(base)
        errors[name] = max_relative_error(grads[idx], numeric)
    return errors


def classifier_instance(seed=0, samples=5, in_dim=20, hidden=(8, 6, 4), dropout=0.2):
    rng = make_rng(seed)
    model = clf.init_classifier(in_dim, hidden, rng, dropout=dropout)
    for b in model.biases:
        b[:] = rng.normal(scale=0.1, size=b.shape)
    x = rng.normal(size=(samples, in_dim))
    y = (np.arange(samples) % 2).astype(float)
    masks = clf.dropout_masks(model, samples, rng) if dropout > 0 else None
    return model, x, y, masks


def check_classifier(model, x, y, masks=None, h=1e-5):
    _, grads = clf.classifier_backward(model, x, y, masks)
    base = [p.copy() for p in model.parameters()]
    errors = {}
    for idx in range(len(base)):
        name = f"layer{idx // 2}.{'W' if idx % 2 == 0 else 'b'}"

        def loss(v, idx=idx):
            params = list(base)
            params[idx] = v
            model.set_parameters(params)
            z, _ = clf._forward(model, x, masks)
            return clf.bce_loss(z, y)

        numeric = finite_diff_grad(loss, base[idx], h)
        model.set_parameters(base)
        errors[name] = max_relative_error(grads[idx], numeric)
    return errors


def run(seed=0):
    """Both suites on the default small instances. Returns ``(passed, report)``."""
    report = {
        "gate": check_gate(*gate_instance(seed)),
        "classifier": check_classifier(*classifier_instance(seed)),
    }
    worst = max(max(errs.values()) for errs in report.values())
    return worst < TOLERANCE, report
