"""Cross-validation, metrics, ROC analysis, feature ablation and candidate ranking."""

import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    ClassifierConfig,
    pair_features,
    predict,
    sample_negatives,
    segment_mask,
    train_classifier,
)
from .features import linear_features
from .gate import GateConfig, build_graph, train_gate
from .ingest import IngestError
from .numerics import make_rng
from .similarity import DEFAULT_DELTA, disease_similarity, lncrna_functional_similarity

COMBINATIONS = {1: "linear", 2: "nonlinear", 3: "fused"}
METRIC_NAMES = ("acc", "sen", "spec", "pre", "f1", "mcc", "auc")

# Published averages, shown side by side when the input has the reference corpus shape.
REFERENCE_SCALE = {"p": 240, "q": 412, "r": 495, "ld_edges": 2697}
REFERENCE_METRICS = {"auc": 0.969, "acc": 0.939, "sen": 0.951, "spec": 0.927, "pre": 0.928, "mcc": 0.878}


@dataclass(frozen=True)
class PipelineConfig:
    delta: float = DEFAULT_DELTA
    gate: GateConfig = field(default_factory=GateConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    strict: bool = True
    threshold: float = 0.5
    paper_eq20: bool = False
    normalize_features: bool = False


# ---------------------------------------------------------------- folds

@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    positives: tuple  # per fold: tuple of (lncRNA, disease) index pairs
    negatives: tuple

    def test_pairs(self, fold):
        return list(self.positives[fold]), list(self.negatives[fold])


def _ld_values(ld):
    return getattr(ld, "values", ld)


def make_folds(ld, k, seed):
    """Shuffle known pairs, deal them round-robin into ``k`` folds and pair each
    fold with the same number of test negatives drawn from unknown pairs."""
    values = np.asarray(_ld_values(ld))
    positives = [tuple(x) for x in np.argwhere(values > 0).tolist()]
    unknown = [tuple(x) for x in np.argwhere(values == 0).tolist()]
    n = len(positives)
    if not 2 <= k <= n:
        raise ValueError(f"fold count must lie in [2, {n}], got {k}")
    if len(unknown) < n:
        raise ValueError(f"need {n} unknown pairs for test negatives, only {len(unknown)} exist")
    rng = make_rng(seed)
    pos_order = rng.permutation(n)
    neg_order = rng.permutation(len(unknown))[:n]
    pos_folds = [[] for _ in range(k)]
    neg_folds = [[] for _ in range(k)]
    for t, (pi, ni) in enumerate(zip(pos_order, neg_order)):
        pos_folds[t % k].append(positives[pi])
        neg_folds[t % k].append(unknown[ni])
    return FoldPlan(
        k,
        seed,
        tuple(tuple(sorted(f)) for f in pos_folds),
        tuple(tuple(sorted(f)) for f in neg_folds),
    )


# ---------------------------------------------------------------- metrics

@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_scores(cls, labels, scores, threshold=0.5):
        labels = np.asarray(labels).astype(bool)
        called = np.asarray(scores) >= threshold
        return cls(
            int(np.sum(called & labels)),
            int(np.sum(called & ~labels)),
            int(np.sum(~called & ~labels)),
            int(np.sum(~called & labels)),
        )


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def metrics(c, paper_eq20=False):
    """Acc, Sen (recall), Spec, Pre, F1 and Mcc from confusion counts.

    Metrics whose denominator vanishes are reported as 0 and listed under
    ``"undefined"``. ``paper_eq20`` swaps the Mcc denominator factor
    ``TP+FN`` for ``TP+TN``.
    """
    if c.total == 0:
        raise ValueError("confusion counts are all zero")
    tp, fp, tn, fn = c.tp, c.fp, c.tn, c.fn
    undefined = []
    out = {
        "acc": (tp + tn) / c.total,
        "sen": _ratio(tp, tp + fn, "sen", undefined),
        "spec": _ratio(tn, tn + fp, "spec", undefined),
        "pre": _ratio(tp, tp + fp, "pre", undefined),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn, "f1", undefined),
    }
    second = tp + tn if paper_eq20 else tp + fn
    den = (tp + fp) * second * (tn + fp) * (tn + fn)
    out["mcc"] = _ratio(tp * tn - fp * fn, math.sqrt(den), "mcc", undefined)
    out["undefined"] = undefined
    return out


def roc_auc(labels, scores):
    """ROC points ``(fpr, tpr, threshold)`` and trapezoidal AUC.

    Equal scores form a single threshold step, so ties contribute half a
    concordant pair. The first point is ``(0, 0, inf)``.
    """
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise ValueError("labels and scores differ in length")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(y)[last_of_group]
    fp = np.cumsum(~y)[last_of_group]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[last_of_group]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    curve = list(zip(fpr.tolist(), tpr.tolist(), thresholds.tolist()))
    return curve, auc


# ---------------------------------------------------------------- pipeline

@dataclass
class FittedPipeline:
    """Everything needed to score (lncRNA, disease) index pairs."""

    linear: np.ndarray
    latent: np.ndarray
    model: object
    mask: np.ndarray
    p: int
    gate_losses: list = field(default_factory=list)
    classifier_losses: list = field(default_factory=list)
    gate_model: object = None

    def score(self, pairs):
        if len(pairs) == 0:
            return np.zeros(0)
        x = pair_features(pairs, self.linear, self.latent, self.p, self.mask)
        return predict(self.model, x)


def _node_features(dataset, ds, ld_values, config, rng, hook=None):
    if hook:
        hook("similarity", ld_values)
    lfs = lncrna_functional_similarity(ds, ld_values)
    f = linear_features(lfs, ds, dataset.ml, dataset.md, config.normalize_features)
    if hook:
        hook("graph", ld_values)
    gate = train_gate(config.gate, f, build_graph(ld_values), rng=rng)
    return f, gate


def _fit_classifiers(f, gate, p, pos, neg, config, seed_stream, combinations, hook=None):
    pairs = list(pos) + list(neg)
    if hook:
        hook("classifier", pairs)
    y = np.r_[np.ones(len(pos)), np.zeros(len(neg))]
    full = pair_features(pairs, f, gate.latent, p)
    fitted = {}
    for combo in combinations:
        mask = segment_mask(f.shape[1], gate.latent.shape[1], combo != 2, combo != 1)
        # same stream for every combination keeps the comparison paired
        result = train_classifier(config.classifier, full * mask, y, rng=make_rng(*seed_stream))
        fitted[combo] = FittedPipeline(
            f, gate.latent, result.model, mask, p, gate.losses, result.losses, gate.model
        )
    return fitted


def fit_full(dataset, config=None, seed=0, ds=None, combinations=(3,)):
    """Train on every known association (for ranking unseen pairs)."""
    config = config or PipelineConfig()
    if ds is None:
        ds = disease_similarity(dataset.dag, dataset.registry, config.delta)
    ld = dataset.ld.values
    f, gate = _node_features(dataset, ds, ld, config, make_rng(seed, 0, 1))
    pos = [tuple(x) for x in np.argwhere(ld > 0).tolist()]
    free = int(np.sum(ld == 0))
    neg = sample_negatives(ld, min(len(pos), free), make_rng(seed, 0, 0))
    fitted = _fit_classifiers(f, gate, dataset.registry.p, pos, neg, config, (seed, 0, 2), combinations)
    return fitted if len(combinations) > 1 else fitted[combinations[0]]


@dataclass
class FoldResult:
    index: int
    pairs: list
    labels: np.ndarray
    scores: np.ndarray
    confusion: ConfusionCounts
    metrics: dict
    curve: list


def _fold_result(index, pos, neg, scores, config):
    labels = np.r_[np.ones(len(pos), dtype=bool), np.zeros(len(neg), dtype=bool)]
    confusion = ConfusionCounts.from_scores(labels, scores, config.threshold)
    record = metrics(confusion, config.paper_eq20)
    curve, record["auc"] = roc_auc(labels, scores)
    return FoldResult(index, list(pos) + list(neg), labels, scores, confusion, record, curve)


def run_fold(plan, fold, dataset, config=None, ds=None, combinations=(3,), hook=None):
    """Train on everything outside ``fold`` and score its held-out pairs.

    In strict mode the held-out positives are removed from LD before the
    functional similarity, the attention graph and the classifier see it.
    ``hook(stage, payload)`` is called with the LD matrix handed to the
    similarity and graph stages and with the classifier's training pairs.
    Returns ``{combination: FoldResult}``.
    """
    config = config or PipelineConfig()
    if ds is None:
        ds = disease_similarity(dataset.dag, dataset.registry, config.delta)
    test_pos, test_neg = plan.test_pairs(fold)
    full = dataset.ld.values
    train_ld = full.copy()
    for i, j in test_pos:
        train_ld[i, j] = 0.0
    feature_ld = train_ld if config.strict else full
    f, gate = _node_features(dataset, ds, feature_ld, config, make_rng(plan.seed, fold, 1), hook)
    pos = [tuple(x) for x in np.argwhere(train_ld > 0).tolist()]
    free = int(np.sum(full == 0)) - len(test_neg)
    neg = sample_negatives(full, min(len(pos), free), make_rng(plan.seed, fold, 0), exclude=test_neg)
    fitted = _fit_classifiers(
        f, gate, dataset.registry.p, pos, neg, config, (plan.seed, fold, 2), combinations, hook
    )
    out = {}
    for combo, pipe in fitted.items():
        scores = pipe.score(test_pos + test_neg)
        out[combo] = _fold_result(fold, test_pos, test_neg, scores, config)
    return out


@dataclass
class EvalReport:
    label: str
    k: int
    seed: int
    folds: list
    average: dict
    pooled_curve: list
    pooled_auc: float

    def to_dict(self):
        return {
            "label": self.label,
            "k": self.k,
            "seed": self.seed,
            "folds": [
                {
                    "fold": r.index,
                    "n_test": len(r.labels),
                    "confusion": {"tp": r.confusion.tp, "fp": r.confusion.fp,
                                  "tn": r.confusion.tn, "fn": r.confusion.fn},
                    **{name: r.metrics[name] for name in METRIC_NAMES},
                    "undefined": r.metrics["undefined"],
                }
                for r in self.folds
            ],
            "average": self.average,
            "pooled_auc": self.pooled_auc,
        }


def build_report(label, plan, fold_results):
    average = {
        name: float(np.mean([r.metrics[name] for r in fold_results])) for name in METRIC_NAMES
    }
    labels = np.concatenate([r.labels for r in fold_results])
    scores = np.concatenate([r.scores for r in fold_results])
    curve, auc = roc_auc(labels, scores)
    return EvalReport(label, plan.k, plan.seed, fold_results, average, curve, auc)


def cross_validate(dataset, config=None, k=5, seed=0, combinations=(3,), hook=None):
    """k-fold CV (``k`` = number of known pairs gives LOOCV).

    Returns ``{combination: EvalReport}``; all combinations share one fold plan.
    """
    config = config or PipelineConfig()
    ds = disease_similarity(dataset.dag, dataset.registry, config.delta)
    plan = make_folds(dataset.ld, k, seed)
    per_combo = {c: [] for c in combinations}
    for fold in range(plan.k):
        for combo, result in run_fold(plan, fold, dataset, config, ds, combinations, hook).items():
            per_combo[combo].append(result)
    return {c: build_report(f"combination {c} ({COMBINATIONS[c]})", plan, per_combo[c])
            for c in combinations}


def ablation(dataset, config=None, k=5, seed=0):
    return cross_validate(dataset, config, k, seed, combinations=(1, 2, 3))


def at_reference_scale(dataset):
    reg = dataset.registry
    return (reg.p, reg.q, reg.r, dataset.ld.n_edges) == tuple(REFERENCE_SCALE.values())


# ---------------------------------------------------------------- ranking

@dataclass(frozen=True)
class RankedPredictions:
    disease: str
    rows: tuple  # (lncRNA ID, score, rank)


def rank_candidates(pipeline, dataset, disease, top=None):
    """Score every lncRNA not yet linked to ``disease`` and sort descending.

    Ties keep registry order.
    """
    reg = dataset.registry
    if not reg.has("diseases", disease):
        raise IngestError(f"unknown disease {disease!r}")
    j = reg.index("diseases", disease)
    candidates = np.flatnonzero(dataset.ld.values[:, j] == 0)
    scores = pipeline.score([(int(i), j) for i in candidates])
    order = np.argsort(-scores, kind="stable")
    if top is not None:
        order = order[:top]
    rows = tuple(
        (reg.lncrnas[candidates[o]], float(scores[o]), rank)
        for rank, o in enumerate(order, start=1)
    )
    return RankedPredictions(disease, rows)
