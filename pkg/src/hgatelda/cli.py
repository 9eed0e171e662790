"""Command-line front end: ``hgatelda {similarity,cv,rank,gradcheck}``.

Settings are resolved as built-in defaults, then a flat ``key = value``
config file (``--config``), then command-line flags. The resolved settings
are written to ``OUT/config.txt`` next to the outputs.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from . import gradcheck
from .classifier import ClassifierConfig, save_classifier
from .evaluation import (
    METRIC_NAMES,
    REFERENCE_METRICS,
    PipelineConfig,
    at_reference_scale,
    cross_validate,
    fit_full,
    rank_candidates,
)
from .features import linear_features, write_features_tsv
from .gate import DivergenceError, GateConfig, save_gate
from .ingest import load_dataset
from .numerics import EmptyNeighborhoodError, NonFiniteError
from .similarity import disease_similarity, lncrna_functional_similarity, write_similarity_tsv
from .synthetic import FILES

EXIT_INPUT = 2
EXIT_NUMERIC = 3

DATA_KEYS = tuple(FILES)

DEFAULTS = {
    "data": "",
    **{key: "" for key in DATA_KEYS},
    "header": False,
    "out": "results",
    "seed": 0,
    "delta": 0.5,
    "k": "5",
    "strict": True,
    "ablation": False,
    "threshold": 0.5,
    "paper_eq20": False,
    "normalize_features": False,
    "gate_hidden": "128,64",
    "gate_heads": 4,
    "gate_epochs": 300,
    "gate_lr": 0.001,
    "slope": 0.2,
    "clf_hidden": "128,64,32",
    "clf_epochs": 100,
    "clf_lr": 0.001,
    "clf_batch": 0,
    "dropout": 0.2,
    "paper_literal_init": False,
    "disease": "",
    "top": 0,
}


class ConfigError(ValueError):
    pass


def _to_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _coerce(key, value):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            return _to_bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return str(value)


def read_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    settings = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
        settings[key] = _coerce(key, value)
    return settings


def resolve_settings(args):
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = _coerce(key, value)
    if settings["data"]:
        base = Path(settings["data"])
        for key in DATA_KEYS:
            if not settings[key]:
                settings[key] = str(base / FILES[key])
    return settings


def write_settings(settings, out):
    lines = [f"{key} = {str(value).lower() if isinstance(value, bool) else value}"
             for key, value in settings.items()]
    (out / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ints(text):
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def pipeline_config(s):
    gate = GateConfig(_ints(s["gate_hidden"]), s["gate_heads"], s["gate_epochs"], s["gate_lr"], s["slope"], s["seed"])
    clf = ClassifierConfig(
        _ints(s["clf_hidden"]), s["dropout"], s["clf_epochs"], s["clf_lr"], s["slope"],
        s["clf_batch"], s["paper_literal_init"], s["seed"],
    )
    return PipelineConfig(s["delta"], gate, clf, s["strict"], s["threshold"], s["paper_eq20"], s["normalize_features"])


def load_inputs(s):
    missing = [key for key in DATA_KEYS if not s[key]]
    if missing:
        raise ConfigError("missing input paths: " + ", ".join(missing) + " (set --data or each path)")
    for key in DATA_KEYS:
        if not Path(s[key]).is_file():
            raise ConfigError(f"input file not found: {s[key]}")
    return load_dataset(*(s[key] for key in DATA_KEYS), header=s["header"])


def _prepare_out(s):
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_settings(s, out)
    return out


def cmd_similarity(s):
    dataset = load_inputs(s)
    out = _prepare_out(s)
    reg = dataset.registry
    ds = disease_similarity(dataset.dag, reg, s["delta"])
    lfs = lncrna_functional_similarity(ds, dataset.ld)
    write_similarity_tsv(out / "ds.tsv", ds, reg.diseases)
    write_similarity_tsv(out / "lfs.tsv", lfs, reg.lncrnas)
    f = linear_features(lfs, ds, dataset.ml, dataset.md, s["normalize_features"])
    write_features_tsv(out / "features.tsv", f, reg.lncrnas + reg.diseases)
    print(f"wrote DS ({reg.q}x{reg.q}), LFS ({reg.p}x{reg.p}) and linear features to {out}")
    return 0


def _write_roc(path, curve):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in curve:
            writer.writerow([repr(fpr), repr(tpr), repr(thr)])


def _write_report(directory, report, extra=None):
    directory.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    (directory / "metrics.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    for fold in report.folds:
        _write_roc(directory / f"roc_fold{fold.index}.csv", fold.curve)
    _write_roc(directory / "roc_pooled.csv", report.pooled_curve)


def _summary(report):
    head = "fold    " + "  ".join(f"{name:>6}" for name in METRIC_NAMES)
    rows = [head]
    for fold in report.folds:
        rows.append(f"{fold.index:<8}" + "  ".join(f"{fold.metrics[n]:6.3f}" for n in METRIC_NAMES))
    rows.append("average " + "  ".join(f"{report.average[n]:6.3f}" for n in METRIC_NAMES))
    rows.append(f"pooled AUC {report.pooled_auc:.4f}")
    return "\n".join(rows)


def _parse_k(s, dataset):
    text = str(s["k"]).strip().lower()
    if text in ("loo", "loocv"):
        return dataset.ld.n_edges
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"--k must be an integer or 'loo', got {s['k']!r}") from exc


def cmd_cv(s):
    dataset = load_inputs(s)
    config = pipeline_config(s)
    k = _parse_k(s, dataset)
    out = _prepare_out(s)
    combos = (1, 2, 3) if s["ablation"] else (3,)
    reports = cross_validate(dataset, config, k, s["seed"], combos)
    extra = None
    if at_reference_scale(dataset):
        extra = {"reference": REFERENCE_METRICS}
    if s["ablation"]:
        for combo, report in reports.items():
            _write_report(out / f"combination_{combo}", report, extra if combo == 3 else None)
        table = {f"combination {c}": r.average for c, r in reports.items()}
        (out / "ablation.json").write_text(json.dumps(table, indent=2) + "\n", encoding="utf-8")
        for report in reports.values():
            print(report.label)
            print(_summary(report))
    else:
        report = reports[3]
        _write_report(out, report, extra)
        print(_summary(report))
    if extra:
        ours = reports[3].average
        print("\nmetric    this run   reported (informational)")
        for name, ref in REFERENCE_METRICS.items():
            print(f"{name:<8}  {ours[name]:8.3f}   {ref:8.3f}")
    return 0


def cmd_rank(s):
    dataset = load_inputs(s)
    diseases = [d.strip() for d in s["disease"].split(",") if d.strip()]
    if not diseases:
        raise ConfigError("rank needs --disease ID (comma-separate several)")
    for d in diseases:
        if not dataset.registry.has("diseases", d):
            raise ConfigError(f"unknown disease {d!r}")
    config = pipeline_config(s)
    out = _prepare_out(s)
    pipeline = fit_full(dataset, config, s["seed"])
    save_gate(out / "gate.json", pipeline.gate_model)
    save_classifier(out / "classifier.json", pipeline.model)
    top = s["top"] or None
    with open(out / "rankings.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["disease", "rank", "lncrna", "score"])
        for d in diseases:
            ranked = rank_candidates(pipeline, dataset, d, top)
            for lnc, score, rank in ranked.rows:
                writer.writerow([d, rank, lnc, repr(score)])
            print(f"{d}: {len(ranked.rows)} candidates")
    return 0


def cmd_gradcheck(s):
    out = _prepare_out(s)
    passed, report = gradcheck.run(s["seed"])
    lines = []
    for part, errors in report.items():
        for name, err in errors.items():
            lines.append(f"{part:<10} {name:<14} {err:.3e}")
    verdict = "PASS" if passed else "FAIL"
    lines.append(f"{verdict} (max relative error tolerance {gradcheck.TOLERANCE:g})")
    text = "\n".join(lines) + "\n"
    (out / "gradcheck.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0 if passed else 1


COMMANDS = {
    "similarity": cmd_similarity,
    "cv": cmd_cv,
    "rank": cmd_rank,
    "gradcheck": cmd_gradcheck,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--out", help="output directory (default: results)")
    common.add_argument("--seed", type=int)
    common.add_argument("--data", help="directory holding the standard input file names")
    for key in DATA_KEYS:
        common.add_argument(f"--{key}", help=f"path of the {key} file")
    common.add_argument("--header", action="store_const", const=True, help="skip the first line of every input file")
    common.add_argument("--delta", type=float, help="semantic contribution decay (default 0.5)")
    common.add_argument("--normalize-features", dest="normalize_features", action="store_const", const=True)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--gate-hidden", dest="gate_hidden", help="encoder widths, e.g. 128,64")
    model.add_argument("--heads", dest="gate_heads", type=int)
    model.add_argument("--gate-epochs", dest="gate_epochs", type=int)
    model.add_argument("--gate-lr", dest="gate_lr", type=float)
    model.add_argument("--slope", type=float, help="leaky-relu negative slope")
    model.add_argument("--clf-hidden", dest="clf_hidden", help="classifier widths, e.g. 128,64,32")
    model.add_argument("--clf-epochs", dest="clf_epochs", type=int)
    model.add_argument("--clf-lr", dest="clf_lr", type=float)
    model.add_argument("--clf-batch", dest="clf_batch", type=int, help="minibatch size, 0 = full batch")
    model.add_argument("--dropout", type=float)
    model.add_argument("--paper-literal-init", dest="paper_literal_init", action="store_const", const=True,
                       help="initialise classifier weights and biases to zero")

    parser = argparse.ArgumentParser(prog="hgatelda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("similarity", parents=[common], help="write DS, LFS and linear features")

    cv = sub.add_parser("cv", parents=[common, model], help="cross-validate the pipeline")
    cv.add_argument("--k", help="fold count, or 'loo' for leave-one-out")
    strict = cv.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_const", const=True,
                        help="rebuild LFS and the attention graph from training folds only (default)")
    strict.add_argument("--loose", dest="strict", action="store_const", const=False,
                        help="use all known associations for LFS and the attention graph")
    cv.add_argument("--ablation", action="store_const", const=True,
                    help="also run linear-only and nonlinear-only feature combinations")
    cv.add_argument("--paper-eq20", dest="paper_eq20", action="store_const", const=True,
                    help="use the TP+TN factor in the Mcc denominator")
    cv.add_argument("--threshold", type=float)

    rank = sub.add_parser("rank", parents=[common, model], help="rank unlinked lncRNAs for diseases")
    rank.add_argument("--disease", help="disease ID (comma-separate several)")
    rank.add_argument("--top", type=int, help="keep only the N best candidates per disease")

    sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient verification")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except (DivergenceError, NonFiniteError, EmptyNeighborhoodError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError) as exc:
        # ConfigError, IngestError and bad hyperparameters all land here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
