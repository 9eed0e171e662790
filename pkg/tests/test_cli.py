import csv
import json

import numpy as np
import pytest

from hgatelda import cli, gate
from hgatelda.synthetic import FILES, fixture_dir, planted_block, write_tables

FAST = ["--gate-hidden", "8,4", "--heads", "2", "--gate-epochs", "5", "--clf-hidden", "8", "--clf-epochs", "5"]


@pytest.fixture
def planted_dir():
    return str(fixture_dir("planted"))


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_pairs(path):
    with open(path, encoding="utf-8") as fh:
        return {(a, b): float(v) for a, b, v in csv.reader(fh, delimiter="\t")}


def test_similarity_siblings(sibling_dir, tmp_path):
    out = tmp_path / "out"
    assert run("similarity", "--data", sibling_dir, "--out", out) == 0
    ds = read_pairs(out / "ds.tsv")
    lfs = read_pairs(out / "lfs.tsv")
    assert len(ds) == 9 and len(lfs) == 4
    assert ds["d2", "d3"] == pytest.approx(1 / 3, abs=1e-12)
    assert lfs["l1", "l2"] == pytest.approx(1 / 3, abs=1e-12)
    assert ds["d1", "d1"] == 1.0
    assert (out / "features.tsv").is_file()
    assert "delta = 0.5" in (out / "config.txt").read_text()


def test_missing_file_exits_2(sibling_dir, tmp_path, capsys):
    (sibling_dir / "ld.tsv").unlink()
    assert run("similarity", "--data", sibling_dir, "--out", tmp_path / "o") == 2
    assert "ld.tsv" in capsys.readouterr().err


def test_malformed_row_exits_2(sibling_dir, tmp_path, capsys):
    with open(sibling_dir / "ld.tsv", "a", encoding="utf-8") as fh:
        fh.write("l1\tnope\n")
    assert run("similarity", "--data", sibling_dir, "--out", tmp_path / "o") == 2
    assert "nope" in capsys.readouterr().err


def test_header_flag(sibling_dir, tmp_path):
    for name in FILES.values():
        path = sibling_dir / name
        path.write_text("HEADER\tROW\n" + path.read_text(encoding="utf-8"), encoding="utf-8")
    assert run("similarity", "--data", sibling_dir, "--header", "--out", tmp_path / "o") == 0
    assert read_pairs(tmp_path / "o" / "ds.tsv")["d2", "d3"] == pytest.approx(1 / 3)


def test_cv_is_byte_identical(planted_dir, tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert run("cv", "--data", planted_dir, "--k", 5, "--seed", 7, "--out", out, *FAST) == 0
    for name in ["metrics.json", "roc_pooled.csv"] + [f"roc_fold{i}.csv" for i in range(5)]:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    doc = json.loads((outs[0] / "metrics.json").read_text())
    assert len(doc["folds"]) == 5
    assert set(doc["average"]) >= {"auc", "acc", "mcc"}
    assert "reference" not in doc


def test_cv_default_settings_find_planted_signal(planted_dir, tmp_path):
    out = tmp_path / "full"
    assert run("cv", "--data", planted_dir, "--k", 5, "--seed", 7, "--out", out) == 0
    assert json.loads((out / "metrics.json").read_text())["average"]["auc"] >= 0.85


def test_cv_ablation_reports(planted_dir, tmp_path):
    out = tmp_path / "abl"
    assert run("cv", "--data", planted_dir, "--k", 3, "--ablation", "--out", out, *FAST) == 0
    table = json.loads((out / "ablation.json").read_text())
    assert list(table) == ["combination 1", "combination 2", "combination 3"]
    for c in (1, 2, 3):
        assert (out / f"combination_{c}" / "metrics.json").is_file()


def test_cv_rejects_bad_k(planted_dir, tmp_path):
    assert run("cv", "--data", planted_dir, "--k", "many", "--out", tmp_path / "o", *FAST) == 2
    assert run("cv", "--data", planted_dir, "--k", 1, "--out", tmp_path / "o", *FAST) == 2


def test_rank_top(planted_dir, tmp_path):
    out = tmp_path / "r"
    assert run("rank", "--data", planted_dir, "--disease", "dis001,dis002", "--top", 15, "--out", out, *FAST) == 0
    with open(out / "rankings.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["disease"] for r in rows] == ["dis001"] * 15 + ["dis002"] * 15
    assert [int(r["rank"]) for r in rows[:15]] == list(range(1, 16))
    assert (out / "gate.json").is_file() and (out / "classifier.json").is_file()
    first = (out / "rankings.csv").read_bytes()
    assert run("rank", "--data", planted_dir, "--disease", "dis001,dis002", "--top", 15, "--out", out, *FAST) == 0
    assert (out / "rankings.csv").read_bytes() == first


def test_rank_fully_associated_disease(tmp_path):
    tables = planted_block()
    tables["ld"] = sorted(set(tables["ld"]) | {(lnc, "dis001") for lnc in tables["lncrnas"]})
    write_tables(tables, tmp_path / "data")
    out = tmp_path / "r"
    assert run("rank", "--data", tmp_path / "data", "--disease", "dis001", "--out", out, *FAST) == 0
    assert (out / "rankings.csv").read_text() == "disease,rank,lncrna,score\n"


def test_rank_unknown_disease(planted_dir, tmp_path, capsys):
    assert run("rank", "--data", planted_dir, "--disease", "dis999", "--out", tmp_path / "o") == 2
    assert "dis999" in capsys.readouterr().err
    assert run("rank", "--data", planted_dir, "--out", tmp_path / "o") == 2


def test_gradcheck_passes(tmp_path):
    assert run("gradcheck", "--out", tmp_path) == 0
    assert (tmp_path / "gradcheck.txt").read_text().splitlines()[-1].startswith("PASS")


def test_gradcheck_catches_broken_backward(tmp_path, monkeypatch):
    real = gate.backward

    def broken(*args, **kwargs):
        loss, grads = real(*args, **kwargs)
        grads[0] = grads[0] * 1.01
        return loss, grads

    monkeypatch.setattr(gate, "backward", broken)
    assert run("gradcheck", "--out", tmp_path) == 1
    assert "FAIL" in (tmp_path / "gradcheck.txt").read_text()


def test_config_file_merging(sibling_dir, tmp_path):
    cfg = tmp_path / "settings.cfg"
    cfg.write_text(f"# demo\ndata = {sibling_dir}\ndelta = 0.25\nout = {tmp_path / 'from_file'}\n")
    assert run("similarity", "--config", cfg, "--out", tmp_path / "flag") == 0
    text = (tmp_path / "flag" / "config.txt").read_text()
    assert "delta = 0.25" in text
    assert not (tmp_path / "from_file").exists()
    cfg.write_text("bogus = 1\n")
    assert run("similarity", "--config", cfg) == 2
    cfg.write_text("delta = abc\n")
    assert run("similarity", "--config", cfg) == 2


def test_divergence_exits_3(planted_dir, tmp_path, capsys):
    with np.errstate(all="ignore"):
        code = run("cv", "--data", planted_dir, "--k", 2, "--out", tmp_path / "o",
                   "--gate-hidden", "4", "--heads", "1", "--gate-epochs", "3", "--gate-lr", "1e300",
                   "--clf-hidden", "4", "--clf-epochs", "2")
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_shipped_fixture_matches_generator(tmp_path):
    write_tables(planted_block(seed=7), tmp_path / "fresh")
    shipped = fixture_dir("planted")
    for name in FILES.values():
        assert (tmp_path / "fresh" / name).read_bytes() == (shipped / name).read_bytes(), name


def test_fixture_density():
    ld = np.loadtxt(fixture_dir("planted") / "ld.tsv", dtype=str)
    assert 0.3 < len(ld) / (40 * 60) < 0.6
