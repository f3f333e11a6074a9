import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

import oracles
from conftest import CONFIGS
from wdrdg.cli import main


def write_csv(path, rows, d):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["domain", "label"] + [f"f{j}" for j in range(d)])
        w.writerows(rows)
    return str(path)


@pytest.fixture
def toy(tmp_path):
    """Two domains, two well-separated classes in the plane, three samples per cell."""
    r = np.random.default_rng(0)
    rows = []
    for dom, off in (("a", 0.0), ("b", 0.3)):
        for k, mu in ((1, [0.0, 0.0]), (2, [5.0, 5.0])):
            for x in r.normal(size=(3, 2)) * 0.3 + mu + off:
                rows.append([dom, k, *x])
    return write_csv(tmp_path / "toy.csv", rows, 2)


def read_rows(path):
    return list(csv.reader(open(path)))


def test_barycenter_provided_init_single_domain(tmp_path):
    pts = {1: [[0.0, 1.0], [2.0, 0.5]], 2: [[5.0, 5.0], [6.0, 4.0]]}
    rows = [["a", k, *p] for k, ps in pts.items() for p in ps]
    src = write_csv(tmp_path / "a.csv", rows, 2)
    out = tmp_path / "bary.json"
    assert main(["barycenter", src, "--init", "provided", "--init-points", src, "--out", str(out)]) == 0
    doc = json.load(open(out))
    assert doc["format"] == "wdrdg-barycenters/1"
    for c in doc["classes"]:
        assert c["objective"] == 0.0
        assert np.array_equal(np.array(c["points"]), np.array(pts[c["class"]]))


def test_barycenter_same_seed_same_bytes(toy, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["barycenter", toy, "--b", "2", "--seed", "5", "--out", str(a)]) == 0
    assert main(["barycenter", toy, "--b", "2", "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_input_exit2(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    assert main(["barycenter", str(missing), "--out", str(tmp_path / "o.json")]) == 2
    assert "nowhere.csv" in capsys.readouterr().err


def test_unknown_flag_exit2(toy, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", toy, "--delta", "0", "--out", str(tmp_path / "m.json"), "--bogus"])
    assert exc.value.code == 2


def test_train_predict_roundtrip(toy, tmp_path):
    model = tmp_path / "m.json"
    assert main(["train", toy, "--delta", "0", "--b", "2", "--out", str(model)]) == 0
    doc = json.load(open(model))
    lfds = np.array(doc["lfds"])
    assert lfds.shape[0] == 2
    assert np.allclose(lfds.sum(1), 1.0, atol=1e-9)

    support = np.array(doc["support_points"])
    targets = write_csv(tmp_path / "t.csv", [["t", "", *p] for p in support], 2)
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--targets", targets, "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0][:2] == ["sample_index", "label"]
    for row in rows[1:]:
        assert abs(sum(float(v) for v in row[2:]) - 1.0) <= 1e-9
    atom_labels = [int(np.argmax(col)) + 1 for col in lfds.T]
    assert [int(r[1]) for r in rows[1:]] == atom_labels

    out_na = tmp_path / "pn.csv"
    assert main(["predict", "--model", str(model), "--targets", targets, "--nonadaptive", "--out", str(out_na)]) == 0
    assert [r[1] for r in read_rows(out_na)[1:]] == [r[1] for r in rows[1:]]


def test_oversized_delta_exit3(tmp_path):
    # one domain with provided init: the barycenters are the class samples themselves,
    # so the pooled support and its largest transport cost are known in advance
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [1.0, 3.0]])
    rows = [["a", 1, *pts[0]], ["a", 1, *pts[1]], ["a", 2, *pts[2]], ["a", 2, *pts[3]]]
    src = write_csv(tmp_path / "a.csv", rows, 2)
    C = oracles.sqdist(pts, pts)
    max_cost = oracles.ot_cost(np.array([0.5, 0.5, 0, 0]), np.array([0, 0, 0.5, 0.5]), C, maximize=True)
    base = ["train", src, "--init", "provided", "--init-points", src]
    ok = main(base + ["--delta", repr(float(np.sqrt(max_cost) - 1e-3)), "--out", str(tmp_path / "m.json")])
    assert ok == 0
    assert main(base + ["--delta", repr(float(np.sqrt(max_cost) + 1e-3)), "--out", str(tmp_path / "n.json")]) == 3


def test_predict_dimension_mismatch_exit2(toy, tmp_path):
    model = tmp_path / "m.json"
    assert main(["train", toy, "--delta", "0", "--b", "2", "--out", str(model)]) == 0
    bad = write_csv(tmp_path / "t.csv", [["t", "", 1.0, 2.0, 3.0]], 3)
    assert main(["predict", "--model", str(model), "--targets", bad, "--out", str(tmp_path / "p.csv")]) == 2
    assert main(["predict", "--model", str(bad), "--targets", bad, "--out", str(tmp_path / "p.csv")]) == 2


def test_empty_class_cell_exit2(tmp_path):
    src = write_csv(tmp_path / "a.csv", [["a", 1, 0.0], ["a", 2, 1.0], ["b", 1, 0.5]], 1)
    assert main(["train", src, "--delta", "0", "--out", str(tmp_path / "m.json")]) == 2


def tiny_config(tmp_path, trials=5):
    raw = yaml.safe_load(open(CONFIGS / "quickstart.yaml"))
    raw.update(trials=trials, train_sizes=[2], val_per_class=3, test_per_class=4)
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def test_experiment_rows_per_group(tmp_path):
    out = tmp_path / "run"
    assert main(["experiment", "--config", tiny_config(tmp_path), "--out", str(out)]) == 0
    rows = read_rows(out / "results.csv")[1:]
    groups = {}
    for t, m, s, trial, acc in rows:
        groups.setdefault((t, m, s), []).append(int(trial))
        assert 0.0 <= float(acc) <= 1.0
    assert len(groups) == 3 * 3
    assert all(sorted(v) == list(range(5)) for v in groups.values())
    assert (out / "aggregate.csv").exists() and (out / "overlap.csv").exists()


def test_experiment_jobs_same_bytes(tmp_path, monkeypatch):
    cfg = tiny_config(tmp_path, trials=2)
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "p"), "--jobs", "2"]) == 0
    monkeypatch.setenv("WDRDG_JOBS", "2")
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "e")]) == 0
    for name in ("results.csv", "aggregate.csv", "overlap.csv"):
        ref = (tmp_path / "s" / name).read_bytes()
        assert (tmp_path / "p" / name).read_bytes() == ref
        assert (tmp_path / "e" / name).read_bytes() == ref
    monkeypatch.setenv("WDRDG_JOBS", "lots")
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_experiment_bad_config_exit2(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("trials: 0\ndata: {synthetic: {n_domains: 2, class_means: [[0, 0]]}}\n")
    assert main(["experiment", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "trials" in capsys.readouterr().err


def test_datagen_and_diagnose(tmp_path):
    out = tmp_path / "data"
    assert main(["datagen", "--config", str(CONFIGS / "quickstart.yaml"), "--per-class", "4", "--out", str(out)]) == 0
    files = sorted(str(p) for p in out.glob("*.csv"))
    assert len(files) == 3
    assert len(read_rows(files[0])) == 1 + 3 * 4
    report = tmp_path / "gap.json"
    assert (
        main(
            ["diagnose", *files[:2], "--b", "2", "--targets", files[2], "--out", str(tmp_path / "o.csv"), "--report", str(report)]
        )
        == 0
    )
    assert len(read_rows(tmp_path / "o.csv")) == 1 + 3
    assert json.load(open(report))["domain_gap_w1"] > 0
    assert main(["diagnose", "--out", str(tmp_path / "o.csv")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wdrdg", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "experiment" in proc.stdout
