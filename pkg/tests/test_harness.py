import json

import numpy as np
import pytest
import yaml

from advhate.cli import main
from advhate.corpus import load_corpus, write_corpus
from advhate.errors import ConfigInvalid, IncompatibleConfigs, MissingCurve
from advhate.harness import (CONDITIONS, ExperimentConfig, compare_models, derive_seed,
                             deterministic_view, emit_curves, prepare_data, run_experiment)
from advhate.synthetic import make_corpus

TINY = {"embed_dim": 8, "hidden": 8, "filters": 8, "seq_len": 16}


def tiny_cfg(rows=50, epochs=1, seed=3, **extra):
    d = {"seed": seed, "corpus": {"synthetic_rows": rows}, "train": {"epochs": epochs},
         "model": dict(TINY)}
    d.update(extra)
    return ExperimentConfig.from_dict(d)


@pytest.fixture(scope="module")
def tiny_report():
    return run_experiment(tiny_cfg(), write=False)


# config -----------------------------------------------------------------------

def test_unknown_key_rejected():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"trian": {}})
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"model": {"hiden": 3}})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.load(tmp_path / "nope.yaml")


def test_digest_ignores_output_dir():
    a = tiny_cfg(output_dir="x")
    b = tiny_cfg(output_dir="y")
    assert a.digest() == b.digest()
    assert a.digest() != tiny_cfg(seed=4).digest()


def test_derive_seed_is_stable_and_labeled():
    assert derive_seed(0, "split") == derive_seed(0, "split")
    assert derive_seed(0, "split") != derive_seed(0, "init")
    assert 0 <= derive_seed(2**40, "x") < 2**63


def test_yaml_round_trip(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(tiny_cfg().raw))
    assert ExperimentConfig.load(p).digest() == tiny_cfg().digest()


# pipeline ---------------------------------------------------------------------

def test_report_sections(tiny_report):
    r = tiny_report
    for key in ("config_digest", "seeds", "data", "vocab", "dictionary", "model", "training",
                "attack", "correction", "evaluations", "wall_clock_seconds"):
        assert key in r
    assert r["training"]["epochs"] == 1 and len(r["training"]["curve"]) == 1
    assert set(r["evaluations"]) == {"val", "test"}
    assert set(r["evaluations"]["test"]) == set(CONDITIONS)
    assert set(r["evaluations"]["val"]) == {"clean"}
    assert sum(r["data"]["sizes"].values()) == r["data"]["n_loaded"] == 50


def test_runs_are_deterministic(tiny_report):
    again = run_experiment(tiny_cfg(), write=False)
    assert deterministic_view(again) == deterministic_view(tiny_report)
    other = run_experiment(tiny_cfg(seed=4), write=False)
    assert deterministic_view(other) != deterministic_view(tiny_report)


def test_no_vocabulary_leakage():
    data = prepare_data(tiny_cfg(rows=120))
    train_tokens = {t for doc in data.docs["train", "clean"] for t in doc}
    assert set(data.vocab.token_to_id) - {"<pad>", "<unk>"} <= train_tokens


def test_attacks_only_touch_configured_splits():
    data = prepare_data(tiny_cfg(rows=120))
    assert set(data.attacked) == {"test"}
    assert data.conditions("train") == ["clean"]
    plain = prepare_data(tiny_cfg(rows=120, attack=None))
    assert plain.conditions("test") == ["clean"]


def test_three_condition_ordering_regression():
    # pinned fixture: attacks hurt and correction recovers part of the loss
    cfg = ExperimentConfig.from_dict({"seed": 3, "corpus": {"synthetic_rows": 600},
                                      "train": {"epochs": 6},
                                      "model": {"embed_dim": 16, "hidden": 16, "seq_len": 32}})
    acc = {k: v["accuracy"] for k, v in run_experiment(cfg, write=False)["evaluations"]["test"].items()}
    assert acc["clean"] >= acc["attacked+corrected"] >= acc["attacked"]
    assert acc["clean"] > acc["attacked"]


def test_outputs_written(tmp_path):
    cfg = tiny_cfg(output_dir=str(tmp_path))
    report = run_experiment(cfg)
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["config_digest"] == report["config_digest"]
    for name in ("curve_LSTM.csv", "model_LSTM.npz", "vocab.jsonl", "rejects.jsonl",
                 "attack_audit_test.jsonl"):
        assert (tmp_path / name).is_file()


# curves -------------------------------------------------------------------------

def test_emit_curves(tmp_path, tiny_report):
    path = emit_curves(tiny_report, tmp_path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    with pytest.raises(MissingCurve):
        emit_curves({"training": {}}, tmp_path)


# compare ------------------------------------------------------------------------

def test_compare_three_models():
    base = tiny_cfg(rows=80)
    cfgs = [base.with_overrides(model={"arch": a}) for a in ("LSTM", "GRU", "CNN1D")]
    table = compare_models(cfgs, write=False)
    rows = table["rows"]
    assert {r["model"] for r in rows} == {"LSTM", "GRU", "CNN1D"}
    accs = [r["accuracy"] for r in rows]
    assert accs == sorted(accs, reverse=True)
    for r in rows:
        assert r["metrics"]["clean"]["accuracy"] == r["accuracy"]
        assert set(r["metrics"]) == set(CONDITIONS)


def test_compare_single_and_incompatible():
    assert len(compare_models([tiny_cfg()], write=False)["rows"]) == 1
    with pytest.raises(IncompatibleConfigs):
        compare_models([tiny_cfg(), tiny_cfg(seed=9)], write=False)


# CLI ----------------------------------------------------------------------------

@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "exp.yaml"
    p.write_text(yaml.safe_dump({"seed": 1, "corpus": {"synthetic_rows": 60},
                                 "train": {"epochs": 1}, "model": TINY}))
    return p


def test_cli_run_and_eval(tmp_path, cfg_file, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg_file), "--out", str(out)]) == 0
    assert (out / "report.json").is_file()
    assert main(["eval", "--config", str(cfg_file), "--out", str(out)]) == 0
    ev = json.loads((out / "eval.json").read_text())
    rep = json.loads((out / "report.json").read_text())
    assert ev["evaluations"] == rep["evaluations"]
    # a different seed gives a different vocabulary, so the checkpoint is refused
    assert main(["eval", "--config", str(cfg_file), "--seed", "8", "--out", str(out),
                 "--checkpoint", str(out / "model_LSTM.npz")]) == 2


def test_cli_global_flags_before_verb(tmp_path, cfg_file):
    out = tmp_path / "t"
    assert main(["--config", str(cfg_file), "--out", str(out), "train"]) == 0
    assert (out / "model_LSTM.npz").is_file()


def test_cli_compare(tmp_path, cfg_file):
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(cfg_file), "--out", str(out),
                 "--archs", "LSTM", "CNN1D"]) == 0
    table = json.loads((out / "comparison.json").read_text())
    assert len(table["rows"]) == 2


def test_cli_config_errors(tmp_path, cfg_file):
    assert main(["run"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: {arch: Transformer}\n")
    assert main(["run", "--config", str(bad)]) == 2
    csv_path = tmp_path / "s.csv"
    write_corpus(make_corpus(20, seed=0), csv_path)
    assert main(["attack", "--input", str(csv_path), "--kinds", "NoSuchKind"]) == 2


def test_cli_data_errors(tmp_path):
    assert main(["ingest", "--input", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 3
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["ingest", "--input", str(empty), "--out", str(tmp_path)]) == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cli_numeric_failure(tmp_path):
    p = tmp_path / "hot.yaml"
    p.write_text(yaml.safe_dump({"seed": 1, "corpus": {"synthetic_rows": 60},
                                 "train": {"epochs": 2, "learning_rate": 1e308}, "model": TINY}))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 4


def test_cli_synth_ingest_attack_correct(tmp_path, capsys):
    csv_path = tmp_path / "s.csv"
    assert main(["synth", "--rows", "100", "--seed", "2", "--out", str(csv_path)]) == 0
    assert len(load_corpus(csv_path).tweets) == 100

    assert main(["ingest", "--input", str(csv_path), "--out", str(tmp_path / "ing")]) == 0
    sizes = [len(load_corpus(tmp_path / "ing" / f"{s}.csv").tweets) for s in ("train", "val", "test")]
    # stratification rounds per class, so the totals land near 60/20/20
    assert sum(sizes) == 100
    assert all(abs(a - b) <= 3 for a, b in zip(sizes, (60, 20, 20)))

    assert main(["attack", "--input", str(csv_path), "--kinds", "LeetSub",
                 "PunctInject+WhitespaceInject", "--prob", "1.0", "--out", str(tmp_path / "atk")]) == 0
    attacked = load_corpus(tmp_path / "atk" / "attacked.csv").tweets
    assert len(attacked) == 100
    assert (tmp_path / "atk" / "attack_audit.jsonl").is_file()

    txt = tmp_path / "in.txt"
    txt.write_text("i want to k ! l l you\nh3ll0 there\n")
    capsys.readouterr()
    assert main(["correct", "--input", str(txt)]) == 0
    assert capsys.readouterr().out.splitlines() == ["i want to kill you", "hello there"]


def test_synthetic_csv_round_trip(tmp_path):
    rows = make_corpus(40, seed=1)
    write_corpus(rows, tmp_path / "x.csv")
    back = load_corpus(tmp_path / "x.csv").tweets
    assert [(t.id, t.text, t.label) for t in back] == [(t.id, t.text, t.label) for t in rows]
    assert np.bincount([int(t.label) for t in rows], minlength=3).sum() == 40
