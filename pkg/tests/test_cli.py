import json

import numpy as np
import pytest

from albumseq.cli import main
from albumseq.ingest import load_corpus
from albumseq.nn import ModelConfig, OrderingModel, save_checkpoint
from albumseq.sequencer import fit_to_template, template_by_name


def run(argv):
    return main([str(a) for a in argv])


def test_synth_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        assert run(["synth", "--seed", 0, "--albums", 20, "--min-tracks", 3,
                    "--max-tracks", 6, "--dimension", 8, "--output", out]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert load_corpus(out1).n_albums == 20


def test_ingest_reports_and_reserializes(tmp_path, capsys):
    src = tmp_path / "c.csv"
    run(["synth", "--seed", 1, "--albums", 5, "--min-tracks", 3, "--max-tracks", 4,
         "--dimension", 4, "--output", src])
    capsys.readouterr()
    out = tmp_path / "copy.json"
    assert run(["ingest", "--input", src, "--output", out]) == 0
    printed = capsys.readouterr().out
    assert "5 albums" in printed
    assert load_corpus(out).n_albums == 5


def test_ingest_missing_file_fails(tmp_path, capsys):
    assert run(["ingest", "--input", tmp_path / "missing.csv"]) == 1
    assert "error:" in capsys.readouterr().err


def test_train_sequence_evaluate_round_trip(tmp_path, capsys):
    corpus = tmp_path / "c.csv"
    run(["synth", "--seed", 2, "--albums", 16, "--min-tracks", 3, "--max-tracks", 4,
         "--dimension", 6, "--output", corpus])
    ckpt = tmp_path / "model.ckpt"
    hist = tmp_path / "history.json"
    rc = run(["train", "--corpus", corpus, "--output", ckpt, "--epochs", 2,
              "--batch-size", 8, "--seed", 0, "--encoder-hidden", 8, "--d-model", 8,
              "--heads", 2, "--d-ff", 16, "--max-len", 5, "--history-out", hist])
    assert rc == 0 and ckpt.exists()
    assert len(json.loads(hist.read_text())["train_loss"]) == 2

    out = tmp_path / "orders.json"
    rc = run(["sequence", "--model", ckpt, "--corpus", corpus, "--method", "template",
              "--template", "rising", "--output", out])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["orders"][0]["template"] == "rising"
    printed = capsys.readouterr().out
    assert "fit cost" in printed

    report_dir = tmp_path / "report"
    rc = run(["evaluate", "--model", ckpt, "--corpus", corpus, "--k", "1,2",
              "--seed", 0, "--random-trials", 10, "--sigma-samples", 1,
              "--output-dir", report_dir])
    assert rc == 0
    report = json.loads((report_dir / "report.json").read_text())
    assert {(r["method"], r["k"]) for r in report["aggregates"]} == {
        ("direct", 1), ("direct", 2), ("template", 1), ("template", 2),
        ("random", 1), ("random", 2),
    }


def test_sequence_template_worked_example(tmp_path, capsys):
    # corpus with 1 feature; identity-like encoder makes essence = feature
    csv = "album_id,track_id,track_position,title,f0\na,b,0,B,0.1\na,c,1,C,0.5\na,t,2,A,0.9\n"
    # order the tracks so ids follow the worked example: essence 0.1, 0.5, 0.9
    corpus_path = tmp_path / "tiny.csv"
    corpus_path.write_text(csv)
    cfg = ModelConfig(feature_dim=1, encoder_hidden=1, z_dim=1, d_model=8, n_heads=2,
                      d_ff=8, max_len=4, dropout_rate=0.0)
    model = OrderingModel.initialize(cfg, seed=0)
    for name, value in (("enc.w1", 1.0), ("enc.b1", 0.0), ("enc.w2", 1.0), ("enc.b2", 0.0)):
        model.params[name].data[:] = value
    ckpt = tmp_path / "ident.ckpt"
    save_checkpoint(model, ckpt)

    out = tmp_path / "orders.json"
    rc = run(["sequence", "--model", ckpt, "--corpus", corpus_path, "--method", "template",
              "--template", "rising", "--output", out])
    assert rc == 0
    payload = json.loads(out.read_text())
    # essence (0.1, 0.5, 0.9) under a rising template keeps ascending order
    assert payload["orders"][0]["order"] == [0, 1, 2]
    assert payload["orders"][0]["track_ids"] == ["b", "c", "t"]
    assert abs(payload["orders"][0]["fit_cost"] - 1 / 3) < 1e-9


def test_evaluate_k_shape(tmp_path, capsys):
    corpus = tmp_path / "c.csv"
    run(["synth", "--seed", 3, "--albums", 6, "--min-tracks", 3, "--max-tracks", 3,
         "--dimension", 4, "--output", corpus])
    ckpt = tmp_path / "m.ckpt"
    run(["train", "--corpus", corpus, "--output", ckpt, "--epochs", 1, "--batch-size", 4,
         "--encoder-hidden", 4, "--d-model", 8, "--heads", 2, "--d-ff", 8, "--max-len", 4])
    report_dir = tmp_path / "r"
    rc = run(["evaluate", "--model", ckpt, "--corpus", corpus, "--k", "1,2,3",
              "--random-trials", 5, "--sigma-samples", 1, "--output-dir", report_dir])
    assert rc == 0
    rows = json.loads((report_dir / "report.json").read_text())["aggregates"]
    assert len(rows) == 9  # 3 k-values x 3 methods


def test_bad_checkpoint_path_exits_nonzero(tmp_path, capsys):
    corpus = tmp_path / "c.csv"
    run(["synth", "--seed", 4, "--albums", 4, "--min-tracks", 3, "--max-tracks", 3,
         "--dimension", 4, "--output", corpus])
    assert run(["sequence", "--model", tmp_path / "nope.ckpt", "--corpus", corpus]) == 1
    assert "error:" in capsys.readouterr().err
