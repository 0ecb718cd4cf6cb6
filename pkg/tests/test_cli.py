"""Command-line interface: subcommand behavior and an end-to-end run."""

import json

import numpy as np
import pytest

from hexastyle.cli import main

RAW = "Ecce Lichan trepidum latitantem rupe cauata\n"
PHONETIC = "ekke Likan trepidum latitantem rupe kawata"


def _run(capsys, argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        import sys

        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_subcommand_is_usage_error(capsys):
    code, _, err = _run(capsys, [])
    assert code == 2
    assert "usage" in err


def test_transcribe(capsys, monkeypatch):
    code, out, _ = _run(capsys, ["transcribe"], stdin=RAW, monkeypatch=monkeypatch)
    assert code == 0
    assert out.strip() == PHONETIC


def test_scan(capsys, monkeypatch):
    code, out, _ = _run(capsys, ["scan"], stdin=RAW, monkeypatch=monkeypatch)
    assert code == 0
    assert out.split() == (
        "ek+A+L+S ke+WC li+S kan+A+L+SC tre+S pi dum+A+L+SC la ti tan+A+L+S "
        "tem+L+DI ru+A+L+S pe+WC ka wa+A+L+S ta+L EOL"
    ).split()


def test_error_exits_with_one_line_diagnostic(capsys, monkeypatch):
    code, _, err = _run(capsys, ["scan"], stdin="arma arma arma\n",
                        monkeypatch=monkeypatch)
    assert code == 1
    assert err.strip().splitlines()[-1].startswith("hexastyle: error:")


def test_unknown_config_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nbogus_key = 1\n")
    code, _, err = _run(capsys, ["build-lexicon", "--manifest", "x",
                                 "--config", str(cfg)])
    assert code == 1
    assert "bogus_key" in err


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, toy_manifest):
    """Run encode once; later CLI tests reuse its artifacts."""
    out = tmp_path_factory.mktemp("cli_out")
    cfg = out / "run.cfg"
    cfg.write_text(
        "[run]\n"
        "train_ratio = 0.5\nval_ratio = 0.25\ntest_ratio = 0.25\n"
        "train_stride = 32\neval_stride = 64\n"
        "epochs = 2\nbatch_size = 8\nmodel = lstm\nseed = 1\n"
    )
    code = main(["encode", "--manifest", str(toy_manifest),
                 "--config", str(cfg), "--output", str(out)])
    assert code == 0
    return out, cfg, toy_manifest


def test_encode_outputs(workdir):
    out, _, _ = workdir
    assert (out / "lexicon.tsv").exists()
    assert (out / "splits.tsv").exists()
    for split in ("train", "val", "test"):
        assert (out / (split + ".bin")).exists()


def test_tokenize_and_build_lexicon(capsys, tmp_path, toy_manifest):
    code, _, _ = _run(capsys, ["tokenize", "--manifest", str(toy_manifest),
                               "--output", str(tmp_path)])
    assert code == 0
    stats = json.loads((tmp_path / "tokenize_stats.json").read_text())
    assert stats["unscannable"] == 0
    tokens_files = list(tmp_path.glob("*.tokens"))
    assert len(tokens_files) == 3
    code, _, _ = _run(capsys, ["build-lexicon", "--manifest", str(toy_manifest),
                               "--output", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "lexicon.tsv").exists()


def test_train_evaluate_attend_analyze_end_to_end(capsys, workdir):
    out, cfg, manifest = workdir
    code, _, _ = _run(capsys, ["train", "--config", str(cfg),
                               "--output", str(out)])
    assert code == 0
    ckpt = out / "lstm.ckpt"
    assert ckpt.exists()
    metrics = json.loads((out / "lstm_train_metrics.json").read_text())
    assert len(metrics["history"]["epoch"]) == 2

    code, _, _ = _run(capsys, ["evaluate", "--checkpoint", str(ckpt),
                               "--config", str(cfg), "--output", str(out)])
    assert code == 0
    ev = json.loads((out / "lstm_eval_metrics.json").read_text())
    assert 0.0 <= ev["accuracy"] <= 1.0
    assert len(ev["confusion"]) == 3

    svg = out / "map.svg"
    code, _, _ = _run(capsys, ["attend", "--checkpoint", str(ckpt),
                               "--manifest", str(manifest), "--work", "aulus",
                               "--start", "1", "--visualizer", "vanilla",
                               "--out", str(svg), "--config", str(cfg),
                               "--output", str(out)])
    assert code == 0
    assert svg.read_text().startswith("<svg ")
    sidecar = json.loads(svg.with_suffix(".json").read_text())
    assert np.asarray(sidecar["map"]).shape == (64, 20)

    code, _, _ = _run(capsys, ["embed-analyze", "--checkpoint", str(ckpt),
                               "--lexicon", str(out / "lexicon.tsv"),
                               "--config", str(cfg), "--output", str(out)])
    assert code == 0
    stats = json.loads((out / "embedding_stats.json").read_text())
    assert len(stats["explained_variance_ratio"]) == 2
    assert (out / "embeddings.tsv").exists()
    assert (out / "embedding_coords.tsv").exists()
    assert any(out.glob("density_*.svg"))


def test_evaluate_rejects_mismatched_lexicon(capsys, workdir, tmp_path):
    out, cfg, _ = workdir
    ckpt = out / "lstm.ckpt"
    if not ckpt.exists():
        pytest.skip("training artifact missing")
    other = tmp_path / "out2"
    other.mkdir()
    (other / "lexicon.tsv").write_text("0\t<pad>\t0\n1\t<unk>\t0\n2\tx\t5\n")
    # reuse binary splits so only the lexicon mismatches
    for name in ("train.bin", "val.bin", "test.bin"):
        (other / name).write_bytes((out / name).read_bytes())
    code, _, err = _run(capsys, ["evaluate", "--checkpoint", str(ckpt),
                                 "--output", str(other)])
    assert code == 1
    assert "fingerprint" in err
