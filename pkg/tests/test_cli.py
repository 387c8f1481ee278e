import json
import os

import pytest

from molrec.cli import main
from molrec.dataset import read_jsonl


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_canonicalize_permutation(capsys):
    code, out, _ = run(capsys, "canonicalize", "OCC", "CCO")
    assert code == 0
    a, b = out.strip().splitlines()
    assert a == b


def test_canonicalize_strict_rejects_pseudo(capsys):
    code, _, err = run(capsys, "canonicalize", "--strict", "[Me]C")
    assert code == 1
    assert "error" in err


def test_augment_reproducible(capsys):
    code1, out1, _ = run(capsys, "augment", "--seed", "4", "CCOC(C)=O")
    code2, out2, _ = run(capsys, "augment", "--seed", "4", "CCOC(C)=O")
    assert code1 == code2 == 0
    assert out1 == out2


def test_generate_predict_evaluate_cycle(tmp_path, capsys):
    ds = str(tmp_path / "ds")
    code, out, err = run(capsys, "generate", "--out", ds, "--count", "6",
                         "--seed", "5", "--image-size", "160", "--verify")
    assert code == 0, err
    assert "verify: ok" in out

    pred = str(tmp_path / "pred.jsonl")
    code, out, err = run(capsys, "predict", "--gold", os.path.join(ds, "dataset.jsonl"),
                         "--out", pred, "--predictor", "mock")
    assert code == 0, err

    report = str(tmp_path / "report.json")
    code, out, err = run(capsys, "evaluate", "--pred", pred,
                         "--gold", os.path.join(ds, "dataset.jsonl"),
                         "--out", report)
    assert code == 0, err
    assert "accuracy" in out
    payload = json.loads(open(report).read())
    assert payload["accuracy"] == 1.0
    assert payload["validity"] == 1.0


def test_generate_bit_identical(tmp_path, capsys):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    for out_dir in (a, b):
        code, _, err = run(capsys, "generate", "--out", out_dir, "--count", "5",
                           "--seed", "7", "--image-size", "128")
        assert code == 0, err
    ra, rb = read_jsonl(os.path.join(a, "dataset.jsonl")), read_jsonl(os.path.join(b, "dataset.jsonl"))
    assert ra == rb
    for rec in ra:
        assert open(os.path.join(a, rec["image"]), "rb").read() == \
            open(os.path.join(b, rec["image"]), "rb").read()


def test_vocab_emission(tmp_path, capsys):
    path = str(tmp_path / "vocab.txt")
    code, out, _ = run(capsys, "vocab", "--out", path)
    assert code == 0
    lines = open(path).read().splitlines()
    assert "<bos>" in lines and "x0" in lines and "y63" in lines and "[Me]" in lines
    assert len(lines) == len(set(lines))


def test_render_and_overlay(tmp_path, capsys):
    png = str(tmp_path / "mol.png")
    coords = str(tmp_path / "mol.json")
    code, _, err = run(capsys, "render", "CC(=O)O", "--out", png,
                       "--coords-out", coords, "--seed", "3")
    assert code == 0, err
    assert os.path.exists(png)
    payload = json.load(open(coords))
    assert len(payload) == 4

    ds = str(tmp_path / "ds")
    run(capsys, "generate", "--out", ds, "--count", "2", "--seed", "1",
        "--image-size", "128")
    pred = str(tmp_path / "p.jsonl")
    run(capsys, "predict", "--gold", os.path.join(ds, "dataset.jsonl"),
        "--out", pred)
    overlay = str(tmp_path / "ov.png")
    code, _, err = run(capsys, "overlay", "--image",
                       os.path.join(ds, "images", "000000.png"),
                       "--pred", pred, "--out", overlay)
    assert code == 0, err
    assert os.path.exists(overlay)


def test_usage_error_exit_code(capsys):
    code, _, err = run(capsys, "predict", "--out", "/tmp/x.jsonl")
    assert code != 0


def test_rules_env_var(tmp_path, capsys, monkeypatch):
    rules_path = tmp_path / "tiny.tsv"
    rules_path.write_text("Me\t*C\n")
    monkeypatch.setenv("MOLREC_RULES", str(rules_path))
    code, out, _ = run(capsys, "augment", "--seed", "1", "--abbrev-prob", "1",
                       "--rgroup-prob", "0", "CCO")
    assert code == 0
    assert "[Me]" in out
