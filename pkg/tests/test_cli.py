import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ssrgan import data
from ssrgan.checkpoint import save_checkpoint
from ssrgan.cli import build_parser, main
from ssrgan.core import derive_seed, make_rng
from ssrgan.corruption import apply_mask, make_mask
from ssrgan.metrics import nmse
from ssrgan.training import PAPER_LEVELS, Trainer


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _error_fields(err):
    line = err.strip().splitlines()
    assert len(line) == 1 and line[0].startswith("ssrgan: error ")
    return dict(kv.split("=", 1) for kv in line[0].split()[2:5])


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    rng = make_rng(0)
    data.save_image(d / "one.png", rng.uniform(0.2, 0.8, (3, 100, 90)))
    return d


def test_corrupt_exact_site_count(tmp_path, image_dir, capsys):
    code, out, _ = run(capsys, "corrupt", "--input", image_dir, "--output", tmp_path / "o",
                       "--level", 0.3, "--seed", 4)
    assert code == 0 and "processed 1 images" in out
    ref = data.to_uint8(data.resize_bilinear(data.load_image(image_dir / "one.png"), 128, 128).pixels)
    got = data.to_uint8(data.load_image(tmp_path / "o/one.png").pixels)
    assert (ref != got).any(axis=2).sum() == 4915
    mask = data.load_mask(tmp_path / "o/one_mask.pgm")
    assert mask.sum() == 4915
    np.testing.assert_array_equal(mask, make_mask(128, 128, 0.3, derive_seed(4, 0)).plane)


def test_corrupt_level_zero_and_reproducible(tmp_path, image_dir, capsys):
    for name in ("a", "b"):
        assert run(capsys, "corrupt", "--input", image_dir, "--output", tmp_path / name,
                   "--level", 0, "--size", 32)[0] == 0
    ref = data.to_uint8(data.resize_bilinear(data.load_image(image_dir / "one.png"), 32, 32).pixels)
    np.testing.assert_array_equal(data.to_uint8(data.load_image(tmp_path / "a/one.png").pixels), ref)
    assert (tmp_path / "a/one.png").read_bytes() == (tmp_path / "b/one.png").read_bytes()


@pytest.mark.parametrize("argv", [
    ["corrupt", "--input", "x", "--output", "y", "--level", "1.1"],
    ["corrupt", "--input", "x", "--output", "y", "--level", "0.3", "--bogus"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert _error_fields(err)["code"] == "2"


def test_empty_input_exit_2(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code, _, err = run(capsys, "corrupt", "--input", tmp_path / "empty", "--output", tmp_path / "o", "--level", 0.5)
    assert code == 2 and "EmptyInputError" in err


def test_unwritable_output_exit_3(tmp_path, image_dir, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "corrupt", "--input", image_dir, "--output", blocker / "sub", "--level", 0.5)
    assert code == 3 and _error_fields(err)["code"] == "3"


def test_help_documents_every_flag():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text
            if action.option_strings and action.dest != "help":
                assert action.help, f"{name} {action.dest} undocumented"
        assert "--seed" in text


def test_sweep_default_levels():
    args = build_parser().parse_args(["sweep", "--config", "c.json"])
    assert args.levels == list(PAPER_LEVELS) == [0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    with pytest.raises(Exception):
        build_parser().parse_args(["sweep", "--config", "c.json", "--levels", "0.3,1.2"])


@pytest.fixture
def trained(tmp_path, tiny_cfg, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(tiny_cfg.replace(epochs=2, train_fraction=0.5).to_dict()))
    code, out, _ = run(capsys, "train", "--config", cfg_path, "--run-dir", tmp_path / "run")
    assert code == 0 and "trained 2 epochs" in out
    return tmp_path / "run", cfg_path


def test_train_eval_infer(tmp_path, trained, capsys):
    run_dir, _ = trained
    ckpt = run_dir / "checkpoints/epoch_0002.ssrg"
    code, out, _ = run(capsys, "eval", "--checkpoint", ckpt, "--level", 0.5, "--out", tmp_path / "e.csv")
    assert code == 0 and out.startswith("nmse=") and "n_images=4" in out
    assert len(list(csv.reader(open(tmp_path / "e.csv")))) == 2

    img = tmp_path / "probe.png"
    data.save_image(img, make_rng(3).uniform(0.1, 0.9, (3, 20, 20)))
    code, out, _ = run(capsys, "infer", "--checkpoint", ckpt, "--image", img, "--level", 0.0,
                       "--out", tmp_path / "tri.png", "--seed", 2)
    assert code == 0
    tri = data.load_image(tmp_path / "tri.png").pixels
    assert tri.shape == (3, 16, 3 * 16 + 2)
    np.testing.assert_array_equal(tri[:, :, :16], tri[:, :, 17:33])
    assert (tri[:, :, 16] == 1).all() and (tri[:, :, 33] == 1).all()

    # printed NMSE agrees with the metrics module on the same pair
    from ssrgan.checkpoint import load_checkpoint
    tr = Trainer.from_checkpoint(load_checkpoint(ckpt))
    clean = data.resize_bilinear(data.load_image(img), 16, 16).pixels
    mask = make_mask(16, 16, 0.6, derive_seed(2, 0))
    recon = data.denormalize(tr.reconstruct(apply_mask(data.normalize(clean), mask)[None])[0])
    code, out, _ = run(capsys, "infer", "--checkpoint", ckpt, "--image", img, "--level", 0.6,
                       "--out", tmp_path / "tri2.png", "--seed", 2)
    assert out.strip() == f"nmse={nmse(clean, recon):.6f}"


def test_checkpoint_problems_exit_5(tmp_path, tiny_cfg, capsys):
    img = tmp_path / "p.png"
    data.save_image(img, np.full((3, 16, 16), 0.5))
    ck = Trainer(tiny_cfg.replace(gen_width=4)).to_checkpoint()
    ck.config = tiny_cfg.to_dict()
    save_checkpoint(ck, tmp_path / "bad.ssrg")
    code, _, err = run(capsys, "infer", "--checkpoint", tmp_path / "bad.ssrg", "--image", img,
                       "--level", 0.3, "--out", tmp_path / "t.png")
    assert code == 5 and _error_fields(err)["kind"] == "CheckpointError"
    (tmp_path / "junk.ssrg").write_bytes(b"nope")
    assert run(capsys, "eval", "--checkpoint", tmp_path / "junk.ssrg")[0] == 5


def test_train_seed_flag_overrides_config(tmp_path, trained, capsys):
    _, cfg_path = trained
    assert run(capsys, "train", "--config", cfg_path, "--run-dir", tmp_path / "s9", "--seed", 9)[0] == 0
    assert json.loads((tmp_path / "s9/config.json").read_text())["seed"] == 9


def test_report(tmp_path, tiny_cfg, capsys):
    from ssrgan.training import train
    runs = tmp_path / "runs"
    for level in (0.8, 0.3, 0.5):
        train(tiny_cfg.replace(corruption_level=level, epochs=2, checkpoint_every=2), runs / f"p{level}")
    code, out, _ = run(capsys, "report", "--runs", runs, "--out", tmp_path / "rep")
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "rep/nmse_vs_level.csv")))[1:]
    assert [float(r[1]) for r in rows] == [0.3, 0.5, 0.8]
    epochs = list(csv.reader(open(tmp_path / "rep/nmse_vs_epoch.csv")))[1:]
    assert len(epochs) == 6
    for name in ("nmse_vs_level.png", "nmse_vs_epoch.png"):
        assert (tmp_path / "rep" / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    with open(runs / "p0.5/metrics.csv", "a") as fh:
        fh.write("7,oops\n")
    code, _, err = run(capsys, "report", "--runs", runs, "--out", tmp_path / "rep2")
    assert code == 4 and "metrics.csv" in err and "line 4" in err


def test_report_empty_runs_exit_2(tmp_path, capsys):
    (tmp_path / "none").mkdir()
    assert run(capsys, "report", "--runs", tmp_path / "none", "--out", tmp_path / "o")[0] == 2


def test_gradcheck_subcommand(capsys):
    code, out, _ = run(capsys, "gradcheck", "--instances", 1, "--seed", 3)
    assert code == 0
    assert "end_to_end" in out and "FAIL" not in out


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ssrgan", "report", "--runs", str(tmp_path), "--out", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert res.returncode == 2 and res.stderr.startswith("ssrgan: error code=2")
