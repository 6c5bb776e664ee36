"""Command-line driver: ``ssrgan <subcommand> [flags]``.

Exit codes: 0 success, 1 unexpected failure, 2 usage or empty input,
3 unwritable output, 4 malformed CSV, 5 checkpoint/model mismatch. Errors
are reported on stderr as one line::

    ssrgan: error code=<n> kind=<ExceptionName> msg=<text>
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ssrgan import data, report
from ssrgan.checkpoint import load_checkpoint
from ssrgan.core.rng import derive_seed
from ssrgan.corruption import apply_mask, make_mask
from ssrgan.errors import (
    CheckpointError, ConfigError, EmptyInputError, FormatError, ImageIOError,
    MalformedCSVError, RangeError,
)
from ssrgan.metrics import nmse
from ssrgan.training import PAPER_LEVELS, TrainConfig, Trainer, evaluate, sweep, train, write_eval_csv

EXIT_USAGE, EXIT_OUTPUT, EXIT_CSV, EXIT_CHECKPOINT = 2, 3, 4, 5


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _level(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"level {v} outside [0, 1]")
    return v


def _levels(text: str) -> list:
    return [_level(t) for t in text.split(",") if t.strip()]


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"{path}: not writable ({exc.strerror or exc})") from exc
    return path


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _load_config(args) -> TrainConfig:
    cfg = TrainConfig.from_json(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


# -- subcommands -----------------------------------------------------------

def cmd_corrupt(args) -> int:
    rels = data.list_images(args.input) if Path(args.input).is_dir() else []
    if not rels:
        raise EmptyInputError(f"{args.input}: no readable PNG/PPM images")
    out = _ensure_dir(Path(args.output))
    fill01 = 0.0  # black
    for idx, rel in enumerate(rels):
        rec = data.resize_bilinear(data.load_image(Path(args.input) / rel), args.size, args.size)
        mask = make_mask(args.size, args.size, args.level, derive_seed(_seed(args), idx))
        stem = Path(rel).with_suffix("").as_posix().replace("/", "__")
        try:
            data.save_image(out / f"{stem}.png", apply_mask(rec.pixels, mask, fill01))
            data.save_mask(out / f"{stem}_mask.pgm", mask.plane)
        except OSError as exc:
            raise OutputError(f"{out}: {exc}") from exc
    print(f"processed {len(rels)} images")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    run_dir = _ensure_dir(Path(args.run_dir))
    trainer = train(cfg, run_dir, resume=args.resume, stop_after=args.stop_after)
    print(f"trained {trainer.epoch} epochs, {trainer.step_count} steps -> {run_dir}")
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model, baseline = evaluate(ckpt, args.split, args.level, args.seed)
    cfg = ckpt.config
    level = cfg["corruption_level"] if args.level is None else args.level
    if args.out:
        _ensure_dir(Path(args.out).parent)
        write_eval_csv(args.out, [[cfg["dataset_name"], repr(level), ckpt.epoch,
                                   repr(model.mean), model.count]])
    print(f"nmse={model.mean:.6f} baseline_nmse={baseline.mean:.6f} n_images={model.count} level={level:g}")
    return 0


def triptych(original, corrupted, reconstructed, sep_value: float = 1.0) -> np.ndarray:
    """Side-by-side (3, H, 3W + 2) panel with one-pixel separator columns."""
    c, h, _ = original.shape
    sep = np.full((c, h, 1), sep_value, dtype=np.float32)
    return np.concatenate([original, sep, corrupted, sep, reconstructed], axis=2)


def cmd_infer(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    trainer = Trainer.from_checkpoint(ckpt)
    size = trainer.cfg.image_size
    clean = data.resize_bilinear(data.load_image(args.image), size, size).pixels
    mask = make_mask(size, size, args.level, derive_seed(_seed(args), 0))
    corrupted = apply_mask(data.normalize(clean), mask, trainer.cfg.fill_value)
    recon = data.denormalize(trainer.reconstruct(corrupted[None])[0])
    shown = apply_mask(clean, mask, float(data.denormalize(np.float32(trainer.cfg.fill_value))))
    panel = triptych(clean, shown, recon)
    try:
        _ensure_dir(Path(args.out).resolve().parent)
        data.save_image(args.out, panel)
    except OSError as exc:
        raise OutputError(f"{args.out}: {exc}") from exc
    print(f"nmse={nmse(clean, recon):.6f}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _ensure_dir(Path(args.out))
    rows = sweep(cfg, args.levels, out)
    for r in rows:
        print(f"level={float(r[1]):g} nmse={float(r[3]):.6f} n_images={r[4]}")
    return 0


def cmd_report(args) -> int:
    out = _ensure_dir(Path(args.out))
    levels, epochs = report.write_report(args.runs, out, plots=not args.no_plots)
    print(f"{len(levels)} level points, {len(epochs)} epoch points -> {out}")
    return 0


def cmd_gradcheck(args) -> int:
    from ssrgan.diagnostics import run_suite

    results = run_suite(seed=_seed(args), instances=args.instances)
    ok = True
    for r in results:
        ok &= r.passed
        print(f"{'PASS' if r.passed else 'FAIL'} {r.component} instance={r.instance} "
              f"rel_error={r.rel_error:.3e} tol={r.tol:g}")
    return 0 if ok else 1


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ssrgan", description="Semi super-resolution GAN inpainting toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (masks, initialization, shuffling)")
        return p

    p = add("corrupt", cmd_corrupt, "Resize images and eliminate a fraction of their pixels.")
    p.add_argument("--input", required=True, help="directory of PNG/PPM images")
    p.add_argument("--output", required=True, help="directory for corrupted PNGs and PGM masks")
    p.add_argument("--level", type=_level, required=True, help="fraction of pixels to corrupt, in [0, 1]")
    p.add_argument("--size", type=int, default=128, help="square working resolution (default 128)")

    p = add("train", cmd_train, "Train a generator/discriminator pair from a JSON config.")
    p.add_argument("--config", required=True, help="JSON file with TrainConfig fields")
    p.add_argument("--run-dir", required=True, help="output directory for checkpoints and metrics")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--stop-after", type=int, default=None,
                   help="stop after this many completed epochs (resumable)")

    p = add("eval", cmd_eval, "Evaluate a checkpoint's NMSE on a dataset split.")
    p.add_argument("--checkpoint", required=True, help="checkpoint file")
    p.add_argument("--split", choices=("train", "test"), default="test", help="dataset split (default test)")
    p.add_argument("--level", type=_level, default=None, help="corruption level (default: the trained level)")
    p.add_argument("--out", default=None, help="optional CSV file for the result row")

    p = add("infer", cmd_infer, "Reconstruct one corrupted image and write a triptych PNG.")
    p.add_argument("--checkpoint", required=True, help="checkpoint file")
    p.add_argument("--image", required=True, help="input PNG/PPM image")
    p.add_argument("--level", type=_level, required=True, help="corruption level in [0, 1]")
    p.add_argument("--out", required=True, help="output PNG (original | corrupted | reconstructed)")

    p = add("sweep", cmd_sweep, "Train and test one model per corruption level.")
    p.add_argument("--config", required=True, help="JSON file with TrainConfig fields")
    p.add_argument("--levels", type=_levels, default=list(PAPER_LEVELS),
                   help="comma-separated levels (default 0.3,0.4,0.5,0.6,0.7,0.8)")
    p.add_argument("--out", default="sweep", help="output directory (default ./sweep)")

    p = add("report", cmd_report, "Merge run CSVs into NMSE curves (CSV and PNG).")
    p.add_argument("--runs", required=True, help="directory containing run directories")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-plots", action="store_true", help="write CSVs only")

    p = add("gradcheck", cmd_gradcheck, "Run the finite-difference gradient suite.")
    p.add_argument("--instances", type=int, default=5, help="random instances per component (default 5)")
    return parser


def _fail(code: int, exc: BaseException) -> int:
    msg = " ".join(str(exc).split())
    print(f"ssrgan: error code={code} kind={type(exc).__name__} msg={msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, EmptyInputError, ConfigError, RangeError) as exc:
        return _fail(EXIT_USAGE, exc)
    except OutputError as exc:
        return _fail(EXIT_OUTPUT, exc)
    except MalformedCSVError as exc:
        return _fail(EXIT_CSV, exc)
    except CheckpointError as exc:
        return _fail(EXIT_CHECKPOINT, exc)
    except (FormatError, ImageIOError) as exc:
        return _fail(EXIT_USAGE, exc)
    except Exception as exc:  # noqa: BLE001 - single-line contract for every failure
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
