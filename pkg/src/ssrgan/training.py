"""Alternating adversarial training, evaluation and checkpointing."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ssrgan.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from ssrgan.core.optim import Adam
from ssrgan.core.rng import derive_seed, get_state, make_rng, set_state
from ssrgan.core.tensor import Tensor, no_grad
from ssrgan.corruption import FILL_VALUE, corrupt_batch, make_mask
from ssrgan.data import (
    denormalize, fraction_split, load_manifest_images, normalize, scan_dataset,
    synthetic_images,
)
from ssrgan.errors import CheckpointError, ConfigError, DivergenceError
from ssrgan.losses import LossReport, discriminator_loss, generator_loss, real_targets
from ssrgan.metrics import NmseResult, nmse_dataset
from ssrgan.model import (
    Discriminator, DiscriminatorConfig, Generator, GeneratorConfig, check_input_size,
)

log = logging.getLogger(__name__)

METRICS_HEADER = ["epoch", "lr", "loss_D", "loss_G", "nmse"]
STEP_HEADER = ["step", "epoch", "loss_D", "loss_F", "loss_R", "loss_G", "loss_G_content", "loss_G_adv"]
EVAL_HEADER = ["dataset", "corruption_level", "epoch", "nmse_mean", "n_images"]
PAPER_LEVELS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


@dataclass
class TrainConfig:
    dataset_name: str = "synthetic"
    dataset_root: str = ""
    synthetic_count: int = 64
    max_images: int = 0            # 0 = use the whole split
    train_fraction: float = 0.8
    split_rule: str = "auto"
    data_seed: int = 0
    image_size: int = 128
    corruption_level: float = 0.3
    fill_value: float = FILL_VALUE
    epochs: int = 100
    batch_size: int = 64
    lr0: float = 2e-4
    lr_half_every: int = 25
    beta1: float = 0.9
    beta2: float = 0.999
    adv_weight: float = 1e-3
    freeze_discriminator: bool = False
    seed: int = 0
    use_bn: bool = True
    n_shuffle: int = 2
    gen_width: int = 64
    gen_blocks: int = 6
    disc_ladder: list = field(default_factory=lambda: [64, 128, 256, 512])
    disc_strides: list = field(default_factory=lambda: [2, 2, 1, 1])
    checkpoint_every: int = 25
    checkpoint_dir: str = "checkpoints"
    metrics_file: str = "metrics.csv"
    nmse_subset: int = 64
    nmse_space: str = "unit"       # "unit": [0, 1] pixels; "signed": the network's [-1, 1] range

    def validate(self) -> "TrainConfig":
        if not 0.0 <= self.corruption_level <= 1.0:
            raise ConfigError(f"corruption_level must lie in [0, 1], got {self.corruption_level}")
        for name in ("epochs", "batch_size", "lr_half_every", "checkpoint_every",
                     "synthetic_count", "nmse_subset"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.split_rule not in ("auto", "official", "fraction"):
            raise ConfigError(f"split_rule must be auto, official or fraction, got {self.split_rule!r}")
        if self.nmse_space not in ("unit", "signed"):
            raise ConfigError(f"nmse_space must be 'unit' or 'signed', got {self.nmse_space!r}")
        if self.max_images < 0:
            raise ConfigError("max_images must be >= 0")
        check_input_size(self.image_size, self.image_size)
        self.generator_config().validate()
        self.discriminator_config().validate()
        return self

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(3, self.gen_width, self.gen_blocks, self.n_shuffle, self.use_bn)

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig(3, tuple(self.disc_ladder), tuple(self.disc_strides), self.use_bn)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d).validate()

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(d)

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw).validate()


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """``lr0 * 0.5 ** floor(epoch / lr_half_every)``."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return cfg.lr0 * 0.5 ** (epoch // cfg.lr_half_every)


# -- data ----------------------------------------------------------------

def load_split(cfg: TrainConfig, split: str) -> np.ndarray:
    """Images of one split as (N, 3, S, S) in [0, 1]."""
    if cfg.dataset_name == "synthetic" and not cfg.dataset_root:
        images = synthetic_images(cfg.synthetic_count, cfg.image_size, cfg.data_seed)
        train_idx, test_idx = fraction_split(len(images), cfg.train_fraction, cfg.data_seed)
        images = images[train_idx if split == "train" else test_idx]
    else:
        manifest = scan_dataset(cfg.dataset_root, split, cfg.dataset_name, cfg.train_fraction,
                                cfg.data_seed, cfg.split_rule)
        if cfg.max_images:
            manifest.entries = manifest.entries[:cfg.max_images]
        images = load_manifest_images(manifest, cfg.image_size)
    if cfg.max_images:
        images = images[:cfg.max_images]
    return images


def eval_masks(n: int, size: int, level: float, seed: int, ids=None):
    """Fixed per-image masks seeded by ``seed XOR image id``."""
    ids = range(n) if ids is None else ids
    return [make_mask(size, size, level, derive_seed(seed, i)) for i in ids]


# -- trainer -------------------------------------------------------------

class Trainer:
    """Owns both networks, their optimizers and the run's random stream."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg.validate()
        init_rng = make_rng(cfg.seed)
        self.G = Generator(cfg.generator_config(), init_rng)
        self.D = Discriminator(cfg.discriminator_config(), init_rng)
        betas = (cfg.beta1, cfg.beta2)
        self.opt_G = Adam(self.G.parameters(), cfg.lr0, betas)
        self.opt_D = Adam(self.D.parameters(), cfg.lr0, betas)
        self.rng = make_rng(derive_seed(cfg.seed, 0x5EED))
        self.epoch = 0
        self.step_count = 0

    # -- one optimization step
    def train_step(self, clean: np.ndarray, lr: float) -> LossReport:
        """One D update followed by one G update on a normalized batch."""
        cfg = self.cfg
        n, _, h, w = clean.shape
        masks = [make_mask(h, w, cfg.corruption_level, self.rng) for _ in range(n)]
        target = Tensor(clean)
        corrupted = Tensor(corrupt_batch(clean, masks, cfg.fill_value))
        self.G.train()
        h_hat = self.G(corrupted)

        self.opt_D.zero_grad()
        targets = real_targets(h, w, self.rng, n=n)
        if cfg.freeze_discriminator:
            self.D.eval()
            with no_grad():
                d_loss = discriminator_loss(self.D(target), self.D(h_hat.detach()), targets)
        else:
            self.D.train()
            d_loss = discriminator_loss(self.D(target), self.D(h_hat.detach()), targets)
            d_loss.total.backward()
            self._check_finite(d_loss.total, "loss_D")
            self.opt_D.step(lr)

        self.opt_G.zero_grad()
        g_loss = generator_loss(h_hat, target, self.D(h_hat), cfg.adv_weight)
        report = LossReport(d_loss.total.item(), d_loss.fake.item(), d_loss.real.item(),
                            g_loss.total.item(), g_loss.content.item(), g_loss.adversarial.item())
        if not report.finite():
            raise DivergenceError(f"non-finite loss at step {self.step_count}: {report}", report)
        g_loss.total.backward()
        try:
            self.opt_G.step(lr)
        except DivergenceError as exc:
            raise DivergenceError(f"{exc} at step {self.step_count}; last losses {report}", report) from exc
        self.opt_D.zero_grad()
        self.step_count += 1
        return report

    def _check_finite(self, loss: Tensor, label: str):
        if not np.isfinite(loss.data).all():
            raise DivergenceError(f"non-finite {label} at step {self.step_count}")

    # -- inference
    def reconstruct(self, corrupted: np.ndarray, batch_size: int | None = None) -> np.ndarray:
        """Eval-mode generator output for normalized inputs."""
        self.G.eval()
        bs = batch_size or self.cfg.batch_size
        outs = []
        with no_grad():
            for i in range(0, len(corrupted), bs):
                outs.append(self.G(Tensor(corrupted[i:i + bs])).data)
        return np.concatenate(outs)

    def evaluate(self, images: np.ndarray, level: float, seed: int):
        """NMSE of reconstructions and of the corrupted inputs, images in [0, 1].

        Returns ``(model, baseline)`` :class:`NmseResult` pair.
        """
        size = images.shape[-1]
        masks = eval_masks(len(images), size, level, seed)
        corrupted = corrupt_batch(normalize(images), masks, self.cfg.fill_value)
        recon = self.reconstruct(corrupted)
        if self.cfg.nmse_space == "unit":
            images, recon, corrupted = images, denormalize(recon), denormalize(corrupted)
        else:
            images = normalize(images)
        model = nmse_dataset(zip(images, recon))
        baseline = nmse_dataset(zip(images, corrupted))
        return model, baseline

    # -- persistence
    def state_tensors(self) -> dict:
        out = {}
        for tag, net, opt in (("G", self.G, self.opt_G), ("D", self.D, self.opt_D)):
            named = list(net.named_parameters())
            for name, p in named:
                out[f"{tag}.param.{name}"] = p.data
            for name, buf in net.named_buffers():
                out[f"{tag}.buffer.{name}"] = buf
            for (name, _), st in zip(named, opt.states):
                out[f"{tag}.adam_m.{name}"] = st.m
                out[f"{tag}.adam_v.{name}"] = st.v
        return out

    def to_checkpoint(self) -> Checkpoint:
        meta = {"adam_t": {"G": self.opt_G.t, "D": self.opt_D.t}, "rng_state": get_state(self.rng)}
        return Checkpoint(self.cfg.to_dict(), self.epoch, self.step_count,
                          {k: v.copy() for k, v in self.state_tensors().items()}, meta)

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, cfg: TrainConfig | None = None) -> "Trainer":
        trainer = cls(cfg or TrainConfig.from_dict(ckpt.config))
        trainer.load_state(ckpt)
        return trainer

    def load_state(self, ckpt: Checkpoint):
        own = self.state_tensors()
        missing = sorted(set(own) - set(ckpt.tensors))
        extra = sorted(set(ckpt.tensors) - set(own))
        if missing or extra:
            raise CheckpointError(f"checkpoint does not match model: missing {missing[:3]}, "
                                  f"unexpected {extra[:3]}")
        for name, arr in own.items():
            src = ckpt.tensors[name]
            if src.shape != arr.shape:
                raise CheckpointError(f"tensor {name!r}: shape {src.shape} != model {arr.shape}")
            arr[...] = src
        for tag, opt in (("G", self.opt_G), ("D", self.opt_D)):
            for st in opt.states:
                st.t = int(ckpt.meta["adam_t"][tag])
        set_state(self.rng, ckpt.meta["rng_state"])
        self.epoch = ckpt.epoch
        self.step_count = ckpt.step


# -- run loop --------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_rows(path: Path):
    if not path.exists():
        return []
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))[1:]


def checkpoint_path(run_dir, cfg: TrainConfig, epoch: int) -> Path:
    return Path(run_dir) / cfg.checkpoint_dir / f"epoch_{epoch:04d}.ssrg"


def train(cfg: TrainConfig, run_dir, resume=None, images: np.ndarray | None = None,
          stop_after: int | None = None) -> Trainer:
    """Run (or resume) the epoch loop, writing checkpoints and metrics under ``run_dir``.

    ``images`` overrides the configured training split ([0, 1] floats).
    ``stop_after`` ends the loop after that many completed epochs without
    changing the configuration, which simulates an interrupted run.
    """
    cfg.validate()
    run_dir = Path(run_dir)
    (run_dir / cfg.checkpoint_dir).mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    if resume is not None:
        ckpt = resume if isinstance(resume, Checkpoint) else load_checkpoint(resume)
        saved = TrainConfig.from_dict(ckpt.config)
        if saved != cfg:
            raise CheckpointError("resume: checkpoint configuration differs from the run configuration")
        trainer = Trainer.from_checkpoint(ckpt, cfg)
    else:
        trainer = Trainer(cfg)

    train_images = load_split(cfg, "train") if images is None else images
    if len(train_images) == 0:
        raise ConfigError("training split is empty")
    normalized = normalize(train_images)
    subset = train_images[:cfg.nmse_subset]

    metrics_path = run_dir / cfg.metrics_file
    steps_path = run_dir / "losses.csv"
    rows = [r for r in _read_rows(metrics_path) if int(r[0]) < trainer.epoch]
    step_rows = [r for r in _read_rows(steps_path) if int(r[1]) < trainer.epoch]
    _write_csv(metrics_path, METRICS_HEADER, rows)
    _write_csv(steps_path, STEP_HEADER, step_rows)

    n = len(normalized)
    last = cfg.epochs if stop_after is None else min(cfg.epochs, stop_after)
    while trainer.epoch < last:
        epoch = trainer.epoch
        lr = lr_at_epoch(cfg, epoch)
        order = trainer.rng.permutation(n)
        reports = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            rep = trainer.train_step(normalized[idx], lr)
            reports.append(rep)
            step_rows.append([trainer.step_count, epoch] + [_fmt(v) for v in rep.as_dict().values()])
        trainer.epoch += 1
        model_nmse, _ = trainer.evaluate(subset, cfg.corruption_level, cfg.seed)
        rows.append([epoch, _fmt(lr), _fmt(np.mean([r.loss_D for r in reports])),
                     _fmt(np.mean([r.loss_G for r in reports])), _fmt(model_nmse.mean)])
        _write_csv(metrics_path, METRICS_HEADER, rows)
        _write_csv(steps_path, STEP_HEADER, step_rows)
        log.info("epoch %d lr %.3g loss_D %.4f loss_G %.4f nmse %.4f", epoch, lr,
                 float(rows[-1][2]), float(rows[-1][3]), model_nmse.mean)
        if trainer.epoch % cfg.checkpoint_every == 0 or trainer.epoch == cfg.epochs:
            save_checkpoint(trainer.to_checkpoint(), checkpoint_path(run_dir, cfg, trainer.epoch))
    return trainer


def latest_checkpoint(run_dir, cfg: TrainConfig | None = None) -> Path | None:
    ckdir = Path(run_dir) / (cfg.checkpoint_dir if cfg else "checkpoints")
    found = sorted(ckdir.glob("epoch_*.ssrg"))
    return found[-1] if found else None


def evaluate(ckpt, split: str = "test", level: float | None = None, seed: int | None = None,
             images: np.ndarray | None = None):
    """Evaluate a checkpoint (object or path) on a split; returns (model, baseline)."""
    if not isinstance(ckpt, Checkpoint):
        ckpt = load_checkpoint(ckpt)
    trainer = Trainer.from_checkpoint(ckpt)
    cfg = trainer.cfg
    if images is None:
        images = load_split(cfg, split)
    if len(images) == 0:
        raise ConfigError(f"{split} split is empty")
    level = cfg.corruption_level if level is None else level
    return trainer.evaluate(images, level, cfg.seed if seed is None else seed)


def write_eval_csv(path, rows) -> None:
    _write_csv(Path(path), EVAL_HEADER, rows)


def sweep(cfg: TrainConfig, levels, out_dir) -> list:
    """Train and test one model per corruption level.

    Each level gets its own run directory ``level_<p>``; the combined
    ``nmse_vs_level.csv`` has one row per level.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    test_images = load_split(cfg, "test")
    for level in levels:
        lcfg = cfg.replace(corruption_level=float(level))
        run_dir = out_dir / f"level_{float(level):.2f}"
        trainer = train(lcfg, run_dir)
        model, _ = trainer.evaluate(test_images, lcfg.corruption_level, lcfg.seed)
        row = [cfg.dataset_name, _fmt(level), trainer.epoch, _fmt(model.mean), model.count]
        write_eval_csv(run_dir / "eval.csv", [row])
        rows.append(row)
    write_eval_csv(out_dir / "nmse_vs_level.csv", rows)
    return rows
