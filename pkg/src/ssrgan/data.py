"""Image I/O, resizing, normalization and dataset manifests."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ssrgan.core.rng import make_rng
from ssrgan.errors import EmptyDatasetError, FormatError, ImageIOError, RangeError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm")
_ACCEPTED_MODES = ("L", "RGB")


@dataclass
class ImageRecord:
    pixels: np.ndarray  # (3, H, W) float32 in [0, 1]
    path: str | None = None
    original_size: tuple | None = None  # (H, W) as decoded


def load_image(path) -> ImageRecord:
    """Decode an 8-bit grayscale/RGB PNG or a binary PPM into (3, H, W) floats."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise FormatError(f"{path}: unsupported format {im.format}")
            if im.mode not in _ACCEPTED_MODES:
                raise FormatError(f"{path}: unsupported pixel mode {im.mode} (8-bit L or RGB only)")
            im.load()
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise ImageIOError(f"{path}: no such file") from exc
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a PNG/PPM image") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise ImageIOError(f"{path}: {exc}") from exc
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    pixels = arr.transpose(2, 0, 1).astype(np.float32) / np.float32(255)
    return ImageRecord(pixels, str(path), arr.shape[:2])


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    """(C, H, W) floats in [0, 1] -> (H, W, C) bytes."""
    return np.clip(np.rint(np.asarray(pixels, dtype=np.float64) * 255), 0, 255).astype(np.uint8).transpose(1, 2, 0)


def save_image(path, pixels: np.ndarray) -> None:
    """Write (3, H, W) floats in [0, 1] as PNG or PPM, chosen by suffix."""
    path = Path(path)
    fmt = {".png": "PNG", ".ppm": "PPM"}.get(path.suffix.lower())
    if fmt is None:
        raise FormatError(f"{path}: cannot write {path.suffix!r} images")
    Image.fromarray(to_uint8(pixels), "RGB").save(path, fmt)


def save_mask(path, plane: np.ndarray) -> None:
    """Boolean plane as binary PGM, 255 = corrupted."""
    Image.fromarray(np.where(plane, 255, 0).astype(np.uint8), "L").save(Path(path), "PPM")


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127


def _axis_weights(n_in: int, n_out: int):
    # half-pixel centers: src = (dst + 0.5) * in/out - 0.5, clamped to the edge
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img: ImageRecord | np.ndarray, h: int, w: int):
    """Bilinear resize of a (C, H, W) image with half-pixel center alignment."""
    if h < 2 or w < 2:
        raise RangeError(f"resize target must be at least 2x2, got {h}x{w}")
    pixels = img.pixels if isinstance(img, ImageRecord) else img
    src = np.asarray(pixels, dtype=np.float64)
    y0, y1, fy = _axis_weights(src.shape[1], h)
    x0, x1, fx = _axis_weights(src.shape[2], w)
    rows = src[:, y0] * (1 - fy)[None, :, None] + src[:, y1] * fy[None, :, None]
    out = rows[:, :, x0] * (1 - fx) + rows[:, :, x1] * fx
    out = np.clip(out, 0.0, 1.0).astype(np.float32)
    if isinstance(img, ImageRecord):
        return ImageRecord(out, img.path, img.original_size)
    return out


def normalize(x: np.ndarray) -> np.ndarray:
    """[0, 1] -> [-1, 1]; out-of-range inputs are clamped first."""
    x = np.asarray(x)
    if x.size and (x.min() < 0 or x.max() > 1):
        log.warning("normalize: input outside [0, 1], clamping")
        x = np.clip(x, 0, 1)
    return (2 * x - 1).astype(np.float32)


def denormalize(y: np.ndarray) -> np.ndarray:
    """[-1, 1] -> [0, 1], clamped."""
    return np.clip((np.asarray(y, dtype=np.float32) + 1) / 2, 0, 1)


# -- manifests ---------------------------------------------------------

@dataclass
class DatasetManifest:
    name: str
    split: str
    root: str
    entries: list = field(default_factory=list)  # [(relpath, id)]

    def __len__(self):
        return len(self.entries)

    @property
    def paths(self) -> list:
        return [os.path.join(self.root, rel) for rel, _ in self.entries]

    def to_text(self) -> str:
        return "".join(f"{i}\t{rel}\n" for rel, i in self.entries)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path, root, name="dataset", split="train") -> "DatasetManifest":
        entries = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                i, rel = line.split("\t", 1)
                entries.append((rel, int(i)))
        return cls(name, split, str(root), entries)


def list_images(root) -> list:
    root = Path(root)
    rels = [p.relative_to(root).as_posix() for p in root.rglob("*")
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(rels)


class _StemIndex(dict):
    def __init__(self, rels):
        super().__init__((Path(r).stem, r) for r in rels)
        self.known = set(rels)


def _read_list(path, by_stem, first_token=False):
    picked = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key = line.split()[0] if first_token else line
        rel = key if key in by_stem.known else by_stem.get(Path(key).stem)
        if rel is None:
            log.warning("%s: listed image %r not found", path, key)
            continue
        picked.append(rel)
    return picked


def official_split(root, rels, split: str):
    """Relative paths for ``split`` from an official split file, or None.

    Recognized layouts, in order: ``splits/{train,test}.txt`` (one path or
    stem per line), Oxford-IIIT Pet ``annotations/{trainval,test}.txt``, and
    Flowers102 ``setid.mat`` (``trnid`` / ``tstid``, 1-based image numbers).
    """
    root = Path(root)
    by_stem = _StemIndex(rels)
    generic = root / "splits" / f"{split}.txt"
    if generic.exists():
        return _read_list(generic, by_stem)
    pets = root / "annotations" / ("trainval.txt" if split == "train" else "test.txt")
    if pets.exists():
        return _read_list(pets, by_stem, first_token=True)
    setid = root / "setid.mat"
    if setid.exists():
        from scipy.io import loadmat
        ids = loadmat(setid)["trnid" if split == "train" else "tstid"].ravel()
        picked = []
        for k in ids:
            rel = by_stem.get(f"image_{int(k):05d}")
            if rel is None:
                log.warning("%s: image_%05d not found", setid, int(k))
            else:
                picked.append(rel)
        return picked
    return None


def fraction_split(n: int, train_fraction: float, seed: int):
    """Seeded split of ``range(n)``: sorted (train, test) index lists."""
    if not 0.0 < train_fraction <= 1.0:
        raise RangeError(f"train fraction must lie in (0, 1], got {train_fraction}")
    order = make_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    return sorted(order[:n_train].tolist()), sorted(order[n_train:].tolist())


def scan_dataset(root, split: str = "train", name: str | None = None,
                 train_fraction: float = 0.8, seed: int = 0,
                 split_rule: str = "auto") -> DatasetManifest:
    """Deterministic manifest of one split of an image folder.

    ``split_rule`` is ``auto`` (official split file if present, else the
    seeded fraction split), ``official`` or ``fraction``.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDatasetError(f"{root}: not a directory")
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    rels = list_images(root)
    if not rels:
        raise EmptyDatasetError(f"{root}: no PNG/PPM images found")
    picked = None
    if split_rule in ("auto", "official"):
        picked = official_split(root, rels, split)
        if picked is None and split_rule == "official":
            raise EmptyDatasetError(f"{root}: no official split file")
    if picked is None:
        train_idx, test_idx = fraction_split(len(rels), train_fraction, seed)
        picked = [rels[i] for i in (train_idx if split == "train" else test_idx)]
    picked = sorted(set(picked))
    return DatasetManifest(name or root.name, split, str(root),
                           [(rel, i) for i, rel in enumerate(picked)])


def load_manifest_images(manifest: DatasetManifest, size: int) -> np.ndarray:
    """Load, resize and stack a manifest's images: (N, 3, size, size) in [0, 1]."""
    out = np.empty((len(manifest), 3, size, size), dtype=np.float32)
    for k, path in enumerate(manifest.paths):
        rec = load_image(path)
        out[k] = resize_bilinear(rec, size, size).pixels
    return out


# -- synthetic images ----------------------------------------------------

def synthetic_images(n: int, size: int, seed: int = 0) -> np.ndarray:
    """Smooth random RGB images in [0.05, 0.95], shape (n, 3, size, size).

    Each image is a colour gradient plus a few Gaussian blobs, which gives
    the spatial correlation that inpainting relies on.
    """
    rng = make_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")
    out = np.empty((n, 3, size, size), dtype=np.float64)
    for k in range(n):
        base = rng.uniform(0.2, 0.8, size=3)
        tilt = rng.uniform(-0.3, 0.3, size=(3, 2))
        img = base[:, None, None] + tilt[:, 0, None, None] * (yy - 0.5) + tilt[:, 1, None, None] * (xx - 0.5)
        for _ in range(3):
            cy, cx = rng.uniform(0, 1, size=2)
            r = rng.uniform(0.1, 0.3)
            amp = rng.uniform(-0.4, 0.4, size=3)
            blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
            img += amp[:, None, None] * blob
        out[k] = img
    return np.clip(out, 0.05, 0.95).astype(np.float32)
