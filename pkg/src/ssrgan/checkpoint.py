"""Binary checkpoint files.

Layout (all integers little-endian)::

    b"SSRG"                 magic
    u32  version            currently 1
    u32  header_len         bytes of the JSON header that follows
    header                  UTF-8 JSON, keys sorted
    payload                 raw float32 arrays in directory order

The header holds the run configuration, counters, RNG state and a tensor
directory; each entry records name, dtype code (0 = float32), rank,
extents, byte offset into the payload, byte length and CRC32.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ssrgan.errors import CheckpointError

MAGIC = b"SSRG"
VERSION = 1
DTYPE_CODES = {0: np.dtype("<f4")}


@dataclass
class Checkpoint:
    config: dict
    epoch: int
    step: int = 0
    tensors: dict = field(default_factory=dict)  # name -> float32 ndarray, ordered
    meta: dict = field(default_factory=dict)     # adam counters, rng state, ...
    version: int = VERSION


def to_bytes(ckpt: Checkpoint) -> bytes:
    directory, chunks, offset = [], [], 0
    for name, arr in ckpt.tensors.items():
        arr = np.asarray(arr)
        if arr.dtype != np.float32:
            raise CheckpointError(f"tensor {name!r}: only float32 is serializable, got {arr.dtype}")
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        directory.append({"name": name, "dtype": 0, "rank": arr.ndim, "extents": list(arr.shape),
                          "offset": offset, "length": len(raw), "crc32": zlib.crc32(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = {"config": ckpt.config, "epoch": ckpt.epoch, "step": ckpt.step,
              "meta": ckpt.meta, "tensors": directory}
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<II", ckpt.version, len(hbytes)) + hbytes + b"".join(chunks)


def from_bytes(buf: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(buf) < 12:
        raise CheckpointError(f"{source}: truncated preamble ({len(buf)} bytes)")
    if buf[:4] != MAGIC:
        raise CheckpointError(f"{source}: bad magic {buf[:4]!r}")
    version, hlen = struct.unpack("<II", buf[4:12])
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {version}")
    if 12 + hlen > len(buf):
        raise CheckpointError(f"{source}: truncated header")
    try:
        header = json.loads(buf[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{source}: malformed header: {exc}") from exc
    payload = memoryview(buf)[12 + hlen:]
    tensors, expected_end = {}, 0
    for rec in header["tensors"]:
        name = rec["name"]
        dtype = DTYPE_CODES.get(rec["dtype"])
        if dtype is None:
            raise CheckpointError(f"{source}: tensor {name!r}: unknown dtype code {rec['dtype']}")
        extents = tuple(rec["extents"])
        if len(extents) != rec["rank"]:
            raise CheckpointError(f"{source}: tensor {name!r}: rank {rec['rank']} vs extents {extents}")
        nbytes = int(np.prod(extents, dtype=np.int64)) * dtype.itemsize
        if nbytes != rec["length"]:
            raise CheckpointError(f"{source}: tensor {name!r}: size mismatch "
                                  f"({rec['length']} bytes for extents {extents})")
        start, end = rec["offset"], rec["offset"] + rec["length"]
        if end > len(payload):
            raise CheckpointError(f"{source}: tensor {name!r}: payload truncated")
        raw = bytes(payload[start:end])
        if zlib.crc32(raw) != rec["crc32"]:
            raise CheckpointError(f"{source}: tensor {name!r}: checksum mismatch")
        tensors[name] = np.frombuffer(raw, dtype=dtype).reshape(extents).astype(np.float32)
        expected_end = max(expected_end, end)
    if expected_end != len(payload):
        raise CheckpointError(f"{source}: {len(payload) - expected_end} trailing payload bytes")
    return Checkpoint(header["config"], header["epoch"], header["step"], tensors,
                      header["meta"], version)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    path = Path(path)
    data = to_bytes(ckpt)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: {exc.strerror or exc}") from exc
    return from_bytes(buf, str(path))
