import struct

import numpy as np
import pytest

from ssrgan.checkpoint import Checkpoint, from_bytes, load_checkpoint, save_checkpoint, to_bytes
from ssrgan.core import make_rng
from ssrgan.errors import CheckpointError
from ssrgan.training import Trainer


def _ckpt():
    rng = make_rng(0)
    return Checkpoint({"a": 1, "b": [1, 2]}, epoch=3, step=12,
                      tensors={"w": rng.standard_normal((2, 3)).astype(np.float32),
                               "s": np.float32([0.25])},
                      meta={"adam_t": {"G": 12}})


def test_roundtrip_byte_identical(tmp_path):
    save_checkpoint(_ckpt(), tmp_path / "a.ssrg")
    loaded = load_checkpoint(tmp_path / "a.ssrg")
    save_checkpoint(loaded, tmp_path / "b.ssrg")
    assert (tmp_path / "a.ssrg").read_bytes() == (tmp_path / "b.ssrg").read_bytes()
    np.testing.assert_array_equal(loaded.tensors["w"], _ckpt().tensors["w"])
    assert loaded.epoch == 3 and loaded.step == 12 and loaded.config == {"a": 1, "b": [1, 2]}


def test_layout_preamble():
    buf = to_bytes(_ckpt())
    assert buf[:4] == b"SSRG"
    version, hlen = struct.unpack("<II", buf[4:12])
    assert version == 1 and 12 + hlen + 4 * 7 == len(buf)


def test_flipped_payload_byte_rejected():
    buf = bytearray(to_bytes(_ckpt()))
    buf[-3] ^= 0x01
    with pytest.raises(CheckpointError, match="'s'.*checksum"):
        from_bytes(bytes(buf))


def test_unknown_version_rejected():
    buf = bytearray(to_bytes(_ckpt()))
    buf[4:8] = struct.pack("<I", 999)
    with pytest.raises(CheckpointError, match="unsupported checkpoint version 999"):
        from_bytes(bytes(buf))


@pytest.mark.parametrize("mangle", [lambda b: b"XXXX" + b[4:], lambda b: b[:8], lambda b: b[:-1],
                                    lambda b: b + b"\0"])
def test_structural_damage_rejected(mangle):
    with pytest.raises(CheckpointError):
        from_bytes(mangle(to_bytes(_ckpt())))


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "none.ssrg")


def test_non_float32_refused():
    with pytest.raises(CheckpointError):
        to_bytes(Checkpoint({}, 0, tensors={"x": np.zeros(2)}))


def test_trainer_state_roundtrip(tiny_cfg):
    tr = Trainer(tiny_cfg)
    ck = from_bytes(to_bytes(tr.to_checkpoint()))
    clone = Trainer.from_checkpoint(ck)
    assert to_bytes(clone.to_checkpoint()) == to_bytes(tr.to_checkpoint())


def test_model_mismatch_rejected(tiny_cfg):
    ck = Trainer(tiny_cfg).to_checkpoint()
    with pytest.raises(CheckpointError):
        Trainer.from_checkpoint(ck, tiny_cfg.replace(gen_width=4))
