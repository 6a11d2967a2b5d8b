"""Test the binary checkpoint codec."""
import json
import os
import struct

import numpy as np
import pytest

from sasv import Checkpoint
from sasv.Checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from sasv.Model import PARAM_NAMES, ModelConfig, ModelParams

CONFIG = ModelConfig(asv_dim=5, raw_dim=4, asv_out=3, raw_hidden=6, raw_out=2, embed_dim=7, n_speakers=3)


@pytest.fixture
def params():
    return ModelParams.initialize(CONFIG, 11)


def test_round_trip(params, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    back = load_checkpoint(path)
    assert back.config == CONFIG
    for name in PARAM_NAMES:
        assert back[name].dtype == np.float64
        assert np.array_equal(back[name], params[name].astype(np.float32))


def test_resave_is_byte_identical(params, tmp_path):
    first = tmp_path / "a.ckpt"
    second = tmp_path / "b.ckpt"
    save_checkpoint(params, first)
    save_checkpoint(load_checkpoint(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_layout(params, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    blob = path.read_bytes()
    magic, version, header_len = struct.unpack_from("<4sIQ", blob)
    assert magic == b"SASV"
    assert version == 1
    header = json.loads(blob[16:16 + header_len])
    assert [name for name, _ in header["tensors"]] == PARAM_NAMES
    assert header["normalize"] is True
    payload = sum(4 * int(np.prod(shape)) for _, shape in header["tensors"])
    assert len(blob) == 16 + header_len + payload


def test_truncated_file_names_tensor(params, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(CheckpointError) as err:
        load_checkpoint(path)
    assert "truncated payload" in str(err.value)
    assert PARAM_NAMES[-1] in str(err.value)


def test_trailing_bytes(params, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    path.write_bytes(path.read_bytes() + b"\0\0\0\0")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_bad_magic_and_version(params, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    blob = path.read_bytes()
    path.write_bytes(b"SASF" + blob[4:])
    with pytest.raises(CheckpointError) as err:
        load_checkpoint(path)
    assert "magic" in str(err.value)
    path.write_bytes(blob[:4] + struct.pack("<I", 2) + blob[8:])
    with pytest.raises(CheckpointError) as err:
        load_checkpoint(path)
    assert "version" in str(err.value)
    path.write_bytes(blob[:10])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_malformed_header(tmp_path):
    path = tmp_path / "model.ckpt"
    header = b"{not json"
    path.write_bytes(struct.pack("<4sIQ", b"SASV", 1, len(header)) + header)
    with pytest.raises(CheckpointError) as err:
        load_checkpoint(path)
    assert "malformed header" in str(err.value)


def test_failed_save_leaves_no_file(params, tmp_path, monkeypatch):
    """A failure while writing tensors leaves no partial checkpoint."""
    calls = []

    def failing(array):
        calls.append(array)
        if len(calls) == 3:
            raise OSError("disk full")
        return np.ascontiguousarray(array, dtype="<f4").tobytes()

    monkeypatch.setattr(Checkpoint, "_tensor_bytes", failing)
    path = tmp_path / "model.ckpt"
    with pytest.raises(OSError):
        save_checkpoint(params, path)
    assert not path.exists()
    assert os.listdir(tmp_path) == []
