"""Test feature files, manifests and atomic writes."""
import os
import struct

import numpy as np
import pytest

from sasv import Storage
from sasv.Storage import StorageError


def test_features_round_trip(tmp_path):
    path = tmp_path / "x.sasf"
    matrix = np.arange(12, dtype=np.float32).reshape(4, 3) / 8.0
    Storage.write_features(path, matrix)
    blob = path.read_bytes()
    assert blob[:4] == b"SASF"
    assert struct.unpack("<I", blob[4:8]) == (1,)
    assert len(blob) == 8 + 4 * 12
    back = Storage.read_features(path, 4)
    assert back.dtype == np.float64
    assert np.array_equal(back, matrix)


def test_features_errors(tmp_path):
    path = tmp_path / "x.sasf"
    Storage.write_features(path, np.ones((3, 2)))
    with pytest.raises(StorageError):
        Storage.read_features(path, 4)
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(StorageError):
        Storage.read_features(path, 3)
    path.write_bytes(b"SASF" + struct.pack("<I", 9))
    with pytest.raises(StorageError):
        Storage.read_features(path, 0)
    with pytest.raises(StorageError):
        Storage.write_features(path, np.ones(3))


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "manifest.txt"
    rows = [("LA_T_0000001", "LA_0001", "bonafide", "train"), ("LA_E_0000001", "LA_0013", "A07", "eval")]
    Storage.write_manifest(path, rows)
    frame = Storage.read_manifest(path)
    assert list(frame.columns) == Storage.MANIFEST_COLUMNS
    assert [tuple(r) for r in frame.itertuples(index=False)] == rows


def test_manifest_missing_field(tmp_path):
    path = tmp_path / "manifest.txt"
    path.write_text("LA_T_0000001 LA_0001 bonafide train\nLA_T_0000002 LA_0001 bonafide\n")
    with pytest.raises(StorageError):
        Storage.read_manifest(path)


@pytest.mark.parametrize(
    "text",
    [
        b"LA_T_0000001 LA_0001 bonafide train\nLA_T_0000002 LA_0001 bonafide train extra\n",
        b"LA_T_0000001 LA_0001 bonafide train extra\nLA_T_0000002 LA_0001 bonafide train\n",
        b"LA_T_0000001 LA_0001 bonafide train\nLA_T_\xe9 LA_0001 bonafide train\n",
    ],
)
def test_manifest_malformed(tmp_path, text):
    path = tmp_path / "manifest.txt"
    path.write_bytes(text)
    with pytest.raises(StorageError):
        Storage.read_manifest(path)


def test_atomic_write_failure_leaves_nothing(tmp_path):
    """A failing writer leaves neither the target nor a temporary file."""
    path = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with Storage.atomic_write(path) as fh:
            fh.write("partial")
            raise RuntimeError("disk full")
    assert not path.exists()
    assert os.listdir(tmp_path) == []


def test_atomic_write_keeps_old_file(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("old")
    with pytest.raises(RuntimeError):
        with Storage.atomic_write(path) as fh:
            fh.write("new")
            raise RuntimeError("interrupted")
    assert path.read_text() == "old"
    with Storage.atomic_write(path) as fh:
        fh.write("new")
    assert path.read_text() == "new"
