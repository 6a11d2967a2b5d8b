# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""On-disk layout of synthetic datasets, and atomic file writes.

A dataset directory holds a whitespace-separated manifest (one utterance
per line: id, speaker, source, split) and one SASF feature file per
encoder branch: the magic "SASF", a little-endian u32 format version, then
one little-endian float32 vector per utterance in manifest order.
"""
import contextlib
import logging
import os
import struct
import tempfile

import numpy as np
import pandas as pd

from sasv.Datatypes import ContractError

# logger
_logger = logging.getLogger(__name__)


# Exceptions
class StorageError(ContractError):
    """Exception raised when a dataset file is malformed."""

    pass


SASF_MAGIC = b"SASF"
SASF_VERSION = 1
MANIFEST_COLUMNS = ["id", "speaker", "source", "split"]


@contextlib.contextmanager
def atomic_write(path, mode="w", **kwargs):
    """Write to a temporary file beside path and rename it into place.

    If the block raises, the temporary file is removed and path is untouched.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp)
        raise
    _logger.debug("wrote %s", path)


def write_features(path, matrix):
    """Write an (n, dim) matrix as a SASF feature file."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise StorageError("feature matrix must be 2-D, got shape %s" % (matrix.shape,))
    with atomic_write(path, "wb") as fh:
        fh.write(SASF_MAGIC)
        fh.write(struct.pack("<I", SASF_VERSION))
        fh.write(matrix.astype("<f4").tobytes())


def read_features(path, n_rows: int) -> np.ndarray:
    """Read a SASF feature file holding n_rows vectors; returns float64 rows."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != SASF_MAGIC:
        raise StorageError("%s: bad magic %r, expected %r" % (path, blob[:4], SASF_MAGIC))
    if len(blob) < 8:
        raise StorageError("%s: truncated header" % path)
    (version,) = struct.unpack("<I", blob[4:8])
    if version != SASF_VERSION:
        raise StorageError("%s: unsupported SASF version %d" % (path, version))
    payload = blob[8:]
    if n_rows == 0:
        if payload:
            raise StorageError("%s: payload present but manifest is empty" % path)
        return np.zeros((0, 0))
    if len(payload) % (4 * n_rows):
        raise StorageError(
            "%s: %d payload bytes do not split into %d float32 vectors"
            % (path, len(payload), n_rows)
        )
    dim = len(payload) // (4 * n_rows)
    return np.frombuffer(payload, dtype="<f4").reshape(n_rows, dim).astype(np.float64)


def write_manifest(path, rows):
    """rows: iterable of (id, speaker, source, split) tuples."""
    with atomic_write(path, "w", encoding="ascii") as fh:
        for row in rows:
            fh.write(" ".join(row) + "\n")


def read_manifest(path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, sep=r"\s+", header=None, dtype=str, encoding="ascii")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=MANIFEST_COLUMNS)
    except (pd.errors.ParserError, UnicodeDecodeError) as err:
        raise StorageError("%s: malformed manifest: %s" % (path, err)) from err
    # the field count is fixed by the first line
    if frame.shape[1] != len(MANIFEST_COLUMNS) or frame.isna().any().any():
        raise StorageError("%s: every manifest line needs 4 fields" % path)
    frame.columns = MANIFEST_COLUMNS
    return frame
