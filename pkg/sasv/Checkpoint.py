# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Binary checkpoint codec for ModelParams.

Layout, all integers little-endian:

    b"SASV"                      magic
    u32                          format version
    u64                          header length in bytes
    header                       UTF-8 JSON, sorted keys
    f32 payloads                 one per tensor, in header order

The header lists every tensor as [name, shape] in fixed order, plus the
embedding normalization flag.
"""
import json
import logging
import struct

import numpy as np

from sasv.Datatypes import ContractError
from sasv.Model import PARAM_NAMES, ModelConfig, ModelParams
from sasv.Storage import atomic_write

# logger
_logger = logging.getLogger(__name__)


# Exceptions
class CheckpointError(ContractError):
    """Exception raised when a checkpoint file cannot be decoded."""

    pass


CHECKPOINT_MAGIC = b"SASV"
CHECKPOINT_VERSION = 1
_PREAMBLE = struct.Struct("<4sIQ")


def _tensor_bytes(array) -> bytes:
    return np.ascontiguousarray(array, dtype="<f4").tobytes()


def _header(params: ModelParams) -> bytes:
    header = {
        "normalize": bool(params.config.normalize),
        "tensors": [[name, list(params[name].shape)] for name in PARAM_NAMES],
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(params: ModelParams, path):
    """Write params to path; the file appears only once fully written."""
    header = _header(params)
    with atomic_write(path, "wb") as fh:
        fh.write(_PREAMBLE.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        for name in PARAM_NAMES:
            fh.write(_tensor_bytes(params[name]))
    _logger.info("saved checkpoint %s", path)


def _config_from_shapes(shapes, normalize) -> ModelConfig:
    asv_dim, asv_out = shapes["f_asv_weights"]
    raw_dim, raw_hidden = shapes["f_raw_w1"]
    return ModelConfig(
        asv_dim=asv_dim,
        raw_dim=raw_dim,
        asv_out=asv_out,
        raw_hidden=raw_hidden,
        raw_out=shapes["f_raw_w2"][1],
        embed_dim=shapes["f_c_bias"][0],
        n_speakers=shapes["asv_head_class_weights"][0],
        normalize=normalize,
    )


def load_checkpoint(path) -> ModelParams:
    """Read a checkpoint written by save_checkpoint(); tensors come back float64."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _PREAMBLE.size:
        raise CheckpointError("%s: truncated preamble" % path)
    magic, version, header_len = _PREAMBLE.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError("%s: bad magic %r, expected %r" % (path, magic, CHECKPOINT_MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError("%s: unsupported checkpoint version %d" % (path, version))
    offset = _PREAMBLE.size
    if len(blob) < offset + header_len:
        raise CheckpointError("%s: truncated header" % path)
    try:
        header = json.loads(blob[offset:offset + header_len].decode("utf-8"))
        entries = [(str(name), tuple(int(d) for d in shape)) for name, shape in header["tensors"]]
        normalize = bool(header["normalize"])
    except (ValueError, KeyError, TypeError) as err:
        raise CheckpointError("%s: malformed header: %s" % (path, err))
    names = [name for name, _ in entries]
    if names != PARAM_NAMES:
        raise CheckpointError("%s: unexpected tensor list %s" % (path, names))
    offset += header_len
    tensors = {}
    for name, shape in entries:
        size = 4 * int(np.prod(shape))
        if len(blob) < offset + size:
            raise CheckpointError(
                "%s: truncated payload: tensor '%s' needs %d bytes, %d left"
                % (path, name, size, len(blob) - offset)
            )
        tensors[name] = (
            np.frombuffer(blob, dtype="<f4", count=size // 4, offset=offset)
            .reshape(shape)
            .astype(np.float64)
        )
        offset += size
    if offset != len(blob):
        raise CheckpointError("%s: %d bytes after the last tensor" % (path, len(blob) - offset))
    try:
        config = _config_from_shapes(dict(entries), normalize)
        params = ModelParams(tensors, config)
    except (ContractError, ValueError) as err:
        raise CheckpointError("%s: %s" % (path, err))
    _logger.debug("loaded checkpoint %s", path)
    return params
