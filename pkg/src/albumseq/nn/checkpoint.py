"""Versioned binary checkpoints.

Layout: an 8-byte magic string, a little-endian uint32 header length, a JSON
header (format version, model configuration, normalization statistics, block
names and shapes, training metadata), then one raw little-endian float32
block per parameter array in the declared order.

Parameters are held at float32 precision in memory (see
``model.quantize32``), so save -> load is lossless and a reloaded model
reproduces forward passes bit for bit.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..errors import CheckpointError
from .model import ModelConfig, OrderingModel, parameter_shapes
from .autodiff import Tensor

MAGIC = b"ALBSEQCK"
FORMAT_VERSION = 1


def save_checkpoint(model: OrderingModel, path) -> None:
    names = list(parameter_shapes(model.cfg))
    header = {
        "format_version": FORMAT_VERSION,
        "config": model.config_dict(),
        "norm_mean": [float(x) for x in model.norm_mean],
        "norm_std": [float(x) for x in model.norm_std],
        "blocks": [{"name": n, "shape": list(model.params[n].shape)} for n in names],
        "meta": model.meta,
    }
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(os.fspath(path), "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        for n in names:
            block = model.params[n].data.astype("<f4")
            if not np.all(np.isfinite(block)):
                raise CheckpointError(f"refusing to save non-finite parameter block {n!r}")
            fh.write(block.tobytes(order="C"))


def load_checkpoint(path) -> OrderingModel:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not an albumseq checkpoint (bad magic bytes)")
    (header_len,) = struct.unpack("<I", blob[len(MAGIC) : len(MAGIC) + 4])
    body_start = len(MAGIC) + 4 + header_len
    if len(blob) < body_start:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob[len(MAGIC) + 4 : body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header ({e})") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {header.get('format_version')!r}"
        )
    try:
        cfg = ModelConfig(**header["config"])
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"{path}: bad config in header ({e})") from None

    expected = parameter_shapes(cfg)
    declared = header.get("blocks", [])
    if [b["name"] for b in declared] != list(expected):
        raise CheckpointError(f"{path}: parameter block names do not match the config")
    params = {}
    offset = body_start
    for block in declared:
        name, shape = block["name"], tuple(block["shape"])
        if shape != expected[name]:
            raise CheckpointError(
                f"{path}: block {name!r} has shape {shape}, config implies {expected[name]}"
            )
        nbytes = 4 * int(np.prod(shape, dtype=np.int64)) if shape else 4
        raw = blob[offset : offset + nbytes]
        if len(raw) != nbytes:
            raise CheckpointError(f"{path}: truncated at block {name!r}")
        offset += nbytes
        arr = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"{path}: non-finite values in block {name!r}")
        params[name] = Tensor(arr)
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} unexpected trailing bytes")

    norm_mean = np.array(header["norm_mean"], dtype=np.float64)
    norm_std = np.array(header["norm_std"], dtype=np.float64)
    return OrderingModel(cfg, params, norm_mean, norm_std, meta=header.get("meta", {}))
