"""BFCK checkpoint format.

Layout: magic "BFCK", uint32 version (little-endian), uint64 header
length, UTF-8 JSON header {"config": ..., "tensors": [{"name", "shape",
"offset", "len"}, ...]} with the tensor index sorted by name, then raw
32-bit little-endian floats.  Offsets are relative to the start of the
data section; lengths are in bytes.
"""
from __future__ import annotations

import json
import struct

import numpy as np
import torch

from ..errors import ParseError
from .model import DenoiserModel
from .training import TrainConfig, build_model

MAGIC = b"BFCK"
VERSION = 1


def save_checkpoint(path, config: dict, tensors: dict[str, np.ndarray]) -> None:
    index = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = arr.tobytes()
        index.append({"name": name, "shape": list(arr.shape),
                      "offset": offset, "len": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"config": config, "tensors": index},
                        sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ParseError(f"bad checkpoint magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ParseError(f"unsupported checkpoint version {version}")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        data = fh.read()
    tensors = {}
    for entry in header["tensors"]:
        raw = data[entry["offset"]:entry["offset"] + entry["len"]]
        arr = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"]).copy()
        tensors[entry["name"]] = arr
    return header["config"], tensors


def save_model(path, model: DenoiserModel, cfg: TrainConfig) -> None:
    tensors = {name: param.detach().cpu().numpy()
               for name, param in model.state_dict().items()}
    save_checkpoint(path, cfg.to_dict(), tensors)


def load_model(path) -> tuple[DenoiserModel, TrainConfig]:
    config, tensors = load_checkpoint(path)
    cfg = TrainConfig.from_dict(config)
    model = build_model(cfg)
    state = {name: torch.from_numpy(arr) for name, arr in tensors.items()}
    model.load_state_dict(state)
    model.eval()
    return model, cfg
