"""Checkpoint container.

Layout: magic b"SWK1", a little-endian uint32 header length, a UTF-8 JSON
header (model type, config, vocabulary, parameter manifest with name / shape
/ byte offset), then each parameter's values as little-endian float32 in
manifest order. Offsets are relative to the start of the data section.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .corpus import Vocabulary
from .model import ModelConfig, SongwriterModel

MAGIC = b"SWK1"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Malformed or inconsistent checkpoint bytes."""


def _model_classes() -> dict:
    from .baseline import Seq2seqModel

    return {"songwriter": SongwriterModel, "seq2seq": Seq2seqModel}


def save_model(model: SongwriterModel, vocab: Vocabulary) -> bytes:
    manifest = []
    blobs = []
    offset = 0
    for p in model.params():
        raw = np.ascontiguousarray(p.data, dtype="<f4").tobytes()
        manifest.append({"name": p.name, "shape": list(p.data.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format": FORMAT_VERSION,
        "model_type": model.model_type,
        "config": model.config.to_dict(),
        "vocabulary": vocab.to_dict(),
        "manifest": manifest,
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(blobs)


def load_model(data: bytes) -> tuple[SongwriterModel, Vocabulary]:
    if len(data) < 8 or data[:4] != MAGIC:
        raise CheckpointError("not a checkpoint: bad magic bytes")
    (header_len,) = struct.unpack("<I", data[4:8])
    header_end = 8 + header_len
    if len(data) < header_end:
        raise CheckpointError("truncated checkpoint: header incomplete")
    try:
        header = json.loads(data[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"unreadable header: {e}")
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {header.get('format')!r}")
    model_cls = _model_classes().get(header.get("model_type"))
    if model_cls is None:
        raise CheckpointError(f"unknown model type {header.get('model_type')!r}")

    try:
        config = ModelConfig.from_dict(header["config"])
        vocab = Vocabulary.from_dict(header["vocabulary"])
        manifest = header["manifest"]
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"bad header contents: {e}")

    model = model_cls(config, seed=0)
    params = {p.name: p for p in model.params()}
    if set(params) != {entry["name"] for entry in manifest}:
        raise CheckpointError("manifest parameter names do not match the model")

    payload = data[header_end:]
    for entry in manifest:
        p = params[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != p.data.shape:
            raise CheckpointError(
                f"shape mismatch for {entry['name']}: checkpoint {shape}, model {p.data.shape}")
        count = int(np.prod(shape))
        start = entry["offset"]
        end = start + 4 * count
        if end > len(payload):
            raise CheckpointError(f"truncated checkpoint: data missing for {entry['name']}")
        values = np.frombuffer(payload[start:end], dtype="<f4").reshape(shape)
        p.data = values.astype(model.dtype)
        p.grad = np.zeros_like(p.data)
    return model, vocab


def save_model_file(path, model: SongwriterModel, vocab: Vocabulary) -> None:
    with open(path, "wb") as f:
        f.write(save_model(model, vocab))


def load_model_file(path) -> tuple[SongwriterModel, Vocabulary]:
    with open(path, "rb") as f:
        return load_model(f.read())
