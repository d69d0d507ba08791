"""Self-describing checkpoint container.

A checkpoint is one JSON file holding the format version, the model
name, a config snapshot, the vocabulary hash it was trained against, and
every parameter as (name, shape, dtype, base64 little-endian raw bytes).
Round trips are bit-exact; loads refuse version, model, or vocabulary
mismatches and corrupt files.
"""

from __future__ import annotations

import base64
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .tensor import Parameter

FORMAT_VERSION = 1

_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def _little_endian_code(dtype: np.dtype) -> str:
    if dtype == np.float32:
        return "<f4"
    if dtype == np.float64:
        return "<f8"
    raise CheckpointError(f"unsupported parameter dtype {dtype}")


@dataclass
class CheckpointData:
    model: str
    config: dict
    vocab_hash: str
    arrays: dict[str, np.ndarray]


def save_checkpoint(path, model: str, params, config: dict, vocab_hash: str):
    entries = []
    for p in sorted(params, key=lambda p: p.name):
        code = _little_endian_code(p.data.dtype)
        raw = np.ascontiguousarray(p.data.astype(_DTYPES[code], copy=False)).tobytes()
        entries.append(
            {
                "name": p.name,
                "shape": list(p.data.shape),
                "dtype": code,
                "data": base64.b64encode(raw).decode("ascii"),
            }
        )
    payload = {
        "format_version": FORMAT_VERSION,
        "model": model,
        "config": config,
        "vocab_hash": vocab_hash,
        "params": entries,
    }
    atomic_write_text(path, json.dumps(payload, sort_keys=True))


def load_checkpoint(path, expected_model: str | None = None,
                    expected_vocab_hash: str | None = None) -> CheckpointData:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        version = payload["format_version"]
        model = payload["model"]
        config = payload["config"]
        vocab_hash = payload["vocab_hash"]
        entries = payload["params"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CheckpointError(f"corrupt or truncated checkpoint {path}: {exc}") from exc
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version} != supported {FORMAT_VERSION}"
        )
    if expected_model is not None and model != expected_model:
        raise CheckpointError(f"checkpoint holds model {model!r}, expected {expected_model!r}")
    if expected_vocab_hash is not None and vocab_hash != expected_vocab_hash:
        raise CheckpointError(
            f"vocabulary hash mismatch: checkpoint {vocab_hash} vs current {expected_vocab_hash}"
        )
    arrays: dict[str, np.ndarray] = {}
    try:
        for entry in entries:
            dtype = _DTYPES[entry["dtype"]]
            raw = base64.b64decode(entry["data"].encode("ascii"), validate=True)
            shape = tuple(int(n) for n in entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            if len(raw) != count * dtype.itemsize:
                raise CheckpointError(
                    f"parameter {entry['name']} data length {len(raw)} != expected {count * dtype.itemsize}"
                )
            arrays[entry["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    return CheckpointData(model=model, config=config, vocab_hash=vocab_hash, arrays=arrays)


def apply_state(params, arrays: dict[str, np.ndarray]):
    """Load checkpoint arrays into live Parameters by name."""
    by_name = {p.name: p for p in params}
    missing = sorted(set(by_name) - set(arrays))
    extra = sorted(set(arrays) - set(by_name))
    if missing or extra:
        raise CheckpointError(
            f"parameter name mismatch: missing {missing[:3]}, unexpected {extra[:3]}"
        )
    for name, p in by_name.items():
        arr = arrays[name]
        if arr.shape != p.data.shape:
            raise CheckpointError(
                f"parameter {name} shape {arr.shape} != model shape {p.data.shape}"
            )
        p.data = arr.astype(p.data.dtype, copy=True)


def atomic_write_text(path, text: str):
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
