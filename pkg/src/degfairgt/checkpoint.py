"""Binary checkpoints: named float64 arrays with bit-exact round trips.

Layout: magic "DFGT", version u32, then repeated records of
{name-length u32, name bytes (utf-8), rank u32, dims u32 x rank,
payload little-endian f64}. All integers little-endian. Writes go to a
temp file in the target directory and are renamed into place.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

__all__ = ["CheckpointError", "save_arrays", "load_arrays",
           "save_checkpoint", "load_checkpoint"]

MAGIC = b"DFGT"
VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable, truncated, or version-incompatible checkpoint file."""


def save_arrays(arrays: dict[str, np.ndarray], path) -> None:
    path = Path(path)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    for name, arr in arrays.items():
        # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d.
        arr = np.asarray(arr, dtype=np.float64)
        encoded = name.encode("utf-8")
        blob += struct.pack("<I", len(encoded))
        blob += encoded
        blob += struct.pack("<I", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.astype("<f8", copy=False).tobytes()
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(bytes(blob))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data, self.off, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated at byte {self.off}")
        chunk = self.data[self.off:self.off + n]
        self.off += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_arrays(path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
    r = _Reader(data, path)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    arrays: dict[str, np.ndarray] = {}
    while r.off < len(data):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        dims = tuple(r.u32() for _ in range(rank))
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        payload = r.take(8 * count)
        arrays[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
    return arrays


def save_checkpoint(model, optimizer, path, *, extra=None) -> None:
    """Persist model parameters plus Adam moments and step count."""
    arrays: dict[str, np.ndarray] = {}
    for name, p in model.params.items():
        arrays["param." + name] = p.data
    if optimizer is not None:
        for name in model.params:
            arrays["adam.m." + name] = optimizer.m[name]
            arrays["adam.v." + name] = optimizer.v[name]
        arrays["adam.t"] = np.array(float(optimizer.t))
    if extra:
        for name, value in extra.items():
            arrays["meta." + name] = np.asarray(value, dtype=np.float64)
    save_arrays(arrays, path)


def load_checkpoint(model, optimizer, path) -> dict[str, np.ndarray]:
    """Restore parameters (and moments if an optimizer is given) in place.

    Returns the meta.* records. Every model parameter must be present with
    a matching shape.
    """
    arrays = load_arrays(path)
    for name, p in model.params.items():
        key = "param." + name
        if key not in arrays:
            raise CheckpointError(f"missing parameter record {key}")
        if arrays[key].shape != p.data.shape:
            raise CheckpointError(
                f"{key}: shape {arrays[key].shape} != expected {p.data.shape}")
        p.data = arrays[key]
        p.grad = None
    if optimizer is not None:
        for name in model.params:
            mk, vk = "adam.m." + name, "adam.v." + name
            if mk not in arrays or vk not in arrays:
                raise CheckpointError(f"missing optimizer moments for {name}")
            optimizer.m[name] = arrays[mk]
            optimizer.v[name] = arrays[vk]
        if "adam.t" not in arrays:
            raise CheckpointError("missing optimizer step count adam.t")
        optimizer.t = int(arrays["adam.t"])
    return {k[len("meta."):]: v for k, v in arrays.items() if k.startswith("meta.")}
