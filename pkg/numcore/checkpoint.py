"""
Binary tensor checkpoint.

Layout (all integers unsigned 32-bit little-endian):
    b"R2M1", count, then per tensor: name length, UTF-8 name, rank,
    extents..., little-endian float64 payload.
"""

import logging
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from config import settings
from numcore.errors import CheckpointError, DataFileNotFoundError

logger = logging.getLogger(__name__)

_U32 = struct.Struct("<I")


def save_tensors(path: Union[str, Path], tensors: Dict[str, np.ndarray]) -> None:
    """Write ``tensors`` in insertion order."""
    chunks = [settings.CHECKPOINT_MAGIC, _U32.pack(len(tensors))]
    for name, array in tensors.items():
        array = np.asarray(array, dtype=np.float64)
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(extent) for extent in array.shape)
        chunks.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    logger.info(f"Saved {len(tensors)} tensors to {path}")


class _Reader:
    def __init__(self, blob: bytes, path: Path):
        self.blob = blob
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.blob):
            raise CheckpointError(f"{self.path}: truncated at byte {self.offset}")
        chunk = self.blob[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]


def load_tensors(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read a checkpoint written by :func:`save_tensors`."""
    path = Path(path)
    if not path.is_file():
        raise DataFileNotFoundError("checkpoint", path)
    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(settings.CHECKPOINT_MAGIC)) != settings.CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes, not an R2M checkpoint")

    tensors: Dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        try:
            name = reader.take(reader.u32()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"{path}: tensor name is not UTF-8") from exc
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        count = int(np.prod(shape)) if shape else 1
        payload = reader.take(8 * count)
        tensors[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
    if reader.offset != len(reader.blob):
        raise CheckpointError(f"{path}: {len(reader.blob) - reader.offset} trailing bytes")
    return tensors
