"""Little-endian fixed-width bit packing.

Value i occupies global bits [i*w, (i+1)*w), least significant bit first; bytes
are filled LSB first and the final byte is zero-padded.
"""

from __future__ import annotations

import numpy as np


class PackingError(ValueError):
    pass


def pack(values, width: int) -> bytes:
    vals = np.asarray(values, dtype=np.uint64).ravel()
    if width < 1 or width > 63:
        raise PackingError(f"unsupported width {width}")
    if vals.size and int(vals.max()) >> width:
        raise PackingError(f"value does not fit in {width} bits")
    bits = ((vals[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def unpack(data: bytes, width: int, count: int) -> np.ndarray:
    """Inverse of :func:`pack`; non-zero padding bits are rejected."""
    nbits = width * count
    if len(data) != packed_len(width, count):
        raise PackingError(f"expected {packed_len(width, count)} bytes, got {len(data)}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits[nbits:].any():
        raise PackingError("non-zero padding bits")
    bits = bits[:nbits].reshape(count, width).astype(np.uint64)
    return (bits << np.arange(width, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


def packed_len(width: int, count: int) -> int:
    return (width * count + 7) // 8
