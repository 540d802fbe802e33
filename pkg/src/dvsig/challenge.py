"""The challenge hash: arbitrary input to a weight-kappa, +/-1 ring element."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from dvsig import bitpack
from dvsig.params import Params
from dvsig.ring import Ring, RingElement

HASH_LABEL = b"LaSDVS-v1-H"


@dataclass(frozen=True)
class ChallengeElement:
    """A ring element with exactly kappa nonzero coefficients, each +1 or -1."""

    ring: Ring
    positions: tuple[int, ...]  # strictly increasing
    signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.signs):
            raise ValueError("positions and signs differ in length")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("positions must be strictly increasing")
        if self.positions and not 0 <= self.positions[0] <= self.positions[-1] < self.ring.n:
            raise ValueError("position out of range")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")

    @property
    def weight(self) -> int:
        return len(self.positions)

    def element(self) -> RingElement:
        c = np.zeros(self.ring.n, dtype=np.int64)
        c[list(self.positions)] = self.signs
        return RingElement(self.ring, c)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.positions, dtype=np.int64), np.array(self.signs, dtype=np.int64)

    @classmethod
    def from_element(cls, elem: RingElement, kappa: int | None = None) -> "ChallengeElement":
        c = elem.centered()
        pos = np.nonzero(c)[0]
        if np.any(np.abs(c[pos]) != 1):
            raise ValueError("challenge coefficients must be 0 or +/-1")
        if kappa is not None and pos.size != kappa:
            raise ValueError(f"challenge weight {pos.size} != {kappa}")
        return cls(elem.ring, tuple(int(p) for p in pos), tuple(int(c[p]) for p in pos))


class XofReader:
    """Sequential reader over a SHAKE-128 output stream."""

    def __init__(self, data: bytes):
        self._h = hashlib.shake_128(data)
        self._buf = b""
        self._pos = 0

    def read(self, nbytes: int) -> bytes:
        need = self._pos + nbytes
        if need > len(self._buf):
            self._buf = self._h.digest(max(need, 2 * len(self._buf), 168))
        out = self._buf[self._pos : need]
        self._pos = need
        return out


def _encode_ring(elem: RingElement) -> bytes:
    return bitpack.pack(elem.coeffs, elem.ring.k)


def hash_input_encode(w: RingElement, t: RingElement, s: RingElement, mu: bytes) -> bytes:
    """Label, then each of w, t, s, mu with a 4-byte big-endian length prefix."""
    if not (w.ring == t.ring == s.ring):
        raise ValueError("hash inputs must share a ring")
    parts = [HASH_LABEL]
    for blob in (_encode_ring(w), _encode_ring(t), _encode_ring(s), bytes(mu)):
        parts.append(len(blob).to_bytes(4, "big"))
        parts.append(blob)
    return b"".join(parts)


def _uniform_index(xof: XofReader, bound: int) -> int:
    """Uniform integer in [0, bound) from 32-bit lanes, rejecting the biased tail."""
    limit = (1 << 32) - ((1 << 32) % bound)
    while True:
        x = int.from_bytes(xof.read(4), "little")
        if x < limit:
            return x % bound


def expand_challenge(xof: XofReader | bytes, pp: Params | tuple[Ring, int]) -> ChallengeElement:
    """Fisher-Yates style placement of kappa signed ones among n positions."""
    ring, kappa = (pp.ring, pp.kappa) if isinstance(pp, Params) else pp
    if isinstance(xof, (bytes, bytearray)):
        xof = XofReader(bytes(xof))
    n = ring.n
    sign_bits = int.from_bytes(xof.read((kappa + 7) // 8), "little")
    c = [0] * n
    for idx, i in enumerate(range(n - kappa, n)):
        j = _uniform_index(xof, i + 1)
        c[i] = c[j]
        c[j] = -1 if (sign_bits >> idx) & 1 else 1
    pos = tuple(p for p in range(n) if c[p])
    return ChallengeElement(ring, pos, tuple(c[p] for p in pos))


def hash_challenge(w: RingElement, t: RingElement, s: RingElement, mu: bytes, pp: Params) -> ChallengeElement:
    return expand_challenge(XofReader(hash_input_encode(w, t, s, mu)), pp)
