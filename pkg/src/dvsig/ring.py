"""Arithmetic in R_q = Z_q[x]/(x^n + 1).

Coefficients are stored canonically in [0, q) as read-only uint64 arrays;
centering to (-q/2, q/2] happens only for norms and decoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from dvsig import kernels


class RingMismatchError(ValueError):
    """Operands live in different rings or have incompatible lengths."""


@dataclass(frozen=True)
class Ring:
    n: int
    q: int

    def __post_init__(self):
        if self.n < 1 or self.n & (self.n - 1):
            raise ValueError(f"ring degree must be a power of two, got {self.n}")
        if self.q < 2:
            raise ValueError(f"modulus must be at least 2, got {self.q}")
        if self.q >= 1 << 62:
            raise ValueError("modulus too large for uint64 arithmetic")
        if not self.is_pow2 and self.q >= 1 << 31:
            raise ValueError("non power-of-two moduli must be below 2**31")

    @property
    def k(self) -> int:
        return (self.q - 1).bit_length()

    @property
    def is_pow2(self) -> bool:
        return self.q & (self.q - 1) == 0

    def element(self, coeffs: Iterable[int]) -> "RingElement":
        return RingElement(self, coeffs)

    def vector(self, rows) -> "RingVector":
        return RingVector(self, rows)

    def zero(self) -> "RingElement":
        return RingElement(self, np.zeros(self.n, dtype=np.uint64))

    def one(self) -> "RingElement":
        c = np.zeros(self.n, dtype=np.uint64)
        c[0] = 1
        return RingElement(self, c)

    def constant(self, value: int) -> "RingElement":
        c = np.zeros(self.n, dtype=np.int64)
        c[0] = value
        return RingElement(self, c)

    def zeros(self, length: int) -> "RingVector":
        return RingVector(self, np.zeros((length, self.n), dtype=np.uint64))

    def reduce(self, values) -> np.ndarray:
        """Canonical uint64 residues of an integer array (any sign)."""
        arr = np.asarray(values)
        if arr.dtype == np.uint64:
            out = arr % np.uint64(self.q) if not self.is_pow2 else arr & np.uint64(self.q - 1)
        elif arr.dtype == object:
            out = np.array([int(x) % self.q for x in arr.ravel()], dtype=np.uint64).reshape(arr.shape)
        else:
            out = np.mod(arr.astype(np.int64), self.q).astype(np.uint64)
        return out

    def center(self, coeffs: np.ndarray) -> np.ndarray:
        """Map canonical residues to (-q/2, q/2] as int64."""
        c = np.asarray(coeffs, dtype=np.int64)
        return np.where(c > self.q // 2, c - self.q, c)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.uint64)
    arr.flags.writeable = False
    return arr


class RingElement:
    """A polynomial of degree < n with canonical coefficients in [0, q)."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: Ring, coeffs):
        arr = np.asarray(coeffs)
        if arr.shape != (ring.n,):
            raise RingMismatchError(f"expected {ring.n} coefficients, got shape {arr.shape}")
        self.ring = ring
        self.coeffs = _frozen(ring.reduce(arr))

    def _check(self, other: "RingElement") -> None:
        if not isinstance(other, RingElement):
            raise TypeError(f"expected RingElement, got {type(other).__name__}")
        if other.ring != self.ring:
            raise RingMismatchError(f"ring mismatch: {self.ring} vs {other.ring}")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        return RingElement(self.ring, self.ring.reduce(self.coeffs + other.coeffs))

    def __sub__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        q = np.uint64(self.ring.q)
        return RingElement(self.ring, self.ring.reduce(self.coeffs + (q - other.coeffs)))

    def __neg__(self) -> "RingElement":
        return RingElement(self.ring, self.ring.reduce(np.uint64(self.ring.q) - self.coeffs))

    def __mul__(self, other):
        if isinstance(other, RingVector):
            return scalar_mul(other, self)
        self._check(other)
        return RingElement(self.ring, kernels.poly_mul(self.coeffs, other.coeffs, self.ring.q))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.ring == other.ring and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.ring, self.coeffs.tobytes()))

    def __repr__(self) -> str:
        return f"RingElement(n={self.ring.n}, q={self.ring.q}, {self.centered().tolist()})"

    def centered(self) -> np.ndarray:
        return self.ring.center(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs.any()


class RingVector:
    """A fixed-length sequence of ring elements, stored as an (m, n) array."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: Ring, rows):
        if isinstance(rows, (list, tuple)) and rows and isinstance(rows[0], RingElement):
            for r in rows:
                if r.ring != ring:
                    raise RingMismatchError("entries must share the vector's ring")
            arr = np.stack([r.coeffs for r in rows])
        else:
            arr = np.asarray(rows)
            if arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(0, ring.n)
        if arr.ndim != 2 or arr.shape[1] != ring.n:
            raise RingMismatchError(f"expected shape (m, {ring.n}), got {arr.shape}")
        self.ring = ring
        self.coeffs = _frozen(ring.reduce(arr))

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return RingVector(self.ring, self.coeffs[idx])
        return RingElement(self.ring, self.coeffs[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def _check(self, other: "RingVector") -> None:
        if not isinstance(other, RingVector):
            raise TypeError(f"expected RingVector, got {type(other).__name__}")
        if other.ring != self.ring:
            raise RingMismatchError(f"ring mismatch: {self.ring} vs {other.ring}")
        if len(other) != len(self):
            raise RingMismatchError(f"length mismatch: {len(self)} vs {len(other)}")

    def __add__(self, other: "RingVector") -> "RingVector":
        self._check(other)
        return RingVector(self.ring, self.ring.reduce(self.coeffs + other.coeffs))

    def __sub__(self, other: "RingVector") -> "RingVector":
        self._check(other)
        q = np.uint64(self.ring.q)
        return RingVector(self.ring, self.ring.reduce(self.coeffs + (q - other.coeffs)))

    def __neg__(self) -> "RingVector":
        return RingVector(self.ring, self.ring.reduce(np.uint64(self.ring.q) - self.coeffs))

    def __mul__(self, other: RingElement) -> "RingVector":
        return scalar_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RingVector):
            return NotImplemented
        return self.ring == other.ring and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.ring, self.coeffs.shape, self.coeffs.tobytes()))

    def __repr__(self) -> str:
        return f"RingVector(len={len(self)}, n={self.ring.n}, q={self.ring.q})"

    def centered(self) -> np.ndarray:
        return self.ring.center(self.coeffs)

    def concat(self, other: "RingVector") -> "RingVector":
        if other.ring != self.ring:
            raise RingMismatchError("ring mismatch")
        return RingVector(self.ring, np.concatenate([self.coeffs, other.coeffs]))


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    return a + b


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    """Negacyclic product of two ring elements."""
    return a * b


def centered(a: RingElement | RingVector) -> np.ndarray:
    return a.centered()


def inner_product(u: RingVector, v: RingVector) -> RingElement:
    """sum_i u_i * v_i in R_q."""
    u._check(v)
    return RingElement(u.ring, kernels.inner_product(u.coeffs, v.coeffs, u.ring.q))


def scalar_mul(v: RingVector, c: RingElement) -> RingVector:
    if not isinstance(c, RingElement) or c.ring != v.ring:
        raise RingMismatchError("scalar must be a RingElement of the vector's ring")
    return RingVector(v.ring, kernels.scalar_mul(v.coeffs, c.coeffs, v.ring.q))


def sq_norm(v: RingElement | RingVector | np.ndarray) -> int:
    """Exact squared Euclidean norm of the centered coefficient embedding."""
    c = v.centered() if isinstance(v, (RingElement, RingVector)) else np.asarray(v, dtype=np.int64)
    c = c.ravel()
    bound = int(np.abs(c).max(initial=0))
    if bound * bound * max(c.size, 1) < 1 << 62:
        return int(np.dot(c, c))
    return sum(int(x) * int(x) for x in c)


def euclid_norm(v: RingElement | RingVector | np.ndarray) -> float:
    return math.sqrt(sq_norm(v))


def inf_norm(v: RingElement | RingVector | np.ndarray) -> int:
    c = v.centered() if isinstance(v, (RingElement, RingVector)) else np.asarray(v)
    return int(np.abs(c).max(initial=0))


def matrix_apply(ring: Ring, mat: np.ndarray, v: RingVector) -> RingVector:
    """Apply an (r, c, n) array of ring elements to a length-c vector."""
    if mat.shape[1] != len(v) or mat.shape[2] != ring.n:
        raise RingMismatchError(f"matrix shape {mat.shape} incompatible with vector length {len(v)}")
    return RingVector(ring, kernels.matrix_apply(np.ascontiguousarray(mat, dtype=np.uint64), v.coeffs, ring.q))


def negacyclic_matrix(coeffs: Sequence[int] | np.ndarray) -> np.ndarray:
    """Integer matrix M with M @ b == a * b over Z[x]/(x^n + 1), for signed a."""
    a = np.asarray(coeffs, dtype=np.int64)
    n = a.shape[-1]
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    rot = a[..., (i - j) % n]
    return np.where(i >= j, rot, -rot)


def embedding_matrix(blocks: np.ndarray) -> np.ndarray:
    """Integer embedding of an (r, c) array of signed ring elements as an (rn, cn) matrix."""
    blocks = np.asarray(blocks, dtype=np.int64)
    r, c, n = blocks.shape
    rot = negacyclic_matrix(blocks)  # (r, c, n, n)
    return rot.transpose(0, 2, 1, 3).reshape(r * n, c * n)
