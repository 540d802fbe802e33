"""NumPy fallback for the compiled kernels in ``_ckernels.pyx``.

Same signatures and the same uint64 conventions: power-of-two moduli rely on
wrapping arithmetic modulo 2**64, other moduli must satisfy q*q*n*m < 2**64.
"""

from __future__ import annotations

import numpy as np


def _rotations(a: np.ndarray, q: int) -> np.ndarray:
    """Negacyclic multiplication matrices: ``_rotations(a)[..., :, :] @ b == a * b``."""
    n = a.shape[-1]
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    rot = a[..., (i - j) % n]
    neg = (q - rot) % q
    return np.where(i >= j, rot, neg)


def _reduce(x: np.ndarray, q: int) -> np.ndarray:
    if q & (q - 1) == 0:
        return x & np.uint64(q - 1)
    return x % np.uint64(q)


def poly_mul(a, b, q):
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    return _reduce(_rotations(a, q) @ b, q)


def inner_product(a, b, q):
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    rot = _rotations(a, q)
    return _reduce(np.einsum("mij,mj->i", rot, b), q)


def scalar_mul(v, c, q):
    v = np.asarray(v, dtype=np.uint64)
    c = np.asarray(c, dtype=np.uint64)
    return _reduce(v @ _rotations(c, q).T, q)


def matrix_apply(mat, v, q):
    mat = np.asarray(mat, dtype=np.uint64)
    v = np.asarray(v, dtype=np.uint64)
    rot = _rotations(mat, q)
    return _reduce(np.einsum("rcij,cj->ri", rot, v), q)


def sparse_mul(v, pos, sgn, q):
    v = np.asarray(v, dtype=np.uint64)
    n = v.shape[-1]
    out = np.zeros_like(v)
    neg = (q - v) % q
    for p, s in zip(np.asarray(pos).tolist(), np.asarray(sgn).tolist()):
        plus, minus = (v, neg) if s > 0 else (neg, v)
        # x**p * v: indices shift up by p, the wrapped tail picks up a sign
        out[:, p:] += plus[:, : n - p]
        out[:, :p] += minus[:, n - p :]
    return out % np.uint64(q)


def gadget_decode(bg, q, k):
    bg = np.asarray(bg, dtype=np.uint64)
    mask = np.uint64(q - 1)
    half = np.uint64(q >> 1)
    quarter = np.uint64(q >> 2)
    s = np.zeros(bg.shape[1], dtype=np.uint64)
    ok = True
    for j in range(k):
        i = k - 1 - j
        r = (bg[i] - (s << np.uint64(i))) & mask
        if np.any((r == quarter) | (r == half + quarter)):
            ok = False
        s |= ((r > quarter) & (r < half + quarter)).astype(np.uint64) << np.uint64(j)
    return s, ok
