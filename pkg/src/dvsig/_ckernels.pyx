# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled negacyclic kernels.

All arrays are canonical uint64 coefficient arrays. For power-of-two moduli the
accumulators wrap modulo 2**64 and are masked at the end; for other moduli every
product is reduced, which requires q < 2**32.
"""

import numpy as np
cimport numpy as cnp

ctypedef unsigned long long u64
ctypedef unsigned int u32

cnp.import_array()


cdef void _mul_acc(const u64[::1] a, const u64[::1] b, u64[::1] out,
                   u64 q, bint pow2) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef u64 ai
    if pow2:
        # wrapping uint64 arithmetic is exact modulo any power of two
        for i in range(n):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(n - i):
                out[i + j] += ai * b[j]
            for j in range(n - i, n):
                out[i + j - n] -= ai * b[j]
        return
    for i in range(n):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(n - i):
            out[i + j] = (out[i + j] + (ai * b[j]) % q) % q
        for j in range(n - i, n):
            out[i + j - n] = (out[i + j - n] + q - (ai * b[j]) % q) % q


cdef void _mul_acc32(const u32* a, const u32* b, u32* out, Py_ssize_t n) noexcept nogil:
    # for q | 2**32 the 32-bit wrap is exact and vectorises much better
    cdef Py_ssize_t i, j
    cdef u32 ai
    for i in range(n):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(n - i):
            out[i + j] += ai * b[j]
        for j in range(n - i, n):
            out[i + j - n] -= ai * b[j]


cdef inline bint _use32(u64 q):
    return (q & (q - 1)) == 0 and q <= (<u64>1) << 32


def poly_mul(const u64[::1] a, const u64[::1] b, u64 q):
    cdef Py_ssize_t n = a.shape[0]
    cdef bint pow2 = (q & (q - 1)) == 0
    out = np.zeros(n, dtype=np.uint64)
    cdef u64[::1] o = out
    with nogil:
        _mul_acc(a, b, o, q, pow2)
    if pow2:
        out &= q - 1
    return out


def inner_product(const u64[:, ::1] a, const u64[:, ::1] b, u64 q):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t i
    cdef bint pow2 = (q & (q - 1)) == 0
    cdef u32[:, ::1] a32
    cdef u32[:, ::1] b32
    cdef u32[::1] o32
    if _use32(q):
        a32 = np.asarray(a).astype(np.uint32)
        b32 = np.asarray(b).astype(np.uint32)
        out32 = np.zeros(n, dtype=np.uint32)
        o32 = out32
        with nogil:
            for i in range(m):
                _mul_acc32(&a32[i, 0], &b32[i, 0], &o32[0], n)
        return (out32 & np.uint32(q - 1)).astype(np.uint64)
    out = np.zeros(n, dtype=np.uint64)
    cdef u64[::1] o = out
    with nogil:
        for i in range(m):
            _mul_acc(a[i], b[i], o, q, pow2)
    if pow2:
        out &= q - 1
    return out


def scalar_mul(const u64[:, ::1] v, const u64[::1] c, u64 q):
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    cdef Py_ssize_t i
    cdef bint pow2 = (q & (q - 1)) == 0
    cdef u32[:, ::1] v32
    cdef u32[::1] c32
    cdef u32[:, ::1] o32
    if _use32(q):
        v32 = np.asarray(v).astype(np.uint32)
        c32 = np.asarray(c).astype(np.uint32)
        out32 = np.zeros((m, n), dtype=np.uint32)
        o32 = out32
        with nogil:
            for i in range(m):
                _mul_acc32(&c32[0], &v32[i, 0], &o32[i, 0], n)
        return (out32 & np.uint32(q - 1)).astype(np.uint64)
    out = np.zeros((m, n), dtype=np.uint64)
    cdef u64[:, ::1] o = out
    with nogil:
        for i in range(m):
            _mul_acc(v[i], c, o[i], q, pow2)
    if pow2:
        out &= q - 1
    return out


def matrix_apply(const u64[:, :, ::1] mat, const u64[:, ::1] v, u64 q):
    """Ring matrix times ring vector: out[i] = sum_j mat[i, j] * v[j]."""
    cdef Py_ssize_t rows = mat.shape[0]
    cdef Py_ssize_t cols = mat.shape[1]
    cdef Py_ssize_t n = mat.shape[2]
    cdef Py_ssize_t i, j
    cdef bint pow2 = (q & (q - 1)) == 0
    cdef u32[:, :, ::1] m32
    cdef u32[:, ::1] v32
    cdef u32[:, ::1] o32
    if _use32(q):
        m32 = np.asarray(mat).astype(np.uint32)
        v32 = np.asarray(v).astype(np.uint32)
        out32 = np.zeros((rows, n), dtype=np.uint32)
        o32 = out32
        with nogil:
            for i in range(rows):
                for j in range(cols):
                    _mul_acc32(&m32[i, j, 0], &v32[j, 0], &o32[i, 0], n)
        return (out32 & np.uint32(q - 1)).astype(np.uint64)
    out = np.zeros((rows, n), dtype=np.uint64)
    cdef u64[:, ::1] o = out
    with nogil:
        for i in range(rows):
            for j in range(cols):
                _mul_acc(mat[i, j], v[j], o[i], q, pow2)
    if pow2:
        out &= q - 1
    return out


def sparse_mul(const u64[:, ::1] v, const long long[::1] pos, const long long[::1] sgn, u64 q):
    """Multiply each row of v by the sparse element sum_t sgn[t] * x**pos[t]."""
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    cdef Py_ssize_t w = pos.shape[0]
    cdef Py_ssize_t i, j, t, p, dst
    cdef bint neg
    cdef u64 x
    out = np.zeros((m, n), dtype=np.uint64)
    cdef u64[:, ::1] o = out
    with nogil:
        for i in range(m):
            for t in range(w):
                p = pos[t]
                for j in range(n):
                    x = v[i, j]
                    dst = j + p
                    neg = sgn[t] < 0
                    if dst >= n:
                        dst -= n
                        neg = not neg
                    if neg:
                        o[i, dst] = (o[i, dst] + q - x) % q
                    else:
                        o[i, dst] = (o[i, dst] + x) % q
    return out


def gadget_decode(const u64[:, ::1] bg, u64 q, int k):
    """Recover s from rows bg[i] = 2**i * s + e_i (mod q = 2**k), coefficient-wise.

    Returns (s, ok) where ok is False if any residue sits exactly on the
    decision boundary q/4 away from both candidates.
    """
    cdef Py_ssize_t n = bg.shape[1]
    cdef Py_ssize_t c
    cdef int j, i
    cdef u64 mask = q - 1
    cdef u64 half = q >> 1
    cdef u64 quarter = q >> 2
    cdef u64 s, r
    cdef bint ok = True
    out = np.zeros(n, dtype=np.uint64)
    cdef u64[::1] o = out
    with nogil:
        for c in range(n):
            s = 0
            for j in range(k):
                i = k - 1 - j
                r = (bg[i, c] - (s << i)) & mask
                # distance to 0 vs distance to q/2, both taken cyclically
                if r == quarter or r == half + quarter:
                    ok = False
                if quarter < r < half + quarter:
                    s |= (<u64>1) << j
            o[c] = s
    return out, bool(ok)
