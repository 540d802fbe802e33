"""Independent reference implementations used as test oracles.

Nothing here imports the package's arithmetic: products are plain double loops
over Python integers with the x^n = -1 sign flip written out, and Gaussian
probabilities come straight from rho(x) = exp(-pi (x - c)^2 / s^2).
"""

import math


def schoolbook_mul(a, b, q):
    n = len(a)
    out = [0] * n
    for i in range(n):
        for j in range(n):
            prod = int(a[i]) * int(b[j])
            if i + j < n:
                out[i + j] += prod
            else:
                out[i + j - n] -= prod  # x^n = -1
    return [c % q for c in out]


def schoolbook_inner(u, v, q):
    n = len(u[0])
    acc = [0] * n
    for x, y in zip(u, v):
        acc = [(s + t) % q for s, t in zip(acc, schoolbook_mul(x, y, q))]
    return acc


def center(c, q):
    c %= q
    return c - q if c > q // 2 else c


def gauss_pmf(sigma, center_=0.0, tail_cut=13.0):
    """dict x -> probability of the truncated discrete Gaussian."""
    lo = math.ceil(center_ - tail_cut * sigma)
    hi = math.floor(center_ + tail_cut * sigma)
    w = {x: math.exp(-math.pi * (x - center_) ** 2 / sigma**2) for x in range(lo, hi + 1)}
    total = math.fsum(w.values())
    return {x: v / total for x, v in w.items()}


def gadget_encode(s, e, q):
    """b_j = 2^j s + e_j mod q for scalar s and error list e."""
    return [((1 << j) * s + ej) % q for j, ej in enumerate(e)]


def pack_lsb(values, width):
    """Bit-by-bit LSB-first packing, zero padded to a whole byte."""
    bits = []
    for v in values:
        bits.extend((int(v) >> i) & 1 for i in range(width))
    bits.extend([0] * (-len(bits) % 8))
    return bytes(sum(bits[i + j] << j for j in range(8)) for i in range(0, len(bits), 8))


def challenge(w, t, s, mu, n, q, kappa):
    """(positions, signs) of the challenge, written from the construction rule alone."""
    import hashlib

    width = (q - 1).bit_length()
    data = b"LaSDVS-v1-H"
    for blob in (pack_lsb(w, width), pack_lsb(t, width), pack_lsb(s, width), mu):
        data += len(blob).to_bytes(4, "big") + blob
    stream = hashlib.shake_128(data).digest(1 << 16)
    nsign = (kappa + 7) // 8
    signs = int.from_bytes(stream[:nsign], "little")
    off = nsign
    c = [0] * n
    for idx in range(kappa):
        i = n - kappa + idx
        while True:
            x = int.from_bytes(stream[off : off + 4], "little")
            off += 4
            if x < (1 << 32) - (1 << 32) % (i + 1):
                break
        j = x % (i + 1)
        c[i] = c[j]
        c[j] = -1 if (signs >> idx) & 1 else 1
    pos = [p for p in range(n) if c[p]]
    return pos, [c[p] for p in pos]


def regularity_pmf(a0, sigma, q, tail_cut=13.0):
    """Exact law of sum_i a0_i r_i over R_q, r_i with iid D_sigma coefficients, as a q^n grid.

    Each coefficient r_ij contributes r_ij * (x^j a0_i); the law of a scalar
    multiple of a fixed vector is placed on the grid and everything is
    convolved through an n-dimensional FFT.
    """
    import numpy as np

    terms, n = len(a0), len(a0[0])
    pmf = gauss_pmf(sigma, 0.0, tail_cut)
    scalar = np.zeros(q)
    for x, p in pmf.items():
        scalar[x % q] += p
    total = np.ones((q,) * n, dtype=complex)
    for i in range(terms):
        for j in range(n):
            shift = [0] * n
            for t in range(n):  # x^j * a0_i
                if t + j < n:
                    shift[t + j] += int(a0[i][t])
                else:
                    shift[t + j - n] -= int(a0[i][t])
            grid = np.zeros((q,) * n)
            for r in range(q):
                grid[tuple((r * c) % q for c in shift)] += scalar[r]
            total *= np.fft.fftn(grid)
    return np.real(np.fft.ifftn(total))
