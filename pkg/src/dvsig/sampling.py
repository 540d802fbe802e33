"""Deterministic randomness and the discrete Gaussian samplers.

Gaussian widths follow the rho convention rho_s(x) = exp(-pi |x - c|^2 / s^2):
``sigma`` is the Gaussian parameter and the standard deviation is
``sigma / sqrt(2 pi)``.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from dvsig.ring import Ring, RingElement, RingVector

RNG_LABEL = b"DVSIG-v1-RNG"
SEED_BYTES = 32
DEFAULT_TAIL_CUT = 13.0
SEED_ENV_VAR = "DVSIG_SEED"

_SCALE_BITS = 63
_TWO_PI = 2.0 * math.pi


class RandomSource:
    """SHAKE-128 byte streams keyed by a 32-byte seed and a call counter.

    Every draw is ``SHAKE128(label || seed || counter || site-label)``, so the
    same seed replays the same sequence of draws bit for bit. Not thread-safe;
    use :meth:`spawn` to hand independent sources to workers.
    """

    def __init__(self, seed: bytes, label: bytes = b""):
        if len(seed) != SEED_BYTES:
            raise ValueError(f"seed must be {SEED_BYTES} bytes, got {len(seed)}")
        self.seed = bytes(seed)
        self.label = bytes(label)
        self.counter = 0

    @classmethod
    def from_hex(cls, text: str) -> "RandomSource":
        text = text.strip()
        if len(text) != 2 * SEED_BYTES:
            raise ValueError(f"seed must be {2 * SEED_BYTES} hex characters")
        return cls(bytes.fromhex(text))

    @classmethod
    def from_entropy(cls) -> "RandomSource":
        return cls(os.urandom(SEED_BYTES))

    @classmethod
    def from_int(cls, value: int) -> "RandomSource":
        """Convenience for tests: seed = SHAKE128 of the integer's decimal form."""
        return cls(hashlib.shake_128(b"int-seed:%d" % value).digest(SEED_BYTES))

    def spawn(self, label: str) -> "RandomSource":
        child_seed = self.read(f"spawn:{label}", SEED_BYTES)
        return RandomSource(child_seed, label.encode())

    def read(self, site: str, nbytes: int) -> bytes:
        h = hashlib.shake_128(RNG_LABEL)
        h.update(len(self.label).to_bytes(2, "big") + self.label)
        h.update(self.seed)
        h.update(self.counter.to_bytes(8, "big"))
        h.update(site.encode())
        self.counter += 1
        return h.digest(nbytes)

    def uint64(self, site: str, count: int) -> np.ndarray:
        return np.frombuffer(self.read(site, 8 * count), dtype="<u8").astype(np.uint64)

    def uniform01(self, site: str, count: int) -> np.ndarray:
        """Doubles uniform on [0, 1) with 53 bits of precision."""
        return (self.uint64(site, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def below(self, site: str, bound: int, count: int) -> np.ndarray:
        """Uniform integers in [0, bound) by rejection on 64-bit words."""
        if bound < 1:
            raise ValueError("bound must be positive")
        if bound & (bound - 1) == 0:
            return self.uint64(site, count) & np.uint64(bound - 1)
        limit = (1 << 64) - ((1 << 64) % bound)
        out = np.empty(0, dtype=np.uint64)
        while out.size < count:
            words = self.uint64(site, count - out.size + 8)
            ok = words[words < np.uint64(limit)] if limit < 1 << 64 else words
            out = np.concatenate([out, ok % np.uint64(bound)])
        return out[:count]

    def normal(self, site: str, count: int) -> np.ndarray:
        """Standard normal doubles via Box-Muller."""
        half = (count + 1) // 2
        u = self.uniform01(site, 2 * half)
        u1 = 1.0 - u[:half]  # (0, 1]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = _TWO_PI * u[half:]
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:count]


@dataclass(frozen=True)
class GaussParams:
    sigma: float
    center: float = 0.0
    tail_cut: float = DEFAULT_TAIL_CUT

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.tail_cut < 6:
            raise ValueError(f"tail_cut must be at least 6, got {self.tail_cut}")

    @property
    def stddev(self) -> float:
        return self.sigma / math.sqrt(_TWO_PI)


_GUIDE_BITS = 20
_GUIDE_MIN_TABLE = 4096
_GUIDE_STEPS = 4


@dataclass(frozen=True)
class CdtTable:
    """Inverse-CDF table over the truncated support ``lo + arange(len(cdf))``.

    Large tables carry a guide: for each of 2**20 buckets of the 63-bit uniform,
    the first index whose cumulative weight exceeds the bucket start. A few
    vectorised steps from there resolve almost every lookup; stragglers fall
    back to binary search.
    """

    lo: int
    cdf: np.ndarray  # cumulative weights, last entry exactly 2**63
    guide: np.ndarray | None = None

    def lookup(self, u: np.ndarray) -> np.ndarray:
        if self.guide is None:
            idx = np.searchsorted(self.cdf, u, side="right")
            return self.lo + idx.astype(np.int64)
        idx = self.guide[(u >> np.uint64(_SCALE_BITS - _GUIDE_BITS)).astype(np.int64)]
        for _ in range(_GUIDE_STEPS):
            idx = idx + (self.cdf[idx] <= u)
        left = self.cdf[idx] <= u
        if left.any():
            idx[left] = np.searchsorted(self.cdf, u[left], side="right")
        return self.lo + idx


def exact_pmf(sigma: float, center: float = 0.0, tail_cut: float = DEFAULT_TAIL_CUT):
    """Support and probabilities of the truncated discrete Gaussian (float64)."""
    lo = math.ceil(center - tail_cut * sigma)
    hi = math.floor(center + tail_cut * sigma)
    xs = np.arange(lo, hi + 1, dtype=np.int64)
    logw = -math.pi * (xs - center) ** 2 / sigma**2
    w = np.exp(logw - logw.max())
    return xs, w / w.sum()


@lru_cache(maxsize=64)
def cdt_table(sigma: float, center: float = 0.0, tail_cut: float = DEFAULT_TAIL_CUT) -> CdtTable:
    """64-bit fixed-point cumulative table for D_{Z, sigma, center}."""
    xs, p = exact_pmf(sigma, center, tail_cut)
    w = np.floor(p * 2.0**_SCALE_BITS + 0.5)
    keep = np.nonzero(w)[0]
    xs, w = xs[keep[0] : keep[-1] + 1], w[keep[0] : keep[-1] + 1]
    weights = w.astype(np.uint64)
    # absorb the rounding slack into the mode so the total is exactly 2**63
    slack = (1 << _SCALE_BITS) - int(weights.sum(dtype=np.uint64))
    mode = int(np.argmax(weights))
    weights[mode] = np.uint64(int(weights[mode]) + slack)
    cdf = np.cumsum(weights, dtype=np.uint64)
    cdf.flags.writeable = False
    guide = None
    if cdf.size >= _GUIDE_MIN_TABLE:
        starts = np.arange(1 << _GUIDE_BITS, dtype=np.uint64) << np.uint64(_SCALE_BITS - _GUIDE_BITS)
        guide = np.searchsorted(cdf, starts, side="right").astype(np.int64)
        guide.flags.writeable = False
    return CdtTable(int(xs[0]), cdf, guide)


def sample_z_batch(rng: RandomSource, g: GaussParams, count: int, site: str = "z-gauss") -> np.ndarray:
    table = cdt_table(float(g.sigma), float(g.center), float(g.tail_cut))
    u = rng.uint64(site, count) >> np.uint64(64 - _SCALE_BITS)
    return table.lookup(u)


def sample_z_gaussian(rng: RandomSource, g: GaussParams) -> int:
    """One draw from D_{Z, sigma, center} truncated at tail_cut * sigma."""
    return int(sample_z_batch(rng, g, 1)[0])


def sample_uniform_ring(rng: RandomSource, ring: Ring, site: str = "uniform") -> RingElement:
    return RingElement(ring, rng.below(site, ring.q, ring.n))


def sample_uniform_vector(rng: RandomSource, ring: Ring, length: int, site: str = "uniform") -> RingVector:
    return RingVector(ring, rng.below(site, ring.q, ring.n * length).reshape(length, ring.n))


def sample_bounded(rng: RandomSource, ring: Ring, d: int, length: int, site: str = "bounded") -> RingVector:
    """Coefficients uniform on {-d, ..., d}."""
    if d < 1:
        raise ValueError(f"bound d must be at least 1, got {d}")
    vals = rng.below(site, 2 * d + 1, ring.n * length).astype(np.int64) - d
    return RingVector(ring, vals.reshape(length, ring.n))


def sample_ring_gaussian(
    rng: RandomSource,
    ring: Ring,
    sigma: float,
    length: int,
    tail_cut: float = DEFAULT_TAIL_CUT,
    site: str = "ring-gauss",
) -> RingVector:
    """Every one of the n*length coefficients drawn i.i.d. from D_{Z, sigma}."""
    if length < 1:
        raise ValueError("length must be at least 1")
    x = sample_z_batch(rng, GaussParams(sigma, 0.0, tail_cut), ring.n * length, site)
    return RingVector(ring, x.reshape(length, ring.n))


def randomized_round(rng: RandomSource, centers: np.ndarray, width: float, site: str = "round") -> np.ndarray:
    """Independent D_{Z, width, c} for each real center c.

    Float64 probabilities over the window where rho exceeds 2**-64 relative to
    the mode; used only where a statistical (not exact) sampler is acceptable.
    """
    centers = np.asarray(centers, dtype=np.float64)
    half = int(math.ceil(width * math.sqrt(64 * math.log(2) / math.pi))) + 1
    base = np.floor(centers).astype(np.int64)
    offs = np.arange(-half, half + 1, dtype=np.int64)
    cand = base[:, None] + offs[None, :]
    w = np.exp(-math.pi * (cand - centers[:, None]) ** 2 / width**2)
    cdf = np.cumsum(w, axis=1)
    u = rng.uniform01(site, centers.size) * cdf[:, -1]
    idx = (cdf < u[:, None]).sum(axis=1)
    return cand[np.arange(centers.size), np.minimum(idx, offs.size - 1)]


def rejection_accept(
    rng: RandomSource,
    z: RingVector | np.ndarray,
    shift: RingVector | np.ndarray,
    sigma: float,
    M: float,
    site: str = "reject",
) -> bool:
    """Accept z = shift + y with probability min(1, D_sigma(z) / (M * D_{sigma, shift}(z))).

    The ratio is exp((-2<z, shift> + |shift|^2) / (2 s^2)) with s = sigma / sqrt(2 pi),
    evaluated on centered integer embeddings.
    """
    zc = z.centered() if isinstance(z, RingVector) else np.asarray(z, dtype=np.int64)
    vc = shift.centered() if isinstance(shift, RingVector) else np.asarray(shift, dtype=np.int64)
    if zc.size != vc.size:
        raise ValueError("z and shift must have equal embedding dimension")
    prob = acceptance_probability(zc, vc, sigma, M)
    u = float(rng.uniform01(site, 1)[0])
    return u < prob


def acceptance_probability(z: np.ndarray, shift: np.ndarray, sigma: float, M: float) -> float:
    """The probability used by :func:`rejection_accept`, without drawing."""
    zc = np.asarray(z, dtype=np.int64).ravel()
    vc = np.asarray(shift, dtype=np.int64).ravel()
    s2 = sigma * sigma / _TWO_PI
    exponent = (-2 * int(np.dot(zc, vc)) + int(np.dot(vc, vc))) / (2.0 * s2)
    return 1.0 if exponent >= math.log(M) else math.exp(exponent) / M
