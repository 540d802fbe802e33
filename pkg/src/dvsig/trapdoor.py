"""Gadget trapdoors over R_q: generation, LWE inversion and preimage sampling.

Only power-of-two moduli are supported, which makes both gadget decoding and
gadget-coset sampling exact bit-by-bit procedures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dvsig import kernels
from dvsig.params import ParameterError, Params
from dvsig.ring import (
    Ring,
    RingElement,
    RingVector,
    embedding_matrix,
    inner_product,
    matrix_apply,
)
from dvsig.sampling import (
    GaussParams,
    RandomSource,
    cdt_table,
    randomized_round,
    sample_uniform_vector,
    sample_z_batch,
)

_MAX_TRAPDOOR_TRIES = 50


class TrapdoorError(ValueError):
    """Base class for inversion failures."""


class DecodeError(TrapdoorError):
    """Gadget decoding met a residue outside the tolerated error band."""


class InversionError(TrapdoorError):
    """The recovered error is too large: the input was not a valid LWE sample."""


def gadget(ring: Ring) -> np.ndarray:
    """The gadget vector (1, 2, ..., 2^{k-1}) as plain integers."""
    return np.array([1 << i for i in range(ring.k)], dtype=np.uint64)


def gadget_vector(ring: Ring) -> RingVector:
    g = np.zeros((ring.k, ring.n), dtype=np.uint64)
    g[:, 0] = gadget(ring)
    return RingVector(ring, g)


@dataclass(frozen=True, eq=False)
class TrapdoorMatrix:
    """An l x k block of short ring elements with its tag."""

    R: np.ndarray  # (l, k, n) canonical residues
    tag: RingElement
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        R = np.ascontiguousarray(self.R, dtype=np.uint64)
        R.flags.writeable = False
        object.__setattr__(self, "R", R)
        if R.ndim != 3 or R.shape[2] != self.tag.ring.n:
            raise ValueError(f"trapdoor must have shape (l, k, n), got {R.shape}")

    @property
    def ring(self) -> Ring:
        return self.tag.ring

    @property
    def l(self) -> int:
        return self.R.shape[0]

    @property
    def k(self) -> int:
        return self.R.shape[1]

    def centered(self) -> np.ndarray:
        return self.ring.center(self.R)

    def transpose_blocks(self) -> np.ndarray:
        """R^T as a (k, l, n) ring matrix."""
        return np.ascontiguousarray(self.R.transpose(1, 0, 2))

    def embedding(self) -> np.ndarray:
        """The (ln x kn) integer matrix of R."""
        if "emb" not in self._cache:
            self._cache["emb"] = embedding_matrix(self.centered()).astype(np.float64)
        return self._cache["emb"]

    def __eq__(self, other):
        if not isinstance(other, TrapdoorMatrix):
            return NotImplemented
        return self.tag == other.tag and np.array_equal(self.R, other.R)

    __hash__ = None


@dataclass(frozen=True)
class TaggedPublicVector:
    """a = (a0, a1) with a1 = h g - R^T a0."""

    a: RingVector
    l: int

    @property
    def a0(self) -> RingVector:
        return self.a[: self.l]

    @property
    def a1(self) -> RingVector:
        return self.a[self.l :]

    @property
    def ring(self) -> Ring:
        return self.a.ring

    def __len__(self):
        return len(self.a)


def is_unit(h: RingElement) -> bool:
    """Units of Z_{2^k}[x]/(x^n + 1) are exactly the elements with h(1) odd."""
    if not h.ring.is_pow2:
        raise ParameterError("unit test implemented for power-of-two moduli only")
    return int(h.coeffs.sum()) % 2 == 1


def ring_inverse(h: RingElement) -> RingElement:
    """Inverse of a unit by Hensel lifting from mod 2."""
    if not is_unit(h):
        raise ParameterError("tag is not invertible in R_q")
    ring = h.ring
    if h == ring.one():
        return h
    # mod 2, h = 1 + nilpotent and (x + 1)^n = 0, so h^n = 1 and h^{-1} = h^{n-1}
    inv = ring.one()
    base = h
    e = ring.n - 1
    while e:
        if e & 1:
            inv = inv * base
        base = base * base
        e >>= 1
    inv = RingElement(ring, inv.coeffs & np.uint64(1))
    two = ring.constant(2)
    for _ in range(ring.k.bit_length() + 1):
        inv = inv * (two - h * inv)
    if h * inv != ring.one():
        raise ArithmeticError("Hensel lift failed to invert tag")
    return inv


def largest_singular_value(R: TrapdoorMatrix, iterations: int = 20, rtol: float = 1e-6) -> float:
    """Power-iteration estimate of s1(R) on R R^T."""
    E = R.embedding()
    if not E.any():
        return 0.0
    x = np.random.default_rng(0).standard_normal(E.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iterations):
        y = E @ (E.T @ x)
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - lam) <= rtol * new:
            lam = new
            break
        lam = new
    return math.sqrt(lam)


def trapdoor_identity_holds(pk: TaggedPublicVector, R: TrapdoorMatrix) -> bool:
    """Check a^T [R; I] == h g^T exactly."""
    ring = pk.ring
    lhs = matrix_apply(ring, R.transpose_blocks(), pk.a0) + pk.a1
    rhs = RingVector(ring, [R.tag * ring.constant(1 << j) for j in range(ring.k)])
    return lhs == rhs


def ring_gen_trap(
    rng: RandomSource,
    pp: Params,
    a0: RingVector | None = None,
    h: RingElement | None = None,
) -> tuple[TaggedPublicVector, TrapdoorMatrix]:
    """Sample R from D_{sigma_e} and set a1 = h g - R^T a0.

    Trapdoors whose s1(R) exceeds ``pp.s1_max`` are resampled so that the
    profile's preimage width stays valid.
    """
    ring = pp.ring
    h = ring.one() if h is None else h
    if h.ring != ring:
        raise ParameterError("tag must live in R_q")
    if not is_unit(h):
        raise ParameterError("tag is not invertible in R_q")
    if a0 is None:
        a0 = sample_uniform_vector(rng, ring, pp.l, site="trapdoor:a0")
    if len(a0) != pp.l or a0.ring != ring:
        raise ParameterError(f"a0 must have {pp.l} entries in R_q")
    g_param = GaussParams(pp.sigma_e, 0.0, pp.tail_cut)
    for _ in range(_MAX_TRAPDOOR_TRIES):
        raw = sample_z_batch(rng, g_param, pp.l * pp.k * pp.n, site="trapdoor:R")
        R = TrapdoorMatrix(ring.reduce(raw.reshape(pp.l, pp.k, pp.n)), h)
        if largest_singular_value(R) <= pp.s1_max:
            break
    else:
        raise ParameterError("could not sample a trapdoor within the s1 bound")
    hg = RingVector(ring, [h * ring.constant(1 << j) for j in range(pp.k)])
    a1 = hg - matrix_apply(ring, R.transpose_blocks(), a0)
    return TaggedPublicVector(a0.concat(a1), pp.l), R


def gadget_decode(pp: Params | Ring, b_g: RingVector) -> tuple[RingElement, RingVector]:
    """Invert b_g = g s + e for ||e||_inf < q/4, coefficient by coefficient.

    Bit j of s comes from entry k-1-j after removing the already-recovered low
    bits; the result is re-encoded and rejected if the implied error is too large.
    """
    ring = pp.ring if isinstance(pp, Params) else pp
    if not ring.is_pow2:
        raise ParameterError("gadget decoding needs q = 2^k")
    if len(b_g) != ring.k or b_g.ring != ring:
        raise DecodeError(f"expected {ring.k} ring elements")
    s_coeffs, ok = kernels.gadget_decode(b_g.coeffs, ring.q, ring.k)
    if not ok:
        raise DecodeError("residue on the decision boundary")
    s = RingElement(ring, s_coeffs)
    e = b_g - gadget_vector(ring) * s
    if int(np.abs(e.centered()).max()) >= ring.q // 4:
        raise DecodeError("gadget error exceeds q/4")
    return s, e


def ring_invert(
    pp: Params,
    R: TrapdoorMatrix,
    a: TaggedPublicVector,
    b: RingVector,
    e_bound: int | None = None,
) -> tuple[RingElement, RingVector]:
    """Recover (s, e) from b = a s + e using the trapdoor.

    The error is recomputed as b - a s and must satisfy ||e||_inf <= e_bound
    (default ``pp.e_bound``); anything else raises rather than returning a
    wrong answer.
    """
    ring = pp.ring
    if len(b) != len(a) or b.ring != ring:
        raise InversionError("b has the wrong shape for this public vector")
    b_low, b_high = b[: a.l], b[a.l :]
    b_g = matrix_apply(ring, R.transpose_blocks(), b_low) + b_high
    hs, _ = gadget_decode(ring, b_g)
    s = hs if R.tag == ring.one() else hs * ring_inverse(R.tag)
    e = b - a.a * s
    bound = pp.e_bound if e_bound is None else e_bound
    if int(np.abs(e.centered()).max()) > bound:
        raise InversionError("recovered error exceeds the bound")
    return s, e


def coset_integers(rng: RandomSource, v: np.ndarray, k: int, sigma: float, tail_cut: float) -> np.ndarray:
    """Integer (k, len(v)) array whose column c satisfies sum_j 2^j z_j = v_c (mod 2^k).

    Per coefficient: z_j <- D_{2Z + v_j, sigma}, then v_{j+1} = (v_j - z_j) / 2.
    D_{2Z + c, s} is 2 * D_{Z, s/2, -c/2} + c, so two fixed tables suffice.
    """
    even = cdt_table(sigma / 2.0, 0.0, tail_cut)
    odd = cdt_table(sigma / 2.0, -0.5, tail_cut)
    v = np.asarray(v, dtype=np.int64)
    u = (rng.uint64("coset", k * v.size) >> np.uint64(1)).reshape(k, v.size)
    z = np.empty((k, v.size), dtype=np.int64)
    resid = v
    for j in range(k):
        parity = resid & 1
        x = np.where(parity == 1, odd.lookup(u[j]), even.lookup(u[j]))
        z[j] = 2 * x + parity
        resid = (resid - z[j]) >> 1  # exact: resid - z[j] is even
    return z


def gadget_coset_sample(rng: RandomSource, pp: Params, v: RingElement, sigma_g: float | None = None) -> RingVector:
    """z in R^k with g^T z = v (mod q), each coefficient column from D_{Lambda_v(g^T), sigma_g}."""
    ring = pp.ring
    sigma = pp.sigma_g if sigma_g is None else sigma_g
    return RingVector(ring, coset_integers(rng, v.coeffs, ring.k, sigma, pp.tail_cut))


def _perturbation_factors(pp: Params, R: TrapdoorMatrix, sigma_p: float, sigma_g: float):
    """Block factorisation of Sigma_p = (sigma_p^2 - r^2) I - sigma_g^2 [R; I][R; I]^T.

    With D = (sigma_p^2 - r^2 - sigma_g^2) I on the gadget block, the sample is
    x2 ~ N(0, D) and x1 = -(sigma_g^2 / D) R x2 + chol(A - B D^-1 B^T) w.
    Covariances are in variance units (parameter^2 / 2 pi).
    """
    key = ("perturb", float(sigma_p), float(sigma_g), float(pp.round_width))
    if key in R._cache:
        return R._cache[key]
    s1 = largest_singular_value(R)
    if not sigma_p**2 > sigma_g**2 * (1.0 + s1**2):
        raise ParameterError(
            f"sigma_p = {sigma_p:.3f} too small: need sigma_p^2 > sigma_g^2 (1 + s1(R)^2), s1 = {s1:.3f}"
        )
    two_pi = 2.0 * math.pi
    base = (sigma_p**2 - pp.round_width**2) / two_pi
    g2 = sigma_g**2 / two_pi
    d = base - g2
    if d <= 0:
        raise ParameterError("perturbation covariance is not positive definite")
    E = R.embedding()
    RRt = E @ E.T
    schur = base * np.eye(E.shape[0]) - g2 * RRt - (g2 * g2 / d) * RRt
    try:
        chol = np.linalg.cholesky(schur)
    except np.linalg.LinAlgError:
        raise ParameterError("perturbation covariance is not positive definite") from None
    out = (math.sqrt(d), -g2 / d, chol)
    R._cache[key] = out
    return out


def perturbation_sample(
    rng: RandomSource,
    pp: Params,
    R: TrapdoorMatrix,
    sigma_p: float | None = None,
    sigma_g: float | None = None,
) -> RingVector:
    """Integer p with covariance sigma_p^2 I - sigma_g^2 [R; I][R; I]^T (parameter units)."""
    sigma_p = pp.sigma_p if sigma_p is None else sigma_p
    sigma_g = pp.sigma_g if sigma_g is None else sigma_g
    sd2, coupling, chol = _perturbation_factors(pp, R, sigma_p, sigma_g)
    E = R.embedding()
    low, high = E.shape
    w = rng.normal("perturb", low + high)
    x2 = sd2 * w[low:]
    x1 = coupling * (E @ x2) + chol @ w[:low]
    cont = np.concatenate([x1, x2])
    p = randomized_round(rng, cont, pp.round_width, site="perturb:round")
    return RingVector(pp.ring, p.reshape(pp.l + pp.k, pp.n))


def ring_sample(
    rng: RandomSource,
    pp: Params,
    R: TrapdoorMatrix,
    a: TaggedPublicVector,
    u: RingElement,
    sigma_g: float | None = None,
    sigma_p: float | None = None,
) -> RingVector:
    """A short x with a . x = u (mod q), spherical of width sigma_p.

    x = p + [R; I] z with p a perturbation and z a gadget-coset sample for
    h^{-1} (u - a . p).
    """
    ring = pp.ring
    p = perturbation_sample(rng, pp, R, sigma_p, sigma_g)
    v = u - inner_product(a.a, p)
    if R.tag != ring.one():
        v = v * ring_inverse(R.tag)
    z = gadget_coset_sample(rng, pp, v, sigma_g)
    top = matrix_apply(ring, R.R, z)
    return p + top.concat(z)
