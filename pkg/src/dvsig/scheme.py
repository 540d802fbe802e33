"""Key generation, signing, verification and simulation.

Signing is Fiat-Shamir with aborts: an attempt is kept with probability
D_{sigma_z}(z) / (M D_{sigma_z, s c1}(z)) so accepted responses carry no
information about the secret, which is what lets the verifier's simulated
signatures match real ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from dvsig import kernels
from dvsig.challenge import ChallengeElement, hash_challenge
from dvsig.params import Params
from dvsig.ring import RingElement, RingVector, inner_product, sq_norm
from dvsig.sampling import (
    GaussParams,
    RandomSource,
    rejection_accept,
    sample_bounded,
    sample_ring_gaussian,
    sample_uniform_ring,
    sample_z_batch,
)
from dvsig.trapdoor import (
    TaggedPublicVector,
    TrapdoorError,
    TrapdoorMatrix,
    ring_gen_trap,
    ring_invert,
    ring_sample,
    trapdoor_identity_holds,
)

log = logging.getLogger(__name__)


class SigningError(RuntimeError):
    """Signing or simulation exceeded its iteration cap (mis-parameterisation)."""


@dataclass(frozen=True)
class SignerKeyPair:
    t: RingElement  # public
    s: RingVector  # secret, centered coefficients in [-d, d]


@dataclass(frozen=True)
class VerifierPublicKey:
    b0: TaggedPublicVector
    b1: TaggedPublicVector


@dataclass(frozen=True)
class VerifierSecretKey:
    R0: TrapdoorMatrix
    R1: TrapdoorMatrix


@dataclass(frozen=True)
class VerifierKeyPair:
    pk: VerifierPublicKey
    sk: VerifierSecretKey


@dataclass(frozen=True)
class Signature:
    c0: RingVector
    c1: ChallengeElement
    z: RingVector


def sparse_mul(v: RingVector, c: ChallengeElement) -> RingVector:
    pos, sgn = c.arrays()
    return RingVector(v.ring, kernels.sparse_mul(v.coeffs, pos, sgn, v.ring.q))


def sign_keygen(rng: RandomSource, pp: Params) -> SignerKeyPair:
    s = sample_bounded(rng, pp.ring, pp.d, pp.m, site="signkey:s")
    return SignerKeyPair(inner_product(pp.a, s), s)


def ver_keygen(rng: RandomSource, pp: Params) -> VerifierKeyPair:
    """Two independent tag-1 trapdoors."""
    b0, R0 = ring_gen_trap(rng, pp)
    b1, R1 = ring_gen_trap(rng, pp)
    return VerifierKeyPair(VerifierPublicKey(b0, b1), VerifierSecretKey(R0, R1))


def signer_key_valid(pp: Params, key: SignerKeyPair) -> bool:
    return inner_product(pp.a, key.s) == key.t and int(np.abs(key.s.centered()).max()) <= pp.d


def verifier_key_valid(key: VerifierKeyPair) -> bool:
    return trapdoor_identity_holds(key.pk.b0, key.sk.R0) and trapdoor_identity_holds(key.pk.b1, key.sk.R1)


def norm_in_range(pp: Params, z: RingVector) -> bool:
    """0 < ||z|| < B_z, compared exactly on squared integers."""
    nz = sq_norm(z)
    return 0 < nz and math.sqrt(nz) < pp.bound_z


def sign_attempt(
    rng: RandomSource,
    pp: Params,
    sk_s: RingVector,
    pk_s: RingElement,
    pk_v: VerifierPublicKey,
    mu: bytes,
    error_sigma: float | None = None,
) -> Signature | None:
    """One pass of the signing loop; None means the attempt was rejected."""
    ring = pp.ring
    s = sample_uniform_ring(rng, ring, site="sign:s")
    e = sample_ring_gaussian(rng, ring, error_sigma or pp.sigma_p, pp.m, pp.tail_cut, site="sign:e")
    # keep y as integers: the rejection step needs y + s c1 over Z, not its residue
    y_int = sample_z_batch(rng, GaussParams(pp.sigma_z, 0.0, pp.tail_cut), pp.m * ring.n, site="sign:y")
    y = RingVector(ring, y_int.reshape(pp.m, ring.n))
    w = inner_product(pp.a, y) + inner_product(pk_v.b1.a, e)
    c1 = hash_challenge(w, pk_s, s, mu, pp)
    shift = sparse_mul(sk_s, c1).centered().ravel()
    z_int = y_int + shift
    if not rejection_accept(rng, z_int, shift, pp.sigma_z, pp.M, site="sign:reject"):
        return None
    z = RingVector(ring, z_int.reshape(pp.m, ring.n))
    if not norm_in_range(pp, z):
        return None
    c0 = pk_v.b0.a * s + e
    return Signature(c0, c1, z)


def sign_counted(
    rng: RandomSource,
    pp: Params,
    sk_s: RingVector,
    pk_s: RingElement,
    pk_v: VerifierPublicKey,
    mu: bytes,
    error_sigma: float | None = None,
    max_attempts: int | None = None,
) -> tuple[Signature, int]:
    """Sign and report how many attempts the rejection loop took.

    ``error_sigma`` overrides the width of the commitment error e; the default
    sigma_p matches what the verifier's preimage sampler produces.
    """
    cap = max_attempts or int(math.ceil(100 * pp.M))
    for attempt in range(1, cap + 1):
        sig = sign_attempt(rng, pp, sk_s, pk_s, pk_v, mu, error_sigma)
        if sig is not None:
            log.debug("signed after %d attempts", attempt)
            return sig, attempt
    raise SigningError(f"no signature after {cap} attempts; parameters are inconsistent")


def sign(
    rng: RandomSource,
    pp: Params,
    sk_s: RingVector,
    pk_s: RingElement,
    pk_v: VerifierPublicKey,
    mu: bytes,
    error_sigma: float | None = None,
) -> Signature:
    return sign_counted(rng, pp, sk_s, pk_s, pk_v, mu, error_sigma)[0]


def recover_commitment(pp: Params, sk_v: VerifierSecretKey, pk_v: VerifierPublicKey, c0: RingVector):
    """(s, e) hidden in c0 = b0 s + e; raises TrapdoorError on malformed c0."""
    return ring_invert(pp, sk_v.R0, pk_v.b0, c0)


def verify(
    pp: Params,
    sk_v: VerifierSecretKey,
    pk_s: RingElement,
    pk_v: VerifierPublicKey,
    sig: Signature,
    mu: bytes,
) -> bool:
    ring = pp.ring
    if sig.z.ring != ring or len(sig.z) != pp.m or sig.c0.ring != ring or len(sig.c0) != pp.m:
        return False
    if sig.c1.ring != ring or sig.c1.weight != pp.kappa:
        return False
    if not norm_in_range(pp, sig.z):
        return False
    try:
        s, e = recover_commitment(pp, sk_v, pk_v, sig.c0)
    except TrapdoorError:
        return False
    w = inner_product(pp.a, sig.z) - pk_s * sig.c1.element() + inner_product(pk_v.b1.a, e)
    return hash_challenge(w, pk_s, s, mu, pp) == sig.c1


def simulate(
    rng: RandomSource,
    pp: Params,
    sk_v: VerifierSecretKey,
    pk_s: RingElement,
    pk_v: VerifierPublicKey,
    mu: bytes,
    max_attempts: int = 100,
    sigma_sim: float | None = None,
) -> Signature:
    """A signature produced from the verifier's trapdoor alone.

    ``sigma_sim`` overrides the preimage width (default sigma_p); anything else
    makes simulated signatures distinguishable, which the statistics use as a
    negative control.
    """
    ring = pp.ring
    s = sample_uniform_ring(rng, ring, site="simul:s")
    u = sample_uniform_ring(rng, ring, site="simul:u")
    for _ in range(max_attempts):
        z = sample_ring_gaussian(rng, ring, pp.sigma_z, pp.m, pp.tail_cut, site="simul:z")
        if norm_in_range(pp, z):
            break
    else:
        raise SigningError("simulated response never met the norm bound")
    c1 = hash_challenge(u, pk_s, s, mu, pp)
    target = u - inner_product(pp.a, z) + pk_s * c1.element()
    e = ring_sample(rng, pp, sk_v.R1, pk_v.b1, target, sigma_p=sigma_sim)
    c0 = pk_v.b0.a * s + e
    return Signature(c0, c1, z)
