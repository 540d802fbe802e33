from dataclasses import replace

import numpy as np
import pytest

from dvsig import bitpack, codec
from dvsig.challenge import ChallengeElement
from dvsig.codec import (
    CodecError,
    CoefficientRangeError,
    LengthMismatchError,
    MalformedHeaderError,
    NonCanonicalError,
    ParamsMismatchError,
    VersionError,
)
from dvsig.params import PROFILES, setup, standard_params
from dvsig.sampling import RandomSource
from dvsig.scheme import Signature, sign, sign_keygen, ver_keygen


def material(pp, rng, count):
    """count signer keys, verifier keys and signatures (a fixed verifier signs for all)."""
    vks = [ver_keygen(rng, pp) for _ in range(count)]
    out = []
    for i in range(count):
        sk = sign_keygen(rng, pp)
        out.append((sk, vks[i], sign(rng, pp, sk.s, sk.t, vks[0].pk, b"%d" % i)))
    return out


CODECS = {
    "signer_pk": (lambda m: m[0].t, codec.encode_signer_pk, codec.decode_signer_pk),
    "signer_sk": (lambda m: m[0].s, codec.encode_signer_sk, codec.decode_signer_sk),
    "signer_keypair": (lambda m: m[0], codec.encode_signer_keypair, codec.decode_signer_keypair),
    "verifier_pk": (lambda m: m[1].pk, codec.encode_verifier_pk, codec.decode_verifier_pk),
    "verifier_sk": (lambda m: m[1].sk, codec.encode_verifier_sk, codec.decode_verifier_sk),
    "verifier_keypair": (lambda m: m[1], codec.encode_verifier_keypair, codec.decode_verifier_keypair),
    "signature": (lambda m: m[2], codec.encode_signature, codec.decode_signature),
    "signature_sparse": (
        lambda m: m[2],
        lambda pp, x: codec.encode_signature(pp, x, sparse=True),
        codec.decode_signature,
    ),
}


@pytest.fixture(scope="module")
def toy_material(toy):
    return material(toy, RandomSource.from_int(11), 1000)


@pytest.fixture(scope="module")
def desk_material(desk):
    return material(desk, RandomSource.from_int(12), 20)


def equal(a, b):
    if hasattr(a, "sk") and hasattr(a, "pk"):
        return a.pk == b.pk and a.sk == b.sk
    return a == b


# -- params ------------------------------------------------------------------


@pytest.mark.parametrize("name", list(PROFILES))
def test_params_round_trip(name):
    pp = standard_params(name)
    blob = codec.encode_params(pp)
    assert codec.peek_type(blob) == codec.T_PARAMS
    back = codec.decode_params(blob)
    assert back == pp
    assert codec.encode_params(back) == blob
    assert codec.fingerprint(back) == codec.fingerprint(pp)


def test_fingerprints_differ():
    prints = {codec.fingerprint(standard_params(name)) for name in PROFILES}
    assert len(prints) == len(PROFILES)
    other = setup("toy", RandomSource.from_int(3))
    assert codec.fingerprint(other) != codec.fingerprint(standard_params("toy"))


def test_params_truncated():
    blob = codec.encode_params(standard_params("toy"))
    for cut in (7, 20, len(blob) - 1):
        with pytest.raises(CodecError):
            codec.decode_params(blob[:cut])


# -- round trips -------------------------------------------------------------


@pytest.mark.parametrize("kind", list(CODECS))
def test_round_trip_toy(toy, toy_material, kind):
    pick, enc, dec = CODECS[kind]
    for m in toy_material:
        blob = enc(toy, pick(m))
        back = dec(toy, blob)
        assert equal(back, pick(m))
        assert enc(toy, back) == blob


@pytest.mark.parametrize("kind", list(CODECS))
def test_round_trip_desk(desk, desk_material, kind):
    pick, enc, dec = CODECS[kind]
    for m in desk_material:
        blob = enc(desk, pick(m))
        assert equal(dec(desk, blob), pick(m))
        assert codec.peek_fingerprint(blob) == codec.fingerprint(desk)


# -- malformed input ---------------------------------------------------------


@pytest.mark.parametrize("kind", list(CODECS))
def test_truncated_and_extended(toy, toy_material, kind):
    pick, enc, dec = CODECS[kind]
    blob = enc(toy, pick(toy_material[0]))
    head = codec.header_len(blob[5])
    with pytest.raises(LengthMismatchError):
        dec(toy, blob[:-1])
    with pytest.raises(LengthMismatchError):
        dec(toy, blob + b"\x00")
    with pytest.raises(LengthMismatchError):
        dec(toy, blob[:head])
    for cut in range(head):
        with pytest.raises(MalformedHeaderError):
            dec(toy, blob[:cut])


def test_bad_magic_version_and_type(toy, toy_material):
    blob = codec.encode_signer_pk(toy, toy_material[0][0].t)
    with pytest.raises(MalformedHeaderError):
        codec.decode_signer_pk(toy, b"XSDV" + blob[4:])
    with pytest.raises(VersionError):
        codec.decode_signer_pk(toy, blob[:4] + bytes([codec.VERSION + 1]) + blob[5:])
    with pytest.raises(MalformedHeaderError):
        codec.decode_signer_pk(toy, blob[:5] + b"\x7f" + blob[6:])
    with pytest.raises(MalformedHeaderError):
        codec.decode_signer_sk(toy, blob)


def test_params_mismatch(toy, desk, toy_material):
    blob = codec.encode_signer_pk(toy, toy_material[0][0].t)
    with pytest.raises(ParamsMismatchError):
        codec.decode_signer_pk(desk, blob)
    flipped = bytearray(blob)
    flipped[7] ^= 1  # inside the fingerprint
    with pytest.raises(ParamsMismatchError):
        codec.decode_signer_pk(toy, bytes(flipped))


def test_secret_out_of_range(toy):
    width = codec.secret_width(toy.d)
    raw = np.zeros(toy.m * toy.n, dtype=np.uint64)
    raw[5] = 2 * toy.d + 1
    blob = codec._header(codec.T_SIGNER_SK, toy) + bitpack.pack(raw, width)
    with pytest.raises(CoefficientRangeError):
        codec.decode_signer_sk(toy, blob)
    with pytest.raises(CoefficientRangeError):
        codec.encode_signer_sk(toy, toy.ring.vector(np.full((toy.m, toy.n), toy.d + 1)))


def test_bad_challenges(toy, toy_material):
    sig = toy_material[0][2]
    dense = bytearray(codec.encode_signature(toy, sig))
    # c1 is the last n*k bits; turn its first coefficient into 2
    body = bytearray(dense[codec.header_len(codec.T_SIGNATURE) :])
    bits = np.unpackbits(np.frombuffer(bytes(body), dtype=np.uint8), bitorder="little")
    start = 2 * toy.m * toy.n * toy.k
    bits[start : start + toy.k] = [0, 1] + [0] * (toy.k - 2)
    bad = bytes(dense[: codec.header_len(codec.T_SIGNATURE)]) + np.packbits(bits, bitorder="little").tobytes()
    with pytest.raises(CoefficientRangeError):
        codec.decode_signature(toy, bad)
    # wrong weight is refused on the way out
    light = ChallengeElement(toy.ring, sig.c1.positions[1:], sig.c1.signs[1:])
    with pytest.raises(CoefficientRangeError):
        codec.encode_signature(toy, Signature(sig.c0, light, sig.z))


def test_sparse_positions_must_increase(rng):
    pp = setup(replace(PROFILES["toy"], kappa=7), RandomSource.from_int(1))
    sk, vk = sign_keygen(rng, pp), ver_keygen(rng, pp)
    sig = sign(rng, pp, sk.s, sk.t, vk.pk, b"m")
    blob = codec.encode_signature(pp, sig, sparse=True)
    head = codec.header_len(codec.T_SIGNATURE_SPARSE)
    bits = np.unpackbits(np.frombuffer(blob[head:], dtype=np.uint8), bitorder="little")
    start, pw = 2 * pp.m * pp.n * pp.k, codec.position_width(pp.n)
    swapped = bits.copy()
    swapped[start : start + pw], swapped[start + pw : start + 2 * pw] = (
        bits[start + pw : start + 2 * pw].copy(),
        bits[start : start + pw].copy(),
    )
    with pytest.raises(CoefficientRangeError):
        codec.decode_signature(pp, blob[:head] + np.packbits(swapped, bitorder="little").tobytes())


def test_dirty_padding(rng):
    # kappa = 7 leaves 2*12*16*10 + 7*5 = 3875 bits: five padding bits in the last byte
    pp = setup(replace(PROFILES["toy"], kappa=7), RandomSource.from_int(1))
    sk, vk = sign_keygen(rng, pp), ver_keygen(rng, pp)
    blob = bytearray(codec.encode_signature(pp, sign(rng, pp, sk.s, sk.t, vk.pk, b"m"), sparse=True))
    assert codec.decode_signature(pp, bytes(blob))
    blob[-1] |= 0x80
    with pytest.raises(NonCanonicalError):
        codec.decode_signature(pp, bytes(blob))


# -- sizes -------------------------------------------------------------------


def test_size_report_desk(desk):
    rep = codec.size_report(desk, RandomSource.from_int(5))
    n, k, l = desk.n, desk.k, desk.l
    assert rep["sig"].ok and rep.sig_bits == 2 * (l + k) * n * k + n * k == 162816
    assert rep["sk_V"].ok and rep.sk_V_bits == 2 * (l * k) * (n * k) == 294912
    assert rep["sig"].body_bytes == 162816 // 8
    # the closed form for sk_S counts one coefficient per ring element; the key holds n
    assert not rep["sk_S"].ok
    assert rep["sk_S"].formula_bits == (l + k) * 5  # d = 8: ceil(log2 17) = 5
    assert rep["sk_S_per_n"].ok and rep.sk_S_bits == n * (l + k) * 5
    assert rep["sig_sparse"].ok and rep["sig_sparse"].measured_bits < rep.sig_bits
    assert not rep.ok
    assert "sk_S" in rep.text() and "size.sig.status=PASS" in rep.kv()


def test_size_formula_toy(toy):
    rep = codec.size_report(toy, RandomSource.from_int(5))
    assert rep["sk_S"].formula_bits == 36
    assert rep.sig_bits == codec.sig_formula_bits(16, 10, 2)


def test_size_doubles_with_n(desk):
    big = codec.size_report(standard_params("desk256"), RandomSource.from_int(5))
    small = codec.size_report(desk, RandomSource.from_int(5))
    assert big.sig_bits / small.sig_bits == pytest.approx(2.0, abs=0.01)
