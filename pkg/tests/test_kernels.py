"""The compiled and NumPy backends must agree bit for bit."""

import numpy as np
import pytest

from dvsig import _pykernels, kernels
from oracles import schoolbook_mul

BACKENDS = kernels.backends()
MODULI = [8, 16, 17, 7, 1 << 10, 1 << 24, 1 << 32, 1 << 40, 12289]


def rand(rng, q, shape):
    return rng.below("k", q, int(np.prod(shape))).reshape(shape)


def test_default_backend_listed():
    assert kernels.BACKEND in ("compiled", "numpy")
    assert "numpy" in BACKENDS


@pytest.mark.parametrize("name", list(BACKENDS))
@pytest.mark.parametrize("q", MODULI)
@pytest.mark.parametrize("n", [1, 2, 4, 16, 128])
def test_poly_mul_against_oracle(rng, name, q, n):
    mod = BACKENDS[name]
    a, b = rand(rng, q, (n,)), rand(rng, q, (n,))
    assert mod.poly_mul(a, b, q).tolist() == schoolbook_mul(a.tolist(), b.tolist(), q)


@pytest.mark.parametrize("q", MODULI)
@pytest.mark.parametrize("n", [1, 4, 64])
def test_backends_agree(rng, q, n):
    a, b = rand(rng, q, (5, n)), rand(rng, q, (5, n))
    mat = rand(rng, q, (2, 5, n))
    pos = np.array(sorted(set(rng.below("p", n, 3).tolist())), dtype=np.int64)
    sgn = np.where(rng.below("s", 2, pos.size) == 1, -1, 1).astype(np.int64)
    for mod in BACKENDS.values():
        assert np.array_equal(mod.inner_product(a, b, q), _pykernels.inner_product(a, b, q))
        assert np.array_equal(mod.scalar_mul(a, b[0], q), _pykernels.scalar_mul(a, b[0], q))
        assert np.array_equal(mod.matrix_apply(mat, a, q), _pykernels.matrix_apply(mat, a, q))
        assert np.array_equal(mod.sparse_mul(a, pos, sgn, q), _pykernels.sparse_mul(a, pos, sgn, q))


def test_sparse_mul_is_a_product(rng):
    q, n = 1 << 24, 16
    v = rand(rng, q, (3, n))
    pos = np.array([0, 5, 15], dtype=np.int64)
    sgn = np.array([1, -1, 1], dtype=np.int64)
    c = np.zeros(n, dtype=np.int64)
    c[pos] = sgn
    for mod in BACKENDS.values():
        got = mod.sparse_mul(v, pos, sgn, q)
        for i in range(3):
            assert got[i].tolist() == schoolbook_mul(v[i].tolist(), (c % q).tolist(), q)


@pytest.mark.parametrize("name", list(BACKENDS))
def test_gadget_decode_kernel(name):
    mod = BACKENDS[name]
    q, k = 16, 4
    s = np.arange(16, dtype=np.uint64)
    bg = np.stack([(s << np.uint64(j)) % np.uint64(q) for j in range(k)])
    got, ok = mod.gadget_decode(np.ascontiguousarray(bg), q, k)
    assert ok and got.tolist() == s.tolist()
    # a residue exactly q/4 away from both candidates is flagged
    bg[k - 1, 0] = 4
    assert mod.gadget_decode(np.ascontiguousarray(bg), q, k)[1] is False
