import math

import numpy as np
import pytest
from scipy import stats as sps

import oracles
from dvsig.sampling import GaussParams, RandomSource, sample_z_batch
from dvsig.stats import (
    StatResult,
    check_regularity,
    chi2_counts,
    discrete_ks,
    folded_pmf,
    gaussian_ks,
    ks_two_sample,
    regularity_a0,
    run_battery,
)


def test_stat_result_direction():
    assert StatResult("x", 0.1, 0.5, 1e-3).passed
    assert not StatResult("x", 0.1, 1e-5, 1e-3).passed
    assert StatResult("x", 0.1, 1e-5, 1e-3, expect_fail=True).passed
    assert "negative control" in StatResult("x", 0.1, 1e-5, 1e-3, expect_fail=True).line()


def test_folded_pmf():
    xs, p = folded_pmf(3.2, 13.0)
    want = oracles.gauss_pmf(3.2)
    assert math.fsum(p) == pytest.approx(1.0)
    assert dict(zip(xs.tolist(), p.tolist())) == pytest.approx(want)
    # wider than q: the law wraps onto (-q/2, q/2]
    xs, p = folded_pmf(100.0, 13.0, q=16)
    assert xs.min() == -7 and xs.max() == 8
    assert math.fsum(p) == pytest.approx(1.0)
    assert np.allclose(p, 1 / 16, atol=1e-9)


def test_discrete_ks_sizes(rng):
    x = sample_z_batch(rng, GaussParams(20.0), 50_000)
    assert gaussian_ks(x, 20.0, 13.0)[1] > 1e-3
    assert gaussian_ks(x + 1, 20.0, 13.0)[1] < 1e-6
    assert gaussian_ks(x, 21.0, 13.0)[1] < 1e-3


def test_discrete_ks_is_conservative(rng):
    """Under the null the p-value should reject at most about alpha of the time."""
    xs, p = folded_pmf(3.2, 13.0)
    rejects = 0
    for _ in range(200):
        x = sample_z_batch(rng, GaussParams(3.2), 2000)
        rejects += discrete_ks(x, xs, p)[1] < 0.05
    assert rejects <= 20  # 10 expected at exactly 5%; a discrete KS sits below that


def test_two_sample(rng):
    a = sample_z_batch(rng, GaussParams(50.0), 100_000)
    b = sample_z_batch(rng, GaussParams(50.0), 100_000)
    c = sample_z_batch(rng, GaussParams(52.0), 100_000)
    assert ks_two_sample(a, b)[1] > 1e-3
    assert ks_two_sample(a, c)[1] < 1e-3


def test_chi2_pools_small_cells():
    observed = np.array([50, 50, 1, 0, 0], dtype=float)
    expected = np.array([50, 49, 0.5, 0.3, 0.2])
    stat, p, dof = chi2_counts(observed, expected)
    # the three thin cells fold into the second: two cells, one degree of freedom
    assert dof == 1
    assert stat == pytest.approx((51 - 50) ** 2 / 50)
    assert p > 0.5


def test_regularity_exact_law():
    """The check's fixed a0 at n=4, q=16, sigma=3.2: one term is far from uniform, three are close."""
    tv = {}
    for terms in (1, 2, 3):
        p = oracles.regularity_pmf(regularity_a0(terms).tolist(), 3.2, 16)
        assert p.sum() == pytest.approx(1.0)
        tv[terms] = 0.5 * np.abs(p - 16.0**-4).sum()
    assert tv[1] > 0.9
    assert tv[2] > 0.1
    assert tv[3] < 0.005
    # noncentrality of the 10^5-sample chi2 at l=3 is tiny against its critical excess
    p3 = oracles.regularity_pmf(regularity_a0(3).tolist(), 3.2, 16)
    lam = 1e5 * ((p3 - 16.0**-4) ** 2 * 16**4).sum()
    df = 16**4 - 1
    assert sps.ncx2.sf(sps.chi2.isf(1e-3, df), df, lam) < 2e-3


def test_regularity_check(rng):
    assert check_regularity(rng, 100_000).passed
    assert not check_regularity(rng, 100_000, terms=2).passed
    assert not check_regularity(rng, 100_000, terms=1).passed


def test_battery_deterministic_and_passing():
    a = run_battery("toy", 10_000, RandomSource(bytes(range(32))), negative_control=True)
    b = run_battery("toy", 10_000, RandomSource(bytes(range(32))), negative_control=True)
    assert a.kv() == b.kv()
    assert a.ok, a.text()
    neg = [r for r in a.results if r.expect_fail]
    assert len(neg) == 1 and neg[0].rejected


def test_battery_needs_samples():
    with pytest.raises(ValueError):
        run_battery("toy", 100, RandomSource(bytes(32)))
