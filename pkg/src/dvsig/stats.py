"""Statistical battery: sampler goodness of fit, challenge uniformity and Sign-vs-Simul.

Every test returns a :class:`StatResult` with a p-value; a test passes when the
p-value is at least the significance level. All randomness comes from one
seeded :class:`RandomSource`, so a seeded run reproduces its p-values exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from dvsig.params import Params, standard_params
from dvsig.ring import Ring, negacyclic_matrix
from dvsig.sampling import GaussParams, RandomSource, exact_pmf, sample_ring_gaussian, sample_uniform_ring, sample_z_batch
from dvsig.challenge import expand_challenge
from dvsig.scheme import (
    recover_commitment,
    sign,
    sign_attempt,
    sign_keygen,
    simulate,
    ver_keygen,
)
from dvsig.trapdoor import TrapdoorError, ring_gen_trap, ring_sample

DEFAULT_ALPHA = 1e-3
REGULARITY_TERMS = 3
NEGATIVE_CONTROL_FACTOR = 2.0


@dataclass(frozen=True)
class StatResult:
    name: str
    statistic: float
    p_value: float
    alpha: float
    detail: str = ""
    expect_fail: bool = False  # negative controls

    @property
    def rejected(self) -> bool:
        return self.p_value < self.alpha

    @property
    def passed(self) -> bool:
        return self.rejected if self.expect_fail else not self.rejected

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        want = " (negative control, must reject)" if self.expect_fail else ""
        return f"{tag}  {self.name:<28} stat={self.statistic:.6g} p={self.p_value:.4g}{want}  {self.detail}".rstrip()


# -- generic tests -----------------------------------------------------------


def discrete_ks(samples: np.ndarray, support: np.ndarray, pmf: np.ndarray) -> tuple[float, float]:
    """One-sample KS against a distribution on the integers.

    The statistic is taken over the integer grid, where both CDFs jump; the
    continuous Kolmogorov p-value is then conservative.
    """
    x = np.asarray(samples, dtype=np.int64).ravel()
    lo = min(int(support[0]), int(x.min()))
    hi = max(int(support[-1]), int(x.max()))
    grid_pmf = np.zeros(hi - lo + 1)
    grid_pmf[support - lo] = pmf
    emp = np.bincount(x - lo, minlength=hi - lo + 1) / x.size
    d = float(np.abs(np.cumsum(emp) - np.cumsum(grid_pmf)).max())
    return d, float(sps.kstwo.sf(d, x.size))


def folded_pmf(sigma: float, tail_cut: float, q: int | None = None, center: float = 0.0):
    """D_{Z, sigma} on its truncated support, optionally reduced to centered residues mod q."""
    xs, p = exact_pmf(sigma, center, tail_cut)
    if q is None or (xs[0] > -q // 2 and xs[-1] <= q // 2):
        return xs, p
    folded = np.zeros(q)
    np.add.at(folded, xs % q, p)
    support = np.arange(-q // 2 + 1, q // 2 + 1)
    return support, folded[support % q]


def gaussian_ks(samples: np.ndarray, sigma: float, tail_cut: float, q: int | None = None) -> tuple[float, float]:
    xs, p = folded_pmf(sigma, tail_cut, q)
    return discrete_ks(samples, xs, p)


def chi2_counts(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Pearson chi-squared, pooling sparse cells from both tails into their neighbours."""
    obs = np.asarray(observed, dtype=np.float64)
    exp = np.asarray(expected, dtype=np.float64)
    if exp.min() < min_expected:
        # pool consecutive cells until each pooled cell has enough expected mass
        groups, acc_o, acc_e = [], 0.0, 0.0
        for o, e in zip(obs, exp):
            acc_o += o
            acc_e += e
            if acc_e >= min_expected:
                groups.append((acc_o, acc_e))
                acc_o = acc_e = 0.0
        if acc_e and groups:
            o, e = groups[-1]
            groups[-1] = (o + acc_o, e + acc_e)
        obs = np.array([g[0] for g in groups])
        exp = np.array([g[1] for g in groups])
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = obs.size - 1
    return stat, float(sps.chi2.sf(stat, dof)), dof


def ks_two_sample(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    res = sps.ks_2samp(np.ravel(x), np.ravel(y), method="asymp")
    return float(res.statistic), float(res.pvalue)


# -- individual checks -------------------------------------------------------


def check_gauss_sampler(rng: RandomSource, sigma: float, samples: int, tail_cut: float, alpha=DEFAULT_ALPHA, name=None):
    x = sample_z_batch(rng, GaussParams(sigma, 0.0, tail_cut), samples, site="stats:gauss")
    xs, p = exact_pmf(sigma, 0.0, tail_cut)
    counts = np.bincount(x - xs[0], minlength=xs.size)
    stat, pval, dof = chi2_counts(counts, p * samples)
    return StatResult(name or f"gauss_chi2[sigma={sigma:g}]", stat, pval, alpha, f"dof={dof}")


def check_gauss_moments(rng: RandomSource, sigma: float, samples: int, tail_cut: float, alpha=DEFAULT_ALPHA):
    """Mean and variance z-scores against the exact truncated moments, combined as chi2(2)."""
    x = sample_z_batch(rng, GaussParams(sigma, 0.0, tail_cut), samples, site="stats:moments").astype(np.float64)
    xs, p = exact_pmf(sigma, 0.0, tail_cut)
    xs = xs.astype(np.float64)
    var = float(np.dot(p, xs**2))
    m4 = float(np.dot(p, xs**4))
    z_mean = x.mean() / math.sqrt(var / samples)
    z_var = (np.mean(x**2) - var) / math.sqrt((m4 - var**2) / samples)
    stat = z_mean**2 + z_var**2
    return StatResult(
        f"gauss_moments[sigma={sigma:g}]", stat, float(sps.chi2.sf(stat, 2)), alpha,
        f"mean_z={z_mean:.3f} var_z={z_var:.3f}",
    )


def check_challenge_positions(rng: RandomSource, pp: Params, samples: int, alpha=DEFAULT_ALPHA):
    """Nonzero positions of hashed challenges should be uniform over 0..n-1."""
    count = max(1, samples // pp.kappa)
    hits = np.zeros(pp.n)
    seeds = rng.read("stats:challenge", 16 * count)
    for i in range(count):
        c = expand_challenge(seeds[16 * i : 16 * i + 16], pp)
        hits[list(c.positions)] += 1
    stat, pval, dof = chi2_counts(hits, np.full(pp.n, count * pp.kappa / pp.n))
    return StatResult("challenge_positions", stat, pval, alpha, f"challenges={count} dof={dof}")


def check_challenge_signs(rng: RandomSource, pp: Params, samples: int, alpha=DEFAULT_ALPHA):
    count = max(1, samples // pp.kappa)
    seeds = rng.read("stats:signs", 16 * count)
    neg = sum(sum(s < 0 for s in expand_challenge(seeds[16 * i : 16 * i + 16], pp).signs) for i in range(count))
    total = count * pp.kappa
    res = sps.binomtest(int(neg), total, 0.5)
    return StatResult("challenge_signs", neg / total, float(res.pvalue), alpha, f"draws={total}")


def regularity_a0(terms: int, n: int = 4, q: int = 16) -> np.ndarray:
    """The fixed public vector of the regularity check, as a (terms, n) array."""
    a0 = RandomSource(b"regularity-a0".ljust(32, b"\0")).below("a0", q, terms * n).reshape(terms, n)
    a0[0, 0] |= 1  # odd constant term and even others: a unit when q is a power of two
    a0[0, 1:] &= ~np.uint64(1)
    return a0


def check_regularity(rng: RandomSource, samples: int, terms: int = REGULARITY_TERMS, n=4, q=16, sigma=3.2,
                    alpha=DEFAULT_ALPHA, tail_cut=13.0):
    """a0^T r over R_q for a fixed uniform a0 (first entry a unit) and Gaussian r: every value of R_q equally likely."""
    ring = Ring(n, q)
    a0 = regularity_a0(terms, n, q)
    # y = sum_i a0_i r_i computed for the whole batch through negacyclic matrices
    mats = np.stack([negacyclic_matrix(row.astype(np.int64)) for row in a0])
    weights = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    r = sample_ring_gaussian(rng, ring, sigma, terms * samples, tail_cut, site="stats:reg").centered()
    r = r.reshape(samples, terms, n)
    y = np.einsum("tij,stj->si", mats, r) % q
    counts = np.bincount(y @ weights, minlength=q**n).astype(np.float64)
    exp = np.full(q**n, samples / q**n)
    # expected counts are small, but with 65535 degrees of freedom the chi2 law is still accurate
    stat = float(((counts - exp) ** 2 / exp).sum())
    pval = float(sps.chi2.sf(stat, q**n - 1))
    return StatResult(f"regularity[n={n},q={q},l={terms}]", stat, pval, alpha, f"samples={samples}")


# -- scheme-level checks -----------------------------------------------------


@dataclass
class SchemeSamples:
    sign_z: np.ndarray
    sign_e: np.ndarray
    simul_z: np.ndarray
    simul_e: np.ndarray
    signatures: int
    invert_failures: int = 0


def collect_scheme_samples(rng: RandomSource, pp: Params, samples: int, sigma_sim: float | None = None) -> SchemeSamples:
    """Coefficients of z and of the commitment error e from Sign and from Simul.

    e is what the verifier recovers from c0 with its trapdoor, so the comparison
    is over exactly what a verifier sees. ``sigma_sim`` mis-parameterises the
    simulator for the negative control.
    """
    signer = sign_keygen(rng, pp)
    verifier = ver_keygen(rng, pp)
    per_sig = pp.m * pp.n
    count = max(1, -(-samples // per_sig))
    out = {k: [] for k in ("sign_z", "sign_e", "simul_z", "simul_e")}
    failures = {"sign": 0, "simul": 0}
    for i in range(count):
        mu = i.to_bytes(8, "big")
        for who in ("sign", "simul"):
            if who == "sign":
                sig = sign(rng, pp, signer.s, signer.t, verifier.pk, mu)
            else:
                sig = simulate(rng, pp, verifier.sk, signer.t, verifier.pk, mu, sigma_sim=sigma_sim)
            try:
                _, e = recover_commitment(pp, verifier.sk, verifier.pk, sig.c0)
            except TrapdoorError:
                # the verifier would reject outright; only possible when mis-parameterised
                failures[who] += 1
                continue
            out[f"{who}_z"].append(sig.z.centered().ravel())
            out[f"{who}_e"].append(e.centered().ravel())
    arrs = {k: np.concatenate(v)[:samples] for k, v in out.items()}
    return SchemeSamples(signatures=count, invert_failures=failures["sign"] + failures["simul"], **arrs)


def check_sign_vs_simul(data: SchemeSamples, alpha=DEFAULT_ALPHA):
    res = []
    for part in ("z", "e"):
        d, p = ks_two_sample(getattr(data, f"sign_{part}"), getattr(data, f"simul_{part}"))
        res.append(
            StatResult(
                f"sign_vs_simul_{part}", d, p, alpha,
                f"n={getattr(data, f'sign_{part}').size} sigs={data.signatures} invert_failures={data.invert_failures}",
            )
        )
    return res


def check_negative_control(data: SchemeSamples, sigma_sim: float, alpha=DEFAULT_ALPHA):
    """The z and e tests combined (Bonferroni); a wrong simulator width must be caught."""
    parts = check_sign_vs_simul(data, alpha)
    p = min(1.0, 2 * min(r.p_value for r in parts))
    stat = max(r.statistic for r in parts)
    detail = f"sigma_sim={sigma_sim:g} invert_failures={data.invert_failures} " + " ".join(f"{r.name[-1]}:p={r.p_value:.3g}" for r in parts)
    return StatResult("sign_vs_simul_negctl", stat, p, alpha, detail, expect_fail=True)


def check_rejection_output(pp: Params, data: SchemeSamples, alpha=DEFAULT_ALPHA):
    """After rejection, Sign's z should be plain D_{sigma_z} regardless of the secret."""
    d, p = gaussian_ks(data.sign_z, pp.sigma_z, pp.tail_cut, pp.q)
    return StatResult("rejection_output_z", d, p, alpha, f"n={data.sign_z.size}")


def check_preimage_marginal(rng: RandomSource, pp: Params, samples: int, alpha=DEFAULT_ALPHA):
    """Coefficients of ring_sample outputs against D_{sigma_p}."""
    b, R = ring_gen_trap(rng, pp)
    per = pp.m * pp.n
    count = max(1, -(-samples // per))
    xs = []
    for i in range(count):
        u = sample_uniform_ring(rng, pp.ring, site="stats:syndrome")
        xs.append(ring_sample(rng, pp, R, b, u).centered().ravel())
    x = np.concatenate(xs)[:samples]
    d, p = gaussian_ks(x, pp.sigma_p, pp.tail_cut, pp.q)
    return StatResult("preimage_marginal", d, p, alpha, f"n={x.size} preimages={count}")


def acceptance_rate(rng: RandomSource, pp: Params, attempts: int) -> tuple[int, int]:
    """(accepted, attempts) over independent single sign attempts."""
    signer = sign_keygen(rng, pp)
    verifier = ver_keygen(rng, pp)
    ok = 0
    for i in range(attempts):
        if sign_attempt(rng, pp, signer.s, signer.t, verifier.pk, i.to_bytes(8, "big")) is not None:
            ok += 1
    return ok, attempts


# -- battery -----------------------------------------------------------------


@dataclass(frozen=True)
class BatteryReport:
    profile: str
    samples: int
    seed: str
    results: tuple[StatResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def text(self) -> str:
        head = f"statistical battery, profile {self.profile}, samples {self.samples}, seed {self.seed}"
        tail = f"overall: {'PASS' if self.ok else 'FAIL'}"
        return "\n".join([head] + [r.line() for r in self.results] + [tail])

    def kv(self) -> str:
        rows = [f"profile={self.profile}", f"samples={self.samples}", f"seed={self.seed}"]
        for r in self.results:
            rows += [
                f"stats.{r.name}.statistic={r.statistic:.10g}",
                f"stats.{r.name}.p_value={r.p_value:.10g}",
                f"stats.{r.name}.status={'PASS' if r.passed else 'FAIL'}",
            ]
        rows.append(f"stats.all={'PASS' if self.ok else 'FAIL'}")
        return "\n".join(rows)


def run_battery(
    pp: Params | str,
    samples: int,
    rng: RandomSource,
    alpha: float = DEFAULT_ALPHA,
    negative_control: bool = False,
) -> BatteryReport:
    """The default battery. With ``negative_control`` the Sign-vs-Simul test is
    rerun with the simulator at 2 sigma_p, and must reject."""
    if samples < 10_000:
        raise ValueError("the battery needs at least 10^4 samples")
    pp = standard_params(pp) if isinstance(pp, str) else pp
    seed_hex = rng.seed.hex()
    results = [
        check_gauss_sampler(rng.spawn("gauss-e"), pp.sigma_e, samples, pp.tail_cut, alpha),
        check_gauss_moments(rng.spawn("moments-e"), pp.sigma_e, samples, pp.tail_cut, alpha),
        check_gauss_sampler(rng.spawn("gauss-p"), pp.sigma_p, samples, pp.tail_cut, alpha),
        check_challenge_positions(rng.spawn("challenge"), pp, samples, alpha),
        check_challenge_signs(rng.spawn("signs"), pp, samples, alpha),
    ]
    data = collect_scheme_samples(rng.spawn("scheme"), pp, samples)
    results += check_sign_vs_simul(data, alpha)
    results.append(check_rejection_output(pp, data, alpha))
    results.append(check_preimage_marginal(rng.spawn("preimage"), pp, samples, alpha))
    results.append(check_regularity(rng.spawn("regularity"), samples, alpha=alpha))
    if negative_control:
        sigma_sim = NEGATIVE_CONTROL_FACTOR * pp.sigma_p
        bad = collect_scheme_samples(rng.spawn("negative"), pp, samples, sigma_sim=sigma_sim)
        results.append(check_negative_control(bad, sigma_sim, alpha))
    return BatteryReport(pp.name, samples, seed_hex, tuple(results))
