"""Wall-clock benchmarks for the scheme and for the two kernel backends."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from dvsig import _pykernels, codec, kernels
from dvsig.params import Params
from dvsig.sampling import RandomSource
from dvsig.scheme import sign_counted, sign_keygen, simulate, ver_keygen, verify
from dvsig.stats import acceptance_rate

REJECTION_TOLERANCE = 0.05


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@dataclass
class BenchReport:
    profile: str
    trials: int
    medians: dict[str, float]  # seconds
    attempts: int
    accepted: int
    expected_rejection: float
    sizes: codec.SizeReport
    all_verified: bool
    kernels: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def rejection_rate(self) -> float:
        return 1.0 - self.accepted / self.attempts

    @property
    def rejection_ok(self) -> bool:
        return abs(self.rejection_rate - self.expected_rejection) <= REJECTION_TOLERANCE

    @property
    def ok(self) -> bool:
        return self.rejection_ok and self.sizes.ok and self.all_verified

    def text(self) -> str:
        rows = [f"benchmark, profile {self.profile}, {self.trials} trials (backend: {kernels.BACKEND})"]
        for name, secs in self.medians.items():
            rows.append(f"  {name:<16} median {secs * 1e3:10.3f} ms")
        rows.append(
            f"  rejection rate   {self.rejection_rate:.4f} over {self.attempts} attempts "
            f"(expected {self.expected_rejection:.4f} +/- {REJECTION_TOLERANCE}) "
            f"{'PASS' if self.rejection_ok else 'FAIL'}"
        )
        rows.append(f"  all verified     {'PASS' if self.all_verified else 'FAIL'}")
        for op, times in self.kernels.items():
            cells = "  ".join(f"{b}={t * 1e6:.1f}us" for b, t in times.items())
            rows.append(f"  kernel {op:<12} {cells}")
        rows.append(self.sizes.text())
        rows.append(f"overall: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(rows)

    def kv(self) -> str:
        rows = [f"profile={self.profile}", f"trials={self.trials}", f"backend={kernels.BACKEND}"]
        rows += [f"time.{name}.median_s={secs:.6g}" for name, secs in self.medians.items()]
        rows += [
            f"rejection.rate={self.rejection_rate:.6f}",
            f"rejection.expected={self.expected_rejection:.6f}",
            f"rejection.attempts={self.attempts}",
            f"rejection.status={'PASS' if self.rejection_ok else 'FAIL'}",
            f"verify.status={'PASS' if self.all_verified else 'FAIL'}",
        ]
        for op, times in self.kernels.items():
            rows += [f"kernel.{op}.{b}_s={t:.6g}" for b, t in times.items()]
        rows.append(self.sizes.kv())
        rows.append(f"bench.all={'PASS' if self.ok else 'FAIL'}")
        return "\n".join(rows)


def kernel_timings(pp: Params, rng: RandomSource, repeats: int = 20) -> dict[str, dict[str, float]]:
    """Median time of each hot kernel under every available backend."""
    backends = kernels.backends()
    q, n, m = pp.q, pp.n, pp.m
    a = rng.below("bench:a", q, m * n).reshape(m, n)
    b = rng.below("bench:b", q, m * n).reshape(m, n)
    R = rng.below("bench:R", q, pp.l * pp.k * n).reshape(pp.l, pp.k, n)
    cases = {
        "poly_mul": lambda mod: mod.poly_mul(a[0], b[0], q),
        "inner_product": lambda mod: mod.inner_product(a, b, q),
        "matrix_apply": lambda mod: mod.matrix_apply(R, b[: pp.k], q),
    }
    out = {}
    for op, fn in cases.items():
        out[op] = {}
        for name, mod in backends.items():
            runs = [_timed(fn, mod)[1] for _ in range(repeats)]
            out[op][name] = statistics.median(runs)
        ref = fn(_pykernels)
        for mod in backends.values():
            if not np.array_equal(fn(mod), ref):
                raise AssertionError(f"backend disagreement in {op}")
    return out


def run_bench(pp: Params, trials: int, rng: RandomSource, rejection_attempts: int | None = None,
              with_kernels: bool = True) -> BenchReport:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    times = {k: [] for k in ("keygen_signer", "keygen_verifier", "sign", "verify", "simulate", "simulate_warm")}
    verified = True
    attempts = accepted = 0
    for i in range(trials):
        mu = b"bench message %d" % i
        signer, t = _timed(sign_keygen, rng, pp)
        times["keygen_signer"].append(t)
        verifier, t = _timed(ver_keygen, rng, pp)
        times["keygen_verifier"].append(t)
        (sig, tries), t = _timed(sign_counted, rng, pp, signer.s, signer.t, verifier.pk, mu)
        times["sign"].append(t)
        attempts += tries
        accepted += 1
        ok, t = _timed(verify, pp, verifier.sk, signer.t, verifier.pk, sig, mu)
        times["verify"].append(t)
        sim, t = _timed(simulate, rng, pp, verifier.sk, signer.t, verifier.pk, mu)
        times["simulate"].append(t)  # first use of a fresh key includes its perturbation factorization
        sim2, t = _timed(simulate, rng, pp, verifier.sk, signer.t, verifier.pk, mu)
        times["simulate_warm"].append(t)
        verified &= verify(pp, verifier.sk, signer.t, verifier.pk, sim2, mu)
        verified &= ok and verify(pp, verifier.sk, signer.t, verifier.pk, sim, mu)
    # the signing loop alone gives too few attempts for a +/-0.05 estimate
    extra = rejection_attempts if rejection_attempts is not None else max(1000, 10 * trials)
    if extra:
        ok_count, n_att = acceptance_rate(rng.spawn("bench-rejection"), pp, extra)
        accepted += ok_count
        attempts += n_att
    return BenchReport(
        profile=pp.name,
        trials=trials,
        medians={k: statistics.median(v) for k, v in times.items()},
        attempts=attempts,
        accepted=accepted,
        expected_rejection=1.0 - 1.0 / pp.M,
        sizes=codec.size_report(pp, rng.spawn("bench-sizes")),
        all_verified=bool(verified),
        kernels=kernel_timings(pp, rng.spawn("bench-kernels")) if with_kernels else {},
    )
