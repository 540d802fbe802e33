"""Compiled vs NumPy kernels, per operation and end to end.

    python benchmarks/bench_kernels.py [--profile desk] [--repeats 20]

The end-to-end rows rerun a sign/verify loop in a child process with
DVSIG_PURE_PYTHON=1, since the backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import time

from dvsig import kernels
from dvsig.bench import kernel_timings
from dvsig.params import standard_params
from dvsig.sampling import RandomSource

E2E = """
import time
from dvsig import kernels
from dvsig.params import standard_params
from dvsig.sampling import RandomSource
from dvsig.scheme import sign, sign_keygen, ver_keygen, verify
pp = standard_params({profile!r})
rng = RandomSource(bytes(32))
sk = sign_keygen(rng, pp); vk = ver_keygen(rng, pp)
t0 = time.perf_counter()
for i in range({rounds}):
    sig = sign(rng, pp, sk.s, sk.t, vk.pk, b"m%d" % i)
    assert verify(pp, vk.sk, sk.t, vk.pk, sig, b"m%d" % i)
print(kernels.BACKEND, (time.perf_counter() - t0) / {rounds})
"""


def end_to_end(profile, rounds, pure):
    env = dict(os.environ)
    if pure:
        env["DVSIG_PURE_PYTHON"] = "1"
    else:
        env.pop("DVSIG_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, "-c", E2E.format(profile=profile, rounds=rounds)],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--profile", default="desk")
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--rounds", type=int, default=10)
    args = ap.parse_args()

    pp = standard_params(args.profile)
    print(f"profile {pp.name}: n={pp.n} q=2^{pp.k} l+k={pp.m}; default backend {kernels.BACKEND}")
    timings = kernel_timings(pp, RandomSource(bytes(32)), args.repeats)
    for op, row in timings.items():
        cells = "  ".join(f"{b:>8}={t * 1e6:9.1f}us" for b, t in row.items())
        speedup = row["numpy"] / row["compiled"] if "compiled" in row else float("nan")
        print(f"{op:<14} {cells}  speedup {speedup:5.1f}x")

    t0 = time.perf_counter()
    for pure in (False, True):
        backend, secs = end_to_end(args.profile, args.rounds, pure)
        print(f"sign+verify    {backend:>8} {secs * 1e3:9.2f} ms per message")
    print(f"(end-to-end runs took {time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
