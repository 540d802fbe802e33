"""Public parameters, named profiles and derived constants."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from dvsig.ring import Ring, RingVector
from dvsig.sampling import DEFAULT_TAIL_CUT, RandomSource, exact_pmf, sample_uniform_vector

HASH_ID = "SHAKE128/LaSDVS-v1-H"
PUBLIC_SEED_LABEL = b"DVSIG-v1-A"

# s1(R) of an (ln x kn) block-negacyclic Gaussian matrix stays below
# S1_SLACK * std * (sqrt(ln) + sqrt(kn)); trapdoors above it are resampled.
S1_SLACK = 1.4
SIGMA_P_SLACK = 1.1
ROUND_WIDTH = 4.0


class ParameterError(ValueError):
    """Invalid or inconsistent parameter set."""


@dataclass(frozen=True)
class Profile:
    """The tunable knobs of a parameter set; everything else is derived."""

    name: str
    n: int
    log_q: int
    l: int
    gamma: float
    kappa: int
    sigma_e: float
    sigma_g: float
    alpha: float = 12.0
    eta: float = 1.3
    tail_cut: float = DEFAULT_TAIL_CUT
    min_challenge_bits: float = 100.0

    @classmethod
    def from_mapping(cls, data: dict) -> "Profile":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown profile fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ParameterError(str(exc)) from None


PROFILES: dict[str, Profile] = {
    # Insecure: n = 16 cannot reach 100 bits of challenge entropy for any weight.
    "toy": Profile("toy", n=16, log_q=10, l=2, gamma=10, kappa=8, sigma_e=1.0, sigma_g=6.0, min_challenge_bits=20),
    "desk": Profile("desk", n=128, log_q=24, l=2, gamma=8, kappa=21, sigma_e=3.2, sigma_g=6.0),
    "desk256": Profile("desk256", n=256, log_q=24, l=2, gamma=8, kappa=21, sigma_e=3.2, sigma_g=6.0),
}


@dataclass(frozen=True, eq=False)
class Params:
    name: str
    n: int
    q: int
    l: int
    gamma: float
    d: int
    kappa: int
    sigma_e: float
    sigma_g: float
    sigma_p: float
    sigma_z: float
    alpha: float
    eta: float
    M: float
    bound_z: float
    tail_cut: float
    round_width: float
    s1_max: float
    min_challenge_bits: float
    a: RingVector = field(repr=False)
    hash_id: str = HASH_ID

    def __post_init__(self):
        validate(self)

    @property
    def ring(self) -> Ring:
        return self.a.ring

    @property
    def k(self) -> int:
        return (self.q - 1).bit_length()

    @property
    def m(self) -> int:
        """Length l + k of the public vectors."""
        return self.l + self.k

    @property
    def dim(self) -> int:
        """Coefficient-embedding dimension n * (l + k)."""
        return self.n * self.m

    @property
    def challenge_bits(self) -> float:
        return challenge_entropy_bits(self.n, self.kappa)

    @property
    def shift_bound(self) -> float:
        """Worst-case norm T of s * c1 for bounded s and a weight-kappa challenge."""
        return self.d * self.kappa * math.sqrt(self.dim)

    @property
    def e_bound(self) -> int:
        """Largest centered error coefficient accepted when inverting c0."""
        return min(int(math.ceil(self.tail_cut * self.sigma_p)), self.q // 4 - 1)

    def __eq__(self, other):
        if not isinstance(other, Params):
            return NotImplemented
        mine = {k: v for k, v in self.__dict__.items() if k != "a"}
        theirs = {k: v for k, v in other.__dict__.items() if k != "a"}
        return mine == theirs and self.a == other.a

    __hash__ = None

    def summary(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "a"}
        out.update(k=self.k, challenge_bits=round(self.challenge_bits, 3), shift_bound=self.shift_bound)
        return out


def challenge_entropy_bits(n: int, kappa: int) -> float:
    """log2(2^kappa * C(n, kappa)): the size of the weight-kappa signed challenge set."""
    return kappa + math.log2(math.comb(n, kappa))


def bound_from_gamma(q: int, gamma: float) -> int:
    """d = floor(q ** (1 / gamma)), computed without floating-point undershoot."""
    d = int(round(q ** (1.0 / gamma)))
    while d > 1 and d**gamma > q:
        d -= 1
    while (d + 1) ** gamma <= q:
        d += 1
    return d


def discrete_stddev(sigma: float, tail_cut: float = DEFAULT_TAIL_CUT) -> float:
    xs, p = exact_pmf(sigma, 0.0, tail_cut)
    return float(math.sqrt(np.dot(p, xs.astype(np.float64) ** 2)))


def rejection_constant(alpha: float) -> float:
    return math.exp(12.0 / alpha + 1.0 / (2.0 * alpha * alpha))


def derive(profile: Profile) -> dict:
    """All derived constants for a profile (everything except the vector a)."""
    n, q, l = profile.n, 1 << profile.log_q, profile.l
    k = profile.log_q
    dim = n * (l + k)
    d = bound_from_gamma(q, profile.gamma)
    std_r = discrete_stddev(profile.sigma_e, profile.tail_cut)
    s1_max = S1_SLACK * std_r * (math.sqrt(l * n) + math.sqrt(k * n))
    sigma_p = SIGMA_P_SLACK * math.sqrt(profile.sigma_g**2 * (1.0 + s1_max**2) + ROUND_WIDTH**2)
    T = d * profile.kappa * math.sqrt(dim)
    sigma_z = profile.alpha * T
    return dict(
        name=profile.name,
        n=n,
        q=q,
        l=l,
        gamma=float(profile.gamma),
        d=d,
        kappa=profile.kappa,
        sigma_e=float(profile.sigma_e),
        sigma_g=float(profile.sigma_g),
        sigma_p=float(round(sigma_p, 6)),
        sigma_z=float(round(sigma_z, 6)),
        alpha=float(profile.alpha),
        eta=float(profile.eta),
        M=rejection_constant(profile.alpha),
        bound_z=float(profile.eta * sigma_z * math.sqrt(dim)),
        tail_cut=float(profile.tail_cut),
        round_width=ROUND_WIDTH,
        s1_max=float(s1_max),
        min_challenge_bits=float(profile.min_challenge_bits),
    )


def validate(pp: Params) -> None:
    n, q = pp.n, pp.q
    if n < 1 or n & (n - 1):
        raise ParameterError(f"n must be a power of two, got {n}")
    if q < 4 or q & (q - 1):
        raise ParameterError(f"q must be a power of two and at least 4, got {q}")
    if pp.l < 1 or pp.l + pp.k < 2:
        raise ParameterError("need l >= 1 and l + k >= 2")
    if not 1 <= pp.d <= q / 4:
        raise ParameterError(f"d must lie in [1, q/4], got {pp.d}")
    if pp.gamma <= 1:
        raise ParameterError("gamma must exceed 1")
    if not 1 <= pp.kappa <= n:
        raise ParameterError(f"challenge weight must lie in [1, n], got {pp.kappa}")
    for name in ("sigma_e", "sigma_g", "sigma_p", "sigma_z", "round_width"):
        if not getattr(pp, name) > 0:
            raise ParameterError(f"{name} must be positive")
    if not 1 < pp.eta < 2:
        raise ParameterError(f"eta must lie in (1, 2), got {pp.eta}")
    if not pp.M > 1:
        raise ParameterError(f"M must exceed 1, got {pp.M}")
    if pp.tail_cut < 6:
        raise ParameterError("tail_cut must be at least 6")
    if pp.challenge_bits < pp.min_challenge_bits:
        raise ParameterError(
            f"challenge space has {pp.challenge_bits:.2f} bits, below the required {pp.min_challenge_bits}"
        )
    if pp.a.ring != Ring(n, q) or len(pp.a) != pp.l + pp.k:
        raise ParameterError("public vector a must have l + k entries in R_q")


def resolve_profile(profile: str | Profile | dict) -> Profile:
    if isinstance(profile, Profile):
        return profile
    if isinstance(profile, dict):
        return Profile.from_mapping(profile)
    if profile.startswith("custom:"):
        return Profile.from_mapping(json.loads(Path(profile[len("custom:"):]).read_text()))
    try:
        return PROFILES[profile]
    except KeyError:
        raise ParameterError(f"unknown profile {profile!r}; known: {sorted(PROFILES)}") from None


def setup(profile: str | Profile | dict, rng: RandomSource | None = None) -> Params:
    """Fill every parameter of a profile and sample the public vector a uniformly."""
    prof = resolve_profile(profile)
    consts = derive(prof)
    # entropy guard before sampling anything
    bits = challenge_entropy_bits(consts["n"], consts["kappa"])
    if bits < consts["min_challenge_bits"]:
        raise ParameterError(f"challenge space has {bits:.2f} bits, below {consts['min_challenge_bits']}")
    rng = rng or RandomSource.from_entropy()
    ring = Ring(consts["n"], consts["q"])
    a = sample_uniform_vector(rng, ring, consts["l"] + prof.log_q, site="setup:a")
    return Params(a=a, **consts)


def standard_params(profile: str | Profile | dict) -> Params:
    """Reproducible parameters: a is expanded from a public seed bound to the profile name."""
    prof = resolve_profile(profile)
    seed = hashlib.shake_128(PUBLIC_SEED_LABEL + prof.name.encode()).digest(32)
    return setup(prof, RandomSource(seed))


def with_a(pp: Params, a: RingVector) -> Params:
    return replace(pp, a=a)
