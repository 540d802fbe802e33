"""Command-line interface.

Exit codes: 0 success / ACCEPT, 1 REJECT (verify) or a failed battery (stats),
2 malformed input, parameter mismatch, bad usage or I/O failure.
"""

from __future__ import annotations

import hashlib
import logging
import os
import sys
from pathlib import Path

import click

from dvsig import codec
from dvsig.params import PROFILES, ParameterError, Params, resolve_profile, setup, standard_params
from dvsig.sampling import SEED_ENV_VAR, RandomSource

log = logging.getLogger("dvsig")

EXIT_REJECT = 1
EXIT_ERROR = 2


class CliError(click.ClickException):
    exit_code = EXIT_ERROR


def _fail(msg: str) -> CliError:
    return CliError(msg)


def _rng(seed: str | None) -> RandomSource:
    seed = seed or os.environ.get(SEED_ENV_VAR)
    if not seed:
        return RandomSource.from_entropy()
    try:
        return RandomSource.from_hex(seed)
    except ValueError as exc:
        raise _fail(f"bad seed: {exc}") from None


def load_params(profile: str) -> Params:
    """Named profile (standard public vector), or ``custom:<file>`` holding a params blob or a JSON profile."""
    try:
        if profile.startswith("custom:"):
            path = Path(profile[len("custom:"):])
            raw = path.read_bytes()
            if raw.startswith(codec.MAGIC):
                return codec.decode_params(raw)
        return standard_params(resolve_profile(profile))
    except (OSError, ValueError) as exc:
        raise _fail(f"cannot load profile {profile!r}: {exc}") from None


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _fail(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str | Path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise _fail(f"cannot write {path}: {exc.strerror or exc}") from None


def _params_for(profile: str | None, blobs: list[bytes]) -> Params:
    """Explicit profile, or the named profile whose fingerprint the first blob carries."""
    if profile:
        return load_params(profile)
    try:
        fp = codec.peek_fingerprint(blobs[0])
    except codec.CodecError as exc:
        raise _fail(f"malformed input: {exc}") from None
    for name in PROFILES:
        pp = standard_params(name)
        if codec.fingerprint(pp) == fp:
            return pp
    raise _fail("input was made under unknown parameters; pass --profile custom:<file>")


def _decode(fn, pp: Params, data: bytes, what: str):
    try:
        return fn(pp, data)
    except codec.ParamsMismatchError as exc:
        raise _fail(f"params mismatch in {what}: {exc}") from None
    except codec.CodecError as exc:
        raise _fail(f"malformed {what}: {exc}") from None


def key_fingerprint(blob: bytes) -> str:
    return hashlib.shake_128(blob).digest(8).hex()


profile_option = click.option("--profile", default=None, help="toy | desk | desk256 | custom:<file>")
seed_option = click.option("--seed", default=None, help=f"64 hex characters; overrides ${SEED_ENV_VAR}")
format_option = click.option("--format", "fmt", type=click.Choice(["text", "kv"]), default="text", show_default=True)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging")
def main(verbose: int):
    """Lattice strong designated-verifier signatures."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command("setup")
@click.option("--profile", default="desk", show_default=True)
@seed_option
@click.option("--out", "out", required=True, type=click.Path(dir_okay=False))
def cmd_setup(profile, seed, out):
    """Write a parameter blob. Without --seed the profile's standard public vector is used."""
    if seed or os.environ.get(SEED_ENV_VAR):
        try:
            pp = setup(resolve_profile(profile), _rng(seed))
        except (OSError, ValueError) as exc:
            raise _fail(str(exc)) from None
    else:
        pp = load_params(profile)
    blob = codec.encode_params(pp)
    _write(out, blob)
    click.echo(f"params {pp.name} fingerprint {codec.fingerprint(pp).hex()}")


@main.command("keygen")
@click.option("--role", type=click.Choice(["signer", "verifier"]), required=True)
@click.option("--profile", default="desk", show_default=True)
@seed_option
@click.option("--out", "out", required=True, help="output prefix; writes <prefix>.pk and <prefix>.sk")
def cmd_keygen(role, profile, seed, out):
    """Generate a key pair."""
    from dvsig.scheme import sign_keygen, ver_keygen

    pp = load_params(profile)
    rng = _rng(seed)
    if role == "signer":
        key = sign_keygen(rng, pp)
        pk, sk = codec.encode_signer_pk(pp, key.t), codec.encode_signer_sk(pp, key.s)
    else:
        key = ver_keygen(rng, pp)
        pk, sk = codec.encode_verifier_pk(pp, key.pk), codec.encode_verifier_sk(pp, key.sk)
    _write(f"{out}.pk", pk)
    _write(f"{out}.sk", sk)
    click.echo(f"{role} pk {out}.pk fingerprint {key_fingerprint(pk)}")
    click.echo(f"{role} sk {out}.sk")


@main.command("sign")
@click.option("--sk", "sk_path", required=True, help="signer secret key")
@click.option("--pk", "pk_path", required=True, help="signer public key")
@click.option("--verifier-pk", "vpk_path", required=True)
@click.option("--in", "msg_path", required=True, help="message file (raw bytes)")
@click.option("--out", "out", required=True)
@click.option("--sparse", is_flag=True, help="store the challenge as (position, sign) pairs")
@profile_option
@seed_option
def cmd_sign(sk_path, pk_path, vpk_path, msg_path, out, sparse, profile, seed):
    """Sign a message for one designated verifier."""
    from dvsig.scheme import SigningError, sign_counted

    blobs = [_read(p) for p in (sk_path, pk_path, vpk_path)]
    pp = _params_for(profile, blobs)
    s = _decode(codec.decode_signer_sk, pp, blobs[0], "signer secret key")
    t = _decode(codec.decode_signer_pk, pp, blobs[1], "signer public key")
    vpk = _decode(codec.decode_verifier_pk, pp, blobs[2], "verifier public key")
    try:
        sig, attempts = sign_counted(_rng(seed), pp, s, t, vpk, _read(msg_path))
    except SigningError as exc:
        raise _fail(str(exc)) from None
    log.info("signed after %d restart(s)", attempts - 1)
    _write(out, codec.encode_signature(pp, sig, sparse=sparse))
    click.echo(f"signature {out} restarts {attempts - 1}")


@main.command("simulate")
@click.option("--sk", "sk_path", required=True, help="verifier secret key")
@click.option("--pk", "pk_path", required=True, help="signer public key")
@click.option("--verifier-pk", "vpk_path", required=True)
@click.option("--in", "msg_path", required=True)
@click.option("--out", "out", required=True)
@click.option("--sparse", is_flag=True)
@profile_option
@seed_option
def cmd_simulate(sk_path, pk_path, vpk_path, msg_path, out, sparse, profile, seed):
    """Produce a signature from the verifier's secret key alone."""
    from dvsig.scheme import SigningError, simulate

    blobs = [_read(p) for p in (sk_path, pk_path, vpk_path)]
    pp = _params_for(profile, blobs)
    vsk = _decode(codec.decode_verifier_sk, pp, blobs[0], "verifier secret key")
    t = _decode(codec.decode_signer_pk, pp, blobs[1], "signer public key")
    vpk = _decode(codec.decode_verifier_pk, pp, blobs[2], "verifier public key")
    try:
        sig = simulate(_rng(seed), pp, vsk, t, vpk, _read(msg_path))
    except (SigningError, ParameterError) as exc:
        raise _fail(str(exc)) from None
    _write(out, codec.encode_signature(pp, sig, sparse=sparse))
    click.echo(f"signature {out} (simulated)")


@main.command("verify")
@click.option("--sk", "sk_path", required=True, help="verifier secret key")
@click.option("--pk", "pk_path", required=True, help="signer public key")
@click.option("--verifier-pk", "vpk_path", required=True)
@click.option("--in", "msg_path", required=True)
@click.option("--sig", "sig_path", required=True)
@profile_option
def cmd_verify(sk_path, pk_path, vpk_path, msg_path, sig_path, profile):
    """Print ACCEPT (exit 0) or REJECT (exit 1); malformed input exits 2."""
    from dvsig.scheme import verify

    blobs = [_read(p) for p in (sk_path, pk_path, vpk_path, sig_path)]
    pp = _params_for(profile, blobs)
    vsk = _decode(codec.decode_verifier_sk, pp, blobs[0], "verifier secret key")
    t = _decode(codec.decode_signer_pk, pp, blobs[1], "signer public key")
    vpk = _decode(codec.decode_verifier_pk, pp, blobs[2], "verifier public key")
    sig = _decode(codec.decode_signature, pp, blobs[3], "signature")
    if verify(pp, vsk, t, vpk, sig, _read(msg_path)):
        click.echo("ACCEPT")
        return
    click.echo("REJECT")
    sys.exit(EXIT_REJECT)


@main.command("size-report")
@click.option("--profile", default="desk", show_default=True)
@seed_option
@format_option
def cmd_size_report(profile, seed, fmt):
    """Serialized sizes against the closed-form bit counts."""
    report = codec.size_report(load_params(profile), _rng(seed))
    click.echo(report.text() if fmt == "text" else report.kv())


@main.command("bench")
@click.option("--profile", default="desk", show_default=True)
@click.option("--trials", default=100, show_default=True, type=click.IntRange(min=1))
@seed_option
@format_option
def cmd_bench(profile, trials, seed, fmt):
    """Median timings, rejection rate, sizes and kernel backend comparison."""
    from dvsig.bench import run_bench

    report = run_bench(load_params(profile), trials, _rng(seed))
    click.echo(report.text() if fmt == "text" else report.kv())


@main.command("stats")
@click.option("--profile", default="desk", show_default=True)
@click.option("--samples", default=100_000, show_default=True, type=click.IntRange(min=10_000))
@click.option("--alpha", default=1e-3, show_default=True, help="significance level")
@click.option("--negative-control", is_flag=True, help="also run Simul at the wrong width; that test must reject")
@seed_option
@format_option
def cmd_stats(profile, samples, alpha, negative_control, seed, fmt):
    """Statistical battery; exits 1 if any test fails."""
    from dvsig.stats import run_battery

    report = run_battery(load_params(profile), samples, _rng(seed), alpha=alpha, negative_control=negative_control)
    click.echo(report.text() if fmt == "text" else report.kv())
    if not report.ok:
        sys.exit(EXIT_REJECT)


if __name__ == "__main__":
    main()
