import subprocess
import sys

import pytest
from click.testing import CliRunner

from dvsig import codec
from dvsig.cli import main

SEED = "ab" * 32


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)


@pytest.fixture
def keys(tmp_path):
    """Signer and verifier keys for toy, plus a message file."""
    assert run("keygen", "--role", "signer", "--profile", "toy", "--seed", SEED, "--out", tmp_path / "alice").exit_code == 0
    assert run("keygen", "--role", "verifier", "--profile", "toy", "--seed", "cd" * 32, "--out", tmp_path / "bob").exit_code == 0
    (tmp_path / "msg").write_bytes(b"hello")
    return tmp_path


def sign_args(d, out="sig", extra=()):
    return ["sign", "--sk", d / "alice.sk", "--pk", d / "alice.pk", "--verifier-pk", d / "bob.pk",
            "--in", d / "msg", "--out", d / out, "--seed", "ef" * 32, *extra]


def verify_args(d, sig="sig", msg="msg"):
    return ["verify", "--sk", d / "bob.sk", "--pk", d / "alice.pk", "--verifier-pk", d / "bob.pk",
            "--in", d / msg, "--sig", d / sig]


def test_keygen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        res = run("keygen", "--role", "verifier", "--profile", "toy", "--seed", SEED, "--out", tmp_path / name)
        assert res.exit_code == 0 and "fingerprint" in res.output
    for ext in ("pk", "sk"):
        assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()


def test_seed_from_environment(tmp_path):
    run("keygen", "--role", "signer", "--profile", "toy", "--out", tmp_path / "x", env={"DVSIG_SEED": SEED})
    run("keygen", "--role", "signer", "--profile", "toy", "--seed", SEED, "--out", tmp_path / "y")
    assert (tmp_path / "x.sk").read_bytes() == (tmp_path / "y.sk").read_bytes()


def test_sign_then_verify(keys):
    res = run(*sign_args(keys))
    assert res.exit_code == 0 and "restarts" in res.output
    assert codec.peek_type((keys / "sig").read_bytes()) == codec.T_SIGNATURE
    res = run(*verify_args(keys))
    assert res.exit_code == 0 and res.output.strip() == "ACCEPT"


def test_signing_is_deterministic(keys):
    run(*sign_args(keys, "s1"))
    run(*sign_args(keys, "s2"))
    assert (keys / "s1").read_bytes() == (keys / "s2").read_bytes()


def test_tampered_message_rejected(keys):
    run(*sign_args(keys))
    (keys / "other").write_bytes(b"hellO")
    res = run(*verify_args(keys, msg="other"))
    assert res.exit_code == 1 and res.output.strip() == "REJECT"


def test_truncated_signature_is_an_error(keys):
    run(*sign_args(keys))
    (keys / "cut").write_bytes((keys / "sig").read_bytes()[:-3])
    res = run(*verify_args(keys, sig="cut"))
    assert res.exit_code == 2


def test_simulated_sparse_signature_accepted(keys):
    res = run("simulate", "--sk", keys / "bob.sk", "--pk", keys / "alice.pk", "--verifier-pk", keys / "bob.pk",
              "--in", keys / "msg", "--out", keys / "sim", "--sparse", "--seed", SEED)
    assert res.exit_code == 0
    assert codec.peek_type((keys / "sim").read_bytes()) == codec.T_SIGNATURE_SPARSE
    assert run(*verify_args(keys, sig="sim")).exit_code == 0


def test_profile_mismatch(keys):
    run("keygen", "--role", "verifier", "--profile", "desk", "--seed", SEED, "--out", keys / "carol")
    res = run("sign", "--sk", keys / "alice.sk", "--pk", keys / "alice.pk", "--verifier-pk", keys / "carol.pk",
              "--in", keys / "msg", "--out", keys / "sig")
    assert res.exit_code == 2 and "mismatch" in res.output


def test_missing_output_directory(keys):
    res = run(*sign_args(keys, "nowhere/sig"))
    assert res.exit_code == 2


def test_setup_and_custom_profile(tmp_path):
    res = run("setup", "--profile", "toy", "--seed", SEED, "--out", tmp_path / "pp")
    assert res.exit_code == 0
    res = run("keygen", "--role", "signer", "--profile", f"custom:{tmp_path / 'pp'}", "--seed", SEED,
              "--out", tmp_path / "k")
    assert res.exit_code == 0
    pp = codec.decode_params((tmp_path / "pp").read_bytes())
    assert codec.peek_fingerprint((tmp_path / "k.pk").read_bytes()) == codec.fingerprint(pp)


def test_unknown_profile():
    assert run("size-report", "--profile", "nope").exit_code == 2


def test_size_report_kv():
    res = run("size-report", "--profile", "desk", "--seed", SEED, "--format", "kv")
    assert res.exit_code == 0
    kv = dict(line.split("=", 1) for line in res.output.splitlines())
    assert kv["size.sig.measured_bits"] == "162816"
    assert kv["size.sig.status"] == "PASS"
    assert kv["size.sk_S.status"] == "FAIL"


def test_bench_runs():
    res = run("bench", "--profile", "toy", "--trials", "5", "--seed", SEED, "--format", "kv")
    assert res.exit_code == 0
    assert "sign" in res.output


def test_stats_is_reproducible():
    args = ("stats", "--profile", "toy", "--samples", "10000", "--seed", SEED, "--format", "kv")
    a, b = run(*args), run(*args)
    assert a.exit_code == 0
    assert a.output == b.output


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "dvsig.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "keygen" in out.stdout
