import json

import pytest

from starinv import cli
from starinv.cuntz import FiniteCuTable, emit_cu

from conftest import FIXTURES


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def fx(name):
    return str(FIXTURES / name)


# ---------------------------------------------------------------------------
# invariants


def test_invariants_human(capsys):
    code, out, err = run(capsys, "invariants", fx("m23.fda"))
    assert code == cli.EXIT_OK
    assert "unit=2,3" in out
    assert "rc = 0" in out


def test_invariants_machine_round_trip(capsys):
    code, out, _ = run(capsys, "invariants", fx("m23.fda"), "--emit", "machine")
    assert code == cli.EXIT_OK
    report = cli.parse_machine(out)
    assert report.command == "invariants"
    assert report.result["k0"] == "rank=2 cone=0,1;1,0 unit=2,3"
    assert report.result["rc"] == "0"
    assert cli.emit_machine(report) == out
    assert cli.parse_machine(cli.emit_machine(report)) == report


def test_invariants_machine_stable_ordering(capsys):
    _, out, _ = run(capsys, "invariants", fx("m23.fda"), "--emit", "machine")
    keys = [line.split("=", 1)[0] for line in out.strip().splitlines()]
    assert keys == sorted(keys)


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(capsys, "invariants", "no-such-file.fda")
    assert code == cli.EXIT_USAGE
    assert "usage error" in err


def test_malformed_algebra_is_parse_error(tmp_path, capsys):
    p = tmp_path / "bad.fda"
    p.write_text("blocks: two\n")
    code, _, err = run(capsys, "invariants", str(p))
    assert code == cli.EXIT_PARSE


def test_invalid_algebra_is_validation_error(tmp_path, capsys):
    p = tmp_path / "bad.fda"
    p.write_text("blocks: 0 2\n")
    code, _, err = run(capsys, "invariants", str(p))
    assert code == cli.EXIT_VALIDATION


# ---------------------------------------------------------------------------
# iso


def test_iso_cu_self(capsys):
    code, out, _ = run(capsys, "iso", "cu", fx("nbar1.cup"), fx("nbar1.cup"))
    assert code == cli.EXIT_OK
    assert "EQUIVALENT" in out


def test_iso_ell_block_permutation(capsys):
    code, out, _ = run(capsys, "iso", "ell", fx("m23.fda"), fx("m32.fda"))
    assert code == cli.EXIT_OK
    assert "ISO" in out


def test_iso_cu_strict_inequivalent_still_ok(capsys):
    code, out, _ = run(
        capsys, "iso", "cu", fx("nbar1.cup"), fx("nbar2.cup"), "--strict"
    )
    assert code == cli.EXIT_OK
    assert "INEQUIVALENT" in out


def test_iso_cu_strict_unknown_exits_4(tmp_path, capsys):
    def chain_with_identity_ll(n):
        plus = tuple(tuple(min(i + j, n - 1) for j in range(n)) for i in range(n))
        leq = frozenset((i, j) for i in range(n) for j in range(n) if i <= j)
        ll = frozenset((i, i) for i in range(n))
        return FiniteCuTable(n, plus, leq, ll)

    a = tmp_path / "a.cup"
    b = tmp_path / "b.cup"
    a.write_text(emit_cu(chain_with_identity_ll(2)))
    b.write_text(emit_cu(chain_with_identity_ll(3)))
    code, out, _ = run(capsys, "iso", "cu", str(a), str(b), "--strict")
    assert code == cli.EXIT_STRICT_UNKNOWN
    assert "UNKNOWN" in out
    # without --strict the same verdict exits 0
    code2, _, _ = run(capsys, "iso", "cu", str(a), str(b))
    assert code2 == cli.EXIT_OK


def test_iso_group_machine_format(tmp_path, capsys):
    a = tmp_path / "a.ogu"
    b = tmp_path / "b.ogu"
    a.write_text("rank=2 cone=1,0;0,1 unit=2,3\n")
    b.write_text("rank=2 cone=1,0;0,1 unit=3,2\n")
    code, out, _ = run(capsys, "iso", "group", str(a), str(b), "--emit", "machine")
    assert code == cli.EXIT_OK
    report = cli.parse_machine(out)
    assert report.verdict == "ISO"


# ---------------------------------------------------------------------------
# eval


def test_eval_idempotent_defect(capsys):
    code, out, _ = run(
        capsys, "eval", fx("idem.clf"), "--on", fx("c.fda"), "--emit", "machine"
    )
    assert code == cli.EXIT_OK
    report = cli.parse_machine(out)
    assert abs(report.result["value"] - 2.0) <= 0.01
    assert report.result["certificate"] == "lower"


def test_eval_seed_determinism(capsys):
    runs = []
    for _ in range(2):
        code, out, _ = run(
            capsys, "eval", fx("idem.clf"), "--on", fx("c.fda"),
            "--seed", "7", "--emit", "machine",
        )
        assert code == cli.EXIT_OK
        runs.append(cli.parse_machine(out))
    a, b = runs
    # identical up to wall time
    assert (a.command, a.inputs, a.config, a.result, a.verdict) == (
        b.command, b.inputs, b.config, b.result, b.verdict,
    )


def test_eval_open_formula_exits_3(tmp_path, capsys):
    p = tmp_path / "open.clf"
    p.write_text("norm(x0)\n")
    code, _, err = run(capsys, "eval", str(p), "--on", fx("c.fda"))
    assert code == cli.EXIT_VALIDATION
    assert "open formula" in err


def test_no_subcommand_is_usage(capsys):
    assert cli.main([]) == cli.EXIT_USAGE
    capsys.readouterr()
