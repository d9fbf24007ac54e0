import json

import pytest

from sp4verify.cli import (
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_USAGE,
    UsageError,
    main,
    parse_m_range,
)


def _manifest(out):
    files = list(out.glob("manifest*.json"))
    assert len(files) == 1
    return json.loads(files[0].read_text())


def test_exponent(tmp_path, capsys):
    assert main(["exponent", "--eta", "0.2", "-B", "10", "--out", str(tmp_path)]) == EXIT_PASS
    assert "1.98928571429" in capsys.readouterr().out
    man = _manifest(tmp_path)
    assert man["subcommand"] == "exponent" and man["passed"]


def test_exponent_rejects(tmp_path):
    assert main(["exponent", "--eta", "0", "-B", "10", "--out", str(tmp_path)]) == EXIT_USAGE
    assert _manifest(tmp_path)["exit_code"] == EXIT_USAGE


def test_bad_arguments_exit_usage(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["hecke", "--out", str(tmp_path)])
    assert exc.value.code == EXIT_USAGE


def test_hecke_non_prime(tmp_path):
    assert main(["hecke", "-p", "9", "--out", str(tmp_path)]) == EXIT_USAGE


def test_hecke_trivial(tmp_path):
    assert main(["hecke", "-p", "2", "-r", "0", "--no-cache", "--out", str(tmp_path)]) == EXIT_PASS


def test_hecke_report_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cache = tmp_path / "cache"
    for out in (a, b):
        assert main(["hecke", "-p", "3", "-r", "2", "--cache-dir", str(cache), "--out", str(out)]) == EXIT_PASS
    assert (a / "hecke_report.json").read_bytes() == (b / "hecke_report.json").read_bytes()
    assert list(cache.glob("cosets_p3_r2_v1.bin"))


def test_hecke_table_mismatch_is_a_failure(tmp_path):
    code = main(["hecke", "-p", "2", "-r", "4", "--table1", "--no-cache", "--out", str(tmp_path)])
    man = _manifest(tmp_path)
    failed = sorted(k for k, v in man["checks"].items() if not v)
    assert code == EXIT_FAIL
    assert failed == ["table1 T^(4)_(0,1) reference"]


def test_m_range_parsing():
    assert parse_m_range("1..5") == (1, 2, 3, 4, 5)
    assert parse_m_range("1..9:odd") == (1, 3, 5, 7, 9)
    assert parse_m_range("2,4") == (2, 4)
    for bad in ("5..3", "", "x", "0..2"):
        with pytest.raises(UsageError):
            parse_m_range(bad)


def test_count_small(tmp_path):
    assert main(["count", "--id", "--m", "1..6", "--delta", "0.05", "--out", str(tmp_path)]) == EXIT_PASS
    lines = (tmp_path / "count.csv").read_text().splitlines()
    assert lines[0] == "m,delta,count,seconds,budget_hit"
    assert lines[1].startswith("1,0.05,32,")
    report = json.loads((tmp_path / "count_report.json").read_text())
    assert all(row["equal"] for row in report["oracle"])


def test_count_empty_range(tmp_path):
    assert main(["count", "--m", "4..2", "--out", str(tmp_path)]) == EXIT_USAGE


def test_count_budget(tmp_path):
    assert main(["count", "--m", "12", "--delta", "0.1", "--budget", "5", "--out", str(tmp_path)]) == 3


def test_spherical_degenerate(tmp_path):
    code = main(["spherical", "--lambda-max", "0", "--c-points", "50", "--skip-test-function",
                 "--out", str(tmp_path)])
    assert code == EXIT_PASS
    rows = (tmp_path / "decay_scan.csv").read_text().splitlines()
    assert rows[0] == "lambda1,lambda2,t1,t2,abs_phi,s,error,flagged"
    assert all(float(r.split(",")[5]) <= 1 + 1e-6 for r in rows[1:])
    assert len((tmp_path / "c_function.csv").read_text().splitlines()) == 51
