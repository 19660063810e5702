import csv
import io
import json
import math

import pytest

from thermospec import cli
from thermospec.cli import format_value, parse_grid, run
from thermospec.errors import ConvergenceError


def invoke(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_format_value():
    assert format_value(-math.inf) == "-inf"
    assert format_value(math.inf) == "inf"
    assert format_value(math.nan) == "nan"
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(672) == "672"


def test_parse_grid():
    assert list(parse_grid("0:1:3")) == [0.0, 0.5, 1.0]
    assert list(parse_grid("0.1,0.2")) == [0.1, 0.2]
    with pytest.raises(cli.UsageError):
        parse_grid("a:b")


def test_birkhoff_spectrum_default_grid():
    code, out, err = invoke(["spectrum", "full2_indicator", "--kind", "birkhoff"])
    assert code == 0
    r = rows(out)
    assert len(r) == 101
    assert list(r[0]) == ["alpha", "S_alpha", "q_star", "residual", "flags"]
    mid = next(x for x in r if float(x["alpha"]) == 0.5)
    assert abs(float(mid["S_alpha"]) - math.log(2)) < 1e-9
    manifest = json.loads(err)
    assert manifest["subcommand"] == "spectrum" and manifest["exit_code"] == 0
    assert len(manifest["system"]["digest"]) == 64
    assert "root_tol" in manifest["tolerances"] and manifest["duration_seconds"] >= 0


def test_golden_pressure():
    code, out, _ = invoke(["pressure", "golden_mean"])
    assert code == 0
    (row,) = rows(out)
    assert abs(float(row["value"]) - 0.4812118) < 1e-7
    assert float(row["lower"]) <= float(row["value"]) <= float(row["upper"])


def test_output_file_and_manifest(tmp_path):
    out = tmp_path / "p.csv"
    code, stdout, stderr = invoke(["pressure", "golden_mean", "--q", "0:2:3", "--out", str(out)])
    assert code == 0 and stdout == "" and stderr == ""
    assert len(rows(out.read_text())) == 3
    manifest = json.loads((tmp_path / "p.csv.manifest").read_text())
    assert manifest["rows"] == 3


def test_output_is_deterministic(tmp_path):
    runs = [invoke(["spectrum", "mixed", "--alpha-steps", "9"])[1] for _ in range(2)]
    assert runs[0] == runs[1]


def test_equilibrium_rows():
    code, out, _ = invoke(["equilibrium", "golden_mean", "--q", "0"])
    assert code == 0
    r = rows(out)
    ent = next(x for x in r if x["quantity"] == "entropy")
    assert abs(float(ent["value"]) - math.log((1 + 5 ** 0.5) / 2)) < 1e-10
    stat = [float(x["value"]) for x in r if x["quantity"] == "stationary"]
    assert abs(sum(stat) - 1) < 1e-12


def test_legendre_columns():
    code, out, _ = invoke(["legendre", "full2_indicator", "--q-grid=-2:2:5"])
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["q", "T0", "d_minus", "d_plus", "transition_flag"]
    assert all(x["transition_flag"] == "0" for x in r)


def test_coarse_binomial_count():
    code, out, err = invoke(["coarse", "full2_indicator", "--alpha-grid", "0.5", "--radius", "0.15",
                             "--n-list", "10", "--chain"])
    assert code == 0
    (row,) = rows(out)
    assert row["count"] == "672"
    assert json.loads(err)["results"]["chain"]["violations"] == 0


def test_cvp_check():
    code, out, _ = invoke(["cvp-check", "full2_indicator", "--alpha-grid", "0.3,0.6"])
    assert code == 0
    assert all(x["status"] == "ok" for x in rows(out))


def test_selftest_command():
    code, out, _ = invoke(["selftest"])
    assert code == 0
    assert all(x["status"] == "pass" for x in rows(out))


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "full2_indicator", "--bogus"],
        ["nonsense"],
        ["spectrum", "no-such-file.cfg"],
        ["spectrum", "full2_indicator", "--kind", "lyapunov-dim"],
        ["coarse", "full2_indicator", "--n-list", "x"],
        [],
    ],
)
def test_input_errors_exit_one(argv):
    code, _, err = invoke(argv)
    assert code == 1
    assert "error" in err


def test_config_error_reports_file_and_line(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("alphabet = 2\nphi = wobble\n")
    code, _, err = invoke(["pressure", str(bad)])
    assert code == 1
    assert "bad.cfg" in err and "line 2" in err


def test_numerical_failure_flushes_partial_rows(monkeypatch):
    real = cli.coarse_count

    def flaky(space, phi, n, window, *a, **k):
        if n == 16:
            raise ConvergenceError("synthetic failure")
        return real(space, phi, n, window, *a, **k)

    monkeypatch.setattr(cli, "coarse_count", flaky)
    code, out, err = invoke(["coarse", "full2_indicator", "--alpha-grid", "0.3,0.5", "--n-list", "12,16"])
    assert code == 2
    assert len(rows(out)) == 2
    assert "synthetic failure" in err


def test_threads_env_is_reported(monkeypatch):
    monkeypatch.setenv("THERMOSPEC_THREADS", "3")
    _, _, err = invoke(["pressure", "golden_mean"])
    assert json.loads(err)["threads"] == 3


def test_main_exits_with_code(monkeypatch):
    with pytest.raises(SystemExit) as e:
        cli.main(["nonsense"])
    assert e.value.code == 1
