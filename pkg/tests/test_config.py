import math

import pytest

from thermospec.bundled import check_bundled, compare_rows
from thermospec.config import bundled_names, load_system, parse_system
from thermospec.errors import ConfigError, InputError, MissingCodingError
from thermospec.potentials import LocallyConstant, Sampled


def test_minimal_file():
    cfg = parse_system("alphabet = 2\nphi = indicator symbol=1\n")
    assert cfg.space.alphabet_size == 2
    assert cfg.phi((1,)) == 1.0 and cfg.psi((0,)) == 1.0 and cfg.u((1,)) == 1.0


def test_matrix_rows_and_max_run():
    cfg = parse_system("row = 1 1\nrow = 1 0\nmax_run = 0 3\nphi = constant c=0.5\n")
    assert cfg.space.run_limits == {0: 3}
    assert not cfg.space.is_admissible((1, 1))


def test_table_potential_and_comments():
    cfg = parse_system("# comment\nalphabet = 2   # trailing\nphi = table 00:1 01:2 10:3 11:4\n")
    assert isinstance(cfg.phi, LocallyConstant) and cfg.phi.range == 2
    assert cfg.phi((1, 0)) == 3.0


def test_coding_and_log_derivative():
    cfg = parse_system("coding = linear 2 4\nphi = log_derivative\n")
    assert cfg.space.alphabet_size == 2
    assert cfg.coding is not None


@pytest.mark.parametrize(
    "text, line, field",
    [
        ("alphabet = 2\nphi = wobble\n", 2, "phi"),
        ("alphabet = two\nphi = constant c=0\n", 1, "alphabet"),
        ("alphabet = 2\ncolour = red\n", 2, "colour"),
        ("alphabet = 2\nphi = constant c=0\nphi = constant c=1\n", 3, "phi"),
        ("row = 1 1\nrow = 1 2\nphi = constant c=0\n", 1, "row"),
        ("row = 1 0\nrow = 0 1\nphi = constant c=0\n", 1, "row"),
        ("alphabet = 2\nphi = log_derivative\n", 2, "phi"),
        ("alphabet = 2\nno equals sign\n", 2, None),
        ("alphabet = 2\nphi = constant c=0\ntruncation_range = 0\n", 3, "truncation_range"),
    ],
)
def test_errors_report_line_and_field(text, line, field):
    with pytest.raises(ConfigError) as err:
        parse_system(text)
    assert err.value.line == line
    assert err.value.field == field


def test_missing_coding_is_an_input_error():
    cfg = parse_system("alphabet = 2\nphi = constant c=0\n")
    with pytest.raises(MissingCodingError):
        cfg.require_coding()
    assert issubclass(MissingCodingError, InputError)


def test_unknown_system_name():
    with pytest.raises(InputError):
        load_system("no-such-system")


def test_bundled_names():
    assert {"full2_indicator", "golden_mean", "binomial", "parabolic", "pesin_zhang"} <= set(bundled_names())


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_config_parses_with_stable_digest(name):
    a, b = load_system(name), load_system(name)
    assert a.digest == b.digest and len(a.digest) == 64
    assert a.selfcheck


def test_pesin_zhang_config_is_sampled():
    assert isinstance(load_system("pesin_zhang").phi, Sampled)


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_round_trip(name):
    (result,) = check_bundled([name])
    assert result.passed, result.detail


def test_compare_rows_catches_mismatch():
    exp = [{"alpha": "0.5", "S_alpha": "0.693147180560"}]
    assert compare_rows([{"alpha": "0.5", "S_alpha": "0.7"}], exp, 1e-6)[1]
    assert not compare_rows([{"alpha": "0.5", "S_alpha": "0.693147180560", "flags": ""}], exp, 1e-6)[1]
    assert compare_rows([{"alpha": "0.5", "S_alpha": "-inf"}], [{"alpha": "0.5", "S_alpha": "-inf"}], 0)[0] == 0
    assert math.isinf(compare_rows([], exp, 1e-6)[0])
