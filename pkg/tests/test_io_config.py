from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from galerkin_ns import config
from galerkin_ns.config import ConfigError, ExperimentConfig
from galerkin_ns.io import read_snapshot, read_table, write_contraction, write_curve, write_snapshot
from galerkin_ns.lattice import SpectralField, lattice
from galerkin_ns.measure import MeasureParams, sample_mu_nu
from galerkin_ns.uniqueness import ContractionReport


def test_snapshot_round_trip_exact(tmp_path):
    u = sample_mu_nu(MeasureParams(0.3, 6, 2))
    path = write_snapshot(tmp_path / "s.csv", u, 0.3, ("config=abc",))
    v, nu = read_snapshot(path)
    assert nu == 0.3 and v.N == 6
    assert v.coeffs.tobytes() == u.coeffs.tobytes()
    lines = path.read_text().splitlines()
    assert lines[0] == "# nu=0.3 N=6" and lines[1] == "# config=abc" and lines[2] == "k1,k2,re,im"
    assert lines[3].startswith("0,1,")
    assert len(lines) == 3 + lattice(6).size


@given(st.lists(st.complex_numbers(max_magnitude=1e300, allow_nan=False, allow_infinity=False),
                min_size=14, max_size=14))
def test_snapshot_round_trip_any_values(tmp_path_factory, values):
    u = SpectralField(3, np.array(values))
    path = write_snapshot(tmp_path_factory.mktemp("snap") / "s.csv", u, 1.0)
    assert read_snapshot(path)[0].coeffs.tobytes() == u.coeffs.tobytes()


def test_snapshot_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("k1,k2,re,im\n")
    with pytest.raises(ValueError):
        read_snapshot(p)
    u = SpectralField.zeros(2)
    text = write_snapshot(tmp_path / "ok.csv", u, 1.0).read_text().splitlines()
    p.write_text("\n".join(text[:2] + [text[3], text[2]] + text[4:]) + "\n")
    with pytest.raises(ValueError):
        read_snapshot(p)
    p.write_text("\n".join(text[:-1]) + "\n")
    with pytest.raises(ValueError, match="expected"):
        read_snapshot(p)


def test_curve_and_contraction_csv(tmp_path):
    t = np.linspace(0, 1, 5)
    table = read_table(write_curve(tmp_path / "c.csv", t, t**2, ("config=x",)))
    np.testing.assert_array_equal(table["distance"], t**2)
    rep = ContractionReport(0.5, 1.0, 2.0, 3.0, 4.0, 0.25, 10)
    text = write_contraction(tmp_path / "r.csv", [rep]).read_text().splitlines()
    assert text[0] == "T,C1,C2,N_T,T_star,measured_factor"
    assert text[1] == "0.5,1.0,2.0,3.0,4.0,0.25"


def test_defaults_documented(monkeypatch):
    monkeypatch.delenv(config.OUTPUT_ENV, raising=False)
    cfg = config.parse("")
    assert cfg == ExperimentConfig()
    assert (cfg.s, cfg.a, cfg.p, cfg.q, cfg.alpha) == (Fraction(1, 6), Fraction(1, 2), 3, 3, 3)
    monkeypatch.setenv(config.OUTPUT_ENV, "/tmp/somewhere")
    assert config.default_config().output_dir == "/tmp/somewhere"


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="'nuu'"):
        config.parse("nuu = 1\n")


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match=":3:"):
        config.parse("# comment\nN = 4\nthis line is wrong\n")
    with pytest.raises(ConfigError, match=":2:"):
        config.parse("N = 4\nM = many\n")
    with pytest.raises(ConfigError, match="duplicate"):
        config.parse("N = 4\nN = 5\n")


def test_reference_block_round_trip_bit_identical(tmp_path):
    text = "s = 1/6\na = 1/2\np = 3\nq = 3\nalpha = 3\n"
    cfg = config.parse(text)
    assert cfg.s == Fraction(1, 6)
    first = config.save(cfg, tmp_path / "a.txt").read_bytes()
    again = config.save(config.load(tmp_path / "a.txt"), tmp_path / "b.txt").read_bytes()
    assert first == again
    assert "s = 1/6\n" in first.decode()
    assert config.config_hash(cfg) == config.config_hash(config.load(tmp_path / "a.txt"))


reals = st.one_of(st.fractions(min_value=-100, max_value=100, max_denominator=1000),
                  st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: not float(x).is_integer()))


@given(reals, reals, st.integers(1, 64), st.text("abc/_-.", min_size=1, max_size=8))
def test_round_trip_property(nu, s, N, outdir):
    cfg = replace(ExperimentConfig(), nu=nu, s=s, N=N, output_dir=outdir)
    assert config.parse(config.dumps(cfg)) == cfg


def test_violations_list_every_clause():
    cfg = replace(ExperimentConfig(), command="contraction-test", nu=Fraction(-1), N=0, dt=0.3,
                  s=Fraction(0))
    problems = config.violations(cfg)
    assert "nu > 0" in problems and "N >= 1" in problems
    assert "T an integer multiple of dt" in problems
    assert "Besov parameters: 0 < s" in problems
    assert config.violations(ExperimentConfig()) == []
    assert config.violations(replace(ExperimentConfig(), command="contraction-test", alpha=Fraction(1)))


def test_float_view():
    v = ExperimentConfig().floats()
    assert isinstance(v["s"], float) and v["s"] == 1 / 6 and isinstance(v["N"], int)
