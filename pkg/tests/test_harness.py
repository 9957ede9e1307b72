import math

import numpy as np
import pytest

from itimerge.harness import experiments as ex
from itimerge.harness.cli import main
from itimerge.harness.config import ConfigError, PreconditionError, SweepConfig, load_config, parse_config
from itimerge.harness.report import Report, fmt, loglog_fit, write_csv
from itimerge.operators import read_binary

SMALL = "k_grid = 0.5, 1\nn_int = 20\nn_b = 8\nrefine_step = 4\nprobes = 3\n"


def test_parse_config_types():
    cfg = parse_config("# comment\nk_grid = 1, 2.5  # trailing\ndelta = 0.2\nn_int = auto\n"
                       "merge_potentials = constant(1), affine(1, 0.05)\ndtn_csv = yes\n")
    assert cfg.k_grid == (1.0, 2.5)
    assert cfg.delta == 0.2 and cfg.n_int is None and cfg.dtn_csv is True
    assert cfg.merge_potentials == ("constant(1)", "affine(1, 0.05)")


@pytest.mark.parametrize("text", [
    "bogus = 1", "delta = 0.1\ndelta = 0.2", "k_grid = 2, 1", "delta = -1", "n_int = 10\nn_b = 9",
    "delta = abc", "no equals sign", "experiments = sweep, nope", "k_grid = 1, nan", "potential =",
    "merge_potentials = affine(1, 0.05))",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config(tmp_path):
    assert load_config(None) == SweepConfig()
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    p = tmp_path / "a.cfg"
    p.write_text("alpha = 0.2\n")
    assert load_config(p).alpha == 0.2


def test_resolution_rule():
    cfg = SweepConfig()
    assert cfg.resolution(8) == (48, 8)
    assert cfg.resolution(16) == (72, 16)
    assert cfg.replace(n_int=30, n_b=10).resolution(32) == (30, 10)


def test_fmt_and_csv(tmp_path):
    assert fmt(True) == "true" and fmt(np.int64(3)) == "3"
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(math.pi)) == math.pi
    write_csv(tmp_path / "t.csv", ["a", "b"], [{"a": 1, "b": 0.5}])
    assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.5\n"


def test_loglog_fit_recovers_power_law():
    x = np.array([1, 2, 4, 8, 16.0])
    p, c = loglog_fit(x, 3 * x ** -1.5)
    assert math.isclose(p, -1.5, rel_tol=1e-12) and math.isclose(c, 3, rel_tol=1e-12)
    # the window keeps only the upper half
    y = np.where(x < 4, 100.0, 2 * x)
    assert math.isclose(loglog_fit(x, y, 0.5)[0], 1.0, rel_tol=1e-12)
    with pytest.raises(ValueError):
        loglog_fit([1, 2], [1, -1])


def test_report_lines():
    rep = Report("demo")
    rep.check("ok", True)
    rep.check("bad", False, "detail")
    assert not rep.passed
    assert rep.lines() == ["[PASS] demo: ok", "[FAIL] demo: bad (detail)"]


def test_trapping_potential_stops_sweep_before_solving(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("solver reached")

    monkeypatch.setattr(ex, "children", boom)
    with pytest.raises(PreconditionError):
        ex.run_theorem_sweep(SweepConfig(potential="constant(0)"))


def test_small_sweep_outputs(tmp_path):
    cfg = parse_config(SMALL)
    rep = ex.run_theorem_sweep(cfg, tmp_path)
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].split(",") == ex.SWEEP_HEADER
    assert len(lines) == 3
    summary = (tmp_path / "summary.csv").read_text()
    for key in ("c_star", "c_star_delta", "C_delta", "C_star_delta"):
        assert f"\n{key}," in summary
    assert all(np.isfinite(r["c_minus"]) and r["c_minus"] > 0 for r in rep.rows)


def test_sweep_is_deterministic_across_runs_and_threads(tmp_path):
    cfg = parse_config(SMALL)
    ex.run_theorem_sweep(cfg, tmp_path / "a")
    ex.run_theorem_sweep(cfg, tmp_path / "b", threads=2)
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_neumann_variable_potential_is_stable():
    from itimerge.domain import Potential
    V = Potential.affine(1.0, 0.1)
    lo = min(min(c["traces"]) for c in ex.neumann_modes(V, 28, 50))
    hi = min(min(c["traces"]) for c in ex.neumann_modes(V, 32, 50))
    assert lo > 0.05
    assert round(lo, 2) == round(hi, 2)
    # the V-normalized constant mode: 3 / int V
    assert abs(hi - 3 / 1.05) < 1e-8


def test_analytic_neumann_table():
    ref = ex.analytic_neumann(1.0, 2 * math.pi ** 2 + 1)
    assert ref[0.0] == [3.0]
    assert ref[math.pi ** 2] == [4.0, 5.0]
    assert ref[2 * math.pi ** 2] == [6.0]


# ---------------------------------------------------------------------------
# command line


def test_cli_dtn_export(tmp_path, capsys):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("dtn_csv = true\n")
    assert main(["dtn", "--config", str(cfg), "--out", str(tmp_path / "o"), "--resolution", "24,16"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] dtn: reciprocity" in out
    L = read_binary(tmp_path / "o" / "dtn.iti")
    assert L.shape == (68, 68)
    assert (tmp_path / "o" / "dtn.csv").exists()
    assert read_binary(tmp_path / "o" / "iti.iti").shape == (68, 68)


def test_cli_reruns_are_bit_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["merge-check", "--out", str(tmp_path / d), "--resolution", "16,10"]) == 0
    assert (tmp_path / "a" / "merge.csv").read_bytes() == (tmp_path / "b" / "merge.csv").read_bytes()


def test_cli_numerical_failure_exit_code(tmp_path):
    assert main(["oracle", "--out", str(tmp_path), "--resolution", "12,8"]) == 1


@pytest.mark.parametrize("argv", [
    ["nope"], ["oracle", "--resolution", "10"], ["oracle", "--resolution", "10,9"], ["sweep", "--threads", "0"],
])
def test_cli_usage_errors(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_cli_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("potential = constant(0)\n")
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text("unknown_key = 1\n")
    assert main(["neumann", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["neumann", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)]) == 2
