"""Exit criteria, each at its stated tolerance.

Every test records a one-line verdict; the lines are printed together when
the module finishes (and appear in the pytest output whatever the outcome).
"""

import math
import time

import numpy as np
import pytest

from itimerge.domain import Potential, Rect
from itimerge.harness import experiments as ex
from itimerge.harness.config import SweepConfig, parse_config
from itimerge.leaf import LeafBox, iti_full
from itimerge.merge import build_W
from itimerge.norms import gram
from itimerge.probes import smooth_probes
from itimerge.spectral import cheb_nodes, diff_matrix, interp_matrix, quad_weights

VERDICTS: dict[int, str] = {}


def verdict(n: int, title: str, ok: bool, detail: str) -> bool:
    VERDICTS[n] = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2} {title}: {detail}"
    return ok


@pytest.fixture(scope="module", autouse=True)
def print_verdicts(request):
    yield
    rep = request.config.pluginmanager.get_plugin("terminalreporter")
    write = rep.write_line if rep is not None else print
    write("")
    for n in sorted(VERDICTS):
        write(VERDICTS[n])


@pytest.fixture(scope="module")
def cfg():
    return SweepConfig()


@pytest.fixture(scope="module")
def sweep(cfg, tmp_path_factory):
    return ex.run_theorem_sweep(cfg, tmp_path_factory.mktemp("sweep"))


def test_01_oracle_exactness(cfg):
    t0 = time.perf_counter()
    rows = ex.oracle_errors(5.0, range(1, 9), 24, 20)
    elapsed = time.perf_counter() - t0
    field = max(r["field_error"] for r in rows)
    rerr = max(r["r_error"] for r in rows)
    ok = field < 1e-8 and rerr < 1e-7 and elapsed < 10
    verdict(1, "oracle exactness (n_int=24)", ok,
            f"field {field:.2e} (< 1e-8), r_n {rerr:.2e} (< 1e-7), {elapsed:.1f} s (< 10 s)")
    assert elapsed < 10
    assert field < 1e-8
    assert rerr < 1e-7


def test_02_merge_equivalence(cfg):
    t0 = time.perf_counter()
    rep = ex.run_merge_equivalence(cfg)
    elapsed = time.perf_counter() - t0
    worst = max(r["rel_error"] for r in rep.rows)
    cases = {(r["potential"], r["k"]) for r in rep.rows}
    ok = worst < 1e-6 and elapsed < 60 and len(cases) == 6
    verdict(2, "merge equivalence", ok, f"worst relative L2 error {worst:.2e} (< 1e-6), {elapsed:.1f} s (< 60 s)")
    assert cases == {(p, k) for p in ("constant(1)", "affine(1, 0.05)") for k in (1.0, 5.0, 10.0)}
    assert worst < 1e-6
    assert elapsed < 60


def test_03_bijectivity(sweep, cfg):
    ks = [r["k"] for r in sweep.rows]
    smin = np.array([r["sigma_min_merge"] for r in sweep.rows])
    drift = np.array([abs(r["sigma_min_merge"] - r["sigma_min_merge_twin"]) / r["sigma_min_merge_twin"]
                      for r in sweep.rows])
    ok = ks == [0.5, 1, 2, 4, 8, 16, 32] and bool(np.all(smin > 0)) and drift.max() <= 0.01
    verdict(3, "sigma_min(I - R1 R2) > 0, stable", ok,
            f"min {smin.min():.4g} (> 0), max refinement drift {drift.max():.2e} (<= 1%)")
    assert ks == list(cfg.k_grid)
    assert np.all(smin > 0)
    assert drift.max() <= 0.01
    assert all(r["converged"] for r in sweep.rows)


def test_04_trace_envelopes(sweep, cfg):
    pm, pp = sweep.summary["exp_c_minus"], sweep.summary["exp_c_plus"]
    floor = sweep.summary["c_star"]
    target = -3 * (1 + cfg.delta)
    ok = -0.05 <= pm <= 0.05 and floor > 0 and pp >= target
    verdict(4, "I -/+ R envelopes", ok,
            f"c_minus exponent {pm:+.4f} (in [-0.05, 0.05]), floor {floor:.4f}; "
            f"c_plus exponent {pp:+.4f} (>= {target:.2f})")
    assert -0.05 <= pm <= 0.05
    assert floor > 0
    assert pp >= target


def test_05_W_envelope(sweep, cfg):
    p = sweep.summary["exp_wnorm"]
    bound = 3 * (1 + cfg.delta) - 1 + 0.1
    ok = p <= bound
    verdict(5, "||W: H1k -> L2|| envelope", ok,
            f"growth exponent {p:+.4f} (<= {bound:.2f}), C_delta {sweep.summary['C_delta']:.4g}")
    assert p <= bound


def test_06_sharpness(cfg):
    rep = ex.run_sharpness(cfg)
    p = rep.summary["exponent"]
    ratios = [r["k2_gain_minus_ratio"] for r in rep.rows]
    worst = max(abs(q - 1) for q in ratios)
    ns = [r["n"] for r in rep.rows]
    ok = p <= -0.45 and worst <= 0.05
    verdict(6, "sharpness sequence", ok,
            f"(I+R) decay exponent {p:+.4f} (<= -0.45); k=2 (I-R) gain vs 2k/(n pi) within {worst:.2e} (<= 5%)")
    assert min(ns) == 20 and max(ns) == 200
    assert worst <= 0.05
    assert p <= -0.45


def test_07_small_k_composition(cfg):
    rep = ex.run_small_k(cfg)
    ks = [r["k"] for r in rep.rows]
    ratio = rep.summary["ratio"]
    verdict(7, "||W Q1|| uniform at small k", ratio < 10, f"max/min {ratio:.4f} (< 10) over k = {ks}")
    assert ks == [0.01, 0.1, 0.5, 1.0]
    assert ratio < 10


def test_08_control_identity(sweep, cfg):
    defect = sweep.summary["max_flux_defect"]
    ok = defect <= 1e-6 and cfg.probes == 20
    verdict(8, "flux identity on 20 random f", ok, f"max |lhs - rhs| / ||f||^2 = {defect:.2e} (<= 1e-6), all k")
    assert cfg.probes == 20
    assert defect <= 1e-6


def test_09_neumann_traces(cfg):
    rep = ex.run_neumann_trace_check(cfg)
    count = len(rep.rows)
    mn = min(r["trace"] for r in rep.rows[:50])
    ok = rep.passed and count >= 50
    verdict(9, "Neumann traces", ok,
            f"{count} converged modes, min trace {mn:.6f} (>= 1); "
            f"analytic check: {rep.details['analytic traces (m, n <= 4)']}")
    assert count >= 50
    assert mn >= 1
    assert rep.checks["analytic traces (m, n <= 4)"]


def test_10_property_suites(tmp_path):
    rng = np.random.default_rng(7)
    # spectral exactness on polynomials
    worst_poly = 0.0
    for kind in ("lobatto", "gauss"):
        g = cheb_nodes(24, kind)
        p = np.polynomial.Chebyshev(rng.uniform(-1, 1, 25))
        x, t = g.nodes, np.linspace(-1, 1, 41)
        scale = np.abs(p.coef).sum()
        worst_poly = max(worst_poly,
                         np.abs(diff_matrix(g).matrix @ p(x) - p.deriv()(x)).max() / (scale * 24 ** 2),
                         abs(quad_weights(g) @ p(x) - p.integ(lbnd=-1)(1)) / scale,
                         np.abs(interp_matrix(g, t) @ p(x) - p(t)).max() / scale)
    # isometry of the full-boundary operator on resolved data
    T = iti_full(LeafBox(Rect(0, 1, 0, 1), Potential.affine(1, 0.05), 5.0, 32, 24))
    G = gram(T.source_layout, exact=True)
    iso = max(abs(G.norm(T @ h) / G.norm(h) - 1) for h in smooth_probes(T.source_layout, 20, rng))
    # W solve residual
    _, T1, T2 = ex.children(Potential.constant(1.0), 8.0, 48, 8)
    from itimerge.leaf import partial_blocks
    from itimerge.domain import Side
    R1, _ = partial_blocks(T1, Side.EAST)
    R2, _ = partial_blocks(T2, Side.WEST)
    W, _ = build_W(R1, R2)
    M = np.eye(len(W)) - R1.matrix @ R2.matrix
    resid = np.abs(M @ W - np.eye(len(W))).max()
    # determinism
    small = parse_config("k_grid = 1, 4\nn_int = 20\nn_b = 8\nrefine_step = 4\nprobes = 4\n")
    ex.run_theorem_sweep(small, tmp_path / "a")
    ex.run_theorem_sweep(small, tmp_path / "b", threads=2)
    same = (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    ok = worst_poly < 1e-12 and iso < 1e-6 and resid < 1e-10 and same
    verdict(10, "property suites", ok,
            f"polynomial exactness {worst_poly:.1e} (< 1e-12), isometry {iso:.1e} (< 1e-6), "
            f"W residual {resid:.1e} (< 1e-10), bit-identical reruns {same}; "
            "suite wall time is checked at session end (< 300 s)")
    assert worst_poly < 1e-12
    assert iso < 1e-6
    assert resid < 1e-10
    assert same
