"""Numerical experiments driven by :class:`SweepConfig`.

Geometry throughout: ``Omega = [0, 2] x [0, 1]`` split at ``x = 1`` into
``S1`` (left) and ``S2`` (right); the shared edge ``A`` is the East side of
``S1``.  Single-box checks use the unit square with ``A`` its East side.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from ..domain import Potential, Rect, Side, check_nontrapping, parse_potential, reflect_potential
from ..leaf import LeafBox, control_identity, iti_full, partial_blocks
from ..merge import build_W, glued_iti, iti_to_dtn, merge_boxes
from ..norms import gram, min_gain, op_norm
from ..operators import ItIOperator, mirror_x, write_binary, write_csv as write_matrix_csv
from ..oracle import ImpedanceMode, r_n, sharpness_sequence, v_n, w_n
from ..probes import smooth_probes
from ..spectral import NodeKind, cheb_nodes, diff_matrix, interp_matrix, quad_weights
from .config import ConfigError, PreconditionError, SweepConfig
from .report import Report, loglog_fit, write_csv

log = logging.getLogger(__name__)

UNIT = Rect(0.0, 1.0, 0.0, 1.0)
LEFT, RIGHT = UNIT, Rect(1.0, 2.0, 0.0, 1.0)
OMEGA = Rect(0.0, 2.0, 0.0, 1.0)


def _potential(text: str) -> Potential:
    try:
        return parse_potential(text)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad potential {text!r}: {exc}") from None


def assumption_constants(V: Potential, cfg: SweepConfig) -> tuple[float, float]:
    """Non-trapping minima for ``V1 = V`` and ``V2(x, y) = V(2 - x, y)`` on the unit square."""
    vx = tuple(cfg.vertex)
    c1 = check_nontrapping(V, UNIT, vx, cfg.nontrapping_samples)
    c2 = check_nontrapping(reflect_potential(V), UNIT, vx, cfg.nontrapping_samples)
    return c1, c2


def require_nontrapping(V: Potential, cfg: SweepConfig) -> tuple[float, float]:
    c1, c2 = assumption_constants(V, cfg)
    if min(c1, c2) <= 0:
        raise PreconditionError(f"{V.descriptor} violates the non-trapping condition "
                                f"w.r.t. {tuple(cfg.vertex)} (c1={c1:.3g}, c2={c2:.3g})")
    return c1, c2


def is_mirror_symmetric(V: Potential, samples: int = 33) -> bool:
    """Whether ``V(x, y) == V(2 - x, y)`` on ``Omega`` (sampled)."""
    xs, ys = np.linspace(0, 2, samples), np.linspace(0, 1, samples)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    a, b = V.value(X, Y), V.value(2 - X, Y)
    return bool(np.max(np.abs(a - b)) <= 1e-14 * max(1.0, np.max(np.abs(a))))


def children(V: Potential, k: float, n_int: int, n_b: int) -> tuple[LeafBox, ItIOperator, ItIOperator]:
    """Left leaf plus both children's full ItI operators."""
    left = LeafBox(LEFT, V, k, n_int, n_b)
    T1 = iti_full(left)
    if is_mirror_symmetric(V):
        T2 = mirror_x(T1, 1.0)
    else:
        T2 = iti_full(LeafBox(RIGHT, V, k, n_int, n_b))
    return left, T1, T2


# ---------------------------------------------------------------------------
# theorem sweep

TWIN_KEYS = ("c_minus", "c_plus", "wnorm", "wq_norm", "sigma_min_merge")


def merge_quantities(leaf: LeafBox, T1: ItIOperator, T2: ItIOperator, delta: float,
                     probes: np.ndarray | None = None) -> dict:
    """Extremal gains and identity defects for one (k, resolution)."""
    k = T1.k
    R1, Q1 = partial_blocks(T1, Side.EAST)
    R2, Q2 = partial_blocks(T2, Side.WEST)
    LA = R1.source_layout
    I = np.eye(LA.size)
    L2, H = gram(LA), gram(LA, "H1k", k)
    Le1, Le2 = gram(Q1.source_layout), gram(Q2.source_layout)
    W, diag = build_W(R1, R2)
    R, Rm = R1.matrix, R2.matrix
    out = {
        "c_minus": min_gain(I - R, L2.scaled(k), H),
        "c_plus": min_gain(I + R, L2, L2),
        "wnorm": op_norm(W, H, L2),
        "wq_norm": op_norm(W @ Q1.matrix, Le1, L2),
        "wrq_norm": op_norm(W @ R @ Q2.matrix, Le2, L2),
        "sigma_min_merge": min_gain(I - R @ Rm, L2, L2),
        "sigma_min_euclid": diag.sigma_min,
        "cond": diag.cond,
    }
    if probes is not None:
        out.update(probe_checks(leaf, R, probes, delta))
    return out


def probe_checks(leaf: LeafBox, R: np.ndarray, probes: np.ndarray, delta: float) -> dict:
    """Control-identity defect and empirical constants of the trace chain.

    The constants are maxima over the probes, hence lower bounds on the best
    constants in the corresponding inequalities.
    """
    k = leaf.k
    lay = leaf.layout
    iA = lay.indices(Side.EAST)
    LA = lay.subset(Side.EAST)
    G, H = gram(LA, exact=True), gram(LA, "H1k", k, exact=True)
    resp = leaf.response[:, iA]
    defect = c34 = c35 = 0.0
    for f in probes:
        f = f / G.norm(f)
        lhs, rhs = control_identity(leaf, resp @ f, Side.EAST)
        defect = max(defect, abs(lhs - rhs))
        Rf = R @ f
        uA, dnA = (f - Rf) / (2j * k), 0.5 * (f + Rf)
        c34 = max(c34, G.norm(dnA) / H.norm(uA) ** 0.25)
        c35 = max(c35, k * G.norm(uA) / ((1 + k) ** (1.5 * (1 + delta)) * math.sqrt(G.norm(dnA))))
    return {"flux_defect": defect, "c_weak": c34, "c_weak2": c35}


def _sweep_point(cfg: SweepConfig, V: Potential, index: int, k: float) -> dict:
    n_int, n_b = cfg.resolution(k)
    rng = np.random.default_rng([cfg.seed, index])
    leaf, T1, T2 = children(V, k, n_int, n_b)
    probes = smooth_probes(leaf.layout.subset(Side.EAST), cfg.probes, rng)
    base = merge_quantities(leaf, T1, T2, cfg.delta, probes)
    leaf2, S1, S2 = children(V, k, n_int + cfg.refine_step, n_b)
    twin = merge_quantities(leaf2, S1, S2, cfg.delta)
    row = {"k": k, "n_int": n_int, "n_b": n_b, "n_int_twin": n_int + cfg.refine_step}
    row.update(base)
    drift = 0.0
    for key in TWIN_KEYS:
        row[key + "_twin"] = twin[key]
        drift = max(drift, abs(twin[key] - base[key]) / abs(twin[key]))
    row["max_drift"] = drift
    row["converged"] = drift <= cfg.drift_tol
    log.info("sweep k=%g: sigma_min=%.4g drift=%.2e", k, base["sigma_min_merge"], drift)
    return row


SWEEP_HEADER = (["k", "n_int", "n_b", "n_int_twin"]
                + [c for key in TWIN_KEYS for c in (key, key + "_twin")]
                + ["wrq_norm", "sigma_min_euclid", "cond", "flux_defect", "c_weak", "c_weak2",
                   "max_drift", "converged"])


def run_theorem_sweep(cfg: SweepConfig, out: Path | None = None, threads: int = 1) -> Report:
    """Per-k gains of ``I -+ R``, ``W`` and ``W Q1`` with refinement twins and envelope fits."""
    V = _potential(cfg.potential)
    c1, c2 = require_nontrapping(V, cfg)
    rep = Report("sweep")
    jobs = list(enumerate(cfg.k_grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda a: _sweep_point(cfg, V, *a), jobs))
    else:
        rows = [_sweep_point(cfg, V, i, k) for i, k in jobs]
    rep.rows = rows
    ks = np.array([r["k"] for r in rows])
    col = {key: np.array([r[key] for r in rows]) for key in SWEEP_HEADER if key not in ("converged",)}
    d = cfg.delta
    env = (1 + ks) ** (3 * (1 + d))
    p_minus, _ = loglog_fit(ks, col["c_minus"], cfg.fit_window)
    p_plus, _ = loglog_fit(ks, col["c_plus"], cfg.fit_window)
    p_w, _ = loglog_fit(ks, col["wnorm"], cfg.fit_window)
    p_wq, _ = loglog_fit(ks, col["wq_norm"], cfg.fit_window)
    rep.summary = {
        "nontrapping_c1": c1, "nontrapping_c2": c2, "delta": d,
        "c_star": float(col["c_minus"].min()),
        "c_star_delta": float((col["c_plus"] * env).min()),
        "C_delta": float((col["wnorm"] * ks / env).max()),
        "C_star_delta": float((col["wq_norm"] / env).max()),
        "exp_c_minus": p_minus, "exp_c_plus": p_plus, "exp_wnorm": p_w, "exp_wq_norm": p_wq,
        "weak_constant": float(col["c_weak"].max()), "weak2_constant": float(col["c_weak2"].max()),
        "max_flux_defect": float(col["flux_defect"].max()),
    }
    finite = all(np.all(np.isfinite(v)) and np.all(v >= 0) for v in col.values())
    rep.check("finite", finite)
    rep.check("sigma_min>0", bool(np.all(col["sigma_min_merge"] > 0)),
              f"min {col['sigma_min_merge'].min():.4g}")
    rep.check("converged", all(r["converged"] for r in rows), f"max drift {col['max_drift'].max():.3g}")
    rep.check("c_minus flat", -0.05 <= p_minus <= 0.05, f"exponent {p_minus:.4f}")
    rep.check("c_plus envelope", p_plus >= -3 * (1 + d), f"exponent {p_plus:.4f} >= {-3 * (1 + d):.2f}")
    rep.check("W envelope", p_w <= 3 * (1 + d) - 1 + 0.1, f"exponent {p_w:.4f}")
    if out is not None:
        write_csv(Path(out) / "sweep.csv", SWEEP_HEADER, rows)
        write_csv(Path(out) / "summary.csv", ["quantity", "value"],
                  [{"quantity": q, "value": v} for q, v in rep.summary.items()])
    return rep


def run_sharpness(cfg: SweepConfig, out: Path | None = None) -> Report:
    """Gains ``|1 + r_n|`` along ``k + k^alpha = n pi`` and ``|1 - r_n|`` at ``k = 2``."""
    rep = Report("sharpness")
    n0, n1 = cfg.sharp_n
    ns = np.unique(np.round(np.linspace(n0, n1, cfg.sharp_count)).astype(int))
    rows = []
    for n in ns:
        k, gain, mode = sharpness_sequence(cfg.alpha, int(n))
        low = ImpedanceMode.build(2.0, int(n))
        ratio = abs(1 - r_n(low)) / (4.0 / (n * math.pi))
        rows.append({"n": int(n), "k_n": k, "gain_plus": gain, "delta_n": mode.lam.imag,
                     "delta_over_log_k": mode.lam.imag / math.log(k), "k2_gain_minus_ratio": ratio})
    rep.rows = rows
    p, C = loglog_fit([r["k_n"] for r in rows], [r["gain_plus"] for r in rows])
    target = -0.5 + cfg.alpha / 2
    rep.summary = {"exponent": p, "constant": C, "target": target,
                   "max_delta_over_log_k": max(r["delta_over_log_k"] for r in rows)}
    rep.check("I+R decay", p <= target, f"fitted exponent {p:.4f}, need <= {target:.3f}")
    worst = max(abs(r["k2_gain_minus_ratio"] - 1) for r in rows)
    rep.check("I-R ~ 2k/(n pi)", worst <= 0.05, f"max relative deviation {worst:.2e}")
    if out is not None:
        write_csv(Path(out) / "sharpness.csv", list(rows[0]), rows)
    return rep


def run_small_k(cfg: SweepConfig, out: Path | None = None) -> Report:
    """``||W Q1||`` on L2 at small frequencies."""
    V = _potential(cfg.potential)
    require_nontrapping(V, cfg)
    rep = Report("small-k")
    rows = []
    for k in cfg.small_k:
        n_int, n_b = cfg.resolution(k)
        leaf, T1, T2 = children(V, k, n_int, n_b)
        q = merge_quantities(leaf, T1, T2, cfg.delta)
        rows.append({"k": k, "n_int": n_int, "n_b": n_b, "wq_norm": q["wq_norm"],
                     "wrq_norm": q["wrq_norm"], "sigma_min_merge": q["sigma_min_merge"]})
    rep.rows = rows
    vals = np.array([r["wq_norm"] for r in rows])
    ratio = float(vals.max() / vals.min())
    rep.summary = {"ratio": ratio}
    rep.check("uniform W Q1", ratio < 10, f"max/min = {ratio:.3f}")
    if out is not None:
        write_csv(Path(out) / "small_k.csv", list(rows[0]), rows)
    return rep


# ---------------------------------------------------------------------------
# oracle validation


def oracle_errors(k: float, modes, n_int: int, n_b: int) -> list[dict]:
    """Leaf solver against the separated modes on the unit square with ``V = 1``."""
    leaf = LeafBox(UNIT, Potential.constant(1.0), k, n_int, n_b)
    T = iti_full(leaf)
    R, _ = partial_blocks(T, Side.EAST)
    lay = leaf.layout
    iA = lay.indices(Side.EAST)
    GA = gram(lay.subset(Side.EAST), exact=True)
    yA = lay.points(UNIT)[iA, 1]
    X, Y = np.meshgrid(leaf.x, leaf.y, indexing="ij")
    rows = []
    for n in modes:
        m = ImpedanceMode.build(k, n)
        f = w_n(m, yA)
        g = np.zeros(lay.size, dtype=complex)
        g[iA] = f
        U = leaf.response @ g
        exact = v_n(m, X) * w_n(m, Y)
        field = float(np.abs(U.reshape(leaf.shape) - exact).max() / np.abs(exact).max())
        Rf = R.matrix @ f
        rq = np.vdot(f, GA.matrix @ Rf) / np.vdot(f, GA.matrix @ f)
        lhs, _ = control_identity(leaf, U, Side.EAST)
        flux = abs(GA.norm(f) ** 2 - GA.norm(Rf) ** 2 - 4 * lhs) / GA.norm(f) ** 2
        rows.append({"k": k, "n": n, "n_int": n_int, "n_b": n_b, "field_error": field,
                     "r_exact": m.r, "r_error": float(abs(rq - m.r)), "flux_defect": float(flux)})
    return rows


def run_oracle_validation(cfg: SweepConfig, out: Path | None = None,
                          resolution: tuple[int, int] | None = None) -> Report:
    n_int, n_b = resolution or (cfg.oracle_n_int, cfg.oracle_n_b)
    rep = Report("oracle")
    rows = [r for k in cfg.oracle_k for r in oracle_errors(k, range(1, cfg.oracle_modes + 1), n_int, n_b)]
    rep.rows = rows
    for key, tol in (("field_error", cfg.oracle_field_tol), ("r_error", cfg.oracle_r_tol),
                     ("flux_defect", cfg.oracle_r_tol)):
        worst = max(rows, key=lambda r: r[key])
        rep.check(f"{key} < {tol:g}", worst[key] < tol,
                  f"worst {worst[key]:.2e} at k={worst['k']:g}, n={worst['n']}")
    if out is not None:
        write_csv(Path(out) / "oracle.csv", list(rows[0]), rows)
    return rep


# ---------------------------------------------------------------------------
# merge equivalence


def merge_case(V: Potential, k: float, n_int: int, n_b: int, rng: np.random.Generator, probes: int = 5) -> dict:
    l1 = LeafBox(LEFT, V, k, n_int, n_b)
    l2 = LeafBox(RIGHT, V, k, n_int, n_b)
    res = merge_boxes(iti_full(l1), iti_full(l2))
    direct = glued_iti(l1, l2)
    G = gram(res.parent.source_layout)
    err = op_norm(res.parent.matrix - direct.matrix, G, G) / op_norm(direct.matrix, G, G)
    # continuity of u and d_x u across the shared edge, at its Gauss nodes
    H = smooth_probes(res.parent.source_layout, probes, rng)
    a1, a2 = l1.layout.indices(Side.EAST), l2.layout.indices(Side.WEST)
    GA = gram(l1.layout.subset(Side.EAST), exact=True)
    wy = l1.wy
    jump = lob = 0.0
    for h in H:
        g1, g2 = res.child_incoming(h)
        U1, U2 = l1.response @ g1, l2.response @ g2
        u1, u2 = l1.dirichlet_trace[a1] @ U1, l2.dirichlet_trace[a2] @ U2
        d1, d2 = l1.neumann_trace[a1] @ U1, -(l2.neumann_trace[a2] @ U2)
        scale = math.hypot(k * GA.norm(u1), GA.norm(d1))
        jump = max(jump, math.hypot(k * GA.norm(u1 - u2), GA.norm(d1 - d2)) / scale)
        # the same comparison on the Lobatto nodes of the interface
        V1, V2 = U1.reshape(l1.shape), U2.reshape(l2.shape)
        du = V1[0] - V2[-1]
        dd = l1.Dx[0] @ V1 - l2.Dx[-1] @ V2
        lob = max(lob, math.sqrt(np.sum(wy * (k ** 2 * np.abs(du) ** 2 + np.abs(dd) ** 2))) / scale)
    X, Y = np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 1, 101), indexing="ij")
    vdiff = float(np.abs(V.value(X, Y) - V.value(2 - X, Y)).max())
    return {"k": k, "rel_error": err, "interface_jump": float(jump), "lobatto_jump": float(lob),
            "sigma_min": res.sigma_min, "cond": res.cond, "v_difference": vdiff}


def run_merge_equivalence(cfg: SweepConfig, out: Path | None = None,
                          resolution: tuple[int, int] | None = None) -> Report:
    """Merged ItI against a monolithic solve of the same two-box discretization."""
    n_int, n_b = resolution or (cfg.merge_n_int, cfg.merge_n_b)
    rep = Report("merge-check")
    rows = []
    for ip, text in enumerate(cfg.merge_potentials):
        V = _potential(text)
        require_nontrapping(V, cfg)
        for ik, k in enumerate(cfg.merge_k):
            rng = np.random.default_rng([cfg.seed, ip, ik])
            r = merge_case(V, k, n_int, n_b, rng)
            thresh = cfg.eps_delta * (1 + k) ** (-3 * (1 + cfg.delta))
            r.update(potential=text, n_int=n_int, n_b=n_b, difference_bound=thresh,
                     difference_condition=r["v_difference"] <= thresh)
            rows.append(r)
    rep.rows = rows
    worst = max(r["rel_error"] for r in rows)
    rep.check(f"merged == direct (< {cfg.merge_tol:g})", worst < cfg.merge_tol, f"worst {worst:.2e}")
    rep.summary = {"max_interface_jump": max(r["interface_jump"] for r in rows)}
    rep.check("sigma_min > 0", all(r["sigma_min"] > 0 for r in rows),
              f"min {min(r['sigma_min'] for r in rows):.3g}")
    if out is not None:
        header = ["potential", "k", "n_int", "n_b", "rel_error", "interface_jump", "lobatto_jump", "sigma_min", "cond",
                  "v_difference", "difference_bound", "difference_condition"]
        write_csv(Path(out) / "merge.csv", header, rows)
    return rep


# ---------------------------------------------------------------------------
# Neumann trace check


def neumann_pencil(V: Potential, n: int, rect: Rect = UNIT):
    """Collocation pencil ``(A, B)`` for ``-Delta w = lam V w`` with ``d_nu w = 0``.

    Boundary rows hold the Neumann condition (corners owned by the
    horizontal sides) and are zero in ``B``.
    """
    g = cheb_nodes(n, NodeKind.LOBATTO)
    x, y = g.physical(rect.x0, rect.x1), g.physical(rect.y0, rect.y1)
    D = diff_matrix(g)
    Dx, Dy = D.scaled(rect.x0, rect.x1), D.scaled(rect.y0, rect.y1)
    I = np.eye(n + 1)
    A = -(np.kron(Dx @ Dx, I) + np.kron(I, Dy @ Dy))
    X, Y = np.meshgrid(x, y, indexing="ij")
    Vv = V.value(X, Y).ravel()
    B = np.diag(Vv)
    A4 = A.reshape(n + 1, n + 1, n + 1, n + 1)
    B4 = B.reshape(A4.shape)
    for i in range(n + 1):
        for jb, sgn in ((n, -1.0), (0, 1.0)):
            A4[i, jb] = 0.0
            A4[i, jb, i, :] = sgn * Dy[jb]
            B4[i, jb] = 0.0
    for j in range(1, n):
        for ib, sgn in ((0, 1.0), (n, -1.0)):
            A4[ib, j] = 0.0
            A4[ib, j, :, j] = sgn * Dx[ib]
            B4[ib, j] = 0.0
    return A, B, (x, y, Dx, Dy)


def _fine_residuals(V: Potential, W: np.ndarray, lam: float, n: int, rect: Rect) -> tuple[float, float]:
    """PDE and Neumann residuals of the grid interpolant on a finer grid."""
    g = cheb_nodes(n, NodeKind.LOBATTO)
    m = n + 8
    f = cheb_nodes(m, NodeKind.LOBATTO)
    P = interp_matrix(g, f)
    Wf = P @ W.reshape(n + 1, n + 1) @ P.T
    D = diff_matrix(f)
    Dx, Dy = D.scaled(rect.x0, rect.x1), D.scaled(rect.y0, rect.y1)
    xf, yf = f.physical(rect.x0, rect.x1), f.physical(rect.y0, rect.y1)
    X, Y = np.meshgrid(xf, yf, indexing="ij")
    lap = Dx @ Dx @ Wf + Wf @ (Dy @ Dy).T
    res = lap + lam * V.value(X, Y) * Wf
    scale = (1.0 + abs(lam)) * np.abs(Wf).max()
    pde = float(np.abs(res[1:-1, 1:-1]).max() / scale)
    wx, wy = Dx @ Wf, Wf @ Dy.T
    bc = max(np.abs(wx[0]).max(), np.abs(wx[-1]).max(), np.abs(wy[:, 0]).max(), np.abs(wy[:, -1]).max())
    return pde, float(bc / ((1.0 + math.sqrt(abs(lam))) * np.abs(Wf).max()))


def neumann_modes(V: Potential, n: int, count: int, residual_tol: float = 1e-6, rect: Rect = UNIT):
    """Clusters of converged Neumann modes with their trace Gram eigenvalues.

    Returns a list of dicts, one per eigenvalue cluster, holding the mean
    eigenvalue, the V-orthonormal trace-Gram eigenvalues on the three sides
    other than East, and the worst residuals.
    """
    A, B, (x, y, Dx, Dy) = neumann_pencil(V, n, rect)
    lam, vecs = sla.eig(A, B)
    ok = np.isfinite(lam) & (np.abs(lam.imag) <= 1e-8 * (1 + np.abs(lam.real)))
    lam, vecs = lam[ok].real, vecs[:, ok]
    order = np.argsort(lam)
    lam, vecs = lam[order], vecs[:, order]
    g = cheb_nodes(n, NodeKind.LOBATTO)
    w = quad_weights(g)
    wx, wy = w * 0.5 * rect.width, w * 0.5 * rect.height
    X, Y = np.meshgrid(x, y, indexing="ij")
    Vw = V.value(X, Y) * np.outer(wx, wy)

    kept = []
    for j in range(len(lam)):
        Wj = vecs[:, j].real if np.abs(vecs[:, j].imag).max() < 1e-12 * np.abs(vecs[:, j]).max() else vecs[:, j]
        pde, bc = _fine_residuals(V, Wj, lam[j], n, rect)
        if pde < residual_tol and bc < residual_tol:
            kept.append((lam[j], Wj.reshape(n + 1, n + 1), pde, bc))
        if len(kept) >= count and abs(lam[j] - kept[count - 1][0]) > 1e-6 * max(1.0, abs(lam[j])):
            break

    clusters, cur = [], []
    for item in kept:
        if cur and abs(item[0] - cur[-1][0]) > 1e-6 * max(1.0, abs(item[0])):
            clusters.append(cur)
            cur = []
        cur.append(item)
    if cur:
        clusters.append(cur)

    out, total = [], 0
    for cl in clusters:
        if total >= count:
            break
        Ws = [c[1] for c in cl]
        M = np.array([[np.sum(Vw * a * np.conj(b)) for b in Ws] for a in Ws])
        T = np.zeros_like(M)
        for side_vals, wts in ((lambda Z: Z[:, -1], wx), (lambda Z: Z[:, 0], wx), (lambda Z: Z[-1, :], wy)):
            S = [side_vals(Z) for Z in Ws]
            T += np.array([[np.sum(wts * a * np.conj(b)) for b in S] for a in S])
        traces = np.sort(sla.eigh(0.5 * (T + T.conj().T), 0.5 * (M + M.conj().T), eigvals_only=True))
        out.append({"lambda": float(np.mean([c[0] for c in cl])), "multiplicity": len(cl),
                    "traces": traces, "pde_residual": max(c[2] for c in cl),
                    "bc_residual": max(c[3] for c in cl)})
        total += len(cl)
    return out


def analytic_neumann(c: float, lam_max: float):
    """``{lambda: sorted trace values}`` for ``V = c`` on the unit square (East side excluded)."""
    table: dict[int, list[float]] = {}
    mmax = int(math.sqrt(lam_max * c) / math.pi) + 2
    for m in range(mmax + 1):
        for n in range(mmax + 1):
            if m == 0 and n == 0:
                val = 3.0
            elif m == 0:
                val = 5.0
            elif n == 0:
                val = 4.0
            else:
                val = 6.0
            table.setdefault(m * m + n * n, []).append(val / c)
    return {math.pi ** 2 * s / c: sorted(v) for s, v in sorted(table.items())}


def run_neumann_trace_check(cfg: SweepConfig, out: Path | None = None,
                            resolution: tuple[int, int] | None = None) -> Report:
    V = _potential(cfg.potential)
    require_nontrapping(V, cfg)
    n = resolution[0] if resolution else cfg.neumann_n_int
    rep = Report("neumann")
    clusters = neumann_modes(V, n, cfg.neumann_modes, cfg.neumann_residual)
    rows = []
    count = 0
    for cl in clusters:
        for t in cl["traces"]:
            count += 1
            rows.append({"index": count, "lambda": cl["lambda"], "multiplicity": cl["multiplicity"],
                         "trace": float(t), "pde_residual": cl["pde_residual"], "bc_residual": cl["bc_residual"]})
    rep.rows = rows
    mn = min(r["trace"] for r in rows)
    rep.check("mode count", count >= cfg.neumann_modes, f"{count} converged modes")
    rep.check(f"min trace >= {cfg.neumann_floor:g}", mn >= cfg.neumann_floor, f"min {mn:.6g}")
    if V.is_constant:
        c = float(V.value(0.5, 0.5))
        ref = analytic_neumann(c, clusters[-1]["lambda"] + 1)
        worst = 0.0
        lam4 = math.pi ** 2 * 32 / c  # m, n <= 4
        for cl in clusters:
            if cl["lambda"] > lam4 * (1 + 1e-9):
                continue
            key = min(ref, key=lambda L: abs(L - cl["lambda"]))
            vals = ref[key]
            if len(vals) != len(cl["traces"]):
                worst = math.inf
                break
            worst = max(worst, float(np.abs(np.array(vals) - cl["traces"]).max()),
                        abs(key - cl["lambda"]) / key if key else abs(cl["lambda"]))
        rep.check("analytic traces (m, n <= 4)", worst <= 1e-6, f"max deviation {worst:.2e}")
    if out is not None:
        write_csv(Path(out) / "neumann.csv", list(rows[0]), rows)
    return rep


# ---------------------------------------------------------------------------
# DtN export


def run_dtn_export(cfg: SweepConfig, out: Path | None = None,
                   resolution: tuple[int, int] | None = None) -> Report:
    V = _potential(cfg.potential)
    rect = Rect(*cfg.dtn_rect)
    k = cfg.dtn_k
    n_int, n_b = resolution or (cfg.dtn_n_int, cfg.dtn_n_b)
    leaf = LeafBox(rect, V, k, n_int, n_b)
    T = iti_full(leaf)
    L = iti_to_dtn(T, k)
    rep = Report("dtn")
    # reciprocity (Green's second identity) on traces of resolved discrete solutions
    probes = smooth_probes(leaf.layout, max(2, min(cfg.probes, 8)), np.random.default_rng(cfg.seed))
    U = leaf.dirichlet_trace @ (leaf.response @ probes.T)
    M = gram(leaf.layout, exact=True).matrix
    S = U.T @ M @ L @ U
    sym = float(np.abs(S - S.T).max() / np.abs(S).max())
    rep.summary = {"k": k, "size": L.shape[0], "reciprocity_defect": sym}
    rep.check("finite", bool(np.all(np.isfinite(L))))
    rep.check("reciprocity", sym <= 1e-6, f"defect {sym:.2e}")
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_binary(out / "dtn.iti", L)
        write_binary(out / "iti.iti", T.matrix)
        if cfg.dtn_csv:
            write_matrix_csv(out / "dtn.csv", L)
        write_csv(out / "dtn_summary.csv", ["quantity", "value"],
                  [{"quantity": q, "value": v} for q, v in rep.summary.items()])
    return rep
