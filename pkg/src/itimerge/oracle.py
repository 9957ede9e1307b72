"""Closed-form impedance modes on the unit square with V = 1.

Separating variables in ``(Delta + k^2) u = 0`` on ``[0,1]^2`` with impedance
data ``w_n`` on the East side and zero data elsewhere gives
``u_n(x, y) = v_n(x) w_n(y)``, where ``w_n`` is an eigenfunction of
``w'' = -lambda^2 w`` with ``w'(1) + i k w(1) = -w'(0) + i k w(0) = 0`` and
``v_n`` solves ``v'' = mu^2 v`` (``mu^2 = lambda^2 - k^2``) with
``-v'(0) + i k v(0) = 0`` and ``v'(1) + i k v(1) = 1``.

Eigenvalue labelling
--------------------
The roots satisfy ``lambda = n pi - i Log((lambda - k)/(lambda + k))`` with the
principal logarithm; for ``Im lambda > 0`` its argument lies in ``(0, pi)``, so
root ``n`` has ``n pi < Re lambda < (n + 1) pi`` and equals ``n pi`` at ``k = 0``.
That is the branch obtained by continuation in ``k`` from zero.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq


class RootFindingError(RuntimeError):
    def __init__(self, msg, last=None, residual=None):
        super().__init__(msg)
        self.last = last
        self.residual = residual


class NearResonanceError(ArithmeticError):
    pass


def dispersion_residual(lam: complex, k: float) -> complex:
    """``e^{2 i lam} - (1 - k/lam)^2 / (1 + k/lam)^2``."""
    q = k / lam
    return cmath.exp(2j * lam) - (1 - q) ** 2 / (1 + q) ** 2


def _labelled(lam: complex, k: float, n: int) -> complex:
    return lam - n * math.pi + 1j * cmath.log((lam - k) / (lam + k))


def _newton(lam: complex, k: float, n: int, tol: float, maxiter: int):
    for _ in range(maxiter):
        f = _labelled(lam, k, n)
        df = 1.0 + 2j * k / (lam * lam - k * k)
        step = f / df
        lam = lam - step
        if lam.imag <= 0:
            lam = complex(lam.real, 1e-3)
        if abs(step) <= tol * max(1.0, abs(lam)):
            return lam, True
    return lam, False


def _in_strip(lam: complex, n: int) -> bool:
    return n * math.pi - 1e-9 <= lam.real <= (n + 1) * math.pi + 1e-9 and lam.imag > 0


def find_lambda(k: float, n: int, *, tol: float = 1e-12, maxiter: int = 60) -> complex:
    """Impedance eigenvalue ``lambda_n(k)`` (see the module notes for labelling).

    Newton's method on the labelled equation, seeded from the large-``n``
    asymptotics; if that stalls or leaves the strip, the root is continued in
    ``k`` from ``k = 0`` where ``lambda_n = n pi``.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    if n < 0 or int(n) != n:
        raise ValueError("mode index must be a non-negative integer")
    n = int(n)
    a = n * math.pi + 0.5
    seed = complex(a, max(1e-3, math.log((a + k) / max(abs(a - k), 1.0))))
    lam, ok = _newton(seed, k, n, 1e-15, maxiter)
    if not (ok and _in_strip(lam, n) and abs(dispersion_residual(lam, k)) <= tol):
        lam = _continue_in_k(k, n, maxiter)
    res = abs(dispersion_residual(lam, k))
    if res > tol or not _in_strip(lam, n):
        raise RootFindingError(f"no root for k={k}, n={n}", lam, res)
    return lam


def _continue_in_k(k: float, n: int, maxiter: int) -> complex:
    lam = complex(max(n * math.pi, 1e-3), 1e-6)
    t, h = 0.0, min(0.05, 1.0)
    kk = 0.0
    while t < 1.0:
        t_new = min(1.0, t + h)
        kk = t_new * k
        cand, ok = _newton(lam, kk, n, 1e-14, maxiter)
        if ok and _in_strip(cand, n) and abs(cand - lam) < 0.5:
            lam, t = cand, t_new
            h = min(2 * h, 0.25)
        else:
            h *= 0.5
            if h < 1e-8:
                raise RootFindingError(f"continuation stalled at k={kk:.6g} (n={n})", lam,
                                       abs(dispersion_residual(lam, kk)))
    return lam


def _mu_from(lam: complex, k: float) -> complex:
    mu = cmath.sqrt(lam * lam - k * k)
    if mu.real < 0 or (mu.real == 0 and mu.imag < 0):
        mu = -mu
    return mu


@dataclass(frozen=True)
class ImpedanceMode:
    """One separated mode: eigenvalue, decay rate and normalization."""

    n: int
    k: float
    lam: complex
    mu: complex
    A: complex

    @classmethod
    def build(cls, k: float, n: int) -> "ImpedanceMode":
        lam = find_lambda(k, n)
        mu = _mu_from(lam, k)
        return cls(n, float(k), lam, mu, _normalization(lam, k))

    @property
    def r(self) -> complex:
        return r_n(self)


def _normalization(lam: complex, k: float) -> complex:
    # A = c / lam with c > 0, so that w(0) = 2 A lam is real positive
    a, b = lam + k, lam - k
    al, de = lam.real, lam.imag

    def expm1_over(z):  # (e^z - 1) / z, stable near 0
        return 1.0 + z / 2 if abs(z) < 1e-8 else (cmath.exp(z) - 1.0) / z

    I_minus = expm1_over(-2 * de).real
    I_plus = expm1_over(2 * de).real
    I_osc = expm1_over(2j * al)
    norm2 = (abs(a) ** 2 * I_minus + abs(b) ** 2 * I_plus
             + 2 * (a * b.conjugate() * I_osc).real) / abs(lam) ** 2
    return 1.0 / (lam * math.sqrt(norm2))


def w_n(mode: ImpedanceMode, y, deriv: int = 0):
    """Transverse eigenfunction (unit L2 norm on [0, 1]) or its derivatives."""
    y = np.asarray(y, dtype=float)
    lam, k = mode.lam, mode.k
    il = 1j * lam
    e_p, e_m = np.exp(il * y), np.exp(-il * y)
    return mode.A * ((lam + k) * il ** deriv * e_p + (lam - k) * (-il) ** deriv * e_m)


def v_n(mode: ImpedanceMode, x, deriv: int = 0):
    """Normal profile solving ``v'' = mu^2 v`` with the impedance end conditions."""
    x = np.asarray(x, dtype=float)
    mu, k = mode.mu, mode.k
    ap, am = mu + 1j * k, mu - 1j * k
    # numerator and denominator scaled by e^{-mu} so no exponent has Re > 0
    den = ap * ap - am * am * cmath.exp(-2 * mu)
    if abs(den) < 1e-300 or abs(den) < 1e-13 * abs(ap) ** 2:
        raise NearResonanceError(f"v_n denominator vanishes (mu={mu})")
    num = ap * mu ** deriv * np.exp(mu * (x - 1)) + am * (-mu) ** deriv * np.exp(-mu * (x + 1))
    return num / den


def r_n(mode: ImpedanceMode) -> complex:
    """ItI eigenvalue on the East side: ``v_n'(1) - i k v_n(1)``."""
    return complex(v_n(mode, 1.0, 1) - 1j * mode.k * v_n(mode, 1.0))


def u_n(mode: ImpedanceMode, x, y):
    return v_n(mode, x) * w_n(mode, y)


def solve_k_for_level(alpha: float, n: int) -> float:
    """Root of ``k + k^alpha = n pi`` (monotone in k)."""
    target = n * math.pi
    f = lambda k: k + k ** alpha - target  # noqa: E731
    k = target
    for _ in range(50):
        step = f(k) / (1 + alpha * k ** (alpha - 1))
        k -= step
        if abs(step) < 1e-15 * target:
            break
    if not abs(f(k)) <= 1e-12 * target:
        k = brentq(f, 1e-12, target, xtol=1e-15, rtol=4e-16)
    return k


def sharpness_sequence(alpha: float, n: int) -> tuple[float, float, ImpedanceMode]:
    """Frequency ``k_n`` with ``k + k^alpha = n pi`` and the gain ``|1 + r_n|``.

    Returns ``(k_n, |1 + r_n|, mode)``.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    k = solve_k_for_level(alpha, n)
    if k <= 1:
        raise ValueError(f"n={n} too small: k_n={k:.3g} <= 1")
    mode = ImpedanceMode.build(k, n)
    return k, abs(1 + r_n(mode)), mode


def mode_table(ks, ns) -> list[dict]:
    rows = []
    for k in ks:
        for n in ns:
            m = ImpedanceMode.build(k, n)
            r = r_n(m)
            rows.append({"k": k, "n": n, "lambda": m.lam, "mu": m.mu, "r": r,
                         "gain_minus": abs(1 - r), "gain_plus": abs(1 + r)})
    return rows


def write_mode_table(path: str | Path, rows: list[dict]) -> None:
    cols = ["k", "n", "lambda_re", "lambda_im", "mu_re", "mu_im", "r_re", "r_im",
            "gain_minus", "gain_plus"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([f"{r['k']:.17g}", r["n"], f"{r['lambda'].real:.17g}", f"{r['lambda'].imag:.17g}",
                        f"{r['mu'].real:.17g}", f"{r['mu'].imag:.17g}", f"{r['r'].real:.17g}",
                        f"{r['r'].imag:.17g}", f"{r['gain_minus']:.17g}", f"{r['gain_plus']:.17g}"])
