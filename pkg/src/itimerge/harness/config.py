"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` are comments; lists are comma separated.  Unknown
keys are rejected.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

EXPERIMENTS = ("sweep", "oracle", "merge-check", "neumann", "dtn")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class PreconditionError(ConfigError):
    """Inputs violate a precondition of the experiment (e.g. a trapping potential)."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "auto", "none") else int(text)


def _words(text: str) -> tuple[str, ...]:
    """Comma-separated items; commas inside parentheses do not split."""
    items, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            items.append("".join(cur))
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        if depth < 0:
            raise ValueError(f"unbalanced parentheses in {text!r}")
        cur.append(ch)
    items.append("".join(cur))
    return tuple(t.strip() for t in items if t.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class SweepConfig:
    k_grid: tuple[float, ...] = (0.5, 1, 2, 4, 8, 16, 32)
    potential: str = "constant(1)"
    delta: float = 0.1
    # resolution: fixed values override the k-dependent rule
    n_int: int | None = None
    n_b: int | None = None
    nb_low: int = 8
    nb_high: int = 16
    nb_switch_k: float = 10.0
    n_int_pad: int = 40
    n_int_pad_high: int = 56
    refine_step: int = 16
    drift_tol: float = 0.01
    fit_window: float = 0.5
    seed: int = 20240521
    probes: int = 20
    vertex: tuple[float, ...] = (1.0, 0.0)
    nontrapping_samples: int = 201
    experiments: tuple[str, ...] = EXPERIMENTS
    # sharpness sequence
    alpha: float = 0.1
    sharp_n: tuple[int, ...] = (20, 200)
    sharp_count: int = 19
    # small-k composition check
    small_k: tuple[float, ...] = (0.01, 0.1, 0.5, 1.0)
    # oracle validation
    oracle_k: tuple[float, ...] = (5.0,)
    oracle_modes: int = 8
    oracle_n_int: int = 40
    oracle_n_b: int = 30
    oracle_field_tol: float = 1e-8
    oracle_r_tol: float = 1e-7
    # merge equivalence
    merge_k: tuple[float, ...] = (1.0, 5.0, 10.0)
    merge_potentials: tuple[str, ...] = ("constant(1)", "affine(1, 0.05)")
    merge_n_int: int = 24
    merge_n_b: int = 16
    merge_tol: float = 1e-6
    eps_delta: float = 1.0
    # Neumann trace check
    neumann_modes: int = 50
    neumann_n_int: int = 32
    neumann_floor: float = 1.0
    neumann_residual: float = 1e-6
    # DtN export
    dtn_k: float = 5.0
    dtn_rect: tuple[float, ...] = (0.0, 1.0, 0.0, 1.0)
    dtn_n_int: int = 40
    dtn_n_b: int = 24
    dtn_csv: bool = False

    def __post_init__(self):
        if not self.k_grid or any(not k > 0 for k in self.k_grid):
            raise ConfigError("k_grid must be a non-empty list of positive reals")
        if list(self.k_grid) != sorted(self.k_grid):
            raise ConfigError("k_grid must be sorted ascending")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.n_int is not None and self.n_b is not None and self.n_b > self.n_int - 2:
            raise ConfigError("n_b must not exceed n_int - 2")
        if not 0 < self.fit_window <= 1:
            raise ConfigError("fit_window must lie in (0, 1]")
        if not 0 < self.alpha < 0.5:
            raise ConfigError("alpha must lie in (0, 1/2)")
        if len(self.sharp_n) != 2 or self.sharp_n[0] >= self.sharp_n[1]:
            raise ConfigError("sharp_n must be 'n_min, n_max'")
        if len(self.vertex) != 2:
            raise ConfigError("vertex must be 'x, y'")
        if len(self.dtn_rect) != 4:
            raise ConfigError("dtn_rect must be 'x0, x1, y0, y1'")
        bad = set(self.experiments) - set(EXPERIMENTS)
        if bad:
            raise ConfigError(f"unknown experiments {sorted(bad)}")
        if any(nb > ni - 2 for ni, nb in ((self.oracle_n_int, self.oracle_n_b),
                                          (self.merge_n_int, self.merge_n_b),
                                          (self.dtn_n_int, self.dtn_n_b))):
            raise ConfigError("boundary degree must not exceed interior degree - 2")

    def resolution(self, k: float) -> tuple[int, int]:
        """``(n_int, n_b)`` for wavenumber ``k``; the twin uses ``n_int + refine_step``."""
        nb = self.n_b if self.n_b is not None else (self.nb_low if k <= self.nb_switch_k else self.nb_high)
        pad = self.n_int_pad if k <= self.nb_switch_k else self.n_int_pad_high
        nint = self.n_int if self.n_int is not None else nb + pad
        return nint, nb

    def replace(self, **kw) -> "SweepConfig":
        return dataclasses.replace(self, **kw)


_PARSERS = {}
for _f in dataclasses.fields(SweepConfig):
    t = _f.type
    if t == "tuple[float, ...]":
        _PARSERS[_f.name] = _floats
    elif t == "tuple[int, ...]":
        _PARSERS[_f.name] = _ints
    elif t == "tuple[str, ...]":
        _PARSERS[_f.name] = _words
    elif t == "int | None":
        _PARSERS[_f.name] = _opt_int
    elif t == "int":
        _PARSERS[_f.name] = int
    elif t == "float":
        _PARSERS[_f.name] = float
    elif t == "bool":
        _PARSERS[_f.name] = _bool
    else:
        _PARSERS[_f.name] = str.strip


def parse_config(text: str, *, source: str = "<string>") -> SweepConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    for name in ("potential",):
        if name in values and not values[name]:
            raise ConfigError(f"{source}: empty {name}")
    if any(isinstance(v, float) and not math.isfinite(v) for v in values.values()):
        raise ConfigError(f"{source}: non-finite value")
    return SweepConfig(**values)


def load_config(path: str | Path | None) -> SweepConfig:
    if path is None:
        return SweepConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))
