"""CSV output and log-log fitting."""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_WRITE_LOCK = threading.Lock()


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (complex, np.complexfloating)):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return str(v)


def write_csv(path: str | Path, header: list[str], rows: list[dict]) -> None:
    """Header row plus one line per row; floats with 17 significant digits."""
    path = Path(path)
    with _WRITE_LOCK:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(r[h]) for h in header])


def loglog_fit(x, y, window: float = 1.0) -> tuple[float, float]:
    """Least-squares ``log y = p log x + c`` over the upper ``window`` fraction of ``x``.

    Returns ``(p, exp(c))``.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    start = min(len(x) - 2, int(math.floor(len(x) * (1.0 - window))))
    x, y = x[max(start, 0):], y[max(start, 0):]
    if len(x) < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs at least two positive samples")
    p, c = np.polyfit(np.log(x), np.log(y), 1)
    return float(p), float(math.exp(c))


@dataclass
class Report:
    """Outcome of one experiment: named checks plus output rows."""

    name: str
    checks: dict[str, bool] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    summary: dict[str, float] = field(default_factory=dict)

    def check(self, label: str, ok: bool, detail: str = "") -> bool:
        self.checks[label] = bool(ok)
        self.details[label] = detail
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def lines(self) -> list[str]:
        return [f"[{'PASS' if ok else 'FAIL'}] {self.name}: {lab}" + (f" ({self.details[lab]})" if self.details[lab] else "")
                for lab, ok in self.checks.items()]
