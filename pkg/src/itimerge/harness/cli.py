"""``itimerge`` command line.

Exit codes: 0 when every check passes, 1 on a failed numerical check,
2 on a configuration or precondition error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from . import experiments as ex

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _resolution(text: str) -> tuple[int, int]:
    try:
        n_int, n_b = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'n_int,n_b'") from None
    if n_b < 1 or n_b > n_int - 2:
        raise argparse.ArgumentTypeError("need 1 <= n_b <= n_int - 2")
    return n_int, n_b


def _sweep(cfg, out, threads, res):
    if res is not None:
        cfg = cfg.replace(n_int=res[0], n_b=res[1])
    return [ex.run_theorem_sweep(cfg, out, threads), ex.run_sharpness(cfg, out), ex.run_small_k(cfg, out)]


COMMANDS = {
    "sweep": _sweep,
    "oracle": lambda cfg, out, threads, res: [ex.run_oracle_validation(cfg, out, res)],
    "merge-check": lambda cfg, out, threads, res: [ex.run_merge_equivalence(cfg, out, res)],
    "neumann": lambda cfg, out, threads, res: [ex.run_neumann_trace_check(cfg, out, res)],
    "dtn": lambda cfg, out, threads, res: [ex.run_dtn_export(cfg, out, res)],
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itimerge", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the k sweep")
    p.add_argument("--resolution", type=_resolution, metavar="N_INT,N_B",
                   help="override the grid sizes of the chosen experiment")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        reports = COMMANDS[args.command](cfg, args.out, args.threads, args.resolution)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for rep in reports:
        for line in rep.lines():
            print(line)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
