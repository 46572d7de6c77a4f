"""Command-line driver for the GOPW-DG benchmark studies.

Config files are flat ``key = value`` text; ``#`` starts a comment, list
values are separated by commas or whitespace, and ``h`` values may be written
as fractions (``1/16``). Keys are the long flag names with dashes or
underscores (``quad_points``, ``omega-h``...). Command-line flags override
the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

from .studies import StudyResult, StudyRow, run_h_study, run_oracle_study, run_pollution_study, run_row

__all__ = ["build_parser", "main", "parse_config", "parse_number"]

SUBCOMMANDS = ("h-study", "pollution-study", "oracle-study", "single-run")
LIST_KEYS = {"omega", "h", "nx"}


def parse_number(text: str) -> float:
    """Float from ``"0.125"``, ``"1/8"`` or ``"1e-3"``."""
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def parse_config(path) -> dict:
    """Read a flat ``key = value`` file into argparse destinations."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            dest = key.replace("-", "_")
            items = [v for v in value.replace(",", " ").split() if v]
            if dest in LIST_KEYS:
                out[dest] = [parse_number(v) for v in items]
            elif dest in ("no_timing",):
                out[dest] = value.lower() in ("1", "true", "yes", "on")
            elif dest in ("out", "example", "target"):
                out[dest] = value
            elif dest in ("case", "p", "q", "m", "quad_points", "threads"):
                out[dest] = int(value)
            elif dest == "omega_h":
                out[dest] = parse_number(value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--example", choices=["1", "2", "constant"], default="1")
    p.add_argument("--case", type=int, choices=[1, 2], default=2)
    p.add_argument("--omega", type=parse_number, nargs="+", help="frequency (a list for pollution/oracle studies)")
    p.add_argument("--h", type=parse_number, nargs="+", help="mesh sizes, e.g. 1/8 1/16")
    p.add_argument("--nx", type=int, nargs="+", help="elements per direction (alternative to --h)")
    p.add_argument("--omega-h", type=parse_number, default=1.0, help="fixed omega*h for omega sweeps")
    p.add_argument("--p", type=int, default=5, help="number of directions")
    p.add_argument("--q", type=int, default=None, help="matching order (default: selected from omega, h)")
    p.add_argument("--m", type=int, default=5, help="local spectral polynomial order")
    p.add_argument("--quad-points", type=int, default=None, help="Gauss points per direction override")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--no-timing", action="store_true", help="leave wall_time_s empty (byte-stable CSV)")
    p.add_argument("--target", choices=["phi1", "airy"], default="phi1", help="oracle-study target function")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gopw-bench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "h-study": "fixed omega, sweep over h",
        "pollution-study": "fixed omega*h, sweep over omega",
        "oracle-study": "single-element least-squares approximation orders",
        "single-run": "one full pipeline run",
    }
    parser.subcommands = {}
    for name in SUBCOMMANDS:
        parser.subcommands[name] = sp = sub.add_parser(name, help=helps[name])
        _common(sp)
    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = parse_config(args.config)
        parser.subcommands[args.command].set_defaults(**cfg)
        args = parser.parse_args(argv)
    return parser, args


def _cfg(args) -> dict:
    return {
        "example": args.example,
        "case": args.case,
        "p": args.p,
        "q": args.q,
        "m": args.m,
        "quad_points": args.quad_points,
        "threads": args.threads,
        "timing": not args.no_timing,
        "omega_h": args.omega_h,
        "target": args.target,
    }


def _mesh_sizes(args, parser):
    if args.nx:
        return {"nxs": [int(n) for n in args.nx]}
    if args.h:
        return {"hs": list(args.h)}
    parser.error("one of --h or --nx is required")


def main(argv=None) -> int:
    parser, args = _parse(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _cfg(args)
    if not args.omega:
        parser.error("--omega is required")
    out = args.out
    if args.command == "h-study":
        cfg.update(omega=args.omega[0], **_mesh_sizes(args, parser))
        result = run_h_study(cfg, out)
    elif args.command == "pollution-study":
        cfg.update(omegas=args.omega)
        result = run_pollution_study(cfg, out)
    elif args.command == "oracle-study":
        if len(args.omega) > 1 or not (args.h or args.nx):
            cfg.update(omegas=args.omega)
        else:
            sizes = _mesh_sizes(args, parser)
            cfg.update(omega=args.omega[0], hs=sizes.get("hs") or [1.0 / n for n in sizes["nxs"]])
        result = run_oracle_study(cfg, out)
    else:
        sizes = _mesh_sizes(args, parser)
        nx = sizes["nxs"][0] if "nxs" in sizes else round(1.0 / sizes["hs"][0])
        result = StudyResult([run_row(cfg, float(args.omega[0]), nx, cfg["timing"])])
        if out:
            result.to_csv(out)
    if not out:
        sys.stdout.write(result.to_csv())
    failed = [r for r in result.rows if isinstance(r, StudyRow) and r.failure]
    for r in failed:
        print(f"row omega={r.omega:g} h={r.h:g} failed: {r.failure}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
