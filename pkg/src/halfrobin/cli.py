"""Command line entry point: ``halfrobin run S1 ... S7``.

Exit codes: 0 when every verdict passes, 1 when any fails, 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import SCENARIOS, ConfigError, ExperimentConfig, config_from_dict, default_config, parse_config
from .scenarios import RunReport, run_scenario

log = logging.getLogger("halfrobin")


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def emit_report(report: RunReport, out_dir) -> List[Path]:
    """Write ``<S>_report.json``, ``<S>_config.json`` and CSV arrays into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError([f"out: cannot create output directory {out} ({exc.strerror})"]) from None
    if not os.access(out, os.W_OK):
        raise ConfigError([f"out: output directory {out} is not writable"])
    sid = report.scenario
    written = []

    def put(name, text):
        path = out / name
        _atomic_write(path, text)
        written.append(path)

    put(f"{sid}_report.json", json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    put(f"{sid}_config.json", json.dumps(report.config, indent=2, sort_keys=True) + "\n")
    for tag in sorted(report.spectra):
        vals = report.spectra[tag]
        put(f"{sid}_sv_{tag}.csv", _csv(["k", "s_k"], ((k + 1, float(v)) for k, v in enumerate(vals))))
    if report.eigenvalues or sid == "S6":
        rows = ((e.lam.real, e.lam.imag, e.residual) for e in report.eigenvalues)
        put(f"{sid}_eigenvalues.csv", _csv(["re", "im", "residual"], rows))
    return written


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    raw = cfg.to_dict()
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out"] = args.out
    if args.lam is not None:
        raw["lam"] = args.lam
    for attr, key in (("grid_n", "n"), ("grid_N", "N"), ("box_L", "L")):
        val = getattr(args, attr)
        if val is not None:
            raw.setdefault("grid", {})[key] = val
    return config_from_dict(raw)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="halfrobin", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--config", type=Path, help="JSON config; defaults used for omitted optional parts")
    run.add_argument("--out", help="output directory (default: config 'out' or ./runs)")
    run.add_argument("--seed", type=int)
    run.add_argument("--grid-n", dest="grid_n", type=int)
    run.add_argument("--grid-N", dest="grid_N", type=int)
    run.add_argument("--box-L", dest="box_L", type=float)
    run.add_argument("--lambda", dest="lam", type=float)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config) if args.config else default_config(args.scenario)
        if cfg.scenario != args.scenario:
            raise ConfigError([f"scenario: config is for {cfg.scenario}, command asked for {args.scenario}"])
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    report = run_scenario(cfg)
    try:
        emit_report(report, cfg.out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    for name, v in sorted(report.verdicts.items()):
        print(f"{'PASS' if v['passed'] else 'FAIL'} {cfg.scenario} {name}: {v['value']} {v['op']} {v['bound']}")
    for err in report.errors:
        print(f"ERROR {cfg.scenario}: {err}")
        if "lam" in err:
            print("  hint: choose --lambda below -max(||alpha||_inf^2)", file=sys.stderr)
    print(f"{cfg.scenario}: {'all verdicts pass' if report.passed else 'FAILED'} "
          f"({report.elapsed:.1f} s) -> {cfg.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
