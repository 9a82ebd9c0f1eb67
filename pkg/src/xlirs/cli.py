"""Command line entry point: ``xlirs {sweep,solve,edof,report-apertures}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .channel import channels_for, dump_channels_csv
from .experiment import (
    MODES,
    SweepSpec,
    emit_csv,
    load_config,
    parse_config,
    run_point,
    run_sweep,
    spectral_rows,
    write_metadata,
    write_rows_csv,
)
from .geometry import aperture_report
from .multi_user import sca_ao_multi_user, write_trace_csv

log = logging.getLogger("xlirs")


def _configs(args):
    if args.config:
        config, spec = parse_config(args.config, seed=args.seed)
    else:
        config, spec = load_config({}, seed=args.seed)
    changes = {}
    if getattr(args, "modes", None):
        changes["modes"] = tuple(m.strip() for m in args.modes.split(",") if m.strip())
    if getattr(args, "m_list", None):
        changes["m_list"] = tuple(int(m) for m in args.m_list.split(","))
    if getattr(args, "realizations", None):
        changes["realizations"] = args.realizations
    if getattr(args, "out", None):
        changes["output"] = args.out
    if changes:
        spec = SweepSpec(**{**asdict(spec), **changes})
    return config, spec


def cmd_sweep(args) -> int:
    config, spec = _configs(args)

    def progress(rec):
        log.info("x_I=%6.1f M=%3d  %.2fs %s", rec.x_I, rec.M, rec.wall_time, rec.error)

    records = run_sweep(config, spec, workers=args.workers, progress=progress)
    out = Path(spec.output)
    emit_csv(records, out, include_timing=args.timing)
    write_metadata(config, spec, out.with_suffix(".meta.json"))
    failed = sum(1 for r in records if r.error)
    print(f"wrote {len(records)} records to {out}" + (f" ({failed} failed)" if failed else ""))
    return 0


def cmd_solve(args) -> int:
    config, spec = _configs(args)
    M = args.m or config.bs_antennas
    modes = spec.modes if args.modes else MODES
    rec = run_point(config, args.x_irs, M, modes, spec.seed, spec.realizations, spec.user_radius_m)
    if rec.error:
        raise RuntimeError(rec.error)
    cfg = config.with_irs_at(args.x_irs).replace(bs_antennas=M)
    if args.dump_channels:
        dump_channels_csv(channels_for(cfg), args.dump_channels)
    if args.trace:
        write_trace_csv(sca_ao_multi_user(channels_for(cfg), cfg), args.trace)
    result = {k: v for k, v in vars(rec).items() if v is not None and k != "error"}
    result["user_positions"] = [list(p) for p in cfg.user_positions]
    print(json.dumps(result, indent=2, default=lambda o: o.item() if isinstance(o, np.generic) else str(o)))
    return 0


def cmd_edof(args) -> int:
    config, spec = _configs(args)
    if args.m:
        config = config.replace(bs_antennas=args.m)
    rows = spectral_rows(config, spec)
    if args.out:
        write_rows_csv(rows, args.out)
    for row in rows:
        print(f"{row['x_I']:8.2f}  EDoF={row['edof']:.4f}  rank={row['numerical_rank']}")
    return 0


def cmd_apertures(args) -> int:
    config, _ = _configs(args)
    rep = aperture_report(config)
    print(f"D_R = {rep.D_R:.6g} m")
    print(f"D_B = {rep.D_B:.6g} m")
    print(f"D_U = {rep.D_U:.6g} m")
    print(f"Z_U = 2 (D_R + D_U)^2 / lambda = {rep.Z_U:.1f} m")
    print(f"Z_B = 2 (D_R + D_B)^2 / lambda = {rep.Z_B:.1f} m")
    print(f"Z_B (sum of squares) = 2 (D_R^2 + D_B^2) / lambda = {rep.Z_B_sum_of_squares:.1f} m")
    print("note: the tabulated 272 m matches the sum-of-squares form, not 2 (D_R + D_B)^2 / lambda")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlirs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="YAML config file (built-in defaults when omitted)")
        p.add_argument("--seed", type=int, help="seed for the user placement")

    p = sub.add_parser("sweep", help="run the IRS location sweep and write CSV")
    common(p)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--modes", help=f"comma separated subset of {','.join(MODES)}")
    p.add_argument("--m-list", dest="m_list", help="comma separated BS antenna counts")
    p.add_argument("--realizations", type=int, help="user placements averaged for the multi-user mean")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include the wall_time column")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve", help="evaluate a single IRS location")
    common(p)
    p.add_argument("--x-irs", dest="x_irs", type=float, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--modes")
    p.add_argument("--realizations", type=int)
    p.add_argument("--trace", help="write the SCA convergence trace CSV here")
    p.add_argument("--dump-channels", dest="dump_channels", help="write G and r_k as CSV here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("edof", help="EDoF and eigen diagnostics along the sweep grid")
    common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--out", help="diagnostic CSV path")
    p.set_defaults(func=cmd_edof)

    p = sub.add_parser("report-apertures", help="apertures and Rayleigh distances")
    common(p)
    p.set_defaults(func=cmd_apertures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
