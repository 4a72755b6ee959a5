"""Command-line entry point ``aoa-lab``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from .array_model import ArrayGeometry, array_factor, hpbw
from .chebyshev import build_beam_grid, chebyshev_weights, steer
from .errors import ConfigError, NumericalError
from .experiments import SCENARIOS, emit_csv, load_config, run_experiment

log = logging.getLogger("aoa_lab")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aoa-lab", description="Switched-beam AoA estimation simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a Monte Carlo scenario")
    run.add_argument("scenario", choices=sorted(SCENARIOS))
    run.add_argument("--config", help="YAML configuration file")
    run.add_argument("--snr", type=_float_list, help="comma-separated SNR list in dB")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (default: results/<scenario>)")
    run.add_argument("--sources", type=_float_list, help="comma-separated source azimuths in degrees")
    run.add_argument("--snapshots", type=_int_list, help="comma-separated snapshot counts")
    run.add_argument("--workers", type=int)

    pat = sub.add_parser("pattern", help="emit a steered beam-pattern CSV")
    pat.add_argument("--m", type=int, required=True, help="number of ULA elements")
    pat.add_argument("--sll", type=float, help="Chebyshev sidelobe level in dB (omit for uniform)")
    pat.add_argument("--steer", type=float, default=90.0, help="steering angle in degrees")
    pat.add_argument("--spacing", type=float, default=0.5, help="element spacing in wavelengths")
    pat.add_argument("--step", type=float, default=0.1, help="grid step in degrees")
    pat.add_argument("--out", help="output file (default: stdout)")

    grid = sub.add_parser("grid", help="emit the switched-beam grid table")
    grid.add_argument("--m", type=int, required=True, help="number of ULA elements")
    grid.add_argument("--sll", type=float, help="Chebyshev sidelobe level in dB (omit for uniform)")
    grid.add_argument("--spacing", type=float, default=0.5)
    grid.add_argument("--beams", type=int, help="override the number of beams")
    grid.add_argument("--out", help="output file (default: stdout)")
    return parser


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _cmd_run(args) -> int:
    overrides = {
        "snr_db": args.snr,
        "trials": args.trials,
        "seed": args.seed,
        "sources": args.sources,
        "snapshots": args.snapshots,
        "workers": args.workers,
        "out": args.out,
    }
    cfg = load_config(args.scenario, args.config, overrides)
    out = cfg.out or f"results/{cfg.scenario}"
    result = run_experiment(cfg)
    try:
        files = emit_csv(result.records, result.summary, out, result.spectra)
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    for row in result.summary:
        print(
            f"N={row['snapshots']:<5d} SNR={row['snr_db']:>6g} dB  {row['estimator']:<8s} "
            f"PFR {row['mean_pfr_db']:6.2f} +/- {row['std_pfr_db']:5.2f} dB  "
            f"detect {row['detection_rate']:.2f}  resolve {row['resolution_rate']:.2f}"
        )
    log.info("wrote %d files to %s", len(files), out)
    return 0


def _taper(m: int, sll):
    return chebyshev_weights(m, sll) if sll is not None else np.ones(m)


def _cmd_pattern(args) -> int:
    geom = ArrayGeometry.ula(args.m, args.spacing)
    w = steer(_taper(args.m, args.sll), geom, np.deg2rad(args.steer))
    grid = np.deg2rad(np.arange(0.0, 180.0 + args.step / 2, args.step))
    spec = array_factor(geom, w, grid)
    fh = _open_out(args.out)
    try:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "power_db"])
        for a, p in zip(spec.angles_deg, spec.normalized_db()):
            writer.writerow([f"{a:.6g}", f"{p:.6f}"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    log.info("HPBW %.3f deg", hpbw(geom, w))
    return 0


def _cmd_grid(args) -> int:
    geom = ArrayGeometry.ula(args.m, args.spacing)
    bg = build_beam_grid(geom, args.sll, n_beams=args.beams)
    fh = _open_out(args.out)
    try:
        writer = csv.writer(fh)
        writer.writerow(["beam", "steer_deg", "hpbw_deg"])
        for k, (phi, w) in enumerate(bg.beams):
            try:
                width = f"{hpbw(geom, w):.4f}"
            except ValueError:
                width = "nan"
            writer.writerow([k, f"{np.rad2deg(phi):.6g}", width])
    finally:
        if fh is not sys.stdout:
            fh.close()
    log.info("K=%d beams, reference HPBW %.3f deg", bg.K, bg.hpbw_deg)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"run": _cmd_run, "pattern": _cmd_pattern, "grid": _cmd_grid}
    try:
        return handlers[args.command](args)
    except NumericalError as exc:
        print(f"aoa-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"aoa-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
