"""``squeezer-sim`` command line.

Exit status: 0 success, 2 usage error, 3 configuration error, 4 physics
domain error (non-physical pair, above threshold, ...).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, reporting
from .budget import LossBudget
from .config import RunConfig, load_config, parse_band, parse_onoff
from .control import (
    CCB_OFFSET,
    PDH_MC532_MODULATION,
    loop_suppression,
    lo_phase_trace,
    pdh_trace,
    pump_phase_trace,
    residual_jitter,
    synthetic_phase_noise,
)
from .detection import MainsSpec, synthesize_spectrum
from .errors import ConfigError, SqueezerError
from .opo import OpoParams, spectrum_source

log = logging.getLogger("squeezer_sim")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_PHYSICS = 0, 2, 3, 4


def _config(args) -> RunConfig:
    return load_config(args.config)


def _plots_enabled(args, cfg=None):
    if args.plot is not None:
        return parse_onoff(args.plot, "--plot")
    return cfg.plots if cfg is not None else True


def cmd_spectrum(args):
    cfg = _config(args)
    if cfg.opo is None:
        raise ConfigError("opo", "spectrum needs an [opo] section")
    band = parse_band(args.band, "--band") if args.band else cfg.band
    ppd = args.points_per_decade or cfg.points_per_decade
    mains = parse_onoff(args.mains, "--mains") if args.mains else cfg.mains
    dark = parse_onoff(args.dark_noise, "--dark-noise") if args.dark_noise else cfg.include_dark_noise
    fmt = args.format or cfg.format

    traces = synthesize_spectrum(spectrum_source(cfg.opo), cfg.homodyne, band, ppd,
                                 mains=MainsSpec() if mains else None, include_dark_noise=dark)
    params = {
        "scenario": cfg.name,
        "x": f"{cfg.opo.x:.6g}",
        "eta_esc": f"{cfg.opo.eta_esc:.6g}",
        "gamma_rad_per_s": f"{cfg.opo.gamma:.6g}",
        "detection_efficiency": f"{traces[0].metadata['detection_efficiency']:.6g}",
        "dark_clearance_db": cfg.homodyne.dark_clearance_db,
        "dark_noise": "on" if dark else "off",
        "band_hz": f"{band[0]:g}:{band[1]:g}",
        "points_per_decade": ppd,
        "mains": "on" if mains else "off",
        "levels": "dB re shot noise",
    }
    out = Path(args.out)
    if fmt == "csv":
        path = reporting.write_text(out / "spectrum.csv", reporting.spectrum_csv(traces, params))
    else:
        path = reporting.write_text(out / "spectrum.json", reporting.spectrum_doc(traces, params))
    report = reporting.build_report(cfg)
    reporting.write_text(out / "run_report.json", reporting.render_json(report))
    if _plots_enabled(args, cfg):
        from .plotting import plot_spectrum
        plot_spectrum(traces, out / "spectrum.png", title=f"{cfg.name}: homodyne noise spectra")
    print(f"wrote {path} ({len(traces[0].frequency)} rows)")
    return EXIT_OK


def cmd_fit(args):
    extra = [float(v) for v in args.extra_loss.split(",")] if args.extra_loss else []
    budget = None
    if args.budget == "default":
        from .budget import default_detector_budget
        budget = default_detector_budget()
    report = reporting.fit_report(args.sq_db, args.anti_db, args.eta_bhd, extra, budget,
                                  args.dark_clearance)
    report = reporting._clean(report)
    fmt = args.format or "csv"
    text = reporting.render_json(report) if fmt == "doc" else reporting.render_text(report)
    if args.out:
        name = "fit.json" if fmt == "doc" else "fit.txt"
        reporting.write_text(Path(args.out) / name, text)
    sys.stdout.write(text)
    return EXIT_OK


def _linspace_arg(text, default, path):
    if not text:
        return default
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(path, f"expected LO:HI, got {text!r}") from None
    return lo, hi


def cmd_errorsignal(args):
    cfg = _config(args)
    sel = args.selector
    n = args.points
    if sel == "pdh":
        if args.cavity not in cfg.cavities:
            raise ConfigError("--cavity", f"unknown cavity {args.cavity!r}; have {sorted(cfg.cavities)}")
        entry = cfg.cavities[args.cavity]
        from .cavity import linewidth_fwhm
        fwhm = linewidth_fwhm(entry.params)
        mod = args.mod_freq or entry.pdh_modulation or PDH_MC532_MODULATION
        lo, hi = _linspace_arg(args.sweep, (-1.5 * mod, 1.5 * mod), "--sweep")
        trace = pdh_trace(entry.params, np.linspace(lo, hi, n), mod, args.mod_index)
        trace.metadata["fwhm_hz"] = fwhm
    elif sel == "pump-phase":
        opo = cfg.opo
        if opo is None:
            raise ConfigError("opo", "pump-phase error signal needs an [opo] section")
        if args.x is not None:
            opo = OpoParams(args.x, opo.gamma, opo.eta_esc)
        loop = cfg.loops.get("pump_phase")
        offset = loop.modulation_frequency if loop else CCB_OFFSET
        harmonic = args.demod_harmonic or (loop.demod_harmonic if loop else 2)
        lo, hi = _linspace_arg(args.sweep, (-math.pi, math.pi), "--sweep")
        trace = pump_phase_trace(opo, np.linspace(lo, hi, n), offset, harmonic, args.demod_phase)
    else:
        loop = cfg.loops.get("lo_phase")
        offset = loop.modulation_frequency if loop else CCB_OFFSET
        lo, hi = _linspace_arg(args.sweep, (-math.pi, math.pi), "--sweep")
        trace = lo_phase_trace(np.linspace(lo, hi, n), offset, args.demod_phase or 0.0)
    out = Path(args.out)
    path = reporting.write_text(out / f"errorsignal_{sel}.csv", reporting.trace_csv(trace))
    if _plots_enabled(args, cfg):
        from .plotting import plot_error_signal
        plot_error_signal(trace, out / f"errorsignal_{sel}.png", title=f"{sel} error signal")
    state = "" if trace.discriminating else " (no discrimination: flat zero trace)"
    print(f"wrote {path}{state}")
    return EXIT_OK


def cmd_loop(args):
    cfg = _config(args)
    if args.name not in cfg.loops:
        raise ConfigError("loop", f"unknown loop {args.name!r}; have {sorted(cfg.loops)}")
    loop = cfg.loops[args.name]
    band = parse_band(args.band, "--band") if args.band else (
        cfg.noise["band"] if cfg.noise else (10.0, 1e5))
    ppd = args.points_per_decade or 50
    n = int(round(math.log10(band[1] / band[0]) * ppd)) + 1
    freqs = np.logspace(math.log10(band[0]), math.log10(band[1]), n)
    sup = loop_suppression(loop, freqs)
    lines = [f"# generated {reporting.timestamp()}",
             f"# params: loop={args.name}; unity_gain_hz={loop.unity_gain_frequency:g}; "
             f"filter_slope={loop.filter_slope}",
             "frequency_hz,suppression"]
    lines += [f"{f:.10g},{s:.10g}" for f, s in zip(freqs, sup)]
    out = Path(args.out)
    reporting.write_text(out / f"loop_{args.name}.csv", "\n".join(lines) + "\n")
    if _plots_enabled(args, cfg):
        from .plotting import plot_loop
        plot_loop(freqs, sup, out / f"loop_{args.name}.png", loop.unity_gain_frequency,
                  title=f"{args.name} loop suppression")
    if cfg.noise:
        noise = synthetic_phase_noise(cfg.noise["white_rad_per_rthz"], cfg.noise["corner_hz"])
        jitter = residual_jitter(noise, loop, band)
        print(f"residual_jitter_rad = {jitter:.6g}  (synthetic free-running noise)")
    print(f"wrote {out / f'loop_{args.name}.csv'}")
    return EXIT_OK


def cmd_report(args):
    cfg = _config(args)
    report = reporting.build_report(cfg)
    out = Path(args.out)
    stamp = reporting.timestamp()
    reporting.write_text(out / "report.json", reporting.render_json(report, stamp))
    reporting.write_text(out / "report.txt", reporting.render_text(report, stamp))
    fmt = args.format or "doc"
    sys.stdout.write(reporting.render_json(report, stamp) if fmt == "doc"
                     else reporting.render_text(report, stamp))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="squeezer-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", default="geo600",
                           help="config file path or scenario name (default: geo600)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "doc"))
        p.add_argument("--plot", choices=("on", "off"), default=None, help="write PNG figures")

    p = sub.add_parser("spectrum", help="synthesize homodyne noise spectra")
    common(p)
    p.add_argument("--band", help="LO:HI in Hz")
    p.add_argument("--points-per-decade", type=int)
    p.add_argument("--mains", choices=("on", "off"))
    p.add_argument("--dark-noise", choices=("on", "off"))
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit", help="infer loss and squeezing from measured dB levels")
    p.add_argument("sq_db", type=float)
    p.add_argument("anti_db", type=float)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "doc"))
    p.add_argument("--eta-bhd", type=float, default=0.95)
    p.add_argument("--extra-loss", default="0.10,0.15", help="comma-separated extra losses")
    p.add_argument("--budget", choices=("none", "default"), default="none")
    p.add_argument("--dark-clearance", type=float, default=None,
                   help="remove dark noise (dB clearance) before fitting")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("errorsignal", help="sweep a lock error signal")
    common(p)
    p.add_argument("selector", choices=("pdh", "pump-phase", "lo-phase"))
    p.add_argument("--cavity", default="mc532")
    p.add_argument("--sweep", help="LO:HI in Hz (pdh) or rad (phase locks)")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--mod-freq", type=float)
    p.add_argument("--mod-index", type=float, default=0.5)
    p.add_argument("--demod-harmonic", type=int, choices=(1, 2))
    p.add_argument("--demod-phase", type=float)
    p.add_argument("--x", type=float, help="override normalized pump amplitude")
    p.set_defaults(func=cmd_errorsignal)

    p = sub.add_parser("loop", help="loop suppression and residual jitter")
    common(p)
    p.add_argument("name")
    p.add_argument("--band", help="LO:HI in Hz")
    p.add_argument("--points-per-decade", type=int)
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("report", help="aggregate report for a configuration")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SqueezerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
