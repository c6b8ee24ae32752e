"""Run reports and delimited output.

Every file carries at most one timestamp, always on its first line, so two
runs of the same configuration differ only there.
"""
from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import cavity as cav
from .budget import (
    equivalent_power_factor,
    fit_eta_r,
    fit_eta_x,
    project_detector,
    project_injected,
)
from .control import loop_suppression, residual_jitter, synthetic_phase_noise
from .detection import dark_noise_variance, detection_efficiency, remove_dark_noise
from .errors import InconsistentBudgetError, SqueezerError
from .opo import audio_band_flatness, parametric_gain, squeezing_spectrum
from .quantum_state import apply_phase_jitter, db_to_variance, variance_to_db

SPECTRUM_COLUMNS = ("frequency_hz", "shot_db", "squeezed_db", "antisqueezed_db")


def timestamp():
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _clean(value):
    """JSON-safe, rounded representation (floats to 12 significant digits)."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def _fit_section(fit):
    return {
        "model": fit.model,
        "eta": fit.eta,
        "loss_percent": 100.0 * fit.loss,
        "r": fit.r,
        "x": fit.x,
        "residual": fit.residual,
        "dark_corrected": fit.dark_corrected,
    }


def fit_report(sq_db, anti_db, eta_bhd=0.95, extra_losses=(0.10, 0.15), budget=None,
               dark_clearance_db=None):
    """Inference and projection for one measured pair, as a nested dict."""
    fit_r = fit_eta_r(sq_db, anti_db, dark_clearance_db)
    fit_x = fit_eta_x(sq_db, anti_db, dark_clearance_db)
    out = {
        "inputs": {"sq_db": sq_db, "anti_db": anti_db, "eta_bhd": eta_bhd,
                   "extra_loss": list(extra_losses), "dark_clearance_db": dark_clearance_db},
        "fit_pure": _fit_section(fit_r),
        "fit_opo": _fit_section(fit_x),
        "loss_percent": 100.0 * fit_r.loss,
    }
    if eta_bhd is None:
        return out
    try:
        injected = project_injected(fit_r, eta_bhd)
    except InconsistentBudgetError as exc:
        out["injected_db"] = f"unavailable: {exc}"
        out["projection"] = {"status": "missing", "reason": "detector efficiency exceeds fitted loss"}
        return out
    out["injected_db"] = injected
    out["pure_source_db"] = variance_to_db(fit_r.pure_sq_variance)
    projections = []
    for loss in extra_losses:
        detected = project_detector(injected, 1.0 - loss)
        projections.append({
            "extra_loss": loss,
            "detected_db": detected,
            "improvement_db": -detected,
            "equivalent_power_factor": equivalent_power_factor(max(-detected, 0.0)),
        })
    if budget:
        detected = project_detector(injected, budget)
        projections.append({
            "extra_loss": budget.loss,
            "budget": dict(budget.entries),
            "detected_db": detected,
            "improvement_db": -detected,
            "equivalent_power_factor": equivalent_power_factor(max(-detected, 0.0)),
        })
    if projections:
        out["projection"] = projections
    else:
        out["projection"] = {"status": "missing", "reason": "no extra loss scenario or budget given"}
    return out


def _cavity_section(entry):
    c = entry.params
    sec = {
        "traveling_wave": c.traveling_wave,
        "r1": c.r1,
        "r2": c.r2,
        "optical_path_m": c.optical_path,
        "finesse": cav.finesse(c),
        "fsr_hz": cav.fsr(c),
        "fwhm_hz": cav.linewidth_fwhm(c),
        "gamma_rad_per_s": cav.amplitude_decay_rate(c),
    }
    if entry.pdh_modulation is not None:
        sec["pdh_modulation_hz"] = entry.pdh_modulation
        sec["pdh_modulation_over_fwhm"] = entry.pdh_modulation / sec["fwhm_hz"]
    if entry.co_resonance_offset is not None:
        phase = cav.co_resonance_phase(c, entry.co_resonance_offset)
        sec["co_resonance_offset_hz"] = entry.co_resonance_offset
        sec["co_resonance_round_trip_phase_rad"] = phase
        sec["co_resonance_fraction_of_fsr"] = entry.co_resonance_offset / sec["fsr_hz"]
    return sec


def build_report(cfg):
    """Aggregate every module's numbers for one configuration."""
    rep = {"scenario": cfg.name, "generator": f"squeezer-sim {__version__}",
           "config_source": Path(cfg.source).name, "inputs": cfg.raw}

    rep["cavities"] = {name: _cavity_section(e) for name, e in sorted(cfg.cavities.items())}

    eta_det = detection_efficiency(cfg.homodyne)
    d = dark_noise_variance(cfg.homodyne.dark_clearance_db)
    rep["detection"] = {
        "detection_efficiency": eta_det,
        "visibility_limit": cfg.homodyne.visibility ** 2,
        "dark_clearance_db": cfg.homodyne.dark_clearance_db,
        "apparent_shot_db": variance_to_db(1.0 + d),
        "lo_power_w": cfg.homodyne.lo_power,
    }

    if cfg.opo is not None:
        p = cfg.opo
        q0 = squeezing_spectrum(p, 0.0)
        opo = {
            "x": p.x,
            "eta_esc": p.eta_esc,
            "gamma_rad_per_s": p.gamma,
            "parametric_gain": parametric_gain(p.x),
            "parametric_deamplification": parametric_gain(p.x, deamplification=True),
            "source_sq_db": q0.sq_db,
            "source_anti_db": q0.anti_db,
        }
        try:
            opo["flatness_10hz_10khz"] = audio_band_flatness(p, (10.0, 1e4))
        except SqueezerError as exc:
            opo["flatness_10hz_10khz"] = f"unavailable: {exc}"
        rep["opo"] = opo

    if cfg.measurement is not None:
        sq_db, anti_db = cfg.measurement
        rep["fit"] = fit_report(sq_db, anti_db, cfg.eta_bhd, cfg.extra_losses, cfg.budget)
        if math.isfinite(cfg.homodyne.dark_clearance_db):
            clr = cfg.homodyne.dark_clearance_db
            rep["fit"]["dark_noise_corrected"] = {
                "sq_db": variance_to_db(remove_dark_noise(db_to_variance(sq_db), clr)),
                "anti_db": variance_to_db(remove_dark_noise(db_to_variance(anti_db), clr)),
                "fit_pure": _fit_section(fit_eta_r(sq_db, anti_db, clr)),
            }
    else:
        rep["fit"] = {"status": "missing", "reason": "no [measurement] section"}
    if not isinstance(rep["fit"].get("projection"), list):
        rep["projection_status"] = "missing"

    if cfg.loops:
        loops = {}
        noise = None
        if cfg.noise is not None:
            noise = synthetic_phase_noise(cfg.noise["white_rad_per_rthz"], cfg.noise["corner_hz"])
        for name, loop in sorted(cfg.loops.items()):
            sec = {
                "unity_gain_hz": loop.unity_gain_frequency,
                "filter_slope": loop.filter_slope,
                "modulation_hz": loop.modulation_frequency,
                "demod_harmonic": loop.demod_harmonic,
                "suppression_at_100hz": loop_suppression(loop, 100.0),
                "suppression_at_1khz": loop_suppression(loop, 1e3),
            }
            if noise is not None:
                try:
                    jitter = residual_jitter(noise, loop, cfg.noise["band"])
                    sec["residual_jitter_rad_synthetic_noise"] = jitter
                    if cfg.opo is not None:
                        q = apply_phase_jitter(squeezing_spectrum(cfg.opo, 0.0), jitter)
                        sec["source_sq_db_with_jitter"] = q.sq_db
                except SqueezerError as exc:
                    sec["residual_jitter_rad_synthetic_noise"] = f"unavailable: {exc}"
            loops[name] = sec
        rep["loops"] = loops
        if noise is not None:
            rep["noise_model"] = dict(cfg.noise, label="synthetic")
    return _clean(rep)


def _flatten(d, prefix=""):
    for key, value in d.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, path + ".")
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            for i, item in enumerate(value):
                yield from _flatten(item, f"{path}[{i}].")
        else:
            yield path, value


def render_text(report, stamp=None):
    """Key-value text, one ``dotted.path = value`` line per leaf."""
    lines = [f"# generated {stamp or timestamp()}"]
    for key, value in _flatten(report):
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def render_json(report, stamp=None):
    doc = {"generated_utc": stamp or timestamp()}
    doc.update(report)
    return json.dumps(doc, indent=2) + "\n"


def render_kv_csv(report, stamp=None):
    buf = io.StringIO()
    buf.write(f"# generated {stamp or timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key, value in _flatten(report):
        w.writerow([key, value])
    return buf.getvalue()


def _header_params(params):
    return "; ".join(f"{k}={v}" for k, v in params.items())


def spectrum_csv(traces, params, stamp=None):
    """Three aligned traces as frequency_hz, shot_db, squeezed_db, antisqueezed_db.

    Line 1 holds the timestamp, line 2 the generator parameters, line 3 the
    artifact flags; the column header follows.
    """
    shot, sq, anti = traces
    buf = io.StringIO()
    buf.write(f"# generated {stamp or timestamp()}\n")
    buf.write(f"# params: {_header_params(params)}\n")
    buf.write(f"# artifacts: {json.dumps(_clean(shot.metadata['artifacts']))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPECTRUM_COLUMNS)
    for row in zip(shot.frequency, shot.level_db, sq.level_db, anti.level_db):
        w.writerow([f"{v:.10g}" for v in row])
    return buf.getvalue()


def spectrum_doc(traces, params, stamp=None):
    shot = traces[0]
    doc = {
        "generated_utc": stamp or timestamp(),
        "params": params,
        "units": {"frequency": "Hz", "level": "dB re shot noise"},
        "metadata": shot.metadata,
        "frequency_hz": shot.frequency.tolist(),
    }
    for t in traces:
        doc[f"{t.label}_db"] = t.level_db.tolist()
    return json.dumps(_clean(doc), indent=2) + "\n"


def read_spectrum_csv(path):
    """Parse a file written by :func:`spectrum_csv` into a dict of arrays."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader])
    return {name: data[:, i] for i, name in enumerate(header)}


def trace_csv(trace, stamp=None):
    """Error-signal trace as sweep_value, error_value rows."""
    buf = io.StringIO()
    buf.write(f"# generated {stamp or timestamp()}\n")
    meta = dict(trace.metadata, sweep=f"{trace.sweep_name} [{trace.sweep_unit}]",
                error="normalised to unit peak, positive slope at lock point",
                discriminating=trace.discriminating)
    buf.write(f"# params: {_header_params(_clean(meta))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{trace.sweep_name}_{trace.sweep_unit.lower()}", "error_au"])
    for s, e in trace.rows():
        w.writerow([f"{s:.10g}", f"{e:.10g}"])
    return buf.getvalue()


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
