"""INI-style run configuration.

Sections mirror the library modules: ``[cavity.<name>]``, ``[opo]``,
``[homodyne]``, ``[measurement]``, ``[loop.<name>]``, ``[noise]``,
``[budget]``, ``[budget.extra]`` and ``[output]``.  Every validation failure
raises :class:`ConfigError` naming the offending ``section.key``.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import cavity as cav
from .budget import LossBudget, fit_eta_x
from .control import LoopConfig
from .detection import HomodyneParams, detection_efficiency
from .errors import ConfigError, SqueezerError
from .opo import OpoParams, pump_to_x

CONFIG_DIR_ENV = "SQUEEZER_SIM_CONFIG_DIR"


@dataclass
class CavityEntry:
    params: cav.CavityParams
    pdh_modulation: Optional[float] = None
    co_resonance_offset: Optional[float] = None


@dataclass
class RunConfig:
    name: str
    source: str
    raw: Dict[str, Dict[str, str]]
    cavities: Dict[str, CavityEntry] = field(default_factory=dict)
    opo: Optional[OpoParams] = None
    opo_cavity: Optional[str] = None
    homodyne: HomodyneParams = field(default_factory=HomodyneParams)
    measurement: Optional[Tuple[float, float]] = None
    measurement_dark_corrected: bool = False
    loops: Dict[str, LoopConfig] = field(default_factory=dict)
    noise: Optional[dict] = None
    eta_bhd: Optional[float] = None
    extra_losses: List[float] = field(default_factory=list)
    budget: LossBudget = field(default_factory=LossBudget)
    band: Tuple[float, float] = (10.0, 1e4)
    points_per_decade: int = 50
    mains: bool = False
    format: str = "csv"
    plots: bool = True
    include_dark_noise: bool = True


def parse_band(text, path="band"):
    try:
        lo, hi = (float(v) for v in str(text).split(":"))
    except ValueError:
        raise ConfigError(path, f"expected LO:HI in Hz, got {text!r}") from None
    if not 0 < lo < hi:
        raise ConfigError(path, f"need 0 < LO < HI, got {text!r}")
    return lo, hi


def parse_onoff(text, path):
    t = str(text).strip().lower()
    if t in ("on", "yes", "true", "1"):
        return True
    if t in ("off", "no", "false", "0"):
        return False
    raise ConfigError(path, f"expected on/off, got {text!r}")


class _Section:
    def __init__(self, name, data):
        self.name, self.data = name, data

    def path(self, key):
        return f"{self.name}.{key}"

    def has(self, key):
        return key in self.data

    def str(self, key, default=None):
        if key not in self.data:
            if default is None:
                raise ConfigError(self.path(key), "missing required value")
            return default
        return self.data[key].strip()

    def float(self, key, default=None):
        if key not in self.data:
            if default is None:
                raise ConfigError(self.path(key), "missing required value")
            return default
        try:
            v = float(self.data[key])
        except ValueError:
            raise ConfigError(self.path(key), f"not a number: {self.data[key]!r}") from None
        if math.isnan(v):
            raise ConfigError(self.path(key), "NaN is not allowed")
        return v

    def int(self, key, default=None):
        v = self.float(key, default)
        if v != int(v):
            raise ConfigError(self.path(key), f"expected an integer, got {v}")
        return int(v)

    def bool(self, key, default):
        if key not in self.data:
            return default
        return parse_onoff(self.data[key], self.path(key))

    def floats(self, key):
        try:
            return [float(v) for v in self.data[key].split(",") if v.strip()]
        except ValueError:
            raise ConfigError(self.path(key), f"expected comma-separated numbers") from None


def resolve_config_path(name_or_path) -> Path:
    """Existing file path, else ``<name>.cfg`` in the env config dir, else a shipped scenario."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    stem = p.name if p.suffix == ".cfg" else p.name + ".cfg"
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir and (Path(env_dir) / stem).is_file():
        return Path(env_dir) / stem
    shipped = resources.files("squeezer_sim") / "scenarios" / stem
    if shipped.is_file():
        return Path(str(shipped))
    raise ConfigError("config", f"no such config file or scenario: {name_or_path}")


def load_config(name_or_path) -> RunConfig:
    path = resolve_config_path(name_or_path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def _parse_cavity(sec: _Section) -> CavityEntry:
    traveling = sec.bool("traveling_wave", False)
    try:
        if sec.has("finesse"):
            if sec.has("r1") or sec.has("r2"):
                raise ConfigError(sec.path("finesse"), "give either finesse+fwhm_hz or r1/r2, not both")
            params = cav.ring_from_finesse(sec.float("finesse"), sec.float("fwhm_hz"))
            if not traveling:
                params = cav.CavityParams(params.r1, params.r2,
                                          ((params.optical_path / 2, 1.0),), 0.0, False)
        else:
            segs = []
            for i, item in enumerate(sec.str("segments").split(",")):
                try:
                    length, index = (float(v) for v in item.split(":"))
                except ValueError:
                    raise ConfigError(f"{sec.path('segments')}[{i}]",
                                      f"expected length_m:index, got {item.strip()!r}") from None
                segs.append((length, index))
            params = cav.CavityParams(sec.float("r1"), sec.float("r2"), tuple(segs),
                                      sec.float("round_trip_loss", 0.0), traveling)
    except SqueezerError as exc:
        raise ConfigError(sec.name, str(exc)) from None
    return CavityEntry(
        params,
        sec.float("pdh_modulation_hz") if sec.has("pdh_modulation_hz") else None,
        sec.float("co_resonance_offset_hz") if sec.has("co_resonance_offset_hz") else None,
    )


def parse_config(text, source="<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError("config", f"unreadable: {exc}") from None
    raw = {s: dict(parser[s]) for s in parser.sections()}
    sections = {s: _Section(s, d) for s, d in raw.items()}
    empty = lambda name: _Section(name, {})

    cfg = RunConfig(name=sections.get("scenario", empty("scenario")).str("name", Path(source).stem),
                    source=source, raw=raw)

    for sname, sec in sections.items():
        if sname.startswith("cavity."):
            cfg.cavities[sname.split(".", 1)[1]] = _parse_cavity(sec)

    if "homodyne" in sections:
        h = sections["homodyne"]
        try:
            cfg.homodyne = HomodyneParams(
                h.float("lo_power_w", 500e-6), h.float("visibility", 0.986),
                h.float("pd_quantum_efficiency", 0.977), h.float("dark_clearance_db", math.inf))
        except SqueezerError as exc:
            raise ConfigError("homodyne", str(exc)) from None
        cfg.include_dark_noise = h.bool("include_dark_noise", True)

    if "measurement" in sections:
        m = sections["measurement"]
        cfg.measurement = (m.float("sq_db"), m.float("anti_db"))
        cfg.measurement_dark_corrected = m.bool("dark_corrected", False)

    if "opo" in sections:
        cfg.opo, cfg.opo_cavity = _parse_opo(sections["opo"], cfg)

    for sname, sec in sections.items():
        if sname.startswith("loop."):
            lname = sname.split(".", 1)[1]
            try:
                cfg.loops[lname] = LoopConfig(
                    unity_gain_frequency=sec.float("unity_gain_hz"),
                    filter_slope=sec.int("filter_slope", 1),
                    modulation_frequency=sec.float("modulation_hz"),
                    demod_harmonic=sec.int("demod_harmonic", 1),
                    demod_phase=sec.float("demod_phase_rad") if sec.has("demod_phase_rad") else None,
                    name=lname,
                )
            except SqueezerError as exc:
                raise ConfigError(sname, str(exc)) from None

    if "noise" in sections:
        n = sections["noise"]
        cfg.noise = {
            "white_rad_per_rthz": n.float("white_rad_per_rthz"),
            "corner_hz": n.float("corner_hz", 0.0),
            "band": parse_band(n.str("band", "10:100e3"), n.path("band")),
        }

    if "budget" in sections:
        b = sections["budget"]
        cfg.eta_bhd = b.float("eta_bhd") if b.has("eta_bhd") else None
        cfg.extra_losses = b.floats("extra_loss") if b.has("extra_loss") else []
        for i, loss in enumerate(cfg.extra_losses):
            if not 0 <= loss <= 1:
                raise ConfigError(f"budget.extra_loss[{i}]", f"loss must lie in [0, 1], got {loss}")
    if "budget.extra" in sections:
        sec = sections["budget.extra"]
        try:
            cfg.budget = LossBudget([(k, sec.float(k)) for k in sec.data])
        except SqueezerError as exc:
            raise ConfigError("budget.extra", str(exc)) from None

    if "output" in sections:
        o = sections["output"]
        cfg.band = parse_band(o.str("band", "10:1e4"), o.path("band"))
        cfg.points_per_decade = o.int("points_per_decade", 50)
        if cfg.points_per_decade < 1:
            raise ConfigError(o.path("points_per_decade"), "must be >= 1")
        cfg.mains = o.bool("mains", False)
        cfg.plots = o.bool("plots", True)
        cfg.format = o.str("format", "csv")
        if cfg.format not in ("csv", "doc"):
            raise ConfigError(o.path("format"), f"expected csv or doc, got {cfg.format!r}")
    return cfg


def _parse_opo(sec: _Section, cfg: RunConfig):
    cav_name = sec.str("cavity")
    if cav_name not in cfg.cavities:
        raise ConfigError(sec.path("cavity"), f"unknown cavity block {cav_name!r}")
    gamma = cav.amplitude_decay_rate(cfg.cavities[cav_name].params)

    x_text, eta_text = sec.str("x", "fit"), sec.str("eta_esc", "1.0")
    fit = None
    if "fit" in (x_text, eta_text):
        if cfg.measurement is None:
            raise ConfigError(sec.path("x"), "'fit' requires a [measurement] section")
        try:
            clearance = cfg.homodyne.dark_clearance_db if cfg.measurement_dark_corrected else None
            fit = fit_eta_x(*cfg.measurement, dark_clearance_db=clearance)
        except SqueezerError as exc:
            raise ConfigError("measurement", str(exc)) from None
    if x_text == "fit":
        x = fit.strength
    elif x_text == "pump":
        try:
            x = pump_to_x(sec.float("pump_power_w"), sec.float("threshold_power_w"))
        except SqueezerError as exc:
            raise ConfigError(sec.path("x"), str(exc)) from None
    else:
        x = sec.float("x")
    if eta_text == "fit":
        eta_esc = fit.eta / detection_efficiency(cfg.homodyne)
        if eta_esc > 1:
            raise ConfigError(sec.path("eta_esc"),
                              "fitted total efficiency exceeds the detector efficiency")
    else:
        eta_esc = sec.float("eta_esc", 1.0)
    try:
        return OpoParams(x, gamma, eta_esc), cav_name
    except SqueezerError as exc:
        raise ConfigError("opo", str(exc)) from None
