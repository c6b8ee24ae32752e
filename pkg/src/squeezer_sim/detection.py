"""Balanced homodyne detector: efficiency, electronic dark noise and trace synthesis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .quantum_state import (
    QuadraturePair,
    apply_loss,
    apply_phase_jitter,
    check_efficiency,
    variance_to_db,
)

# visibility**2 * QE reproduces the 95 % homodyne efficiency
DEFAULT_PD_QE = 0.977


@dataclass(frozen=True)
class HomodyneParams:
    lo_power: float = 500e-6
    visibility: float = 0.986
    pd_quantum_efficiency: float = DEFAULT_PD_QE
    dark_clearance_db: float = 17.0

    def __post_init__(self):
        check_efficiency(self.visibility, "visibility")
        check_efficiency(self.pd_quantum_efficiency, "pd_quantum_efficiency")
        if not self.lo_power > 0:
            raise DomainError("lo_power must be positive")
        if math.isnan(self.dark_clearance_db) or self.dark_clearance_db == -math.inf:
            raise DomainError("dark_clearance_db must be a real number or +inf")


@dataclass(frozen=True)
class MainsSpec:
    """Cosmetic mains-pickup lines added on top of every trace."""

    frequencies: Sequence[float] = (50.0, 100.0)
    height_db: float = 10.0


@dataclass
class SpectrumTrace:
    frequency: np.ndarray
    level_db: np.ndarray
    label: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequency = np.asarray(self.frequency, dtype=float)
        self.level_db = np.asarray(self.level_db, dtype=float)
        if self.frequency.shape != self.level_db.shape:
            raise DomainError("frequency and level arrays differ in length")
        if np.any(np.diff(self.frequency) <= 0):
            raise DomainError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(self.level_db)):
            raise DomainError("levels must be finite")


def detection_efficiency(h: HomodyneParams) -> float:
    """Mode overlap (visibility squared) times photodiode quantum efficiency."""
    return h.visibility**2 * h.pd_quantum_efficiency


def dark_noise_variance(clearance_db):
    """Electronic noise power in shot-noise units."""
    if clearance_db == math.inf:
        return 0.0
    return 10.0 ** (-clearance_db / 10.0)


def add_dark_noise(v, clearance_db):
    """Add frequency-flat electronic noise to an optical variance (true shot units)."""
    arr = np.asarray(v, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("variance must be positive")
    out = arr + dark_noise_variance(clearance_db)
    return float(out) if out.ndim == 0 else out


def remove_dark_noise(v_apparent, clearance_db, shot_referenced=True):
    """Inverse of :func:`add_dark_noise`.

    With ``shot_referenced`` the input is a ratio to a shot-noise trace that
    itself contains the dark noise, which is how homodyne spectra are
    normally normalised.  Otherwise it is taken in true shot units.
    """
    d = dark_noise_variance(clearance_db)
    v = v_apparent * (1.0 + d) - d if shot_referenced else v_apparent - d
    if not v > 0:
        raise DomainError("apparent level lies below the dark-noise floor")
    return v


def _log_grid(band, points_per_decade):
    f_lo, f_hi = float(band[0]), float(band[1])
    if not 0 < f_lo < f_hi:
        raise DomainError(f"invalid band {band}")
    if int(points_per_decade) < 1:
        raise DomainError("points_per_decade must be >= 1")
    n = int(round(math.log10(f_hi / f_lo) * points_per_decade)) + 1
    return np.logspace(math.log10(f_lo), math.log10(f_hi), n)


def synthesize_spectrum(source: Callable[[float], QuadraturePair], h: HomodyneParams, band,
                        points_per_decade=50, mains: Optional[MainsSpec] = None,
                        include_dark_noise=True, theta_rms=0.0, ripple_db=0.0, seed=0):
    """Shot, squeezed and anti-squeezed noise traces in dB relative to true shot noise.

    Per frequency: jitter (optional), detection efficiency, then dark noise.
    Mains lines and estimation ripple are synthetic and recorded in each
    trace's ``metadata["artifacts"]``.
    """
    freqs = _log_grid(band, points_per_decade)
    artifacts = []
    if mains is not None:
        extra = [float(f) for f in mains.frequencies if freqs[0] <= f <= freqs[-1]]
        for f in extra:
            near = np.isclose(freqs, f, rtol=1e-9, atol=0.0)
            freqs[near] = f
        freqs = np.union1d(freqs, extra)
        artifacts += [{"kind": "mains", "frequency_hz": float(f), "height_db": mains.height_db}
                      for f in extra]

    eta = detection_efficiency(h)
    dark = dark_noise_variance(h.dark_clearance_db) if include_dark_noise else 0.0
    sq = np.empty_like(freqs)
    anti = np.empty_like(freqs)
    for i, f in enumerate(freqs):
        q = source(float(f))
        if theta_rms:
            q = apply_phase_jitter(q, theta_rms)
        q = apply_loss(q, eta)
        sq[i] = q.v_sq + dark
        anti[i] = q.v_anti + dark
    shot = np.full_like(freqs, 1.0 + dark)

    levels = [variance_to_db(v) for v in (shot, sq, anti)]
    if mains is not None:
        bump = np.isin(freqs, [a["frequency_hz"] for a in artifacts])
        levels = [lv + np.where(bump, mains.height_db, 0.0) for lv in levels]
    if ripple_db:
        rng = np.random.default_rng(seed)
        levels = [levels[0]] + [lv + rng.normal(0.0, ripple_db, lv.shape) for lv in levels[1:]]
        artifacts.append({"kind": "ripple", "sigma_db": ripple_db, "seed": seed})

    meta = {
        "detection_efficiency": eta,
        "dark_clearance_db": h.dark_clearance_db,
        "dark_noise_included": bool(include_dark_noise),
        "lo_power_w": h.lo_power,
        "theta_rms_rad": theta_rms,
        "points_per_decade": int(points_per_decade),
        "artifacts": artifacts,
    }
    labels = ("shot", "squeezed", "antisqueezed")
    return tuple(SpectrumTrace(freqs.copy(), lv, lab, dict(meta)) for lab, lv in zip(labels, levels))
