"""Plane-wave, single-longitudinal-mode resonator optics.

Mirror reflectivities are power values.  A standing-wave cavity is described
by its one-way optical path; a ring (traveling-wave) cavity by its full
round-trip path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.constants import c as C0

from .errors import DomainError, PerfectCavityError

KTP_INDEX_1064 = 1.83
WAVELENGTH = 1064e-9


@dataclass(frozen=True)
class CavityParams:
    r1: float
    r2: float
    segments: Tuple[Tuple[float, float], ...] = field(default=((0.5, 1.0),))
    round_trip_loss: float = 0.0
    traveling_wave: bool = False

    def __post_init__(self):
        for name in ("r1", "r2"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")
        if self.r1 == 1.0 and self.r2 == 1.0:
            raise PerfectCavityError("at least one mirror must be partially transmissive")
        if not 0.0 <= self.round_trip_loss < 1.0:
            raise DomainError(f"round_trip_loss must lie in [0, 1), got {self.round_trip_loss}")
        segs = tuple((float(length), float(n)) for length, n in self.segments)
        if not segs:
            raise DomainError("cavity needs at least one segment")
        for length, n in segs:
            if not length > 0:
                raise DomainError(f"segment length must be positive, got {length}")
            if not n >= 1:
                raise DomainError(f"refractive index must be >= 1, got {n}")
        object.__setattr__(self, "segments", segs)

    @property
    def optical_path(self):
        """Sum of n*L over the segments (one-way, or round trip for a ring)."""
        return sum(length * n for length, n in self.segments)

    @property
    def rho(self):
        """Round-trip field amplitude factor."""
        return math.sqrt(self.r1 * self.r2 * (1.0 - self.round_trip_loss))


@dataclass(frozen=True)
class CavityResponse:
    detuning: np.ndarray
    reflection: np.ndarray
    transmission: np.ndarray
    intracavity: np.ndarray  # circulating field per unit input field

    @property
    def absorbed(self):
        return 1.0 - np.abs(self.reflection) ** 2 - np.abs(self.transmission) ** 2


def finesse(c: CavityParams) -> float:
    rho = c.rho
    if rho >= 1.0:
        raise PerfectCavityError("round-trip amplitude is 1; finesse is infinite")
    return math.pi * math.sqrt(rho) / (1.0 - rho)


def fsr(c: CavityParams) -> float:
    if c.traveling_wave:
        return C0 / c.optical_path
    return C0 / (2.0 * c.optical_path)


def linewidth_fwhm(c: CavityParams) -> float:
    return fsr(c) / finesse(c)


def fsr_from_linewidth(finesse_value, fwhm):
    """FSR implied by a measured finesse and FWHM linewidth."""
    if finesse_value <= 0 or fwhm <= 0:
        raise DomainError("finesse and linewidth must be positive")
    return finesse_value * fwhm


def amplitude_decay_rate(c: CavityParams) -> float:
    """Cavity amplitude decay rate gamma = pi * FWHM in rad/s."""
    return math.pi * linewidth_fwhm(c)


def round_trip_for_finesse(finesse_value):
    """Round-trip amplitude factor rho giving the requested finesse."""
    if finesse_value <= 0:
        raise DomainError("finesse must be positive")
    # pi*sqrt(rho)/(1-rho) = F  ->  F*s^2 + pi*s - F = 0 with s = sqrt(rho)
    s = (-math.pi + math.sqrt(math.pi**2 + 4 * finesse_value**2)) / (2 * finesse_value)
    return s * s


def response(c: CavityParams, detuning) -> CavityResponse:
    """Complex reflection, transmission and circulating field vs detuning in Hz.

    Reflection sign convention: the prompt reflection off the coupler is
    ``-sqrt(r1)``; the cavity leakage field enters with a positive sign.
    """
    det = np.asarray(detuning, dtype=float)
    phi = 2.0 * np.pi * det / fsr(c)
    ra1, ra2 = math.sqrt(c.r1), math.sqrt(c.r2)
    ta1, ta2 = math.sqrt(1.0 - c.r1), math.sqrt(1.0 - c.r2)
    single_pass = (1.0 - c.round_trip_loss) ** 0.25
    prop = np.exp(-1j * phi)
    denom = 1.0 - c.rho * prop
    circ = ta1 / denom
    refl = -ra1 + ta1 * ta1 * ra2 * single_pass**2 * prop / denom
    trans = ta1 * ta2 * single_pass * np.exp(-0.5j * phi) / denom
    return CavityResponse(det, refl, trans, circ)


def reflection(c: CavityParams, detuning):
    return response(c, detuning).reflection


def co_resonance_offset(c: CavityParams, delta_optical_path, wavelength=WAVELENGTH):
    """Frequency shift putting the orthogonal polarization on resonance.

    ``delta_optical_path`` is the one-way optical path difference between the
    two polarizations.  The result lies in (-FSR/2, FSR/2].
    """
    if abs(delta_optical_path) >= c.optical_path:
        raise DomainError("path difference must be smaller than the optical path")
    free = fsr(c)
    raw = -(delta_optical_path / wavelength) * free * 2.0
    wrapped = raw - free * math.floor(raw / free + 0.5)
    if math.isclose(wrapped, -free / 2.0, rel_tol=1e-12, abs_tol=1e-9):
        wrapped = free / 2.0
    if abs(wrapped) < 1e-9 * free:
        wrapped = 0.0
    return wrapped


def co_resonance_phase(c: CavityParams, offset):
    """Round-trip phase (rad, modulo 2*pi) compensated by a frequency offset."""
    return 2.0 * math.pi * (offset / fsr(c))


def squeezing_resonator(crystal_length=10e-3, air_gap=20e-3, crystal_index=KTP_INDEX_1064,
                        coupler_reflectivity=0.92, end_reflectivity=1.0, round_trip_loss=0.0):
    """Hemilithic standing-wave resonator: coated crystal face plus external coupler."""
    return CavityParams(
        r1=coupler_reflectivity,
        r2=end_reflectivity,
        segments=((crystal_length, crystal_index), (air_gap, 1.0)),
        round_trip_loss=round_trip_loss,
    )


def ring_from_finesse(finesse_value, fwhm):
    """Impedance-matched ring cavity reproducing a measured finesse and linewidth."""
    rho = round_trip_for_finesse(finesse_value)
    path = C0 / fsr_from_linewidth(finesse_value, fwhm)
    return CavityParams(r1=rho, r2=rho, segments=((path, 1.0),), traveling_wave=True)
