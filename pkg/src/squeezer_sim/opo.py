"""Sub-threshold degenerate optical parametric oscillator."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AboveThresholdError, DomainError
from .quantum_state import QuadraturePair, check_efficiency


def _check_x(x):
    if not 0.0 <= x < 1.0:
        if x >= 1.0:
            raise AboveThresholdError(f"normalized pump amplitude x={x} is at or above threshold")
        raise DomainError(f"normalized pump amplitude must be >= 0, got {x}")
    return float(x)


@dataclass(frozen=True)
class OpoParams:
    """``x`` is sqrt(P_pump / P_threshold); ``gamma`` the amplitude decay rate in rad/s."""

    x: float
    gamma: float
    eta_esc: float = 1.0

    def __post_init__(self):
        _check_x(self.x)
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        check_efficiency(self.eta_esc, "eta_esc")

    @classmethod
    def from_pump_power(cls, pump_power, threshold_power, gamma, eta_esc=1.0):
        return cls(pump_to_x(pump_power, threshold_power), gamma, eta_esc)

    @classmethod
    def from_linewidth(cls, x, fwhm, eta_esc=1.0):
        return cls(x, math.pi * fwhm, eta_esc)


def pump_to_x(pump_power, threshold_power):
    if threshold_power <= 0 or pump_power < 0:
        raise DomainError("pump and threshold powers must be non-negative, threshold positive")
    return _check_x(math.sqrt(pump_power / threshold_power))


def parametric_gain(x, deamplification=False):
    """Classical seed (de-)amplification, 1/(1 -+ x)^2."""
    x = _check_x(x)
    return 1.0 / (1.0 + x) ** 2 if deamplification else 1.0 / (1.0 - x) ** 2


def x_from_gain(gain):
    """Invert the amplification factor; ``gain`` must be >= 1."""
    if not gain >= 1.0:
        raise DomainError(f"amplification gain must be >= 1, got {gain}")
    return 1.0 - 1.0 / math.sqrt(gain)


def spectrum_variances(p: OpoParams, omega):
    """Vectorised (v_sq, v_anti) at angular Fourier frequency ``omega``."""
    w2 = (np.asarray(omega, dtype=float) / p.gamma) ** 2
    depth = p.eta_esc * 4.0 * p.x
    v_sq = 1.0 - depth / ((1.0 + p.x) ** 2 + w2)
    v_anti = 1.0 + depth / ((1.0 - p.x) ** 2 + w2)
    return v_sq, v_anti


def squeezing_spectrum(p: OpoParams, omega) -> QuadraturePair:
    v_sq, v_anti = spectrum_variances(p, float(omega))
    return QuadraturePair(float(v_sq), float(v_anti), frequency=abs(float(omega)) / (2 * math.pi))


def spectrum_source(p: OpoParams):
    """Callable mapping Fourier frequency in Hz to the output QuadraturePair."""
    return lambda f: squeezing_spectrum(p, 2.0 * math.pi * f)


def audio_band_flatness(p: OpoParams, band, n_points=201):
    """Maximum relative deviation of v_sq over ``band`` (Hz) from its low-edge value.

    v_sq is monotone in |f|, so the band edges carry the extremum; the
    interior grid only guards that assumption.
    """
    f_lo, f_hi = float(band[0]), float(band[1])
    if not 0 <= f_lo <= f_hi:
        raise DomainError(f"invalid band {band}")
    if f_hi > p.gamma / (2 * math.pi * 10):
        raise DomainError("band upper edge exceeds a tenth of the cavity half-width")
    if f_lo == f_hi:
        return 0.0
    f = np.linspace(f_lo, f_hi, n_points)
    v_sq, _ = spectrum_variances(p, 2 * np.pi * f)
    return float(np.max(np.abs(v_sq - v_sq[0])) / v_sq[0])
