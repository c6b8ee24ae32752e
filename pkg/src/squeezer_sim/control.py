"""Error signals for the length and phase locks, and closed-loop residual noise.

Sign convention for every error signal: positive slope through the lock
point.  Traces are normalised to unit peak magnitude; single-point
evaluations return the raw (unnormalised) value.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import jv

from .cavity import CavityParams, reflection
from .errors import DomainError, NoDiscriminationError, NonIntegrableError
from .opo import OpoParams

PDH_MC532_MODULATION = 120e6
PDH_LO_MC_MODULATION = 76.5e6
CCB_OFFSET = 15.2e6
LENGTH_BEAM_OFFSET = 12.6e6


@dataclass(frozen=True)
class LoopConfig:
    unity_gain_frequency: float
    filter_slope: int = 1
    modulation_frequency: float = 1.0
    demod_harmonic: int = 1
    demod_phase: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if not self.unity_gain_frequency > 0:
            raise DomainError("unity_gain_frequency must be positive")
        if not self.modulation_frequency > 0:
            raise DomainError("modulation_frequency must be positive")
        if int(self.filter_slope) != self.filter_slope or self.filter_slope < 1:
            raise DomainError("filter_slope must be an integer >= 1")
        if self.demod_harmonic not in (1, 2):
            raise DomainError("demod_harmonic must be 1 or 2")


@dataclass
class ErrorSignalTrace:
    sweep: np.ndarray
    error: np.ndarray
    sweep_name: str
    sweep_unit: str
    discriminating: bool = True
    metadata: dict = field(default_factory=dict)

    @classmethod
    def normalized(cls, sweep, raw, sweep_name, sweep_unit, **metadata):
        raw = np.asarray(raw, dtype=float)
        peak = float(np.max(np.abs(raw))) if raw.size else 0.0
        if not np.all(np.isfinite(raw)):
            raise DomainError("error signal contains non-finite values")
        if peak < 1e-300:
            return cls(np.asarray(sweep, float), np.zeros_like(raw), sweep_name, sweep_unit,
                       discriminating=False, metadata=metadata)
        metadata["peak_raw"] = peak
        return cls(np.asarray(sweep, float), raw / peak, sweep_name, sweep_unit, True, metadata)

    def rows(self):
        return zip(self.sweep.tolist(), self.error.tolist())


# --- Pound-Drever-Hall ----------------------------------------------------

def pdh_error(c: CavityParams, detuning, mod_freq, mod_index=0.5):
    """Reflection PDH error signal with phase modulation at ``mod_freq``.

    Im{F(d) F*(d + fm) - F*(d) F(d - fm)} scaled by 2 J0 J1, using the cavity
    reflection F.  The sign makes the slope through resonance positive.
    """
    if not 0 < mod_index <= 1:
        raise DomainError("mod_index must lie in (0, 1]")
    d = np.asarray(detuning, dtype=float)
    f0 = reflection(c, d)
    fp = reflection(c, d + mod_freq)
    fm = reflection(c, d - mod_freq)
    scale = 2.0 * jv(0, mod_index) * jv(1, mod_index)
    out = scale * np.imag(f0 * np.conj(fp) - np.conj(f0) * fm)
    return float(out) if out.ndim == 0 else out


def pdh_trace(c: CavityParams, detunings, mod_freq, mod_index=0.5):
    return ErrorSignalTrace.normalized(
        detunings, pdh_error(c, detunings, mod_freq, mod_index), "detuning", "Hz",
        kind="pdh", modulation_frequency_hz=mod_freq, mod_index=mod_index)


# --- coherent control: pump phase ------------------------------------------

def _opo_sidebands(p: OpoParams, ccb_offset, pump_phase):
    """Reflected fields at +offset (seed) and -offset (idler) for a unit seed.

    Linearised single-ended OPO, a' = -g a + eps a^dag + sqrt(2g) a_in with
    eps = x g exp(2i*pump_phase); pump_phase is expressed in fundamental-wave
    radians, hence the factor 2.
    """
    g = p.gamma
    w = 2.0 * math.pi * ccb_offset
    phase = np.asarray(pump_phase, dtype=float)
    eps = p.x * g * np.exp(2j * phase)
    kg = math.sqrt(2.0 * g) * math.sqrt(p.eta_esc)
    a_plus = kg * (g - 1j * w) / ((g - 1j * w) ** 2 - (p.x * g) ** 2)
    a_minus = eps * np.conj(a_plus) / (g + 1j * w)
    return kg * a_plus - 1.0, kg * a_minus


def _beat(tones, harmonic):
    """Complex photocurrent amplitude at ``harmonic`` times the offset.

    ``tones`` maps frequency (in units of the offset) to field amplitude.
    """
    total = 0.0
    for fj, ej in tones.items():
        for fk, ek in tones.items():
            if fj - fk == harmonic:
                total = total + ej * np.conj(ek)
    return total


def pump_phase_error(p: OpoParams, ccb_offset, pump_phase, demod_harmonic=2, demod_phase=None):
    """Coherent-control error for the pump phase lock.

    Only the seed and the parametrically generated idler leave the cavity, so
    the photocurrent carries a beat at twice the offset and nothing at the
    offset itself.  With ``demod_phase=None`` the phase is chosen so that the
    lock point sits at ``pump_phase = 0`` with maximal positive slope.
    """
    if ccb_offset <= 0:
        raise DomainError("ccb_offset must be positive")
    plus, minus = _opo_sidebands(p, ccb_offset, pump_phase)
    beat = _beat({1: plus, -1: minus}, demod_harmonic)
    if demod_phase is None:
        ref_plus, ref_minus = _opo_sidebands(p, ccb_offset, 0.0)
        ref = _beat({1: ref_plus, -1: ref_minus}, demod_harmonic)
        demod_phase = math.pi / 2 - float(np.angle(ref)) if abs(ref) > 0 else 0.0
    out = np.real(beat * np.exp(1j * demod_phase)) * np.ones_like(np.asarray(pump_phase, float))
    return float(out) if out.ndim == 0 else out


def pump_phase_trace(p: OpoParams, phases, ccb_offset=CCB_OFFSET, demod_harmonic=2, demod_phase=None):
    trace = ErrorSignalTrace.normalized(
        phases, pump_phase_error(p, ccb_offset, phases, demod_harmonic, demod_phase),
        "pump_phase", "rad", kind="pump-phase", ccb_offset_hz=ccb_offset,
        demod_harmonic=demod_harmonic)
    return trace


# --- coherent control: LO phase --------------------------------------------

def lo_phase_error(lo_phase, ccb_offset=CCB_OFFSET, demod_phase=0.0, lock_phase=0.0,
                   control_amplitude=1.0):
    """Homodyne LO-phase error from demodulation at the control-beam offset.

    ``lock_phase`` is the LO angle of the squeezed quadrature.  With
    ``demod_phase = 0`` the zero sits on the squeezed quadrature; ``-pi/2``
    moves it to the anti-squeezed one.
    """
    if ccb_offset <= 0:
        raise DomainError("ccb_offset must be positive")
    if not control_amplitude > 0:
        raise NoDiscriminationError("control field amplitude is zero")
    out = control_amplitude * np.sin(np.asarray(lo_phase, float) - lock_phase + demod_phase)
    return float(out) if out.ndim == 0 else out


def lo_lock_angle(demod_phase=0.0):
    """LO angle, measured from the squeezed quadrature, held by the loop."""
    return -demod_phase


def lo_phase_trace(phases, ccb_offset=CCB_OFFSET, demod_phase=0.0, lock_phase=0.0):
    return ErrorSignalTrace.normalized(
        phases, lo_phase_error(phases, ccb_offset, demod_phase, lock_phase),
        "lo_phase", "rad", kind="lo-phase", ccb_offset_hz=ccb_offset, demod_phase=demod_phase)


# --- loop noise suppression ------------------------------------------------

def open_loop_gain(loop: LoopConfig, f):
    f = np.asarray(f, dtype=float)
    n = int(loop.filter_slope)
    return (loop.unity_gain_frequency / f) ** n * np.exp(-0.5j * math.pi * n)


def loop_suppression(loop: LoopConfig, f):
    """|1 / (1 + G(f))| for an integrator-chain open-loop gain."""
    arr = np.asarray(f, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("frequency must be positive")
    with np.errstate(divide="ignore"):
        out = 1.0 / np.abs(1.0 + open_loop_gain(loop, arr))
    return float(out) if out.ndim == 0 else out


def synthetic_phase_noise(white=1e-4, corner=100.0):
    """Demo free-running phase noise in rad/sqrt(Hz): white floor with a 1/f corner.

    Synthetic; not taken from any measurement.
    """
    def asd(f):
        return white * np.sqrt(1.0 + corner / np.asarray(f, dtype=float))
    return asd


def residual_jitter(free_run_noise: Callable, loop: Optional[LoopConfig], band,
                    rtol=1e-8):
    """RMS phase (rad) of the loop-suppressed noise over ``band`` = (f_lo, f_hi) in Hz.

    Adaptive Gauss-Kronrod quadrature in log-frequency with a breakpoint at
    the unity-gain frequency.  ``loop=None`` means open loop.
    """
    f_lo, f_hi = float(band[0]), float(band[1])
    if not 0 < f_lo < f_hi:
        raise DomainError(f"invalid band {band}")
    if loop is not None and loop.filter_slope % 4 == 2 and f_lo <= loop.unity_gain_frequency <= f_hi:
        raise NonIntegrableError(
            "integrator chain of slope 2 (mod 4) has zero phase margin; "
            "suppression diverges at the unity-gain frequency")

    def integrand(u):
        f = math.exp(u)
        s = float(free_run_noise(f))
        if loop is not None:
            s *= loop_suppression(loop, f)
        return s * s * f

    a, b = math.log(f_lo), math.log(f_hi)
    points = None
    if loop is not None and f_lo < loop.unity_gain_frequency < f_hi:
        points = [math.log(loop.unity_gain_frequency)]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(integrand, a, b, points=points, limit=400,
                                      epsabs=0.0, epsrel=rtol)
        except integrate.IntegrationWarning as exc:
            raise NonIntegrableError(f"noise integral did not converge: {exc}") from exc
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise NonIntegrableError(f"noise model failed inside band: {exc}") from exc
    if not math.isfinite(value) or value < 0:
        raise NonIntegrableError("noise integral is not finite")
    return math.sqrt(value)
