import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.constants import c as C0
from scipy.optimize import brentq

from squeezer_sim import cavity as cav
from squeezer_sim.errors import DomainError, PerfectCavityError


def numeric_half_power_detuning(c):
    """Detuning where circulating power halves, by bracketed root search."""
    peak = abs(cav.response(c, 0.0).intracavity) ** 2
    f = lambda d: abs(cav.response(c, d).intracavity) ** 2 - peak / 2
    return brentq(f, 0.0, cav.fsr(c) / 2, xtol=1e-9, rtol=1e-14)


@pytest.fixture
def sqz():
    return cav.squeezing_resonator()


def test_finesse_squeezing_resonator(sqz):
    assert cav.finesse(sqz) == pytest.approx(75.349, abs=1e-3)


def test_finesse_near_perfect_mirrors():
    # rho = 1 - 1e-6 for two mirrors of power reflectivity 1 - 1e-6
    c = cav.CavityParams(1 - 1e-6, 1 - 1e-6)
    assert cav.finesse(c) == pytest.approx(math.pi * 1e6, rel=1e-5)
    one_sided = cav.CavityParams(1 - 2e-6, 1.0)
    assert cav.finesse(one_sided) == pytest.approx(math.pi * 1e6, rel=1e-5)


def test_finesse_low_reflectivity_against_airy_scan():
    c = cav.CavityParams(0.36, 1.0)
    # formula value; an exact Airy FWHM scan gives FSR/FWHM = 6.015
    assert cav.finesse(c) == pytest.approx(6.0837, abs=1e-4)
    numeric = cav.fsr(c) / (2 * numeric_half_power_detuning(c))
    assert numeric == pytest.approx(6.0148, abs=1e-3)


def test_finesse_monotone_in_round_trip_amplitude():
    values = [cav.finesse(cav.CavityParams(r, 1.0)) for r in np.linspace(0.1, 0.999, 50)]
    assert np.all(np.diff(values) > 0)


def test_invalid_cavities():
    with pytest.raises(DomainError):
        cav.CavityParams(1.0, 1.0)
    with pytest.raises(DomainError):
        cav.CavityParams(0.9, 1.0, segments=((0.0, 1.0),))
    with pytest.raises(DomainError):
        cav.CavityParams(0.9, 1.0, segments=((0.1, 0.9),))
    with pytest.raises(DomainError):
        cav.CavityParams(0.0, 1.0)


def test_perfect_cavity_error():
    with pytest.raises(PerfectCavityError):
        cav.CavityParams(1.0, 1.0 - 1e-300)


def test_fsr_textbook():
    assert cav.fsr(cav.CavityParams(0.9, 1.0, ((0.5, 1.0),))) == pytest.approx(299.792458e6)


def test_fsr_squeezing_resonator(sqz):
    assert cav.fsr(sqz) == pytest.approx(C0 / (2 * 0.0383))
    assert cav.fsr(sqz) == pytest.approx(3.914e9, rel=1e-3)


def test_fsr_traveling_wave():
    c = cav.CavityParams(0.9, 0.9, ((1.0, 1.0),), traveling_wave=True)
    assert cav.fsr(c) == pytest.approx(C0)


def test_mode_cleaner_consistency():
    assert cav.fsr_from_linewidth(555, 1.3e6) == pytest.approx(721.5e6)
    mc = cav.ring_from_finesse(555, 1.3e6)
    assert cav.finesse(mc) == pytest.approx(555, rel=1e-12)
    assert cav.linewidth_fwhm(mc) == pytest.approx(1.3e6, rel=1e-12)
    assert cav.fsr(mc) == pytest.approx(721.5e6, rel=1e-12)


def test_linewidths(sqz):
    assert cav.linewidth_fwhm(sqz) == pytest.approx(51.94e6, rel=1e-3)
    high = cav.CavityParams(1 - 1e-9, 1.0)
    assert cav.linewidth_fwhm(high) < 1.0


def test_impedance_matched_reflection_vanishes():
    c = cav.CavityParams(0.9, 0.9)
    assert abs(cav.response(c, 0.0).reflection) == pytest.approx(0.0, abs=1e-14)


@given(st.floats(-5e9, 5e9))
def test_perfect_end_mirror_reflects_everything(det):
    c = cav.squeezing_resonator()
    assert abs(cav.response(c, det).reflection) == pytest.approx(1.0, abs=1e-12)


def test_half_power_at_half_linewidth(sqz):
    half = numeric_half_power_detuning(sqz)
    assert half == pytest.approx(cav.linewidth_fwhm(sqz) / 2, rel=1e-3)


@pytest.mark.parametrize("r", [0.3, 0.8, 0.95, 0.99, 0.999])
def test_airy_periodicity(r):
    c = cav.CavityParams(r, 0.97, ((0.2, 1.0),), round_trip_loss=0.01)
    d = np.linspace(-3e8, 3e8, 101)
    a, b = cav.response(c, d), cav.response(c, d + cav.fsr(c))
    assert np.allclose(a.reflection, b.reflection, rtol=0, atol=1e-12)
    assert np.allclose(np.abs(a.transmission), np.abs(b.transmission), rtol=0, atol=1e-12)


@given(st.floats(0.05, 0.999), st.floats(0.05, 1.0), st.one_of(st.just(0.0), st.floats(1e-4, 0.5)))
def test_energy_conservation(r1, r2, loss):
    if r1 == 1.0 and r2 == 1.0:
        return
    c = cav.CavityParams(r1, r2, ((0.1, 1.0),), round_trip_loss=loss)
    resp = cav.response(c, np.linspace(-cav.fsr(c), cav.fsr(c), 41))
    if loss == 0:
        assert np.allclose(resp.absorbed, 0.0, atol=1e-12)
    else:
        assert np.all(resp.absorbed > 0)


@pytest.mark.parametrize("target", [25.0, 75.0, 200.0, 555.0, 5000.0])
def test_root_search_fwhm_matches_formula(target):
    # the FSR/F approximation is within 0.1 % once F >~ 21
    rho = cav.round_trip_for_finesse(target)
    c = cav.CavityParams(rho, rho, ((0.3, 1.0),))
    assert cav.finesse(c) == pytest.approx(target, rel=1e-12)
    assert 2 * numeric_half_power_detuning(c) == pytest.approx(cav.linewidth_fwhm(c), rel=1e-3)


def test_co_resonance_offsets(sqz):
    lam = cav.WAVELENGTH
    free = cav.fsr(sqz)
    assert cav.co_resonance_offset(sqz, 0.0) == 0.0
    assert cav.co_resonance_offset(sqz, lam / 4) == pytest.approx(free / 2)
    assert cav.co_resonance_offset(sqz, lam / 2) == pytest.approx(0.0, abs=1e-3)
    assert cav.co_resonance_offset(sqz, 3 * lam / 2) == pytest.approx(0.0, abs=1e-3)
    with pytest.raises(DomainError):
        cav.co_resonance_offset(sqz, 1.0)


@given(st.floats(-2e-6, 2e-6))
def test_co_resonance_offset_range(delta):
    c = cav.squeezing_resonator()
    f = cav.co_resonance_offset(c, delta)
    free = cav.fsr(c)
    assert -free / 2 < f <= free / 2
    # shifting by the offset cancels the extra round-trip phase modulo 2*pi
    extra = 2 * math.pi * 2 * delta / cav.WAVELENGTH
    total = extra + cav.co_resonance_phase(c, f)
    assert math.remainder(total, 2 * math.pi) == pytest.approx(0.0, abs=1e-6)


def test_co_resonance_inverse_for_measured_offset(sqz):
    phase = cav.co_resonance_phase(sqz, 12.6e6)
    assert phase / (2 * math.pi) == pytest.approx(3.2e-3, rel=0.01)
