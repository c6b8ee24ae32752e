"""Quadrature-variance algebra in shot-noise units.

Variance 1 is the vacuum level.  Everything internal is linear; dB values
appear only at input/output boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError

UNCERTAINTY_TOL = 1e-9


@dataclass(frozen=True)
class QuadraturePair:
    """Squeezed and anti-squeezed variances of one optical mode.

    The constructor sorts the two values so that ``v_sq <= v_anti``.
    """

    v_sq: float
    v_anti: float
    frequency: Optional[float] = None

    def __post_init__(self):
        a, b = float(self.v_sq), float(self.v_anti)
        if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"variances must be positive and finite, got ({a}, {b})")
        if a > b:
            a, b = b, a
        object.__setattr__(self, "v_sq", a)
        object.__setattr__(self, "v_anti", b)

    @classmethod
    def from_db(cls, sq_db, anti_db, frequency=None):
        return cls(db_to_variance(sq_db), db_to_variance(anti_db), frequency)

    @property
    def product(self):
        return self.v_sq * self.v_anti

    @property
    def sq_db(self):
        return variance_to_db(self.v_sq)

    @property
    def anti_db(self):
        return variance_to_db(self.v_anti)

    def is_vacuum(self, tol=1e-12):
        return abs(self.v_sq - 1) <= tol and abs(self.v_anti - 1) <= tol


VACUUM = QuadraturePair(1.0, 1.0)


def variance_to_db(v):
    """Linear variance to dB relative to shot noise."""
    arr = np.asarray(v, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"variance must be positive, got {v!r}")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def db_to_variance(db):
    arr = np.asarray(db, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError(f"dB level must be finite, got {db!r}")
    out = 10.0 ** (arr / 10.0)
    return float(out) if out.ndim == 0 else out


def check_efficiency(eta, name="eta"):
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {eta}")
    return eta


def loss_variance(v, eta):
    """Beam-splitter loss on a bare variance (scalar or array)."""
    return eta * v + (1.0 - eta)


def apply_loss(q: QuadraturePair, eta: float) -> QuadraturePair:
    """Mix the state with vacuum on a beam splitter of power transmission ``eta``."""
    eta = check_efficiency(eta)
    return replace(q, v_sq=loss_variance(q.v_sq, eta), v_anti=loss_variance(q.v_anti, eta))


def compose_efficiencies(etas: Iterable[float]) -> float:
    etas = [check_efficiency(e) for e in etas]
    if not etas:
        raise DomainError("cannot compose an empty list of efficiencies")
    return math.prod(etas)


def project_quadrature(q: QuadraturePair, theta):
    """Variance read out at angle ``theta`` from the squeezed quadrature."""
    c2 = np.cos(theta) ** 2
    return q.v_sq * c2 + q.v_anti * (1.0 - c2)


def apply_phase_jitter(q: QuadraturePair, theta_rms: float) -> QuadraturePair:
    """Average the readout over Gaussian angle noise of standard deviation ``theta_rms``.

    Uses <cos^2> = (1 + exp(-2 s^2)) / 2 for a zero-mean normal angle.
    """
    if not theta_rms >= 0:
        raise DomainError(f"theta_rms must be non-negative, got {theta_rms}")
    mix = -0.5 * math.expm1(-2.0 * theta_rms**2)
    keep = 1.0 - mix
    return replace(
        q,
        v_sq=q.v_sq * keep + q.v_anti * mix,
        v_anti=q.v_anti * keep + q.v_sq * mix,
    )
