"""Loss inference from measured squeezing levels and projection into the detector."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .detection import remove_dark_noise
from .errors import DomainError, InconsistentBudgetError, NonphysicalPairError, UnderdeterminedError
from .quantum_state import (
    UNCERTAINTY_TOL,
    QuadraturePair,
    check_efficiency,
    compose_efficiencies,
    db_to_variance,
    loss_variance,
    variance_to_db,
)


@dataclass(frozen=True)
class FitResult:
    """Total efficiency and source strength explaining a squeezed/anti-squeezed pair.

    ``strength`` is the squeeze parameter r for ``model == "pure"`` and the
    normalized pump amplitude x for ``model == "opo"``.
    """

    eta: float
    strength: float
    model: str
    residual: float
    sq_db: float
    anti_db: float
    dark_corrected: bool = False

    @property
    def loss(self):
        return 1.0 - self.eta

    @property
    def pure_sq_variance(self):
        """Squeezed variance of the source before any loss."""
        if self.model == "pure":
            return math.exp(-2.0 * self.strength)
        x = self.strength
        return ((1.0 - x) / (1.0 + x)) ** 2

    @property
    def r(self):
        if self.model == "pure":
            return self.strength
        return -0.5 * math.log(self.pure_sq_variance)

    @property
    def x(self):
        if self.model == "opo":
            return self.strength
        k = math.exp(-self.r)
        return (1.0 - k) / (1.0 + k)

    def state(self, eta=None) -> QuadraturePair:
        """Forward model at efficiency ``eta`` (default: the fitted one)."""
        eta = self.eta if eta is None else check_efficiency(eta)
        v = self.pure_sq_variance
        return QuadraturePair(loss_variance(v, eta), loss_variance(1.0 / v, eta))


@dataclass
class LossBudget:
    """Ordered, named chain of power efficiencies."""

    entries: List[Tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.entries = [(str(n), check_efficiency(e, n)) for n, e in self.entries]

    @property
    def total(self):
        return compose_efficiencies([e for _, e in self.entries]) if self.entries else 1.0

    @property
    def loss(self):
        return 1.0 - self.total

    def __bool__(self):
        return bool(self.entries)

    @classmethod
    def from_loss(cls, loss, name="extra"):
        return cls([(name, 1.0 - loss)])


def default_detector_budget():
    """Illustrative split of the extra detector-side loss; placeholders, not measurements."""
    return LossBudget([
        ("mode_matching", 0.95),
        ("faraday_isolator", 0.98),
        ("coatings", 0.99),
        ("photodiode", 0.97),
    ])


def _measured_variances(sq_db, anti_db, dark_clearance_db):
    if sq_db == 0 and anti_db == 0:
        raise UnderdeterminedError("vacuum input: squeezing strength is zero and loss unconstrained")
    if not (sq_db < 0 < anti_db):
        raise DomainError(f"need sq_db < 0 < anti_db, got ({sq_db}, {anti_db})")
    v_sq, v_anti = db_to_variance(sq_db), db_to_variance(anti_db)
    if dark_clearance_db is not None:
        v_sq = remove_dark_noise(v_sq, dark_clearance_db)
        v_anti = remove_dark_noise(v_anti, dark_clearance_db)
    if v_sq * v_anti < 1.0 - UNCERTAINTY_TOL:
        raise NonphysicalPairError(
            f"V_sq*V_anti = {v_sq * v_anti:.4g} < 1: pair is purer than any lossy pure state")
    return v_sq, v_anti


def _efficiency(v_sq, v_anti):
    eta = (1.0 - v_sq) * (v_anti - 1.0) / (v_anti + v_sq - 2.0)
    if eta <= 0:
        raise UnderdeterminedError("degenerate pair: implied efficiency is not positive")
    if eta > 1.0:
        if eta - 1.0 > 1e-9:
            raise NonphysicalPairError(f"implied efficiency {eta} exceeds 1")
        eta = 1.0
    return eta


def _residual(v_sq, v_anti, eta, pure):
    fwd_sq = loss_variance(pure, eta)
    fwd_anti = loss_variance(1.0 / pure, eta)
    return max(abs(fwd_sq - v_sq) / v_sq, abs(fwd_anti - v_anti) / v_anti)


def fit_eta_r(sq_db, anti_db, dark_clearance_db=None) -> FitResult:
    """Solve eta*exp(-+2r) + 1 - eta = V_sq, V_anti in closed form.

    Uses the product identity (V_sq - 1 + eta)(V_anti - 1 + eta) = eta^2.
    Pass ``dark_clearance_db`` to remove electronic noise from shot-referenced
    levels before fitting.
    """
    v_sq, v_anti = _measured_variances(sq_db, anti_db, dark_clearance_db)
    eta = _efficiency(v_sq, v_anti)
    pure = (v_sq - 1.0 + eta) / eta
    r = -0.5 * math.log(pure)
    return FitResult(eta, r, "pure", _residual(v_sq, v_anti, eta, pure), sq_db, anti_db,
                     dark_clearance_db is not None)


def fit_eta_x(sq_db, anti_db, dark_clearance_db=None) -> FitResult:
    """Fit the zero-frequency OPO spectrum 1 -+ eta*4x/(1 +- x)^2.

    The ratio of the two deviations from shot noise fixes ((1-x)/(1+x))^2;
    eta then follows from either level.
    """
    v_sq, v_anti = _measured_variances(sq_db, anti_db, dark_clearance_db)
    k = math.sqrt((1.0 - v_sq) / (v_anti - 1.0))
    x = (1.0 - k) / (1.0 + k)
    eta = (1.0 - v_sq) * (1.0 + x) ** 2 / (4.0 * x)
    if eta > 1.0:
        if eta - 1.0 > 1e-9:
            raise NonphysicalPairError(f"implied efficiency {eta} exceeds 1")
        eta = 1.0
    return FitResult(eta, x, "opo", _residual(v_sq, v_anti, eta, k * k), sq_db, anti_db,
                     dark_clearance_db is not None)


def project_injected(fit: FitResult, eta_bhd: float) -> float:
    """Squeezed level (dB) once the diagnostic detector's efficiency is taken out."""
    eta_bhd = check_efficiency(eta_bhd, "eta_bhd")
    if eta_bhd < fit.eta - 1e-12 or eta_bhd == 0:
        raise InconsistentBudgetError(
            f"detector efficiency {eta_bhd} is below the fitted total {fit.eta}")
    eta = min(fit.eta / eta_bhd, 1.0)
    return variance_to_db(loss_variance(fit.pure_sq_variance, eta))


def project_detector(injected: Union[float, FitResult, QuadraturePair],
                     extra_budget: Union[LossBudget, float]) -> float:
    """Squeezed level (dB) after an additional loss chain.

    ``injected`` is a squeezed level in dB, a fitted source (at its fitted
    efficiency), or a state.  A bare float budget is an efficiency.
    """
    if isinstance(injected, FitResult):
        v = injected.state().v_sq
    elif isinstance(injected, QuadraturePair):
        v = injected.v_sq
    else:
        v = db_to_variance(injected)
    eta = extra_budget.total if isinstance(extra_budget, LossBudget) else check_efficiency(extra_budget)
    return variance_to_db(loss_variance(v, eta))


def equivalent_power_factor(improvement_db):
    """Laser power increase giving the same shot-noise-limited sensitivity gain."""
    if improvement_db < 0:
        raise DomainError("improvement must be non-negative")
    return 10.0 ** (improvement_db / 10.0)
