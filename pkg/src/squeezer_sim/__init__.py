"""Simulation and analysis of a cavity squeezed-vacuum source and its readout."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AboveThresholdError,
    ConfigError,
    DomainError,
    InconsistentBudgetError,
    NoDiscriminationError,
    NonIntegrableError,
    NonphysicalPairError,
    SqueezerError,
    UnderdeterminedError,
)
from .quantum_state import (  # noqa: E402
    QuadraturePair,
    apply_loss,
    apply_phase_jitter,
    compose_efficiencies,
    db_to_variance,
    project_quadrature,
    variance_to_db,
)
