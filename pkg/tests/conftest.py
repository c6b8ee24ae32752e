import numpy as np
import pytest

from squeezer_sim.quantum_state import QuadraturePair


def monte_carlo_jitter(q, theta_rms, n=2_000_000, seed=7):
    """Average the readout variance over sampled Gaussian angles."""
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, theta_rms, n)
    c2 = np.cos(theta) ** 2
    s2 = 1.0 - c2
    return float(np.mean(q.v_sq * c2 + q.v_anti * s2)), float(np.mean(q.v_anti * c2 + q.v_sq * s2))


@pytest.fixture
def geo_pair():
    # -9 dB / +14 dB
    return QuadraturePair.from_db(-9.0, 14.0)


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
