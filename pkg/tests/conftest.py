from __future__ import annotations

import math

import numpy as np
import pytest

from temporal_qudit.signal import PulseShape, TimeGrid, Wavepacket, make_grid, synth_wavepacket

# Lines collected by the acceptance module and printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_pulse() -> PulseShape:
    return PulseShape()


@pytest.fixture(scope="session")
def default_carrier(default_pulse) -> Wavepacket:
    return synth_wavepacket(default_pulse, make_grid(default_pulse.coherence_time))


@pytest.fixture(scope="session")
def coarse_carrier() -> Wavepacket:
    """A Gaussian photon on a 4096-sample grid, fast enough for property tests."""
    pulse = PulseShape("gaussian", 100e-9)
    return synth_wavepacket(pulse, make_grid(pulse.coherence_time, 8, 8.0, n_ref=8))


def centered_grid(n: int, dt: float) -> TimeGrid:
    return TimeGrid(-n * dt / 2, dt, n)


def random_wavepacket(rng: np.random.Generator, grid: TimeGrid) -> Wavepacket:
    t = grid.times / (grid.duration / 8)
    env = np.exp(-(t**2)) * (1 + 0.3 * rng.standard_normal(grid.n_samples))
    phase = rng.uniform(0, 2 * math.pi, grid.n_samples)
    return Wavepacket(grid, env * np.exp(1j * phase)).normalize()
