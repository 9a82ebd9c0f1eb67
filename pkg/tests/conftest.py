import numpy as np
import pytest

from xlirs.channel import NearFieldChannels
from xlirs.geometry import ScenarioConfig

_ACCEPTANCE = []


def random_channels(rng, N, M, K, g_amp=1.0, r_amp=None):
    """Unit-modulus random-phase channels with the given amplitudes."""
    r_amp = np.ones(K) if r_amp is None else np.asarray(r_amp, dtype=float)
    return NearFieldChannels(
        G_phase=np.exp(2j * np.pi * rng.random((N, M))),
        r_phase=np.exp(2j * np.pi * rng.random((K, N))),
        g_amplitude=float(g_amp),
        r_amplitudes=r_amp,
    )


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def baseline():
    """Default scenario with a single user at (0, 150, 0)."""
    return ScenarioConfig()


@pytest.fixture
def acceptance_report():
    def report(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))

    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")
