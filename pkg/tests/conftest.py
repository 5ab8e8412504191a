import numpy as np
import pytest

from radarlevel import SceneSpec

ACCEPTANCE_RESULTS = []


def record_acceptance(name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def noisy_spec():
    """Moderate noise with every false-return class active."""
    return SceneSpec(
        true_distance_m=1.13,
        surface_jitter_std_m=0.005,
        subsurface_rate=0.5,
        near_noise_rate=0.5,
        multipath_rate=0.5,
        surface_x_std_m=0.05,
    )


@pytest.fixture
def clean_spec():
    return SceneSpec(true_distance_m=1.13, surface_jitter_std_m=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
