from pathlib import Path

import pytest

from hetsim import (
    MachineSpec,
    PowerProfile,
    SimulationConfig,
    parse_eet_csv,
    parse_trace_csv,
)
from hetsim import policies as _policies


@pytest.fixture(autouse=True)
def _registry_guard():
    """Roll back any policies a test registers, so the global registry stays
    the six built-ins for everyone else."""
    saved = dict(_policies._REGISTRY)
    yield
    _policies._REGISTRY.clear()
    _policies._REGISTRY.update(saved)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

S1_POWER = {"fast": PowerProfile(5, 20), "slow": PowerProfile(2, 10)}


def s1_config(policy: str = "mct", **overrides) -> SimulationConfig:
    """The two-machine reference scenario: one fast, one slow, queue depth 2."""
    base = dict(
        machines=(MachineSpec("fast", "fast"), MachineSpec("slow", "slow")),
        scheduler_policy=policy,
        machine_queue_size=2,
        cancellation_enabled=False,
        seed=0,
        power_profiles=S1_POWER,
    )
    base.update(overrides)
    return SimulationConfig(**base)


@pytest.fixture(scope="session")
def s1_eet_bytes() -> bytes:
    return (FIXTURES / "s1_eet.csv").read_bytes()


@pytest.fixture(scope="session")
def s1_trace_bytes() -> bytes:
    return (FIXTURES / "s1_trace.csv").read_bytes()


@pytest.fixture()
def s1_eet(s1_eet_bytes):
    return parse_eet_csv(s1_eet_bytes)


@pytest.fixture()
def s1_trace(s1_trace_bytes):
    return parse_trace_csv(s1_trace_bytes)
