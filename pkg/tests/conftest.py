import pytest

from cavitycnot.pulses import (
    CAVITY_STIRAP,
    FlatTopShape,
    ProtocolSchedule,
    Pulse,
    PulseShape,
    StepSpec,
    build_cnot_protocol,
)
from cavitycnot.statespace import AtomLevel, HilbertSpace

ACCEPTANCE_LINES: list[str] = []


def constant_drive(omega: float, duration: float) -> ProtocolSchedule:
    """One window of constant drive on atom 1, g0 -> e; atom 2 undriven."""
    on = Pulse(1, AtomLevel.G0, AtomLevel.E, FlatTopShape(omega, 1.0, 0.0, 0.0, end=duration + 10))
    off = Pulse(2, AtomLevel.G0, AtomLevel.E, PulseShape(0.0))
    return ProtocolSchedule((StepSpec(1, CAVITY_STIRAP, (on, off), 0.0, (0.0, duration)),))


def silent_schedule(duration: float) -> ProtocolSchedule:
    return constant_drive(0.0, duration)


def single_step(index: int, **kwargs) -> ProtocolSchedule:
    return ProtocolSchedule((build_cnot_protocol(**kwargs).step(index),))


@pytest.fixture(scope="session")
def space():
    return HilbertSpace(3)


@pytest.fixture(scope="session")
def protocol():
    return build_cnot_protocol(10.0, 1.0, 1.2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

