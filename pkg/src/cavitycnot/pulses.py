"""Gaussian pulses and the six-step CNOT pulse schedule.

All times are in units of the pulse width T_p and all Rabi frequencies in
units of 1/T_p, so ``omega_max=10`` means Omega_max * T_p = 10.

Step layout (``edge = 4``, ``gap = 2`` by default): a step whose first pulse is
centred at ``c`` owns the window ``[c - edge, c + delay + edge]``; the next
window starts ``gap`` later.  At 4 T_p a Gaussian is down to 1.1e-7 of its
peak, so neighbouring steps do not overlap above the coupling floor.

Phase convention: the first pulse of a step has phase 0 and the second pulse
carries the step phase.  For the two lambda steps (1 and 6) the second pulse
additionally carries pi, which is what makes the plain protocol a CNOT.  The
step-4 pair is offset by the phase of the step-3 Omega_a^(2) pulse so that
the two consecutive Omega_a^(2) pulses share one phase and can be merged;
a common phase on both pulses of a step leaves the transfer unchanged.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .statespace import AtomLevel

LAMBDA_STIRAP = "lambda_stirap"
CAVITY_STIRAP = "cavity_stirap"

DEFAULT_DELAY = 1.2
DEFAULT_EDGE = 4.0
DEFAULT_GAP = 2.0
DEFAULT_FLOOR = 1e-8


@dataclass(frozen=True)
class PulseShape:
    """Gaussian envelope ``amplitude * exp(-((t - center)/width)**2) * exp(i phase)``."""

    amplitude: float
    width: float = 1.0
    center: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"pulse amplitude must be >= 0, got {self.amplitude}")
        if self.width <= 0:
            raise ValueError(f"pulse width must be > 0, got {self.width}")

    @property
    def rise(self) -> float:
        return self.center

    @property
    def fall(self) -> float:
        return self.center

    def envelope(self, t):
        return _envelope(t, self.amplitude, self.width, self.rise, self.fall)

    def value(self, t):
        return self.envelope(t) * np.exp(1j * self.phase)

    def support(self, floor: float = DEFAULT_FLOOR) -> tuple[float, float]:
        """Interval on which the envelope exceeds ``floor * amplitude``."""
        reach = self.width * math.sqrt(-math.log(floor))
        return self.rise - reach, self.fall + reach


@dataclass(frozen=True)
class FlatTopShape(PulseShape):
    """Gaussian rising edge at ``center``, plateau, Gaussian falling edge at ``end``.

    Used for the merged step-3/step-4 pulse: outside ``[center, end]`` it
    coincides with the larger of the two original Gaussians.
    """

    end: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if self.end < self.center:
            raise ValueError("flat-top pulse must end after it starts")

    @property
    def fall(self) -> float:
        return self.end


def _envelope(t, amplitude, width, rise, fall):
    dist = np.maximum(np.maximum(rise - t, t - fall), 0.0)
    return amplitude * np.exp(-((dist / width) ** 2))


def gaussian_value(p: PulseShape, t: float) -> complex:
    return complex(p.value(t))


@dataclass(frozen=True)
class Pulse:
    """A laser pulse driving ``lower -> upper`` on one atom."""

    atom: int
    lower: AtomLevel
    upper: AtomLevel
    shape: PulseShape

    @property
    def name(self) -> str:
        if self.upper is AtomLevel.U:
            sub = {AtomLevel.GA: "a(sti)", AtomLevel.G1: "1(sti)"}.get(self.lower, self.lower.value)
        else:
            sub = self.lower.symbol
        return f"Omega_{sub}^({self.atom})"

    @property
    def transition(self) -> str:
        return f"{self.lower.value}->{self.upper.value}"

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "atom": self.atom,
            "transition": self.transition,
            "omega_max": self.shape.amplitude,
            "t_p": self.shape.width,
            "t0": self.shape.center,
            "phi": self.shape.phase,
        }
        if isinstance(self.shape, FlatTopShape):
            out["t1"] = self.shape.end
        return out


@dataclass(frozen=True)
class StepSpec:
    index: int
    kind: str
    pulses: tuple[Pulse, Pulse]
    phase: float
    window: tuple[float, float]

    def __post_init__(self):
        first, second = self.pulses
        if self.kind == LAMBDA_STIRAP:
            if first.atom != second.atom:
                raise ValueError(f"step {self.index}: lambda STIRAP pulses must drive one atom")
        elif self.kind == CAVITY_STIRAP:
            if {first.atom, second.atom} != {1, 2}:
                raise ValueError(f"step {self.index}: cavity STIRAP drives one laser per atom")
        else:
            raise ValueError(f"step {self.index}: unknown step kind {self.kind!r}")

    @property
    def first(self) -> Pulse:
        return self.pulses[0]

    @property
    def second(self) -> Pulse:
        return self.pulses[1]

    @property
    def relative_phase(self) -> float:
        return self.second.shape.phase - self.first.shape.phase

    def pulse_on(self, atom: int) -> Pulse:
        for p in self.pulses:
            if p.atom == atom:
                return p
        raise ValueError(f"step {self.index} drives no pulse on atom {atom}")

    @property
    def laser_levels(self) -> tuple[AtomLevel, AtomLevel]:
        """Driven ground levels (L1, L2) of a cavity step."""
        if self.kind != CAVITY_STIRAP:
            raise ValueError(f"step {self.index} is not a cavity step")
        return self.pulse_on(1).lower, self.pulse_on(2).lower

    def contains(self, t: float) -> bool:
        return self.window[0] <= t <= self.window[1]


@dataclass(frozen=True)
class ProtocolSchedule:
    steps: tuple[StepSpec, ...]
    width: float = 1.0
    delay: float = DEFAULT_DELAY
    gap: float = DEFAULT_GAP
    merged: bool = False

    @property
    def t_start(self) -> float:
        return self.steps[0].window[0]

    @property
    def t_end(self) -> float:
        return self.steps[-1].window[1]

    @property
    def pulses(self) -> list[Pulse]:
        """Distinct pulses in time order (a merged pulse is listed once)."""
        seen: list[Pulse] = []
        for step in self.steps:
            for p in step.pulses:
                if not any(p is q for q in seen):
                    seen.append(p)
        return seen

    def step(self, index: int) -> StepSpec:
        return self.steps[index - 1]

    def to_dict(self) -> dict:
        pulses = self.pulses
        return {
            "t_p": self.width,
            "delay": self.delay,
            "gap": self.gap,
            "merged": self.merged,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "pulses": [p.to_dict() for p in pulses],
            "steps": [
                {
                    "index": s.index,
                    "kind": s.kind,
                    "phase": s.phase,
                    "window": list(s.window),
                    "pulses": [next(i for i, q in enumerate(pulses) if q is p) for p in s.pulses],
                }
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# (kind, first pulse, second pulse) with pulses as (atom, lower, upper)
_E, _U = AtomLevel.E, AtomLevel.U
_G0, _GA, _G1 = AtomLevel.G0, AtomLevel.GA, AtomLevel.G1
CNOT_STEPS = (
    (LAMBDA_STIRAP, (2, _GA, _U), (2, _G1, _U)),
    (CAVITY_STIRAP, (1, _GA, _E), (2, _G0, _E)),
    (CAVITY_STIRAP, (1, _G0, _E), (2, _GA, _E)),
    (CAVITY_STIRAP, (2, _GA, _E), (1, _GA, _E)),
    (CAVITY_STIRAP, (2, _G0, _E), (1, _G0, _E)),
    (LAMBDA_STIRAP, (2, _G1, _U), (2, _GA, _U)),
)


def build_cnot_protocol(
    omega_max: float = 10.0,
    width: float = 1.0,
    delay: float = DEFAULT_DELAY,
    phases: Sequence[float] = (0.0,) * 6,
    *,
    edge: float = DEFAULT_EDGE,
    gap: float = DEFAULT_GAP,
    start: float = 0.0,
) -> ProtocolSchedule:
    """Twelve-pulse CNOT schedule with step phases ``phases[0..5]``."""
    if omega_max <= 0 or width <= 0:
        raise ValueError("omega_max and width must be positive")
    if delay <= 0:
        raise ValueError(f"delay must be positive, got {delay}")
    phases = tuple(float(p) for p in phases)
    if len(phases) != 6:
        raise ValueError(f"expected 6 step phases, got {len(phases)}")

    steps = []
    window_start = start
    carrier = 0.0
    for n, ((kind, first, second), phi) in enumerate(zip(CNOT_STEPS, phases), start=1):
        c = window_start + edge * width
        extra = math.pi if kind == LAMBDA_STIRAP else 0.0
        # step 4 reuses the phase of the step-3 Omega_a^(2) pulse
        offset = carrier if n == 4 else 0.0
        p1 = Pulse(*first, PulseShape(omega_max, width, c, offset))
        p2 = Pulse(*second, PulseShape(omega_max, width, c + delay * width, offset + phi + extra))
        window = (window_start, c + delay * width + edge * width)
        steps.append(StepSpec(n, kind, (p1, p2), phi, window))
        if n == 3:
            carrier = p2.shape.phase
        window_start = window[1] + gap * width
    return ProtocolSchedule(tuple(steps), width=width, delay=delay, gap=gap)


def merge_adjacent_pulses(s: ProtocolSchedule) -> ProtocolSchedule:
    """Replace the step-3 / step-4 pair of Omega_a^(2) pulses by one flat-top pulse."""
    if s.merged:
        return s
    step3, step4 = s.step(3), s.step(4)
    tail, head = step3.second, step4.first
    if (tail.atom, tail.lower, tail.upper) != (head.atom, head.lower, head.upper):
        raise ValueError("step 3 and step 4 do not share a pulse that could be merged")
    if not math.isclose(tail.shape.amplitude, head.shape.amplitude) or not math.isclose(
        tail.shape.width, head.shape.width
    ):
        raise ValueError("cannot merge pulses with different amplitude or width")
    dphi = math.remainder(tail.shape.phase - head.shape.phase, 2 * math.pi)
    if abs(dphi) > 1e-12:
        raise ValueError(
            f"cannot merge step 3 and step 4: shared pulse phases differ by {dphi:.6g} rad"
        )
    merged = Pulse(
        tail.atom,
        tail.lower,
        tail.upper,
        FlatTopShape(
            tail.shape.amplitude,
            tail.shape.width,
            tail.shape.center,
            tail.shape.phase,
            end=head.shape.center,
        ),
    )
    steps = list(s.steps)
    steps[2] = dataclasses.replace(step3, pulses=(step3.first, merged))
    steps[3] = dataclasses.replace(step4, pulses=(merged, step4.second))
    return dataclasses.replace(s, steps=tuple(steps), merged=True)


class Coupling(NamedTuple):
    atom: int
    upper: AtomLevel
    lower: AtomLevel
    amplitude: complex


def active_couplings(
    s: ProtocolSchedule, t: float, floor: float = DEFAULT_FLOOR
) -> list[Coupling]:
    """Laser couplings whose envelope exceeds ``floor * omega_max`` at time ``t``."""
    slack = 1e-9 * s.width
    if not (s.t_start - slack <= t <= s.t_end + slack):
        raise ValueError(f"t={t} lies outside the schedule [{s.t_start}, {s.t_end}]")
    out = []
    for p in s.pulses:
        env = float(p.shape.envelope(t))
        if env > floor * p.shape.amplitude:
            out.append(Coupling(p.atom, p.upper, p.lower, env * np.exp(1j * p.shape.phase)))
    return out


class PulseTable:
    """Vectorised evaluation of every pulse of a schedule at one time."""

    def __init__(self, pulses: Sequence[Pulse], floor: float = DEFAULT_FLOOR):
        self.pulses = list(pulses)
        shapes = [p.shape for p in self.pulses]
        self.amplitude = np.array([sh.amplitude for sh in shapes])
        self.width = np.array([sh.width for sh in shapes])
        self.rise = np.array([sh.rise for sh in shapes])
        self.fall = np.array([sh.fall for sh in shapes])
        self.carrier = np.exp(1j * np.array([sh.phase for sh in shapes]))
        self.floor = floor

    def __call__(self, t: float) -> np.ndarray:
        env = _envelope(t, self.amplitude, self.width, self.rise, self.fall)
        env[env <= self.floor * self.amplitude] = 0.0
        return env * self.carrier
