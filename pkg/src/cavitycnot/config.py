"""Run configuration: a flat ``key = value`` text format in T_p units.

Example::

    # reference parameters of the ideal gate
    omega_max_tp = 10
    g_tp = 25
    kappa_tp = 0.5      # cavity field decay rate times T_p
    merged = false

Numbers may be written as decimals, in scientific notation or as fractions
(``step_tp = 1/400``).  Unknown keys are rejected.  ``tau_tp``/``tau_u_tp`` accept ``none`` or
``inf`` for "no spontaneous emission"; ``step_tp`` accepts ``auto``.
"""

from __future__ import annotations

import dataclasses
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Any

from .dynamics import IntegratorConfig, LindbladModel
from .hamiltonian import CavityParams
from .pulses import build_cnot_protocol, merge_adjacent_pulses, ProtocolSchedule
from .statespace import HilbertSpace

INPUT_CHOICES = ("00", "01", "10", "11", "bell", "all")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str | None, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        prefix = f"{key}: " if key else ""
        super().__init__(f"{prefix}{message}{where}")
        self.message = message
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    omega_max_tp: float = 10.0
    g_tp: float = 25.0
    delay_tp: float = 1.2
    kappa_tp: float = 0.0
    tau_tp: float | None = None
    tau_u_tp: float | None = None
    n_max: int = 3
    step_tp: float | None = None
    phi1: float = 0.0
    phi2: float = 0.0
    phi3: float = 0.0
    phi4: float = 0.0
    phi5: float = 0.0
    phi6: float = 0.0
    input: str = "all"
    merged: bool = False
    out_dir: str = "out"
    tp_ns: float | None = None
    sample_every: int = 10

    def __post_init__(self):
        for key in ("omega_max_tp", "g_tp", "kappa_tp"):
            if getattr(self, key) < 0:
                raise ConfigError(key, f"must be >= 0, got {getattr(self, key)}")
        if self.omega_max_tp == 0:
            raise ConfigError("omega_max_tp", "must be > 0")
        if self.delay_tp <= 0:
            raise ConfigError("delay_tp", f"must be > 0, got {self.delay_tp}")
        for key in ("tau_tp", "tau_u_tp", "step_tp", "tp_ns"):
            value = getattr(self, key)
            if value is not None and value <= 0:
                raise ConfigError(key, f"must be > 0, got {value}")
        if self.n_max < 2:
            raise ConfigError("n_max", "must be >= 2 so that |11>|2> is representable")
        if self.sample_every < 1:
            raise ConfigError("sample_every", "must be >= 1")
        if self.input not in INPUT_CHOICES:
            raise ConfigError("input", f"must be one of {', '.join(INPUT_CHOICES)}")
        for i, phi in enumerate(self.phases, start=1):
            if not math.isfinite(phi):
                raise ConfigError(f"phi{i}", "must be finite")

    @property
    def phases(self) -> tuple[float, ...]:
        return (self.phi1, self.phi2, self.phi3, self.phi4, self.phi5, self.phi6)

    def schedule(self) -> ProtocolSchedule:
        sched = build_cnot_protocol(self.omega_max_tp, 1.0, self.delay_tp, self.phases)
        return merge_adjacent_pulses(sched) if self.merged else sched

    def cavity(self) -> CavityParams:
        return CavityParams.symmetric(self.g_tp)

    def lindblad(self) -> LindbladModel | None:
        model = LindbladModel(kappa=self.kappa_tp, tau_e=self.tau_tp, tau_u=self.tau_u_tp)
        return model if model.is_dissipative else None

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(step=self.step_tp, sample_every=self.sample_every)

    def space(self) -> HilbertSpace:
        return HilbertSpace(self.n_max)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_OPTIONAL_FLOATS = {"tau_tp", "tau_u_tp", "step_tp", "tp_ns"}
_INTS = {"n_max", "sample_every"}
_BOOLS = {"merged"}
_STRINGS = {"input", "out_dir"}
NUMERIC_KEYS = tuple(k for k in _FIELDS if k not in _BOOLS | _STRINGS)


def _convert(key: str, raw: str, line: int | None):
    text = raw.strip()
    if key in _STRINGS:
        return text
    if key in _BOOLS:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {raw!r}", line)
    if key in _OPTIONAL_FLOATS and text.lower() in ("none", "inf", "auto", ""):
        return None
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(key, f"expected a number, got {raw!r}", line) from None
    if key in _INTS:
        if value != int(value):
            raise ConfigError(key, f"expected an integer, got {raw!r}", line)
        return int(value)
    return value


def parse_config(text: str) -> RunConfig:
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key", lineno)
        if key in values:
            raise ConfigError(key, f"duplicate key (first set on line {lines[key]})", lineno)
        values[key] = _convert(key, value, lineno)
        lines[key] = lineno
    try:
        return RunConfig(**values)
    except ConfigError as err:
        if err.key in lines and err.line is None:
            raise ConfigError(err.key, err.message, lines[err.key]) from None
        raise


def override(config: RunConfig, key: str, value: Any) -> RunConfig:
    """Set one key, converting strings the same way the file parser does."""
    if key not in _FIELDS:
        raise ConfigError(key, "unknown key")
    if not isinstance(value, (str, bool)) or key in _STRINGS:
        value = str(value) if value is not None else "none"
    if isinstance(value, str):
        value = _convert(key, value, None)
    return config.replace(**{key: value})


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    base: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        if self.parameter not in NUMERIC_KEYS:
            raise ConfigError(
                self.parameter, f"cannot sweep; choose one of {', '.join(NUMERIC_KEYS)}"
            )

    def configs(self) -> list[RunConfig]:
        return [override(self.base, self.parameter, v) for v in self.values]
