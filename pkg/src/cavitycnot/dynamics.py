"""Time propagation of the protocol: Schroedinger and Lindblad engines.

Both engines use fixed-step classical RK4 with the Hamiltonian evaluated at
the start, midpoint and end of each step.  The integration is split at every
step-window boundary so that per-step diagnostics are taken exactly at the
end of each window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .darkstates import expected_path
from .hamiltonian import CavityParams, HamiltonianAssembler
from .pulses import ProtocolSchedule
from .statespace import (
    COMPUTATIONAL_STATES,
    GROUND_LEVELS,
    AtomLevel,
    BasisState,
    HilbertSpace,
    annihilation,
    atomic_operator,
    check_density_matrix,
    check_state,
    to_density_matrix,
)

CSV_SCHEMA = "cavitycnot-timeseries v1"


class NumericalError(RuntimeError):
    """Integrator diagnostics exceeded their tolerance."""


UNITARY_STEP = 1 / 200
LINDBLAD_STEP = 1 / 400


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed RK4 step (in T_p) and the drift tolerances that abort a run.

    ``step=None`` picks the engine default: T_p/200 for pure states and
    T_p/400 for density matrices, where RK4 truncation error would otherwise
    push the smallest eigenvalues of rho below -1e-8.
    """

    step: float | None = None
    method: str = "rk4"
    norm_tol: float = 1e-8
    trace_tol: float = 1e-6
    positivity_tol: float = 1e-8
    sample_every: int = 10

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError(f"integrator step must be > 0, got {self.step}")
        if self.method != "rk4":
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    def step_for(self, mixed: bool) -> float:
        if self.step is not None:
            return self.step
        return LINDBLAD_STEP if mixed else UNITARY_STEP


@dataclass(frozen=True)
class LindbladModel:
    """Cavity field decay and optional spontaneous emission.

    ``kappa`` is the decay rate of the cavity *field* amplitude, so the photon
    number decays at ``2 kappa`` and the collapse operator is
    ``sqrt(2 kappa) a``.  ``tau_e``/``tau_u`` are lifetimes (None means no
    emission) with branching ratios over (g0, ga, g1); the jump operators are
    ``sqrt(b_s / tau) |s><e|`` on each atom.
    """

    kappa: float = 0.0
    tau_e: float | None = None
    branching_e: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    tau_u: float | None = None
    branching_u: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        for name in ("tau_e", "tau_u"):
            tau = getattr(self, name)
            if tau is not None and tau <= 0:
                raise ValueError(f"{name} must be positive or None, got {tau}")
        for name in ("branching_e", "branching_u"):
            b = getattr(self, name)
            if len(b) != 3 or min(b) < 0 or abs(sum(b) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be three non-negative ratios summing to 1, got {b}")

    @property
    def is_dissipative(self) -> bool:
        return self.kappa > 0 or self.tau_e is not None or self.tau_u is not None

    def collapse_operators(self, space: HilbertSpace) -> list[np.ndarray]:
        ops = []
        if self.kappa > 0:
            ops.append(math.sqrt(2.0 * self.kappa) * annihilation(space))
        for upper, tau, branching in (
            (AtomLevel.E, self.tau_e, self.branching_e),
            (AtomLevel.U, self.tau_u, self.branching_u),
        ):
            if tau is None:
                continue
            for atom in (1, 2):
                for lower, b in zip(GROUND_LEVELS, branching):
                    if b > 0:
                        ops.append(math.sqrt(b / tau) * atomic_operator(space, atom, lower, upper))
        return ops


@dataclass
class TimeSeries:
    times: np.ndarray
    labels: list[str]
    populations: np.ndarray
    norm: np.ndarray
    photons: np.ndarray
    excited: np.ndarray

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        buf.write(f"# {CSV_SCHEMA}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *self.labels, "norm_or_trace", "photon_expectation"])
        for i, t in enumerate(self.times):
            row = [t, *self.populations[i], self.norm[i], self.photons[i]]
            writer.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


@dataclass
class StepDiagnostics:
    index: int
    overlap: float
    max_photons: float
    max_excited: float


@dataclass
class ProtocolResult:
    final: np.ndarray
    mixed: bool
    space: HilbertSpace
    series: TimeSeries
    steps: list[StepDiagnostics] = field(default_factory=list)
    drift: float = 0.0
    min_eigenvalue: float | None = None
    engine: str = "schrodinger"

    def diagonal(self) -> np.ndarray:
        if self.mixed:
            return np.real(np.diag(self.final))
        return np.abs(self.final) ** 2

    def population(self, state: BasisState) -> float:
        return float(self.diagonal()[self.space.index_of(state)])

    @property
    def max_photons(self) -> float:
        return float(self.series.photons.max())

    @property
    def max_excited(self) -> float:
        return float(self.series.excited.max())

    def summary(self) -> dict:
        return {
            "engine": self.engine,
            "final_populations": {
                lbl: float(p) for lbl, p in zip(self.series.labels, self.series.populations[-1])
            },
            "steps": [
                {
                    "step": d.index,
                    "overlap": d.overlap,
                    "max_photon_expectation": d.max_photons,
                    "max_excited_population": d.max_excited,
                }
                for d in self.steps
            ],
            "drift": self.drift,
            "min_eigenvalue": self.min_eigenvalue,
            "max_photon_expectation": self.max_photons,
            "max_excited_population": self.max_excited,
        }


def default_tracked(space: HilbertSpace) -> list[BasisState]:
    """Zero-photon states with both atoms in a ground level."""
    return [BasisState(l1, l2, 0) for l1 in GROUND_LEVELS for l2 in GROUND_LEVELS]


def populations(state: np.ndarray, projectors: Sequence[np.ndarray]) -> np.ndarray:
    """Expectation values of projectors in a pure state or density matrix."""
    state = np.asarray(state)
    out = []
    for p in projectors:
        if state.ndim == 1:
            out.append(np.vdot(state, p @ state).real)
        else:
            out.append(np.trace(p @ state).real)
    return np.array(out)


# ---------------------------------------------------------------------------
# integration core


def _segments(schedule: ProtocolSchedule) -> list[tuple[float, float]]:
    marks = sorted({schedule.t_start, schedule.t_end, *(t for s in schedule.steps for t in s.window)})
    return list(zip(marks[:-1], marks[1:]))


def _rk4(
    rhs: Callable[[sp.csr_matrix, np.ndarray], np.ndarray],
    hamiltonian: Callable[[float], sp.csr_matrix],
    y: np.ndarray,
    schedule: ProtocolSchedule,
    h: float,
    sample_every: int,
    observe: Callable[[float, np.ndarray, bool], None],
) -> np.ndarray:
    count = 0
    observe(schedule.t_start, y, True)
    for a, b in _segments(schedule):
        n = max(1, math.ceil((b - a) / h - 1e-9))
        dt = (b - a) / n
        h0 = hamiltonian(a)
        for i in range(n):
            t = a + i * dt
            hm = hamiltonian(t + 0.5 * dt)
            h1 = hamiltonian(a + (i + 1) * dt)
            k1 = rhs(h0, y)
            k2 = rhs(hm, y + (0.5 * dt) * k1)
            k3 = rhs(hm, y + (0.5 * dt) * k2)
            k4 = rhs(h1, y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            h0 = h1
            count += 1
            last = i == n - 1
            if last or count % sample_every == 0:
                observe(a + (i + 1) * dt, y, last)
    return y


class _Recorder:
    """Collects samples and per-step maxima during one propagation."""

    def __init__(self, space, schedule, tracked, mixed, targets):
        self.space = space
        self.schedule = schedule
        self.idx = space.indices(tracked)
        self.labels = [f"pop_{s.atom1.symbol}{s.atom2.symbol}_{s.photons}" for s in tracked]
        self.mixed = mixed
        self.targets = targets
        self.rows: list[tuple] = []
        n = len(schedule.steps)
        self.step_photons = np.zeros(n)
        self.step_excited = np.zeros(n)
        self.step_overlap = np.full(n, np.nan)

    def diag(self, y):
        return np.real(np.diag(y)) if self.mixed else np.abs(y) ** 2

    def __call__(self, t, y, boundary):
        d = self.diag(y)
        norm = float(d.sum()) if self.mixed else float(np.sqrt(d.sum()))
        photons = float(d @ self.space.photon_numbers)
        excited = float(d[self.space.excited_mask].sum())
        self.rows.append((t, d[self.idx], norm, photons, excited))
        for k, step in enumerate(self.schedule.steps):
            lo, hi = step.window
            if lo - 1e-12 <= t <= hi + 1e-12:
                self.step_photons[k] = max(self.step_photons[k], photons)
                self.step_excited[k] = max(self.step_excited[k], excited)
                if boundary and abs(t - hi) < 1e-9 and self.targets is not None:
                    e = self.targets[k]
                    if self.mixed:
                        self.step_overlap[k] = float(np.vdot(e, y @ e).real)
                    else:
                        self.step_overlap[k] = float(abs(np.vdot(e, y)) ** 2)

    def series(self) -> TimeSeries:
        return TimeSeries(
            times=np.array([r[0] for r in self.rows]),
            labels=self.labels,
            populations=np.array([r[1] for r in self.rows]),
            norm=np.array([r[2] for r in self.rows]),
            photons=np.array([r[3] for r in self.rows]),
            excited=np.array([r[4] for r in self.rows]),
        )

    def diagnostics(self) -> list[StepDiagnostics]:
        return [
            StepDiagnostics(
                s.index,
                float(self.step_overlap[k]),
                float(self.step_photons[k]),
                float(self.step_excited[k]),
            )
            for k, s in enumerate(self.schedule.steps)
        ]


def _targets(schedule, space, psi0):
    try:
        return expected_path(schedule, space, psi0)
    except ValueError:
        return None


def propagate_pure(
    space: HilbertSpace,
    schedule: ProtocolSchedule,
    cavity: CavityParams,
    psi0: np.ndarray,
    config: IntegratorConfig = IntegratorConfig(),
    observe: Callable[[float, np.ndarray, bool], None] | None = None,
) -> np.ndarray:
    """Propagate one state ``(dim,)`` or several columns ``(dim, k)``; no recording."""
    asm = HamiltonianAssembler(space, schedule.pulses, cavity)
    psi0 = np.asarray(psi0, dtype=complex)

    def check(t, y, boundary):
        err = float(np.max(np.abs(np.linalg.norm(y, axis=0) - 1.0)))
        if err > config.norm_tol:
            raise NumericalError(
                f"norm drift {err:.3e} exceeds tolerance {config.norm_tol:.1e} at t={t:.6g} T_p; "
                "reduce the integrator step size"
            )
        if observe is not None:
            observe(t, y, boundary)

    return _rk4(
        lambda h, y: -1j * (h @ y),
        asm.sparse,
        psi0,
        schedule,
        config.step_for(False),
        config.sample_every,
        check,
    )


def evolve_schrodinger(
    schedule: ProtocolSchedule,
    cavity: CavityParams,
    psi0: np.ndarray,
    config: IntegratorConfig = IntegratorConfig(),
    space: HilbertSpace | None = None,
    tracked: Sequence[BasisState] | None = None,
) -> ProtocolResult:
    space = space or HilbertSpace()
    psi0 = check_state(psi0, space)
    tracked = list(tracked) if tracked is not None else default_tracked(space)
    rec = _Recorder(space, schedule, tracked, False, _targets(schedule, space, psi0))
    drift = [0.0]

    def observe(t, y, boundary):
        drift[0] = max(drift[0], abs(float(np.linalg.norm(y)) - 1.0))
        rec(t, y, boundary)

    final = propagate_pure(space, schedule, cavity, psi0, config, observe)
    return ProtocolResult(
        final=final,
        mixed=False,
        space=space,
        series=rec.series(),
        steps=rec.diagnostics(),
        drift=drift[0],
        engine="schrodinger",
    )


def evolve_lindblad(
    schedule: ProtocolSchedule,
    cavity: CavityParams,
    model: LindbladModel,
    rho0: np.ndarray,
    config: IntegratorConfig = IntegratorConfig(),
    space: HilbertSpace | None = None,
    tracked: Sequence[BasisState] | None = None,
) -> ProtocolResult:
    """Integrate ``d rho/dt = -i[H, rho] + sum_j L rho L^dag - {L^dag L, rho}/2``."""
    space = space or HilbertSpace()
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = to_density_matrix(check_state(rho0, space))
    rho0 = check_density_matrix(rho0, space)
    tracked = list(tracked) if tracked is not None else default_tracked(space)

    ops = model.collapse_operators(space)
    decay = sum((L.conj().T @ L for L in ops), np.zeros((space.dim, space.dim), dtype=complex))
    # H_eff = H - (i/2) sum L^dag L, so -i[H,rho] - {.,rho}/2 = -i H_eff rho + h.c.
    asm = HamiltonianAssembler(space, schedule.pulses, cavity, extra=-0.5j * decay)
    jumps = [sp.csr_matrix(L) for L in ops]

    def rhs(heff, rho):
        x = -1j * (heff @ rho)
        out = x + x.conj().T
        for L in jumps:
            out += L @ (L @ rho).conj().T
        return out

    rec = _Recorder(space, schedule, tracked, True, _targets_mixed(schedule, space, rho0))
    drift = [0.0]
    min_eig = [np.inf]

    def observe(t, rho, boundary):
        err = abs(float(np.trace(rho).real) - 1.0)
        drift[0] = max(drift[0], err)
        if err > config.trace_tol:
            raise NumericalError(
                f"trace drift {err:.3e} exceeds tolerance {config.trace_tol:.1e} at t={t:.6g} T_p; "
                "reduce the integrator step size"
            )
        lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        min_eig[0] = min(min_eig[0], lam)
        if lam < -config.positivity_tol:
            raise NumericalError(
                f"density matrix lost positivity (eigenvalue {lam:.3e}) at t={t:.6g} T_p; "
                "reduce the integrator step size"
            )
        rec(t, rho, boundary)

    final = _rk4(
        rhs, asm.sparse, rho0, schedule, config.step_for(True), config.sample_every, observe
    )
    return ProtocolResult(
        final=final,
        mixed=True,
        space=space,
        series=rec.series(),
        steps=rec.diagnostics(),
        drift=drift[0],
        min_eigenvalue=min_eig[0],
        engine="lindblad",
    )


def _targets_mixed(schedule, space, rho0):
    """Expected path for a rank-one computational input, else None."""
    w, v = np.linalg.eigh(rho0)
    if w[-1] < 1 - 1e-9:
        return None
    return _targets(schedule, space, v[:, -1])


def run_protocol(
    schedule: ProtocolSchedule,
    cavity: CavityParams,
    model: LindbladModel | None,
    initial: np.ndarray,
    config: IntegratorConfig = IntegratorConfig(),
    space: HilbertSpace | None = None,
    tracked: Sequence[BasisState] | None = None,
) -> ProtocolResult:
    """Dispatch to the Lindblad engine when ``model`` has any loss channel."""
    space = space or HilbertSpace()
    initial = np.asarray(initial, dtype=complex)
    if initial.ndim == 1:
        _check_computational(space, initial)
    if model is not None and model.is_dissipative:
        return evolve_lindblad(schedule, cavity, model, initial, config, space, tracked)
    if initial.ndim != 1:
        raise ValueError("the unitary engine needs a state vector, not a density matrix")
    return evolve_schrodinger(schedule, cavity, initial, config, space, tracked)


def _check_computational(space: HilbertSpace, psi: np.ndarray) -> None:
    idx = space.indices(COMPUTATIONAL_STATES)
    stray = np.delete(np.abs(psi), idx)
    if np.any(stray > 1e-12):
        raise ValueError("initial state must be supported on |00>,|01>,|10>,|11> with no photons")

