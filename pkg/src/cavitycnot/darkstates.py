"""Analytic dark states of H_I and the checks that go with them.

Notation for a cavity step: ``L_i`` is the ground level of atom ``i`` driven
by that step's laser (g0 or ga) and ``N_i`` the other one.  ``omega1`` and
``omega2`` are the complex laser amplitudes on atom 1 and atom 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .hamiltonian import CavityParams, coupling_closure, interaction_hamiltonian, step_hamiltonian
from .pulses import (
    CAVITY_STIRAP,
    DEFAULT_FLOOR,
    LAMBDA_STIRAP,
    ProtocolSchedule,
    StepSpec,
    active_couplings,
)
from .statespace import (
    COMPUTATIONAL_STATES,
    AtomLevel,
    BasisState,
    HilbertSpace,
    ket,
    restrict,
)

G0, GA, G1 = AtomLevel.G0, AtomLevel.GA, AtomLevel.G1
KERNEL_TOL = 1e-10


def other_ground(level: AtomLevel) -> AtomLevel:
    """N for a given L: swaps g0 and ga."""
    if level is G0:
        return GA
    if level is GA:
        return G0
    raise ValueError(f"laser-driven ground level must be g0 or ga, got {level.value}")


def _state(l1: AtomLevel, l2: AtomLevel, n: int) -> BasisState:
    return BasisState(l1, l2, n)


def _normalised(space: HilbertSpace, amps: dict[BasisState, complex], what: str) -> np.ndarray:
    vec = np.zeros(space.dim, dtype=complex)
    for s, a in amps.items():
        vec[space.index_of(s)] += a
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError(f"{what}: all coefficients vanish, the state is undefined")
    return vec / norm


def dark_sti(omega_asti: complex, omega_1sti: complex, phi: float) -> np.ndarray:
    """Coefficients (c_1, c_a) of ``Omega_a|1> - exp(i phi) Omega_1|a>``, normalised."""
    coeffs = np.array([omega_asti, -np.exp(1j * phi) * omega_1sti], dtype=complex)
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise ValueError("dark_sti: both STIRAP amplitudes are zero")
    return coeffs / norm


def embed_sti(
    space: HilbertSpace,
    coeffs: np.ndarray,
    spectator: AtomLevel,
    atom: int = 2,
    photons: int = 0,
) -> np.ndarray:
    """Place a (|1>, |a>) coefficient pair on ``atom`` with the other atom in ``spectator``."""
    vec = np.zeros(space.dim, dtype=complex)
    for level, c in zip((G1, GA), coeffs):
        pair = (spectator, level) if atom == 2 else (level, spectator)
        vec[space.index_of(_state(*pair, photons))] = c
    return vec


def dark_phi7_3(
    space: HilbertSpace,
    omega1: complex,
    omega2: complex,
    g1: float,
    g2: float,
    l1: AtomLevel,
    l2: AtomLevel,
) -> np.ndarray:
    """``g1 W2 |L1 1>|0> + g2 W1 |1 L2>|0> - W1 W2 |11>|1>``, normalised."""
    amps = {
        _state(l1, G1, 0): g1 * omega2,
        _state(G1, l2, 0): g2 * omega1,
        _state(G1, G1, 1): -omega1 * omega2,
    }
    return _normalised(space, amps, "phi7(3)")


def dark_phi16(
    space: HilbertSpace,
    k: int,
    omega1: complex,
    omega2: complex,
    g1: float,
    g2: float,
    l1: AtomLevel,
    l2: AtomLevel,
) -> np.ndarray:
    """The four dark states phi16(k), k = 2..5, of the 16-dimensional block."""
    n1, n2 = other_ground(l1), other_ground(l2)
    r2 = np.sqrt(2.0)
    if k == 2:
        amps = {_state(n1, G1, 1): omega2, _state(n1, l2, 0): -g2}
    elif k == 3:
        amps = {_state(G1, n2, 1): omega1, _state(l1, n2, 0): -g1}
    elif k == 4:
        amps = {_state(n1, n2, 0): 1.0}
    elif k == 5:
        amps = {
            _state(l1, l2, 0): g1 * g2 * r2,
            _state(G1, l2, 1): -g2 * omega1 * r2,
            _state(l1, G1, 1): -g1 * omega2 * r2,
            _state(G1, G1, 2): omega1 * omega2,
        }
    else:
        raise ValueError(f"phi16 index must be 2, 3, 4 or 5, got {k!r}")
    return _normalised(space, amps, f"phi16({k})")


def block7_states(l1: AtomLevel, l2: AtomLevel) -> list[BasisState]:
    """The 7-dimensional block: two isolated states plus the five-state chain."""
    n1, n2 = other_ground(l1), other_ground(l2)
    return [
        _state(n1, G1, 0),
        _state(G1, n2, 0),
        _state(G1, l2, 0),
        _state(G1, AtomLevel.E, 0),
        _state(G1, G1, 1),
        _state(AtomLevel.E, G1, 0),
        _state(l1, G1, 0),
    ]


def block16_seeds(l1: AtomLevel, l2: AtomLevel) -> list[BasisState]:
    n1, n2 = other_ground(l1), other_ground(l2)
    return [_state(n1, l2, 0), _state(n1, n2, 0), _state(l1, n2, 0), _state(l1, l2, 0)]


def numeric_kernel(H: np.ndarray, tol: float = KERNEL_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical null space of ``H``.

    Singular values below ``tol * ||H||_2`` count as zero; a zero matrix has
    the full space as kernel.
    """
    H = np.asarray(H, dtype=complex)
    _, s, vh = np.linalg.svd(H)
    scale = s[0] if s.size else 0.0
    if scale == 0.0:
        return np.eye(H.shape[0], dtype=complex)
    null = s < tol * scale
    return vh[null].conj().T


def kernel_overlap(vec: np.ndarray, kernel: np.ndarray) -> float:
    """Norm of the projection of a unit vector onto the span of ``kernel``."""
    return float(np.linalg.norm(kernel.conj().T @ vec))


# ---------------------------------------------------------------------------
# Families and geometric couplings


@dataclass
class DarkFamily:
    """Orthonormal dark vectors sampled on a time grid.

    ``vectors`` has shape (n_times, dim, n_states).
    """

    times: np.ndarray
    vectors: np.ndarray
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.vectors = np.asarray(self.vectors, dtype=complex)
        if self.vectors.ndim != 3 or self.vectors.shape[0] != self.times.size:
            raise ValueError("vectors must have shape (n_times, dim, n_states)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")

    def gauge_fixed(self) -> "DarkFamily":
        """Rephase every vector so successive overlaps are real and positive."""
        vecs = self.vectors.copy()
        for j in range(1, vecs.shape[0]):
            ov = np.einsum("ik,ik->k", vecs[j - 1].conj(), vecs[j])
            mag = np.abs(ov)
            phase = np.where(mag > 0, ov / np.where(mag > 0, mag, 1.0), 1.0)
            vecs[j] *= phase.conj()
        return DarkFamily(self.times, vecs, list(self.labels))

    def subsample(self, every: int = 2) -> "DarkFamily":
        return DarkFamily(self.times[::every], self.vectors[::every], list(self.labels))


@dataclass
class GeometricCouplings:
    matrix: np.ndarray
    coarse: np.ndarray
    converged: bool

    @property
    def max(self) -> float:
        return float(self.matrix.max()) if self.matrix.size else 0.0


def _connection_sup(family: DarkFamily) -> np.ndarray:
    v, t = family.vectors, family.times
    if t.size < 3:
        raise ValueError("need at least three samples for a centred difference")
    dv = (v[2:] - v[:-2]) / (t[2:] - t[:-2])[:, None, None]
    m = np.einsum("tik,til->tkl", v[1:-1].conj(), dv)
    # the exact connection of an orthonormal family is anti-Hermitian; the
    # Hermitian part of the difference quotient is pure truncation error
    a = 0.5 * (m - np.conj(np.swapaxes(m, 1, 2)))
    return np.abs(a).max(axis=0)


def geometric_couplings(
    family: DarkFamily, *, rel_change: float = 0.1, abs_floor: float = 1e-12
) -> GeometricCouplings:
    """Sup over the grid of ``|<v_k'(s)| d/ds |v_k(s)>|`` after gauge fixing.

    The estimate is repeated on every second sample; ``converged`` is False
    when halving the resolution moves any entry by more than ``rel_change``
    (entries below ``abs_floor`` are treated as zero).
    """
    fixed = family.gauge_fixed()
    fine = _connection_sup(fixed)
    coarse = _connection_sup(fixed.subsample(2))
    diff = np.abs(fine - coarse)
    scale = np.maximum(np.abs(fine), np.abs(coarse))
    ok = (diff <= rel_change * scale) | (scale <= abs_floor)
    return GeometricCouplings(fine, coarse, bool(ok.all()))


# ---------------------------------------------------------------------------
# Step-level helpers


def step_amplitudes(step: StepSpec, t: float) -> tuple[complex, complex]:
    """Laser amplitudes at ``t``: per atom for cavity steps, (first, second) otherwise."""
    if step.kind == CAVITY_STIRAP:
        return complex(step.pulse_on(1).shape.value(t)), complex(step.pulse_on(2).shape.value(t))
    return complex(step.first.shape.value(t)), complex(step.second.shape.value(t))


def _coupling_amplitudes(step: StepSpec, couplings) -> tuple[complex, complex]:
    """Same as :func:`step_amplitudes` but read off a list of active couplings."""
    lookup = {(c.atom, c.upper, c.lower): c.amplitude for c in couplings}
    pulses = (step.pulse_on(1), step.pulse_on(2)) if step.kind == CAVITY_STIRAP else step.pulses
    return tuple(lookup.get((p.atom, p.upper, p.lower), 0j) for p in pulses)


def step_dark_states(
    space: HilbertSpace,
    step: StepSpec,
    cavity: CavityParams,
    a1: complex,
    a2: complex,
) -> dict[str, np.ndarray]:
    """All analytic dark states relevant to the computational inputs of a step."""
    if step.kind == LAMBDA_STIRAP:
        first, second = step.pulses
        by_level = {first.lower: a1, second.lower: a2}
        # pulse phases live in the complex amplitudes, hence phi = 0
        coeffs = dark_sti(by_level[GA], by_level[G1], 0.0)
        return {
            f"phi_sti[{lvl.symbol}]": embed_sti(space, coeffs, lvl, atom=step.first.atom)
            for lvl in (G0, G1)
        }
    l1, l2 = step.laser_levels
    n1, n2 = other_ground(l1), other_ground(l2)
    g1, g2 = cavity.g1, cavity.g2
    out = {
        "phi1": space.basis_vector(ket("11")),
        "phi7(1)": space.basis_vector(_state(n1, G1, 0)),
        "phi7(2)": space.basis_vector(_state(G1, n2, 0)),
        "phi7(3)": dark_phi7_3(space, a1, a2, g1, g2, l1, l2),
    }
    for k in (2, 3, 4, 5):
        out[f"phi16({k})"] = dark_phi16(space, k, a1, a2, g1, g2, l1, l2)
    return out


def dark_family(
    space: HilbertSpace,
    step: StepSpec,
    cavity: CavityParams,
    times: Sequence[float],
) -> DarkFamily:
    labels: list[str] = []
    samples = []
    for t in times:
        states = step_dark_states(space, step, cavity, *step_amplitudes(step, t))
        labels = list(states)
        samples.append(np.stack(list(states.values()), axis=1))
    return DarkFamily(np.asarray(times), np.stack(samples), labels)


class Connection(NamedTuple):
    state: BasisState
    phase: complex
    spectator: bool


def expected_connection(step: StepSpec, state: BasisState) -> Connection:
    """Where adiabatic following takes a zero-photon ground input during ``step``.

    Cavity steps move ``|1 L2>|0>`` to ``|L1 1>|0>`` (or back, when the atom-2
    pulse comes first) with phase ``exp(i dphi)``; lambda steps move the
    target atom between g1 and ga with phase ``-exp(i dphi)``; ``dphi`` is
    the second-minus-first pulse phase.  Anything else is a spectator.
    """
    rel = np.exp(1j * step.relative_phase)
    if step.kind == LAMBDA_STIRAP:
        atom = step.first.atom
        src, dst = (G1, GA) if step.first.lower is GA else (GA, G1)
        if state.photons == 0 and state.level(atom) is src and not state.level(3 - atom).is_excited:
            return Connection(state.replace_level(atom, dst), complex(-rel), False)
        return Connection(state, 1.0 + 0j, True)
    l1, l2 = step.laser_levels
    a, b = _state(G1, l2, 0), _state(l1, G1, 0)
    if step.first.atom == 2:
        a, b = b, a
    if state == a:
        return Connection(b, complex(rel), False)
    return Connection(state, 1.0 + 0j, True)


def expected_path(
    schedule: ProtocolSchedule, space: HilbertSpace, psi0: np.ndarray
) -> list[np.ndarray]:
    """Ideal state after each step for a computational zero-photon input."""
    psi0 = np.asarray(psi0, dtype=complex)
    comp = {space.index_of(s): s for s in COMPUTATIONAL_STATES}
    stray = np.delete(np.abs(psi0), list(comp))
    if np.any(stray > 1e-12):
        raise ValueError("initial state must be supported on |00>,|01>,|10>,|11> with no photons")
    current = {s: psi0[i] for i, s in comp.items() if psi0[i] != 0}
    out = []
    for step in schedule.steps:
        nxt: dict[BasisState, complex] = {}
        for s, amp in current.items():
            conn = expected_connection(step, s)
            nxt[conn.state] = nxt.get(conn.state, 0) + amp * conn.phase
        current = nxt
        vec = np.zeros(space.dim, dtype=complex)
        for s, amp in current.items():
            vec[space.index_of(s)] = amp
        out.append(vec)
    return out


# ---------------------------------------------------------------------------
# Verification report


@dataclass
class StepReport:
    step: int
    max_residual: float
    max_excited_amplitude: float
    kernel_dim_7: tuple[int, int]
    min_kernel_overlap: float
    geometric_max: float
    geometric_converged: bool

    def ok(self, residual_tol: float = 1e-10, geometric_tol: float = 1e-8) -> bool:
        kernel_ok = self.kernel_dim_7 == (3, 3) if self.kernel_dim_7 != (0, 0) else True
        return (
            self.max_residual <= residual_tol
            and self.max_excited_amplitude == 0.0
            and kernel_ok
            and self.min_kernel_overlap >= 1 - 1e-10
            and self.geometric_max <= geometric_tol
            and self.geometric_converged
        )


def verify_step(
    space: HilbertSpace,
    schedule: ProtocolSchedule,
    step: StepSpec,
    cavity: CavityParams,
    n_samples: int = 401,
    floor: float = DEFAULT_FLOOR,
) -> StepReport:
    """Residuals, excited-state support, kernel dimension and geometric couplings."""
    times = np.linspace(*step.window, n_samples)
    excited = space.excited_mask
    max_res = 0.0
    max_exc = 0.0
    kdims = []
    min_overlap = 1.0
    for t in times:
        couplings = active_couplings(schedule, t, floor)
        H = interaction_hamiltonian(space, couplings, cavity)
        scale = np.linalg.norm(H, 2)
        states = step_dark_states(space, step, cavity, *_coupling_amplitudes(step, couplings))
        for vec in states.values():
            max_res = max(max_res, float(np.linalg.norm(H @ vec)) / scale)
            max_exc = max(max_exc, float(np.abs(vec[excited]).max()))
        if step.kind == CAVITY_STIRAP:
            block = block7_states(*step.laser_levels)
            kernel = numeric_kernel(restrict(H, space, block))
            kdims.append(kernel.shape[1])
            phi = restrict(states["phi7(3)"], space, block)
            min_overlap = min(min_overlap, kernel_overlap(phi, kernel))
    geo = geometric_couplings(dark_family(space, step, cavity, times))
    return StepReport(
        step=step.index,
        max_residual=max_res,
        max_excited_amplitude=max_exc,
        kernel_dim_7=(min(kdims), max(kdims)) if kdims else (0, 0),
        min_kernel_overlap=min_overlap,
        geometric_max=geo.max,
        geometric_converged=geo.converged,
    )


def block_dimensions(
    space: HilbertSpace,
    step: StepSpec,
    cavity: CavityParams,
    omega1: complex = 1.0,
    omega2: complex = 1.0,
) -> dict[str, list[BasisState]]:
    """Closures of the computational-input blocks at a generic point of a cavity step."""
    H = step_hamiltonian(space, step, cavity, omega1, omega2)
    l1, l2 = step.laser_levels
    n1, n2 = other_ground(l1), other_ground(l2)
    chain = coupling_closure(space, H, _state(G1, l2, 0))
    isolated = [_state(n1, G1, 0), _state(G1, n2, 0)]
    for s in isolated:
        if coupling_closure(space, H, s) != [s]:
            raise AssertionError(f"{s} is not isolated at step {step.index}")
    big: list[BasisState] = []
    for seed in block16_seeds(l1, l2):
        for s in coupling_closure(space, H, seed):
            if s not in big:
                big.append(s)
    return {
        "H1": coupling_closure(space, H, ket("11")),
        "H7": isolated + chain,
        "H16": big,
    }
