"""Gate-level views of protocol runs: truth tables, 4x4 gates, fidelities.

Computational basis order is (|00>, |01>, |10>, |11>), all with zero photons;
the first symbol is the control atom.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import IntegratorConfig, ProtocolResult, propagate_pure
from .hamiltonian import CavityParams
from .pulses import ProtocolSchedule
from .statespace import COMPUTATIONAL_STATES, HilbertSpace

CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)


def c_phase(phi: float) -> np.ndarray:
    return np.diag([1, 1, 1, np.exp(1j * phi)])


def phase_gate_2(phi: float) -> np.ndarray:
    """Ph^(2): phase ``exp(i phi)`` on level |1> of the target atom."""
    return np.diag([1, np.exp(1j * phi), 1, np.exp(1j * phi)])


def target_composition(phases: Sequence[float]) -> np.ndarray:
    """``Ph2(p6) . Cphase(p2 + p4) . CNOT . Cphase(p3 + p5) . Ph2(p1)``."""
    p1, p2, p3, p4, p5, p6 = (float(p) for p in phases)
    return phase_gate_2(p6) @ c_phase(p2 + p4) @ CNOT @ c_phase(p3 + p5) @ phase_gate_2(p1)


def gate_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Global-phase-invariant overlap ``|Tr(U^dag V)| / d``."""
    u, v = np.asarray(u), np.asarray(v)
    return float(abs(np.trace(u.conj().T @ v)) / u.shape[0])


def state_fidelity(state: np.ndarray, target: np.ndarray) -> float:
    """``|<target|psi>|^2`` or ``<target|rho|target>``."""
    state, target = np.asarray(state), np.asarray(target)
    if state.ndim == 1:
        return float(abs(np.vdot(target, state)) ** 2)
    return float(np.vdot(target, state @ target).real)


def unitarity_deviation(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2))


@dataclass
class TruthTable:
    """Row i holds the final computational populations for input i."""

    matrix: np.ndarray
    failed: list[int]

    @property
    def ok(self) -> bool:
        return not self.failed


def truth_table(results: Sequence[ProtocolResult], leakage_floor: float = 0.5) -> TruthTable:
    if len(results) != 4:
        raise ValueError(f"a truth table needs the four basis runs, got {len(results)}")
    rows = []
    for r in results:
        rows.append([r.population(s) for s in COMPUTATIONAL_STATES])
    table = np.array(rows)
    failed = [i for i, row in enumerate(table) if row.sum() < leakage_floor]
    return TruthTable(table, failed)


@dataclass
class GateMatrix:
    matrix: np.ndarray
    unitarity_deviation: float
    flagged: bool

    def truth_table(self) -> np.ndarray:
        """Populations implied by the matrix, laid out like :func:`truth_table`."""
        return (np.abs(self.matrix) ** 2).T

    def fidelity(self, target: np.ndarray) -> float:
        return gate_fidelity(self.matrix, target)


def extract_gate(
    schedule: ProtocolSchedule,
    cavity: CavityParams,
    config: IntegratorConfig = IntegratorConfig(),
    space: HilbertSpace | None = None,
    flag_above: float = 0.1,
) -> GateMatrix:
    """Column j is the evolved basis input j projected on the computational subspace."""
    space = space or HilbertSpace()
    idx = space.indices(COMPUTATIONAL_STATES)
    psi0 = np.zeros((space.dim, 4), dtype=complex)
    psi0[idx, np.arange(4)] = 1.0
    final = propagate_pure(space, schedule, cavity, psi0, config)
    u = final[idx, :]
    dev = unitarity_deviation(u)
    return GateMatrix(u, dev, dev > flag_above)


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]
