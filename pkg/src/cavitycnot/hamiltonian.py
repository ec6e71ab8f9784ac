"""Interaction-picture Hamiltonian at exact resonance.

    H_I(t) = sum_i [ Omega^(i)(t) |e_i><L_i| + g_i a |e_i><1_i| ] + h.c.
             + (lambda-step lasers on |u>) + h.c.

The lab-frame frequencies drop out at resonance, so only H_I is built.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .pulses import Coupling, Pulse, PulseTable, StepSpec
from .statespace import (
    AtomLevel,
    BasisState,
    HilbertSpace,
    annihilation,
    atomic_operator,
    atomic_transition,
    photon_number,
)

# which laser transitions exist; g1 <-> e belongs to the cavity only
LASER_TRANSITIONS = {
    AtomLevel.E: (AtomLevel.G0, AtomLevel.GA),
    AtomLevel.U: (AtomLevel.GA, AtomLevel.G1),
}


@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity couplings g^(1), g^(2) in units of 1/T_p."""

    g1: float
    g2: float

    def __post_init__(self):
        if self.g1 < 0 or self.g2 < 0:
            raise ValueError(f"cavity couplings must be >= 0, got g1={self.g1}, g2={self.g2}")

    @classmethod
    def symmetric(cls, g: float) -> "CavityParams":
        return cls(g, g)

    def g(self, atom: int) -> float:
        return self.g1 if atom == 1 else self.g2


def check_coupling(atom: int, upper: AtomLevel, lower: AtomLevel) -> None:
    if atom not in (1, 2):
        raise ValueError(f"atom must be 1 or 2, got {atom!r}")
    if lower not in LASER_TRANSITIONS.get(upper, ()):
        raise ValueError(
            f"no laser drives {lower.value}->{upper.value}: the e level is laser-coupled "
            "to g0/ga only (g1<->e is the cavity transition) and u to ga/g1 only"
        )


def cavity_hamiltonian(space: HilbertSpace, cavity: CavityParams) -> np.ndarray:
    a = annihilation(space)
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for atom in (1, 2):
        g = cavity.g(atom)
        if g:
            h += g * a @ atomic_transition(space, atom, AtomLevel.E, AtomLevel.G1)
    return h + h.conj().T


def interaction_hamiltonian(
    space: HilbertSpace, couplings: Iterable[Coupling], cavity: CavityParams
) -> np.ndarray:
    raising = np.zeros((space.dim, space.dim), dtype=complex)
    for c in couplings:
        check_coupling(c.atom, c.upper, c.lower)
        if c.amplitude:
            raising += c.amplitude * atomic_operator(space, c.atom, c.upper, c.lower)
    return raising + raising.conj().T + cavity_hamiltonian(space, cavity)


def lambda_hamiltonian(
    space: HilbertSpace, atom: int, omega_1sti: complex, omega_asti: complex, phi: float
) -> np.ndarray:
    """``Omega_1 |u><1| + exp(-i phi) Omega_a |u><a| + h.c.`` on one atom.

    Its kernel on span{|1>, |a>} is ``Omega_a|1> - exp(i phi) Omega_1|a>``.
    """
    up = omega_1sti * atomic_transition(space, atom, AtomLevel.U, AtomLevel.G1)
    up = up + np.exp(-1j * phi) * omega_asti * atomic_transition(space, atom, AtomLevel.U, AtomLevel.GA)
    return up + up.conj().T


def excitation_number(space: HilbertSpace) -> np.ndarray:
    """``a^dag a + |e_1><e_1| + |e_2><e_2|``, conserved by the cavity couplings."""
    n = photon_number(space)
    for atom in (1, 2):
        n = n + atomic_operator(space, atom, AtomLevel.E, AtomLevel.E)
    return n


def step_hamiltonian(
    space: HilbertSpace,
    step: StepSpec,
    cavity: CavityParams,
    omega1: complex,
    omega2: complex,
) -> np.ndarray:
    """H_I for one step with its first/second pulse amplitudes set to ``omega1``/``omega2``.

    For cavity steps ``omega1``/``omega2`` are assigned per *atom* (atom 1, atom 2);
    for lambda steps they are the first and second pulse of the step.
    """
    if step.kind == "cavity_stirap":
        amps = {1: omega1, 2: omega2}
        couplings = [Coupling(p.atom, p.upper, p.lower, amps[p.atom]) for p in step.pulses]
    else:
        couplings = [
            Coupling(p.atom, p.upper, p.lower, amp) for p, amp in zip(step.pulses, (omega1, omega2))
        ]
    return interaction_hamiltonian(space, couplings, cavity)


def coupling_closure(
    space: HilbertSpace, H: np.ndarray, seed: BasisState, atol: float = 0.0
) -> list[BasisState]:
    """Breadth-first closure of ``seed`` under nonzero matrix elements of ``H``."""
    start = space.index_of(seed)
    order = [start]
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(np.abs(H[:, i]) > atol):
            j = int(j)
            if j not in seen:
                seen.add(j)
                order.append(j)
                queue.append(j)
    return [space.state_at(i) for i in order]


class HamiltonianAssembler:
    """Fast H(t) for a fixed pulse set, on a fixed sparse pattern.

    ``H(t) = H_cav + sum_k Omega_k(t) R_k + conj(Omega_k(t)) R_k^dag`` where
    R_k is the raising operator of pulse k.  An optional constant term
    ``extra`` (e.g. ``-i/2 sum L^dag L``) is added to every evaluation.
    """

    def __init__(
        self,
        space: HilbertSpace,
        pulses: Sequence[Pulse],
        cavity: CavityParams,
        extra: np.ndarray | None = None,
        floor: float | None = None,
    ):
        for p in pulses:
            check_coupling(p.atom, p.upper, p.lower)
        self.space = space
        self.table = PulseTable(pulses) if floor is None else PulseTable(pulses, floor)
        const = cavity_hamiltonian(space, cavity)
        if extra is not None:
            const = const + extra
        raising = [atomic_operator(space, p.atom, p.upper, p.lower) for p in pulses]

        pattern = np.abs(const) + np.eye(space.dim)
        for r in raising:
            pattern = pattern + r + r.T
        rows, cols = np.nonzero(pattern)
        # CSR layout: row-major order from np.nonzero is already sorted
        self._indices = cols.astype(np.int32)
        self._indptr = np.searchsorted(rows, np.arange(space.dim + 1)).astype(np.int32)
        self._const = const[rows, cols]
        k = len(raising)
        self._up = np.zeros((k, rows.size))
        self._down = np.zeros((k, rows.size))
        for i, r in enumerate(raising):
            self._up[i] = r[rows, cols].real
            self._down[i] = r.T[rows, cols].real
        self._shape = (space.dim, space.dim)

    def amplitudes(self, t: float) -> np.ndarray:
        return self.table(t)

    def data(self, omegas: np.ndarray) -> np.ndarray:
        return self._const + omegas @ self._up + omegas.conj() @ self._down

    def sparse(self, t: float) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.data(self.table(t)), self._indices, self._indptr), shape=self._shape
        )

    def dense(self, t: float) -> np.ndarray:
        return self.sparse(t).toarray()
