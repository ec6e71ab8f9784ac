"""Composite Hilbert space of two five-level atoms and one cavity mode.

Basis ordering is lexicographic in (atom1 level, atom2 level, photon number)
with the level order ``g0 < ga < g1 < e < u``::

    index = (5 * i1 + i2) * (n_max + 1) + n

so that, for ``n_max = 3``, index 0 is ``|g0 g0>|0>``, index 1 is
``|g0 g0>|1>`` and index 99 is ``|u u>|3>``.

Kets are written ``|s1 s2>|n>`` with the short level symbols ``0, a, 1, e, u``;
e.g. ``ket("1a", 0)`` is atom 1 in ``|1>``, atom 2 in ``|a>``, cavity vacuum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

N_LEVELS = 5
DEFAULT_N_MAX = 3


class AtomLevel(enum.Enum):
    """The five atomic levels: three ground states and two excited states."""

    G0 = "g0"
    GA = "ga"
    G1 = "g1"
    E = "e"
    U = "u"

    @property
    def index(self) -> int:
        return _LEVEL_ORDER.index(self)

    @property
    def symbol(self) -> str:
        """Single-character label used in ket strings (``0, a, 1, e, u``)."""
        return _SYMBOLS[self]

    @property
    def is_ground(self) -> bool:
        return self in GROUND_LEVELS

    @property
    def is_excited(self) -> bool:
        return self in EXCITED_LEVELS

    @classmethod
    def from_symbol(cls, symbol: str) -> "AtomLevel":
        try:
            return _FROM_SYMBOL[symbol]
        except KeyError:
            raise ValueError(
                f"unknown atomic level {symbol!r}; expected one of "
                f"{sorted(_FROM_SYMBOL)}"
            ) from None


_LEVEL_ORDER = (AtomLevel.G0, AtomLevel.GA, AtomLevel.G1, AtomLevel.E, AtomLevel.U)
_SYMBOLS = {
    AtomLevel.G0: "0",
    AtomLevel.GA: "a",
    AtomLevel.G1: "1",
    AtomLevel.E: "e",
    AtomLevel.U: "u",
}
_FROM_SYMBOL = {s: lvl for lvl, s in _SYMBOLS.items()}
_FROM_SYMBOL.update({lvl.value: lvl for lvl in _LEVEL_ORDER})

GROUND_LEVELS = (AtomLevel.G0, AtomLevel.GA, AtomLevel.G1)
EXCITED_LEVELS = (AtomLevel.E, AtomLevel.U)
LEVELS = _LEVEL_ORDER


class BasisState(NamedTuple):
    """Product state ``|atom1 atom2>|photons>``."""

    atom1: AtomLevel
    atom2: AtomLevel
    photons: int

    def level(self, atom: int) -> AtomLevel:
        if atom == 1:
            return self.atom1
        if atom == 2:
            return self.atom2
        raise ValueError(f"atom must be 1 or 2, got {atom!r}")

    def replace_level(self, atom: int, level: AtomLevel) -> "BasisState":
        if atom == 1:
            return self._replace(atom1=level)
        if atom == 2:
            return self._replace(atom2=level)
        raise ValueError(f"atom must be 1 or 2, got {atom!r}")

    @property
    def is_excited(self) -> bool:
        return self.atom1.is_excited or self.atom2.is_excited

    @property
    def label(self) -> str:
        return f"|{self.atom1.symbol}{self.atom2.symbol}>|{self.photons}>"

    def __str__(self) -> str:
        return self.label


def ket(atoms: str, photons: int = 0) -> BasisState:
    """Build a basis state from a two-symbol atom string, e.g. ``ket("1a", 0)``."""
    if len(atoms) != 2:
        raise ValueError(f"expected two level symbols, got {atoms!r}")
    if photons < 0:
        raise ValueError(f"photon number must be non-negative, got {photons}")
    return BasisState(
        AtomLevel.from_symbol(atoms[0]), AtomLevel.from_symbol(atoms[1]), int(photons)
    )


COMPUTATIONAL_STATES = (ket("00"), ket("01"), ket("10"), ket("11"))


@dataclass(frozen=True)
class HilbertSpace:
    """Truncated space H_atom1 (x) H_atom2 (x) Fock(0..n_max).

    Parameters
    ----------
    n_max : int
        Largest photon number kept. Must be at least 2, since the
        two-photon state ``|11>|2>`` takes part in the dynamics.
    """

    n_max: int = DEFAULT_N_MAX
    states: tuple[BasisState, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(
                f"n_max={self.n_max!r} is too small: the state |11>|2> must be "
                "representable, so n_max >= 2 is required"
            )
        states = tuple(
            BasisState(l1, l2, n)
            for l1 in LEVELS
            for l2 in LEVELS
            for n in range(self.n_max + 1)
        )
        object.__setattr__(self, "states", states)

    @property
    def n_fock(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return N_LEVELS * N_LEVELS * self.n_fock

    def index_of(self, state: BasisState) -> int:
        if state.photons > self.n_max or state.photons < 0:
            raise ValueError(f"{state} lies outside the truncation n_max={self.n_max}")
        return (state.atom1.index * N_LEVELS + state.atom2.index) * self.n_fock + state.photons

    def state_at(self, index: int) -> BasisState:
        return self.states[index]

    def basis_vector(self, state: BasisState) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index_of(state)] = 1.0
        return vec

    def superposition(self, amplitudes: dict[BasisState, complex]) -> np.ndarray:
        """Normalised vector with the given (unnormalised) amplitudes."""
        vec = np.zeros(self.dim, dtype=complex)
        for state, amp in amplitudes.items():
            vec[self.index_of(state)] += amp
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("superposition has zero norm")
        return vec / norm

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def indices(self, subset: Iterable[BasisState]) -> np.ndarray:
        idx = [self.index_of(s) for s in subset]
        if len(set(idx)) != len(idx):
            raise ValueError("subset contains duplicate basis states")
        return np.asarray(idx, dtype=int)

    @cached_property
    def excited_mask(self) -> np.ndarray:
        """Boolean mask of basis states with at least one atom in ``e`` or ``u``."""
        return np.array([s.is_excited for s in self.states])

    @cached_property
    def photon_numbers(self) -> np.ndarray:
        return np.array([s.photons for s in self.states], dtype=float)


def build_space(n_max: int = DEFAULT_N_MAX) -> HilbertSpace:
    return HilbertSpace(n_max)


def _atom_factor(level_op: np.ndarray, atom: int) -> np.ndarray:
    eye = np.eye(N_LEVELS)
    if atom == 1:
        return np.kron(level_op, eye)
    if atom == 2:
        return np.kron(eye, level_op)
    raise ValueError(f"atom must be 1 or 2, got {atom!r}")


def annihilation(space: HilbertSpace) -> np.ndarray:
    """Cavity lowering operator ``a`` with ``a|n> = sqrt(n)|n-1>``."""
    a = np.diag(np.sqrt(np.arange(1, space.n_fock)), k=1)
    return np.kron(np.eye(N_LEVELS * N_LEVELS), a).astype(complex)


def photon_number(space: HilbertSpace) -> np.ndarray:
    return np.diag(space.photon_numbers).astype(complex)


def atomic_operator(space: HilbertSpace, atom: int, upper: AtomLevel, lower: AtomLevel) -> np.ndarray:
    """``|upper><lower|`` on one atom, identity on the other atom and the cavity.

    No level restriction; :func:`atomic_transition` is the checked variant.
    """
    single = np.zeros((N_LEVELS, N_LEVELS))
    single[upper.index, lower.index] = 1.0
    return np.kron(_atom_factor(single, atom), np.eye(space.n_fock)).astype(complex)


def atomic_transition(space: HilbertSpace, atom: int, upper: AtomLevel, lower: AtomLevel) -> np.ndarray:
    """Raising operator ``|upper><lower|`` for an excited ``upper`` and ground ``lower``."""
    if atom not in (1, 2):
        raise ValueError(f"atom must be 1 or 2, got {atom!r}")
    if not upper.is_excited or not lower.is_ground:
        raise ValueError(
            f"invalid transition {lower.value}->{upper.value}: upper must be one of "
            "{e, u} and lower one of {g0, ga, g1}"
        )
    return atomic_operator(space, atom, upper, lower)


def projector(space: HilbertSpace, states: Iterable[BasisState]) -> np.ndarray:
    diag = np.zeros(space.dim)
    for s in states:
        diag[space.index_of(s)] = 1.0
    return np.diag(diag).astype(complex)


def restrict(obj: np.ndarray, space: HilbertSpace, subset: Sequence[BasisState]) -> np.ndarray:
    """Principal submatrix (or subvector) on ``subset``, in the subset's order."""
    idx = space.indices(subset)
    obj = np.asarray(obj)
    if obj.ndim == 1:
        return obj[idx].copy()
    if obj.ndim == 2 and obj.shape == (space.dim, space.dim):
        return obj[np.ix_(idx, idx)].copy()
    raise ValueError(f"cannot restrict array of shape {obj.shape} on a space of dim {space.dim}")


def embed(block: np.ndarray, space: HilbertSpace, subset: Sequence[BasisState]) -> np.ndarray:
    """Inverse of :func:`restrict`: zero-pad a block back into the full space."""
    idx = space.indices(subset)
    block = np.asarray(block)
    if block.ndim == 1:
        out = np.zeros(space.dim, dtype=complex)
        out[idx] = block
        return out
    out = np.zeros((space.dim, space.dim), dtype=complex)
    out[np.ix_(idx, idx)] = block
    return out


def check_state(psi: np.ndarray, space: HilbertSpace, tol: float = 1e-10) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (space.dim,):
        raise ValueError(f"state has shape {psi.shape}, expected ({space.dim},)")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state is not normalised (norm={norm:.12g})")
    return psi


def check_density_matrix(rho: np.ndarray, space: HilbertSpace, tol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (space.dim, space.dim):
        raise ValueError(f"density matrix has shape {rho.shape}, expected {(space.dim,) * 2}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    trace = np.trace(rho).real
    if abs(trace - 1.0) > tol:
        raise ValueError(f"density matrix trace is {trace:.12g}, expected 1")
    min_eig = np.linalg.eigvalsh(rho).min()
    if min_eig < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {min_eig:.3e}")
    return rho


def to_density_matrix(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())
