"""Simulate and verify an adiabatic-passage CNOT gate for two five-level atoms in a cavity."""

from .config import ConfigError, RunConfig, SweepSpec, parse_config
from .darkstates import dark_phi7_3, dark_phi16, dark_sti, geometric_couplings, numeric_kernel
from .dynamics import (
    IntegratorConfig,
    LindbladModel,
    NumericalError,
    ProtocolResult,
    evolve_lindblad,
    evolve_schrodinger,
    run_protocol,
)
from .gateanalysis import CNOT, extract_gate, gate_fidelity, state_fidelity, target_composition, truth_table
from .hamiltonian import CavityParams, interaction_hamiltonian, lambda_hamiltonian
from .pulses import PulseShape, ProtocolSchedule, build_cnot_protocol, merge_adjacent_pulses
from .statespace import AtomLevel, BasisState, HilbertSpace, build_space, ket

__all__ = [
    "AtomLevel",
    "BasisState",
    "CNOT",
    "CavityParams",
    "ConfigError",
    "HilbertSpace",
    "IntegratorConfig",
    "LindbladModel",
    "NumericalError",
    "ProtocolResult",
    "ProtocolSchedule",
    "PulseShape",
    "RunConfig",
    "SweepSpec",
    "build_cnot_protocol",
    "build_space",
    "dark_phi16",
    "dark_phi7_3",
    "dark_sti",
    "evolve_lindblad",
    "evolve_schrodinger",
    "extract_gate",
    "gate_fidelity",
    "geometric_couplings",
    "interaction_hamiltonian",
    "ket",
    "lambda_hamiltonian",
    "merge_adjacent_pulses",
    "numeric_kernel",
    "parse_config",
    "run_protocol",
    "state_fidelity",
    "target_composition",
    "truth_table",
]
