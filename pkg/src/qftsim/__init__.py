"""Pulse-level simulator of the three-spin NMR quantum Fourier transform."""

from .compiler import (
    CompiledBlock,
    compile_A,
    compile_B,
    compile_qft,
    fold_z_rotations,
    insert_refocusing,
    load_eq11_program,
    target_unitary,
)
from .core import kron, matrix_exponential, rotation, spin_operator, traceless_part
from .nmr import SpinSystem, alanine, free_evolution, internal_hamiltonian, relax, thermal_state
from .progtext import format_program, parse_program
from .pulses import Delay, Pulse, PulseProgram, program_unitary, simulate
from .qft import Gate, GateSequence, apply_qft, bit_reversal, coppersmith_sequence, gate_matrix, ideal_qft

__version__ = "0.1.0"
