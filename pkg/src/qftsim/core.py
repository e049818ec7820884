"""Dense operator algebra for small spin-1/2 systems.

Conventions used everywhere in the package:

* Basis states are ordered ``|00...0>, ..., |11...1>`` with spin 1 as the
  most significant bit.  Bit value 0 is spin-up (``I_z = +1/2``).
* Spins are labelled from 1 in this module (``spin_operator``, ``rotation``).
* Rotations are active, ``exp(-i * angle * n.I)``, with the pulse axis
  ``cos(phase) x + sin(phase) y``.
* Programs are listed chronologically, so the matrix of a sequence is the
  right-to-left product of its elements.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable

import numpy as np

__all__ = [
    "PAULI",
    "kron",
    "identity",
    "is_power_of_two",
    "num_spins",
    "spin_operator",
    "rotation",
    "z_rotation",
    "z_values",
    "matrix_exponential",
    "traceless_part",
    "conjugate",
    "is_hermitian",
    "is_unitary",
    "commutator",
    "align_global_phase",
    "max_deviation_up_to_phase",
]

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of any number of operators, left factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


def num_spins(dim: int) -> int:
    """Number of spins for a Hilbert-space dimension, raising if not ``2**n``."""
    if not is_power_of_two(dim) or dim < 2:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return dim.bit_length() - 1


def _check_spin(spin: int, n: int) -> None:
    if n < 1:
        raise ValueError(f"spin count must be >= 1, got {n}")
    if not 1 <= spin <= n:
        raise ValueError(f"spin index {spin} out of range 1..{n}")


def spin_operator(axis: str, spin: int, n: int) -> np.ndarray:
    """Single-spin operator ``I_axis = sigma_axis / 2`` on ``spin`` of ``n``."""
    _check_spin(spin, n)
    try:
        sigma = PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}") from None
    factors = [PAULI["i"]] * n
    factors[spin - 1] = sigma / 2
    return kron(*factors)


def z_values(n: int) -> np.ndarray:
    """Eigenvalues of each ``I_z^i`` on every basis state, shape ``(2**n, n)``."""
    labels = np.arange(2**n)
    bits = (labels[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 0.5 - bits


def _single_rotation(angle: float, phase: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    e = np.exp(-1j * phase)
    return np.array([[c, -1j * s * e], [-1j * s * np.conj(e), c]], dtype=complex)


def rotation(targets: Iterable[int], angle: float, phase: float, n: int) -> np.ndarray:
    """RF rotation ``exp(-i angle sum_j (cos(phase) I_x^j + sin(phase) I_y^j))``.

    The targets commute with each other, so the result is built as a tensor
    product of closed-form 2x2 rotations rather than a matrix exponential.
    """
    targets = set(targets)
    if not targets:
        raise ValueError("rotation needs at least one target spin")
    for t in targets:
        _check_spin(t, n)
    r = _single_rotation(angle, phase)
    return kron(*[r if i in targets else PAULI["i"] for i in range(1, n + 1)])


def z_rotation(angles, n: int | None = None) -> np.ndarray:
    """Diagonal ``exp(-i sum_i angles[i] I_z^i)`` for per-spin angles."""
    angles = np.asarray(angles, dtype=float)
    n = len(angles) if n is None else n
    if len(angles) != n:
        raise ValueError("need one angle per spin")
    return np.diag(np.exp(-1j * (z_values(n) @ angles)))


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) <= tol)


def matrix_exponential(h: np.ndarray, t: float) -> np.ndarray:
    """Propagator ``exp(-i h t)`` for a Hermitian ``h``.

    Uses the eigendecomposition ``h = V diag(w) V^dagger``, which keeps the
    result unitary to machine precision.  Diagonal input short-circuits.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if not is_hermitian(h, tol=1e-12 * scale):
        raise ValueError("matrix_exponential requires a Hermitian generator")
    if np.count_nonzero(h - np.diag(np.diag(h))) == 0:
        return np.diag(np.exp(-1j * np.real(np.diag(h)) * t))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def traceless_part(rho: np.ndarray) -> np.ndarray:
    """Deviation density matrix: ``rho - Tr(rho)/dim * 1``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("traceless_part expects a square matrix")
    return rho - np.trace(rho) / len(rho) * np.eye(len(rho))


def conjugate(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def align_global_phase(u: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Multiply ``u`` by the global phase that best matches ``ref``.

    The phase is taken from the entry of ``ref`` with the largest modulus,
    which is the first-nonzero-entry rule made robust to tiny entries.
    """
    idx = np.unravel_index(np.argmax(np.abs(ref)), ref.shape)
    if abs(u[idx]) == 0:
        return u
    return u * (ref[idx] / u[idx]) / abs(ref[idx] / u[idx])


def max_deviation_up_to_phase(u: np.ndarray, ref: np.ndarray) -> float:
    return float(np.max(np.abs(align_global_phase(u, ref) - ref)))
