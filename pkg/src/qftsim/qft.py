"""Ideal quantum Fourier transform and its Hadamard/controlled-phase circuit.

Qubit index 0 is the least significant bit of a basis label, so the lead
(most significant) qubit ``n - 1`` is spin 1 of the NMR model.  Use
:func:`qubit_to_spin` to convert.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np

from .core import is_power_of_two

__all__ = [
    "MAX_QUBITS",
    "Gate",
    "GateSequence",
    "ideal_qft",
    "apply_qft",
    "gate_matrix",
    "coppersmith_sequence",
    "bit_reversal",
    "qubit_to_spin",
]

MAX_QUBITS = 10


def qubit_to_spin(qubit: int, n: int) -> int:
    return n - qubit


@dataclass(frozen=True)
class Gate:
    """A Hadamard-type ``A`` gate or a controlled-phase ``B`` gate.

    For ``B`` gates the pair is stored with ``j < k``; ``theta`` defaults to
    ``pi / 2**(k - j)``.  Other angles are accepted for compiler testing but
    :class:`GateSequence` only ever contains the canonical ones.
    """

    kind: Literal["A", "B"]
    j: int
    k: int | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.kind == "A":
            if self.k is not None or self.theta is not None:
                raise ValueError("A gates take a single qubit index")
        elif self.kind == "B":
            if self.k is None or not self.j < self.k:
                raise ValueError(f"B gate needs j < k, got j={self.j}, k={self.k}")
            if self.theta is None:
                object.__setattr__(self, "theta", np.pi / 2 ** (self.k - self.j))
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.j < 0:
            raise ValueError("qubit indices must be non-negative")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.j,) if self.kind == "A" else (self.j, self.k)

    def __str__(self):
        if self.kind == "A":
            return f"A{self.j}"
        return f"B{self.j}{self.k}"


@dataclass(frozen=True)
class GateSequence:
    gates: tuple[Gate, ...]
    n: int

    def __post_init__(self):
        for g in self.gates:
            if max(g.qubits) >= self.n:
                raise ValueError(f"gate {g} out of range for {self.n} qubits")

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __len__(self):
        return len(self.gates)

    def unitary(self) -> np.ndarray:
        u = np.eye(2**self.n, dtype=complex)
        for g in self.gates:
            u = gate_matrix(g, self.n) @ u
        return u


def _check_n(n: int, upper: int = MAX_QUBITS) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= upper:
        raise ValueError(f"qubit count must be in 1..{upper}, got {n!r}")


def ideal_qft(n: int) -> np.ndarray:
    """QFT matrix on ``n`` qubits with entry ``(p, x) = exp(2 pi i x p / q) / sqrt(q)``."""
    _check_n(n)
    q = 2**n
    idx = np.arange(q)
    # reduce x*p mod q before scaling keeps the phases exact for large q
    return np.exp(2j * np.pi * (np.outer(idx, idx) % q) / q) / np.sqrt(q)


def apply_qft(state) -> np.ndarray:
    """Transform amplitudes ``f(x)`` into ``f~(p) = sum_x exp(2 pi i x p / q) f(x) / sqrt(q)``.

    Evaluated as an explicit sum over ``x`` (independent of :func:`ideal_qft`).
    """
    f = np.asarray(state, dtype=complex).ravel()
    q = len(f)
    if not is_power_of_two(q):
        raise ValueError(f"state dimension {q} is not a power of two")
    out = np.zeros(q, dtype=complex)
    for p in range(q):
        acc = 0j
        for x in range(q):
            acc += np.exp(2j * np.pi * ((x * p) % q) / q) * f[x]
        out[p] = acc / np.sqrt(q)
    return out


def gate_matrix(g: Gate, n: int) -> np.ndarray:
    """Full ``2**n`` matrix of a gate."""
    if max(g.qubits) >= n:
        raise ValueError(f"gate {g} out of range for {n} qubits")
    q = 2**n
    if g.kind == "B":
        labels = np.arange(q)
        both = ((labels >> g.j) & 1) & ((labels >> g.k) & 1)
        return np.diag(np.where(both == 1, np.exp(1j * g.theta), 1.0)).astype(complex)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return np.kron(np.kron(np.eye(2 ** (n - 1 - g.j)), h), np.eye(2**g.j))


def coppersmith_sequence(n: int) -> GateSequence:
    """Chronological gate list whose product is ``bit_reversal(n) @ ideal_qft(n)``.

    Stages run from the lead qubit ``j = n-1`` down to ``0``.  Each stage
    applies ``B(j, k)`` for ``k = j+1 .. n-1`` (qubits already transformed)
    and then ``A(j)``.  Within a stage the B gates are diagonal and commute.
    """
    if n < 1:
        raise ValueError(f"qubit count must be >= 1, got {n}")
    gates: list[Gate] = []
    for j in range(n - 1, -1, -1):
        gates.extend(Gate("B", j, k) for k in range(j + 1, n))
        gates.append(Gate("A", j))
    return GateSequence(tuple(gates), n)


def bit_reversal(n: int) -> np.ndarray:
    """Permutation sending basis label ``b_{n-1}...b_0`` to ``b_0...b_{n-1}``."""
    if n < 1:
        raise ValueError(f"qubit count must be >= 1, got {n}")
    q = 2**n
    p = np.zeros((q, q), dtype=complex)
    for b in range(q):
        p[int(format(b, f"0{n}b")[::-1], 2), b] = 1
    return p
