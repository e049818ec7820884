"""Linear-inversion tomography from single-spin transverse line amplitudes.

Each readout setting applies, per spin, nothing, ``(pi/2)_x`` or ``(pi/2)_y``
(``3**n`` settings).  After the readout the observed quantities are the
multiplet line amplitudes ``Tr(rho I+_s P_c)``, where ``P_c`` projects the
other spins onto configuration ``c``: ``n * 2**(n-1)`` complex numbers per
setting.  Together they fix all ``4**n - 1`` coefficients of the deviation
matrix in the Pauli-product basis.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from ..core import PAULI, kron, num_spins
from ..pulses import Pulse, PulseProgram, program_unitary

__all__ = ["MAX_TOMOGRAPHY_SPINS", "readout_settings", "tomography_readout_set", "measure", "readout_map", "reconstruct"]

MAX_TOMOGRAPHY_SPINS = 4
_PHASE = {"x": 0.0, "y": np.pi / 2}


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_TOMOGRAPHY_SPINS:
        raise ValueError(f"tomography supports 1..{MAX_TOMOGRAPHY_SPINS} spins, got {n}")


def readout_settings(n: int) -> list[tuple[str, ...]]:
    """All per-spin choices from ``("i", "x", "y")`` in lexicographic order."""
    _check_n(n)
    return list(itertools.product("ixy", repeat=n))


def _setting_program(setting: tuple[str, ...]) -> PulseProgram:
    n = len(setting)
    events = []
    for axis in ("x", "y"):
        targets = tuple(s + 1 for s, a in enumerate(setting) if a == axis)
        if targets:
            events.append(Pulse(targets, np.pi / 2, _PHASE[axis]))
    return PulseProgram(tuple(events), n)


def tomography_readout_set(n: int) -> list[PulseProgram]:
    return [_setting_program(s) for s in readout_settings(n)]


@lru_cache(maxsize=None)
def _line_operators(n: int) -> np.ndarray:
    """Observables ``I+_s (x) |c><c|`` stacked as ``(n, 2**(n-1), dim, dim)``."""
    raise_op = np.array([[0, 1], [0, 0]], dtype=complex)
    proj = [np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)]
    ops = np.zeros((n, 2 ** (n - 1), 2**n, 2**n), dtype=complex)
    for s in range(n):
        for c, bits in enumerate(itertools.product((0, 1), repeat=n - 1)):
            factors = list(proj[b] for b in bits)
            factors.insert(s, raise_op)
            ops[s, c] = kron(*factors)
    return ops


def _settings(n: int, settings) -> tuple[tuple[str, ...], ...]:
    if settings is None:
        return tuple(readout_settings(n))
    out = tuple(tuple(st) for st in settings)
    for st in out:
        if len(st) != n or any(a not in "ixy" for a in st):
            raise ValueError(f"bad readout setting {st!r} for {n} spins")
    return out


@lru_cache(maxsize=None)
def _readout_unitaries(settings: tuple[tuple[str, ...], ...]) -> np.ndarray:
    return np.stack([program_unitary(_setting_program(st)) for st in settings])


def measure(rho, n: int | None = None, settings=None) -> np.ndarray:
    """Noiseless line amplitudes, shape ``(len(settings), n, 2**(n-1))``.

    ``settings`` defaults to the full ``3**n`` set of :func:`readout_settings`.
    """
    rho = np.asarray(rho, dtype=complex)
    n = num_spins(len(rho)) if n is None else n
    _check_n(n)
    us = _readout_unitaries(_settings(n, settings))
    rotated = us @ rho @ us.conj().transpose(0, 2, 1)
    ops = _line_operators(n)
    # Tr(r O) = sum_ab r_ab O_ba
    return np.einsum("kab,scba->ksc", rotated, ops)


@lru_cache(maxsize=None)
def _pauli_basis(n: int) -> np.ndarray:
    labels = list(itertools.product("ixyz", repeat=n))[1:]
    return np.stack([kron(*(PAULI[a] for a in lab)) for lab in labels])


@lru_cache(maxsize=None)
def _readout_map(n: int, settings: tuple[tuple[str, ...], ...]) -> np.ndarray:
    basis = _pauli_basis(n)
    columns = [measure(p / 2**n, n, settings).ravel() for p in basis]
    m = np.stack(columns, axis=1)
    return np.vstack([m.real, m.imag])


def readout_map(n: int, settings=None) -> np.ndarray:
    """Real matrix from Pauli coefficients ``c_P = Tr(rho P)`` to stacked (re, im) amplitudes."""
    _check_n(n)
    return _readout_map(n, _settings(n, settings))


@lru_cache(maxsize=None)
def _inverse(n: int, settings: tuple[tuple[str, ...], ...]) -> np.ndarray:
    m = _readout_map(n, settings)
    rank = np.linalg.matrix_rank(m)
    if rank < 4**n - 1:
        raise ValueError(f"readout set is rank-deficient ({rank} < {4**n - 1})")
    return np.linalg.pinv(m)


def reconstruct(measurements, n: int, settings=None) -> np.ndarray:
    """Deviation matrix from the output of :func:`measure` by linear inversion."""
    _check_n(n)
    settings = _settings(n, settings)
    data = np.asarray(measurements, dtype=complex)
    expected = (len(settings), n, 2 ** (n - 1))
    if data.shape != expected:
        raise ValueError(f"expected measurements of shape {expected}, got {data.shape}")
    flat = data.ravel()
    coeffs = _inverse(n, settings) @ np.concatenate([flat.real, flat.imag])
    return np.tensordot(coeffs, _pauli_basis(n), axes=1) / 2**n
