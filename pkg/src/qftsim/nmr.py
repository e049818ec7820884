"""Weakly coupled spin system: Hamiltonian, free evolution, thermal state, relaxation.

Offsets are rotating-frame chemical shifts in Hz; the Hamiltonian is returned
in rad/s.  For 13C-labelled alanine at 9.4 T the carrier is ~100.617 MHz, but
the carrier never enters the dynamics.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .core import z_values

__all__ = [
    "SpinSystem",
    "Terms",
    "alanine",
    "load_system",
    "normalize_terms",
    "internal_hamiltonian",
    "free_evolution",
    "thermal_state",
    "relax",
]

#: ``"full"``, ``"couplings"`` or a set of 1-based spin pairs such as ``{(1, 2)}``.
Terms = Union[str, frozenset]


@dataclass(frozen=True)
class SpinSystem:
    offsets_hz: tuple[float, ...]
    j_hz: tuple[tuple[float, ...], ...]
    t1_s: tuple[float, ...]
    t2_s: tuple[float, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = len(self.offsets_hz)
        if n < 1:
            raise ValueError("a spin system needs at least one spin")
        conv = lambda v: tuple(float(x) for x in v)  # noqa: E731
        object.__setattr__(self, "offsets_hz", conv(self.offsets_hz))
        object.__setattr__(self, "j_hz", tuple(conv(row) for row in self.j_hz))
        object.__setattr__(self, "t1_s", conv(self.t1_s))
        object.__setattr__(self, "t2_s", conv(self.t2_s))
        labels = tuple(self.labels) or tuple(f"s{i + 1}" for i in range(n))
        object.__setattr__(self, "labels", labels)

        j = np.array(self.j_hz)
        if j.shape != (n, n):
            raise ValueError(f"J matrix must be {n}x{n}")
        if not np.allclose(j, j.T, rtol=0, atol=0) or np.any(np.diag(j) != 0):
            raise ValueError("J matrix must be symmetric with zero diagonal")
        if not (len(self.t1_s) == len(self.t2_s) == len(labels) == n):
            raise ValueError("t1_s, t2_s and labels need one entry per spin")
        for t1, t2 in zip(self.t1_s, self.t2_s):
            if not (t1 > 0 and t2 > 0):
                raise ValueError("relaxation times must be positive")
            if t2 > 2 * t1:
                raise ValueError(f"T2={t2} exceeds 2*T1={2 * t1}")

    @property
    def n(self) -> int:
        return len(self.offsets_hz)

    def coupling(self, i: int, k: int) -> float:
        """Scalar coupling between 1-based spins ``i`` and ``k`` in Hz."""
        return self.j_hz[i - 1][k - 1]

    def constants(self) -> dict[str, float]:
        """Named constants (``J12``, ``nu1``, ...) usable in pulse-program expressions."""
        out = {}
        for i in range(1, self.n + 1):
            out[f"nu{i}"] = self.offsets_hz[i - 1]
            for k in range(i + 1, self.n + 1):
                out[f"J{i}{k}"] = out[f"J{k}{i}"] = self.coupling(i, k)
        return out

    def with_relaxation(self, t1: float, t2: float) -> "SpinSystem":
        return SpinSystem(self.offsets_hz, self.j_hz, (t1,) * self.n, (t2,) * self.n, self.labels)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "offsets_hz": list(self.offsets_hz),
            "j_hz": [list(r) for r in self.j_hz],
            "t1_s": list(self.t1_s),
            "t2_s": list(self.t2_s),
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpinSystem":
        try:
            sys = cls(d["offsets_hz"], d["j_hz"], d["t1_s"], d["t2_s"], d.get("labels", ()))
        except KeyError as exc:
            raise ValueError(f"spin system document missing key {exc}") from None
        if "n" in d and d["n"] != sys.n:
            raise ValueError(f"declared n={d['n']} but {sys.n} offsets given")
        return sys

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def alanine() -> SpinSystem:
    """The three 13C spins of labelled alanine (bundled constants)."""
    text = resources.files("qftsim").joinpath("data/alanine.json").read_text()
    return SpinSystem.from_dict(json.loads(text))


def load_system(path: str | os.PathLike | None = None) -> SpinSystem:
    """Load a spin system from JSON; ``None`` falls back to ``$QFTSIM_SYSTEM`` then alanine."""
    if path is None:
        path = os.environ.get("QFTSIM_SYSTEM") or None
    if path is None:
        return alanine()
    return SpinSystem.from_dict(json.loads(Path(path).read_text()))


def normalize_terms(terms, n: int | None = None) -> Terms:
    """Canonical form of an evolution-term selector.

    Accepts ``"full"``, ``"couplings"``, a comma-separated string such as
    ``"J12,J23"`` or an iterable of spin pairs.
    """
    if isinstance(terms, str):
        t = terms.strip()
        if t in ("full", "couplings"):
            return t
        pairs = []
        for tok in t.split(","):
            tok = tok.strip()
            if len(tok) != 3 or tok[0] != "J" or not tok[1:].isdigit():
                raise ValueError(f"bad coupling name {tok!r}; expected e.g. J12")
            pairs.append((int(tok[1]), int(tok[2])))
        terms = pairs
    out = set()
    for a, b in terms:
        a, b = int(a), int(b)
        if a == b:
            raise ValueError(f"coupling ({a},{b}) pairs a spin with itself")
        if n is not None and not (1 <= a <= n and 1 <= b <= n):
            raise ValueError(f"coupling ({a},{b}) out of range for {n} spins")
        out.add((min(a, b), max(a, b)))
    return frozenset(out)


def terms_label(terms: Terms) -> str:
    if isinstance(terms, str):
        return terms
    return ",".join(f"J{a}{b}" for a, b in sorted(terms))


def _diagonal(sys: SpinSystem, terms: Terms = "full") -> np.ndarray:
    """Diagonal of the selected Hamiltonian in rad/s."""
    terms = normalize_terms(terms, sys.n)
    z = z_values(sys.n)
    h = np.zeros(2**sys.n)
    if terms == "full":
        h += z @ (2 * np.pi * np.array(sys.offsets_hz))
    pairs = (
        [(i, k) for i in range(1, sys.n + 1) for k in range(i + 1, sys.n + 1)]
        if isinstance(terms, str)
        else sorted(terms)
    )
    for i, k in pairs:
        h += 2 * np.pi * sys.coupling(i, k) * z[:, i - 1] * z[:, k - 1]
    return h


def internal_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """``sum_i 2 pi nu_i I_z^i + sum_{i<k} 2 pi J_ik I_z^i I_z^k`` (rad/s)."""
    return np.diag(_diagonal(sys)).astype(complex)


def free_evolution(sys: SpinSystem, t: float, terms="full") -> np.ndarray:
    """Propagator ``exp(-i H_selected t)``; diagonal because every term is."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    return np.diag(np.exp(-1j * _diagonal(sys, terms) * t))


def thermal_state(sys: SpinSystem) -> np.ndarray:
    """High-temperature deviation matrix ``sum_i I_z^i``."""
    return np.diag(z_values(sys.n).sum(axis=1)).astype(complex)


def _rates(times: Iterable[float]) -> np.ndarray:
    return np.array([0.0 if math.isinf(t) else 1.0 / t for t in times])


def relax(rho: np.ndarray, sys: SpinSystem, t: float, equilibrium: np.ndarray | None = None) -> np.ndarray:
    """Phenomenological element-wise relaxation over ``t`` seconds.

    Coherence ``(a, b)`` decays at ``sum_i 1/T2_i`` over the spins whose bit
    differs between ``a`` and ``b``.  The diagonal is expanded in products of
    ``2 I_z`` operators; the component on spin subset ``S`` decays at
    ``sum_{i in S} 1/T1_i`` toward the matching component of ``equilibrium``
    (zero when omitted, which makes the map a contraction).
    """
    if t < 0:
        raise ValueError(f"relaxation time must be non-negative, got {t}")
    n = sys.n
    rho = np.asarray(rho, dtype=complex)
    bits = (0.5 - z_values(n)).astype(int)  # (dim, n)
    r2 = _rates(sys.t2_s)
    differ = bits[:, None, :] != bits[None, :, :]
    out = rho * np.exp(-t * (differ @ r2))

    # Walsh components of the diagonal: signs[s, a] = prod_{i in S} (-1)^bit_i(a)
    subsets = bits  # subset s encoded with the same bit layout as basis labels
    signs = (-1.0) ** (subsets @ bits.T)
    dim = 2**n
    decay = np.exp(-t * (subsets @ _rates(sys.t1_s)))
    d = np.real(np.diag(rho))
    eq = np.zeros(dim) if equilibrium is None else np.real(np.diag(equilibrium))
    c, c_eq = signs @ d / dim, signs @ eq / dim
    c_new = c_eq + (c - c_eq) * decay
    np.fill_diagonal(out, signs.T @ c_new + 1j * np.imag(np.diag(rho)))
    return out
