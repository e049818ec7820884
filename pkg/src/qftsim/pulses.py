"""Pulse programs: instantaneous RF pulses and free-evolution delays.

Events are chronological.  Pulses are hard (no duration, no relaxation);
delays evolve under the selected internal-Hamiltonian terms and, in
``"relaxing"`` mode, relax toward the thermal deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .core import conjugate, rotation
from .nmr import SpinSystem, _diagonal, free_evolution, normalize_terms, relax, terms_label, thermal_state

__all__ = ["Pulse", "Delay", "Event", "PulseProgram", "program_unitary", "simulate"]

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class Pulse:
    """Simultaneous rotation of ``targets`` (1-based spins) by ``angle`` about ``phase``."""

    targets: tuple[int, ...]
    angle: float
    phase: float = 0.0

    def __post_init__(self):
        targets = tuple(sorted(set(int(t) for t in self.targets)))
        if not targets or targets[0] < 1:
            raise ValueError(f"pulse needs 1-based target spins, got {self.targets!r}")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "angle", float(self.angle))
        object.__setattr__(self, "phase", float(self.phase))
        if not -TWO_PI < self.angle <= TWO_PI:
            raise ValueError(f"pulse angle {self.angle} outside (-2pi, 2pi]")

    def matrix(self, n: int) -> np.ndarray:
        return rotation(self.targets, self.angle, self.phase, n)


@dataclass(frozen=True)
class Delay:
    """Free evolution for ``duration`` seconds under the selected Hamiltonian terms.

    ``expr`` keeps the symbolic source (e.g. ``1/(8*J12)``) for round-tripping
    through the text format; it does not take part in equality.
    """

    duration: float
    terms: object = "full"
    expr: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "terms", normalize_terms(self.terms))
        if not self.duration >= 0:
            raise ValueError(f"delay duration must be >= 0, got {self.duration}")

    def matrix(self, sys: SpinSystem) -> np.ndarray:
        return free_evolution(sys, self.duration, self.terms)


Event = Union[Pulse, Delay]


@dataclass(frozen=True)
class PulseProgram:
    events: tuple[Event, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        for ev in self.events:
            if isinstance(ev, Pulse) and ev.targets[-1] > self.n:
                raise ValueError(f"pulse on spin {ev.targets[-1]} in a {self.n}-spin program")
            if isinstance(ev, Delay) and not isinstance(ev.terms, str):
                for pair in ev.terms:
                    if max(pair) > self.n:
                        raise ValueError(f"coupling {pair} out of range for {self.n} spins")

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __add__(self, other: "PulseProgram") -> "PulseProgram":
        if other.n != self.n:
            raise ValueError("cannot concatenate programs on different spin counts")
        return PulseProgram(self.events + other.events, self.n)

    @property
    def pulses(self) -> list[Pulse]:
        return [e for e in self.events if isinstance(e, Pulse)]

    @property
    def delays(self) -> list[Delay]:
        return [e for e in self.events if isinstance(e, Delay)]

    def total_delay(self) -> float:
        return sum(d.duration for d in self.delays)

    def with_delay_terms(self, terms) -> "PulseProgram":
        """Copy with every delay re-targeted to ``terms`` (verification helper)."""
        evs = [Delay(e.duration, terms, e.expr) if isinstance(e, Delay) else e for e in self.events]
        return PulseProgram(evs, self.n)

    def to_json(self) -> list[dict]:
        out = []
        for e in self.events:
            if isinstance(e, Pulse):
                out.append({"type": "pulse", "targets": list(e.targets), "angle": e.angle, "phase": e.phase})
            else:
                d = {"type": "delay", "duration": e.duration, "terms": terms_label(e.terms)}
                if e.expr is not None:
                    d["expr"] = e.expr
                out.append(d)
        return out

    @classmethod
    def from_json(cls, events: list[dict], n: int) -> "PulseProgram":
        evs: list[Event] = []
        for d in events:
            if d["type"] == "pulse":
                evs.append(Pulse(tuple(d["targets"]), d["angle"], d["phase"]))
            elif d["type"] == "delay":
                evs.append(Delay(d["duration"], d.get("terms", "full"), d.get("expr")))
            else:
                raise ValueError(f"unknown event type {d['type']!r}")
        return cls(tuple(evs), n)


def _check(p: PulseProgram, sys: SpinSystem) -> None:
    if p.n != sys.n:
        raise ValueError(f"program acts on {p.n} spins but the system has {sys.n}")


def program_unitary(p: PulseProgram, sys: SpinSystem | None = None) -> np.ndarray:
    """Net propagator of a program (right-to-left product of its events).

    ``sys`` may be omitted for pulse-only programs.
    """
    if sys is not None:
        _check(p, sys)
    elif p.delays:
        raise ValueError("a spin system is required to evaluate delays")
    u = np.eye(2**p.n, dtype=complex)
    for ev in p.events:
        if isinstance(ev, Pulse):
            u = ev.matrix(p.n) @ u
        else:
            u = np.exp(-1j * _diagonal(sys, ev.terms) * ev.duration)[:, None] * u
    return u


def simulate(p: PulseProgram, sys: SpinSystem, rho0: np.ndarray, mode: str = "unitary") -> np.ndarray:
    """Run ``p`` on the deviation matrix ``rho0``.

    In ``"relaxing"`` mode every delay is followed by :func:`relax` for the
    same duration; the two commute under the element-wise model, so the
    order inside a delay does not matter.
    """
    if mode not in ("unitary", "relaxing"):
        raise ValueError(f"unknown simulation mode {mode!r}")
    _check(p, sys)
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (2**p.n, 2**p.n):
        raise ValueError(f"density matrix shape {rho.shape} does not match {p.n} spins")
    eq = thermal_state(sys) if mode == "relaxing" else None
    for ev in p.events:
        if isinstance(ev, Pulse):
            rho = conjugate(ev.matrix(p.n), rho)
        else:
            ph = np.exp(-1j * _diagonal(sys, ev.terms) * ev.duration)
            rho = ph[:, None] * rho * ph.conj()[None, :]
            if eq is not None:
                rho = relax(rho, sys, ev.duration, equilibrium=eq)
    return rho
