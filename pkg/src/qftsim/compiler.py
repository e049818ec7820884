"""Compile Hadamard/controlled-phase gate sequences into NMR pulse programs.

Every compiled block satisfies::

    Rz(trailing_z) @ program_unitary(program) @ Rz(leading_z) == target   (up to a global phase)

with ``Rz(a) = exp(-i sum_i a_i I_z^i)``.  ``trailing_z`` is the frame that
has not been applied physically; :func:`fold_z_rotations` pushes it through
the program into ``leading_z``, where it acts first and is invisible to any
input that is diagonal in the z basis (e.g. the thermal state).

Pulse phases are wrapped to ``(-pi, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .core import z_rotation
from .nmr import SpinSystem, alanine
from .progtext import evaluate, format_angle, parse_program
from .pulses import Delay, Event, Pulse, PulseProgram, program_unitary
from .qft import Gate, bit_reversal, coppersmith_sequence, qubit_to_spin

__all__ = [
    "CompiledBlock",
    "RefocusedInterval",
    "compile_A",
    "compile_B",
    "fold_z_rotations",
    "insert_refocusing",
    "compile_qft",
    "load_eq11_program",
    "relabel_matrix",
    "target_unitary",
    "wrap_phase",
]

MAX_COMPILE_QUBITS = 5


def wrap_phase(phi: float) -> float:
    """Map an angle to ``(-pi, pi]``, leaving the four axis keywords exact."""
    if -math.pi < phi <= math.pi:
        return float(phi)
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class RefocusedInterval:
    """Events ``[start, stop)`` that realize couplings-only evolution of ``active``.

    Under the full Hamiltonian the interval equals
    ``Rz(z) @ free_evolution(sys, duration, active)`` up to a global phase.
    """

    start: int
    stop: int
    active: frozenset
    duration: float
    z: tuple[float, ...]


@dataclass(frozen=True)
class CompiledBlock:
    program: PulseProgram
    trailing_z: tuple[float, ...]
    bit_map: tuple[int, ...]
    leading_z: tuple[float, ...] = ()
    provenance: tuple[str, ...] = ()
    intervals: tuple[RefocusedInterval, ...] = ()

    def __post_init__(self):
        n = self.program.n
        if not self.leading_z:
            object.__setattr__(self, "leading_z", (0.0,) * n)
        if not self.provenance:
            object.__setattr__(self, "provenance", ("",) * len(self.program))
        if len(self.trailing_z) != n or len(self.leading_z) != n:
            raise ValueError("frame vectors need one angle per spin")
        if sorted(self.bit_map) != list(range(1, n + 1)):
            raise ValueError(f"bit_map {self.bit_map} is not a permutation of spins 1..{n}")
        if len(self.provenance) != len(self.program):
            raise ValueError("provenance needs one entry per event")

    @property
    def n(self) -> int:
        return self.program.n

    def unitary(self, sys: SpinSystem, terms=None) -> np.ndarray:
        """Frame-corrected propagator; ``terms`` overrides every delay's selector."""
        prog = self.program if terms is None else self.program.with_delay_terms(terms)
        return z_rotation(self.trailing_z) @ program_unitary(prog, sys) @ z_rotation(self.leading_z)

    def logical_unitary(self, sys: SpinSystem, terms=None) -> np.ndarray:
        """:meth:`unitary` with the output relabelled through ``bit_map``."""
        return relabel_matrix(self.bit_map) @ self.unitary(sys, terms)

    def sidecar(self) -> dict:
        events = []
        for i, (ev, src) in enumerate(zip(self.program.events, self.provenance)):
            entry = {"index": i, "gate": src, "type": "pulse" if isinstance(ev, Pulse) else "delay"}
            if isinstance(ev, Delay):
                entry["duration_s"] = ev.duration
                entry["derivation"] = ev.expr
            events.append(entry)
        return {
            "n": self.n,
            "events": events,
            "trailing_z": list(self.trailing_z),
            "leading_z": list(self.leading_z),
            "bit_map": list(self.bit_map),
            "refocused_intervals": [
                {
                    "start": iv.start,
                    "stop": iv.stop,
                    "active": sorted(f"J{a}{b}" for a, b in iv.active),
                    "duration_s": iv.duration,
                    "z": list(iv.z),
                }
                for iv in self.intervals
            ],
        }


def relabel_matrix(bit_map) -> np.ndarray:
    """Permutation from physical basis labels to logical ones.

    ``bit_map[m]`` is the spin that holds logical qubit ``m`` (qubit 0 being
    the least significant bit of the logical label).
    """
    n = len(bit_map)
    dim = 2**n
    perm = np.zeros((dim, dim), dtype=complex)
    for phys in range(dim):
        logical = 0
        for m, spin in enumerate(bit_map):
            logical |= ((phys >> (n - spin)) & 1) << m
        perm[logical, phys] = 1
    return perm


def _identity_map(n: int) -> tuple[int, ...]:
    return tuple(qubit_to_spin(m, n) for m in range(n))


def _shift_phases(events, provenance, shifts):
    """Add ``shifts[spin-1]`` to every pulse phase, splitting pulses whose spins disagree.

    Returns the new events, provenance and the old-to-new index map.
    """
    out, prov, index = [], [], []
    for ev, src in zip(events, provenance):
        index.append(len(out))
        if isinstance(ev, Delay):
            out.append(ev)
            prov.append(src)
            continue
        groups: dict[float, list[int]] = {}
        for t in ev.targets:
            groups.setdefault(wrap_phase(ev.phase + shifts[t - 1]), []).append(t)
        for phase, targets in groups.items():
            out.append(Pulse(tuple(targets), ev.angle, phase))
            prov.append(src)
    index.append(len(out))
    return out, prov, index


def _remap(intervals, index):
    return tuple(replace(iv, start=index[iv.start], stop=index[iv.stop]) for iv in intervals)


def compile_A(j: int, n: int, input_aware: bool = False) -> CompiledBlock:
    """Hadamard on qubit ``j``: ``(pi/2)_y`` then ``(pi)_x``, product ``-i H``.

    With ``input_aware`` only the ``(pi/2)_y`` pulse is emitted.  That agrees
    with the Hadamard whenever the spin's factor of the state lies in
    ``span{1, I_z}``, which the caller must guarantee.
    """
    if not 0 <= j < n:
        raise ValueError(f"qubit {j} out of range for {n} qubits")
    s = qubit_to_spin(j, n)
    events = [Pulse((s,), math.pi / 2, math.pi / 2)]
    if not input_aware:
        events.append(Pulse((s,), math.pi, 0.0))
    label = f"A{j}"
    return CompiledBlock(PulseProgram(tuple(events), n), (0.0,) * n, _identity_map(n), provenance=(label,) * len(events))


def compile_B(j: int, k: int, theta: float, sys: SpinSystem, emit_z_pulses: bool = False) -> CompiledBlock:
    """Controlled phase ``diag(1, 1, 1, e^{i theta})`` on qubits ``j < k``.

    Uses ``exp(i theta (1/4 - I_z^j/2 - I_z^k/2 + I_z^j I_z^k))``.  The
    bilinear part comes from ``theta / (2 pi |J|)`` of coupling evolution,
    split in two halves; for ``J > 0`` its sign is inverted by a ``(pi)_x``,
    ``(pi)_-x`` pair on spin ``j``.  The linear part is the z-rotation
    ``theta/2`` on both spins, either recorded in ``trailing_z`` or emitted
    as ``(pi/2)_y (theta/2)_x (pi/2)_-y``.

    Delays are restricted to the single coupling ``J_jk``; see
    :func:`insert_refocusing` for running under the full Hamiltonian.
    """
    n = sys.n
    if not (0 <= j < k < n):
        raise ValueError(f"need 0 <= j < k < {n}, got j={j}, k={k}")
    if not 0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    sj, sk = qubit_to_spin(j, n), qubit_to_spin(k, n)
    a, b = min(sj, sk), max(sj, sk)
    coupling = sys.coupling(a, b)
    if coupling == 0:
        raise ValueError(f"spins {a} and {b} are uncoupled; B{j}{k} cannot be compiled")

    name = f"J{a}{b}"
    jexpr = name if coupling > 0 else f"abs({name})"
    half = f"{format_angle(theta)}/(4*pi*{jexpr})"
    dur = evaluate(half, sys.constants())
    active = frozenset({(a, b)})
    delays = [Delay(dur, active, half), Delay(dur, active, half)]
    if coupling > 0:
        events: list[Event] = [Pulse((sj,), math.pi, 0.0), *delays, Pulse((sj,), math.pi, math.pi)]
    else:
        events = delays

    trailing = [0.0] * n
    if emit_z_pulses:
        pair = (sj, sk)
        events += [
            Pulse(pair, math.pi / 2, math.pi / 2),
            Pulse(pair, theta / 2, 0.0),
            Pulse(pair, math.pi / 2, -math.pi / 2),
        ]
    else:
        trailing[sj - 1] = trailing[sk - 1] = theta / 2
    label = f"B{j}{k}"
    return CompiledBlock(
        PulseProgram(tuple(events), n), tuple(trailing), _identity_map(n), provenance=(label,) * len(events)
    )


def fold_z_rotations(block: CompiledBlock) -> CompiledBlock:
    """Move ``trailing_z`` to the front by advancing each pulse's phase.

    Uses ``Rz(a) R_phi(angle) = R_{phi+a}(angle) Rz(a)``; delays are diagonal
    and commute with the frame.  The frame-corrected unitary is unchanged.
    """
    if not any(block.trailing_z):
        return block
    events, prov, index = _shift_phases(block.program.events, block.provenance, block.trailing_z)
    leading = tuple(wrap_phase(l + t) for l, t in zip(block.leading_z, block.trailing_z))
    return CompiledBlock(
        PulseProgram(tuple(events), block.n),
        (0.0,) * block.n,
        block.bit_map,
        leading,
        tuple(prov),
        _remap(block.intervals, index),
    )


def _walsh_pattern(exprs: list[str], spectators: list[int], sys: SpinSystem, label: str):
    """Events for one interval in which every spectator is inverted half the time.

    Spectator ``i`` gets the mask ``i + 1`` and is inverted during subinterval
    ``r`` when ``r & mask`` has odd parity.  Distinct nonzero masks make every
    single and pairwise sign pattern average to zero, so spectator shifts and
    every coupling touching a spectator cancel exactly.
    """
    m = len(spectators)
    parts = 1 << m.bit_length() if m else 1
    if len(set(exprs)) == 1 and len(exprs) == parts:
        expr = exprs[0]
    else:
        total = exprs[0] if len(exprs) == 1 else "+".join(f"({e})" for e in exprs)
        expr = total if parts == 1 else f"({total})/{parts}"
    dur = evaluate(expr, sys.constants())
    events: list[Event] = []
    inverted = [False] * m
    for r in range(parts):
        want = [bin(r & (i + 1)).count("1") % 2 == 1 for i in range(m)]
        flip_on = [s for s, w, cur in zip(spectators, want, inverted) if w and not cur]
        flip_off = [s for s, w, cur in zip(spectators, want, inverted) if cur and not w]
        if flip_on:
            events.append(Pulse(tuple(flip_on), math.pi, 0.0))
        if flip_off:
            events.append(Pulse(tuple(flip_off), math.pi, math.pi))
        inverted = want
        events.append(Delay(dur, "full", expr))
    ending = [s for s, cur in zip(spectators, inverted) if cur]
    if ending:
        events.append(Pulse(tuple(ending), math.pi, math.pi))
    return events, [label] * len(events)


def insert_refocusing(block: CompiledBlock | PulseProgram, sys: SpinSystem) -> CompiledBlock:
    """Make couplings-only delays run under the full Hamiltonian.

    Every maximal run of delays sharing one coupling selector is replaced by
    a full-Hamiltonian interval in which the spins outside the selector are
    refocused by matched ``(pi)_x`` / ``(pi)_-x`` pairs.  What remains is the
    requested coupling evolution plus the chemical-shift rotation of the
    active spins; that rotation is commuted to the end of the block (later
    pulse phases advance by it) and its inverse joins ``trailing_z``.

    Raises ``ValueError`` when the selector leaves a coupled pair between
    active spins out, which this scheme cannot suppress.
    """
    if isinstance(block, PulseProgram):
        block = CompiledBlock(block, (0.0,) * block.n, _identity_map(block.n))
    if block.program.n != sys.n:
        raise ValueError("block and spin system disagree on the spin count")
    n = sys.n
    src = block.program.events
    events: list[Event] = []
    prov: list[str] = []
    intervals = list(block.intervals)
    frame = np.zeros(n)
    i = 0
    while i < len(src):
        ev = src[i]
        if not (isinstance(ev, Delay) and isinstance(ev.terms, frozenset)):
            if isinstance(ev, Pulse):
                shifted, _, _ = _shift_phases([ev], [""], -frame)
                events.extend(shifted)
                prov.extend([block.provenance[i]] * len(shifted))
            else:
                events.append(ev)
                prov.append(block.provenance[i])
            i += 1
            continue
        active = ev.terms
        run = [ev]
        while i + len(run) < len(src):
            nxt = src[i + len(run)]
            if isinstance(nxt, Delay) and nxt.terms == active:
                run.append(nxt)
            else:
                break
        spins = sorted({s for pair in active for s in pair})
        for a in spins:
            for b in spins:
                if a < b and (a, b) not in active and sys.coupling(a, b) != 0:
                    raise ValueError(
                        f"infeasible refocusing: J{a}{b} acts between active spins but is not requested"
                    )
        spectators = [s for s in range(1, n + 1) if s not in spins]
        exprs = [d.expr if d.expr is not None else repr(d.duration) for d in run]
        total = sum(d.duration for d in run)
        if spectators:
            new, labels = _walsh_pattern(exprs, spectators, sys, block.provenance[i])
        else:
            new = [Delay(d.duration, "full", d.expr) for d in run]
            labels = list(block.provenance[i : i + len(run)])
        start = len(events)
        events.extend(new)
        prov.extend(labels)
        z = np.zeros(n)
        for s in spins:
            z[s - 1] = 2 * math.pi * sys.offsets_hz[s - 1] * sum(d.duration for d in new if isinstance(d, Delay))
        intervals.append(RefocusedInterval(start, len(events), active, total, tuple(z)))
        frame -= z
        i += len(run)

    trailing = tuple(wrap_phase(t + f) for t, f in zip(block.trailing_z, frame))
    return CompiledBlock(PulseProgram(tuple(events), n), trailing, block.bit_map, block.leading_z, tuple(prov), tuple(intervals))


def _concat(acc: CompiledBlock, nxt: CompiledBlock) -> CompiledBlock:
    """Append ``nxt`` after ``acc``, carrying ``acc``'s trailing frame through it."""
    if any(nxt.leading_z):
        raise ValueError("cannot append a block with a leading frame")
    events, prov, index = _shift_phases(nxt.program.events, nxt.provenance, [-z for z in acc.trailing_z])
    offset = len(acc.program)
    moved = tuple(
        replace(iv, start=offset + index[iv.start], stop=offset + index[iv.stop]) for iv in nxt.intervals
    )
    return CompiledBlock(
        PulseProgram(acc.program.events + tuple(events), acc.n),
        tuple(wrap_phase(a + b) for a, b in zip(acc.trailing_z, nxt.trailing_z)),
        acc.bit_map,
        acc.leading_z,
        acc.provenance + tuple(prov),
        acc.intervals + moved,
    )


def compile_qft(n: int, sys: SpinSystem, input_aware: bool = False, refocus: bool = True, fold: bool | None = None) -> CompiledBlock:
    """Pulse program for the ``n``-qubit QFT on ``sys`` without a final swap network.

    The output register is bit-reversed on the spins; ``bit_map`` records it
    (logical output qubit ``m`` lives on spin ``m + 1``), so
    ``logical_unitary`` equals ``ideal_qft(n)``.

    ``input_aware`` replaces the first and last Hadamards by single
    ``(pi/2)_y`` pulses.  This is exact for z-diagonal inputs such as the
    thermal state; the middle Hadamards stay complete.  ``refocus`` converts
    the coupling delays to full-Hamiltonian intervals.  ``fold`` (default:
    same as ``input_aware``) folds the final frame into the pulse phases.
    """
    if not 1 <= n <= MAX_COMPILE_QUBITS:
        raise ValueError(f"compile_qft supports 1..{MAX_COMPILE_QUBITS} qubits, got {n}")
    if sys.n != n:
        raise ValueError(f"spin system has {sys.n} spins, QFT needs {n}")
    fold = input_aware if fold is None else fold
    seq = coppersmith_sequence(n)
    a_positions = [i for i, g in enumerate(seq) if g.kind == "A"]
    shortcut = {a_positions[0], a_positions[-1]} if input_aware else set()

    acc = CompiledBlock(PulseProgram((), n), (0.0,) * n, _identity_map(n))
    for i, g in enumerate(seq):
        if g.kind == "A":
            blk = compile_A(g.j, n, input_aware=i in shortcut)
        else:
            blk = compile_B(g.j, g.k, g.theta, sys)
            if refocus:
                blk = insert_refocusing(blk, sys)
        acc = _concat(acc, blk)

    acc = replace(acc, bit_map=tuple(m + 1 for m in range(n)))
    return fold_z_rotations(acc) if fold else acc


def target_unitary(n: int) -> np.ndarray:
    """``bit_reversal(n) @ ideal_qft(n)``: the physical action of the compiled QFT."""
    from .qft import ideal_qft

    return bit_reversal(n) @ ideal_qft(n)


def load_eq11_program(sys: SpinSystem | None = None) -> PulseProgram:
    """The published three-spin QFT program, transcribed event by event.

    The first pulse axis ``-sin(3pi/8) x + cos(3pi/8) y`` is phase ``7pi/8``,
    the second ``(-x + y)/sqrt(2)`` is ``3pi/4``.  Delays stay symbolic and
    resolve against ``sys`` (default: alanine).
    """
    text = resources.files("qftsim").joinpath("data/published_qft3.pp").read_text()
    return parse_program(text, sys if sys is not None else alanine())
