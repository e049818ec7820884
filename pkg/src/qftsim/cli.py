"""``qftsim`` command line: ideal QFT, compilation, simulation and readout.

Exit codes: 0 success, 2 usage or input error, 3 numerical-verification failure.
"""

from __future__ import annotations

import json
import os
import sys as _sys
from pathlib import Path

import click
import numpy as np

from . import analysis
from .compiler import compile_qft, load_eq11_program, target_unitary
from .core import conjugate, is_power_of_two, max_deviation_up_to_phase, traceless_part, z_rotation
from .nmr import SpinSystem, load_system, thermal_state
from .progtext import format_program, parse_program
from .pulses import Pulse, PulseProgram, simulate
from .qft import MAX_QUBITS, apply_qft, ideal_qft

EXIT_VERIFY = 3
PROGRAMS = ("eq11", "exact", "input-aware", "none")


class VerificationFailed(click.ClickException):
    exit_code = EXIT_VERIFY


class InputError(click.ClickException):
    exit_code = 2


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(d) -> np.ndarray:
    try:
        return np.array(d["re"], dtype=float) + 1j * np.array(d.get("im", np.zeros_like(d["re"])), dtype=float)
    except (KeyError, TypeError) as exc:
        raise InputError(f"density matrix JSON needs 're' and 'im' arrays ({exc})") from None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write_outputs(out: str | None, files: dict[str, str]) -> None:
    """Write all files or none: everything is staged before any rename."""
    if out is None:
        return
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            tmp = outdir / f".{name}.tmp"
            tmp.write_text(text)
            staged.append((tmp, outdir / name))
    except OSError as exc:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise InputError(f"cannot write to {outdir}: {exc}") from None
    for tmp, final in staged:
        os.replace(tmp, final)


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _system(ctx) -> SpinSystem:
    try:
        return load_system(ctx.obj.get("system"))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"bad spin system: {exc}") from None


def _program(name: str, sys: SpinSystem):
    """Resolve ``--program``; returns ``(program, trailing_z, leading_z)``."""
    zeros = (0.0,) * sys.n
    if name == "none":
        return PulseProgram((), sys.n), zeros, zeros
    if name == "eq11":
        if sys.n != 3:
            raise InputError("the eq11 program needs a 3-spin system")
        return load_eq11_program(sys), zeros, zeros
    if name in ("exact", "input-aware"):
        try:
            block = compile_qft(sys.n, sys, input_aware=name == "input-aware")
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return block.program, block.trailing_z, block.leading_z
    path = Path(name)
    if not path.exists():
        raise InputError(f"--program must be one of {', '.join(PROGRAMS)} or an existing file")
    try:
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            events = doc["events"] if isinstance(doc, dict) else doc
            return PulseProgram.from_json(events, sys.n), zeros, zeros
        return parse_program(path.read_text(), sys), zeros, zeros
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"bad program {name}: {exc}") from None


def _initial_state(init: str, sys: SpinSystem, seed: int) -> np.ndarray:
    dim = 2**sys.n
    if init == "thermal":
        return thermal_state(sys)
    if init == "random":
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return traceless_part(a + a.conj().T)
    rho = matrix_from_json(_read_json(init))
    if rho.shape != (dim, dim):
        raise InputError(f"initial state is {rho.shape}, system needs {(dim, dim)}")
    return rho


def _run(ctx, program, init, mode, seed):
    sys = _system(ctx)
    prog, trailing, leading = _program(program, sys)
    rho0 = _initial_state(init, sys, seed)
    # recorded software frame: Rz(leading) before, Rz(trailing) after
    start = conjugate(z_rotation(leading), rho0)
    rho = conjugate(z_rotation(trailing), simulate(prog, sys, start, mode))
    return sys, prog, rho0, rho


@click.group()
@click.option("--system", "system", type=click.Path(dir_okay=False), default=None,
              help="Spin-system JSON (default: $QFTSIM_SYSTEM, then bundled alanine).")
@click.pass_context
def main(ctx, system):
    """Pulse-level simulation of the three-spin NMR quantum Fourier transform."""
    ctx.ensure_object(dict)
    ctx.obj["system"] = system


@main.command()
@click.option("--n", "n", type=int, required=True, help="Number of qubits.")
@click.option("--state", type=click.Path(exists=True, dir_okay=False), help="Amplitude vector JSON.")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
def ideal(n, state, out):
    """Print the ideal QFT matrix and optionally transform an amplitude vector."""
    if not 1 <= n <= MAX_QUBITS:
        raise click.BadParameter(f"must be in 1..{MAX_QUBITS}", param_hint="--n")
    doc = {"n": n, "matrix": matrix_to_json(ideal_qft(n))}
    if state:
        raw = _read_json(state)
        if isinstance(raw, dict):
            raw = raw.get("amplitudes", raw)
        try:
            if isinstance(raw, dict):
                f = np.array(raw["re"], dtype=float) + 1j * np.array(raw.get("im", [0] * len(raw["re"])), dtype=float)
            else:
                f = np.array(raw, dtype=complex)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad amplitude vector: {exc}") from None
        if f.ndim != 1 or len(f) != 2**n or not is_power_of_two(len(f)):
            raise InputError(f"state needs {2**n} amplitudes, got {f.size}")
        g = apply_qft(f)
        doc["input"] = {"re": f.real.tolist(), "im": f.imag.tolist()}
        doc["output"] = {"re": g.real.tolist(), "im": g.imag.tolist()}
        doc["probabilities"] = (np.abs(g) ** 2).tolist()
    text = _dumps(doc)
    _write_outputs(out, {"ideal_qft.json": text})
    click.echo(text, nl=False)


@main.command("compile")
@click.option("--n", "n", type=int, default=None, help="Qubit count (default: spins in the system).")
@click.option("--mode", type=click.Choice(["exact", "input-aware", "eq11", "eq11-golden"]), default="input-aware")
@click.option("--verify/--no-verify", default=False, help="Check the compiled program numerically.")
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def compile_cmd(ctx, n, mode, verify, out):
    """Emit a QFT pulse program (text) and its JSON sidecar."""
    sys = _system(ctx)
    n = sys.n if n is None else n
    if n != sys.n:
        raise click.BadParameter(f"system has {sys.n} spins", param_hint="--n")
    if mode.startswith("eq11"):
        prog, _, _ = _program("eq11", sys)
        sidecar = {"n": n, "source": "transcribed", "trailing_z": [0.0] * n, "bit_map": list(range(1, n + 1))}
        block = None
    else:
        try:
            block = compile_qft(n, sys, input_aware=mode == "input-aware")
        except ValueError as exc:
            raise InputError(str(exc)) from None
        prog, sidecar = block.program, block.sidecar()
    sidecar["program"] = prog.to_json()

    if verify:
        if block is not None and mode == "exact":
            dev = max_deviation_up_to_phase(block.unitary(sys), target_unitary(n))
            sidecar["verification"] = {"max_deviation": dev}
            ok = dev < 1e-9
        else:
            rho0 = thermal_state(sys)
            start = conjugate(z_rotation(block.leading_z), rho0) if block else rho0
            rho = simulate(prog, sys, start)
            if block:
                rho = conjugate(z_rotation(block.trailing_z), rho)
            rep = analysis.fidelity_report(conjugate(target_unitary(n), rho0), rho)
            sidecar["verification"] = rep.to_dict()
            ok = (rep.F if block else rep.F_after_frame_alignment) >= (0.999 if block else 0.99)
    text = format_program(prog)
    _write_outputs(out, {"program.pp": text, "program.json": _dumps(sidecar)})
    click.echo(text, nl=False)
    if verify and not ok:
        raise VerificationFailed(f"verification failed: {sidecar['verification']}")


@main.command()
@click.option("--program", default="eq11", show_default=True, help=f"{' | '.join(PROGRAMS)} | PATH")
@click.option("--init", default="thermal", show_default=True, help="thermal | random | PATH to {re, im} JSON")
@click.option("--mode", type=click.Choice(["unitary", "relaxing"]), default="unitary", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for --init random.")
@click.option("--min-fidelity", type=float, default=None, help="Exit 3 if the aligned fidelity is lower.")
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def run(ctx, program, init, mode, seed, min_fidelity, out):
    """Simulate a program and compare with the ideal (bit-reversed) QFT action."""
    sys, prog, rho0, rho = _run(ctx, program, init, mode, seed)
    theory = conjugate(target_unitary(sys.n), rho0)
    try:
        report = analysis.fidelity_report(theory, rho).to_dict()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report.update({"program": program, "mode": mode, "events": len(prog), "total_delay_s": prog.total_delay()})
    text = _dumps(report)
    _write_outputs(out, {
        "rho_final.json": _dumps(matrix_to_json(rho)),
        "rho_theory.json": _dumps(matrix_to_json(theory)),
        "report.json": text,
    })
    click.echo(text, nl=False)
    if min_fidelity is not None and report["F_after_frame_alignment"] < min_fidelity:
        raise VerificationFailed(f"aligned fidelity {report['F_after_frame_alignment']:.6f} < {min_fidelity}")


GNUPLOT_SPECTRUM = """set datafile separator ','
set xlabel 'frequency (Hz)'
set ylabel 'magnitude'
plot '{csv}' using 1:4 every ::1 with lines title 'spin {spin}'
"""

GNUPLOT_MATRIX = """set title '{title}'
set view 60,30
splot '{data}' matrix with impulses title ''
"""


@main.command("spectrum")
@click.option("--spin", type=int, required=True)
@click.option("--program", default="eq11", show_default=True, help=f"{' | '.join(PROGRAMS)} | PATH")
@click.option("--init", default="thermal", show_default=True)
@click.option("--mode", type=click.Choice(["unitary", "relaxing"]), default="unitary", show_default=True)
@click.option("--readout", type=click.Choice(["none", "x", "y"]), default="none", show_default=True,
              help="Non-selective (pi/2) readout pulse applied before acquisition.")
@click.option("--dwell", type=float, default=analysis.Acquisition.dwell, show_default=True)
@click.option("--points", type=int, default=analysis.Acquisition.points, show_default=True)
@click.option("--reference", type=float, default=None, help="Receiver frequency in Hz (default: the spin's offset).")
@click.option("--broadening/--no-broadening", default=True, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--gnuplot", is_flag=True, help="Also write a gnuplot script.")
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def spectrum_cmd(ctx, spin, program, init, mode, readout, dwell, points, reference, broadening, seed, gnuplot, out):
    """Readout, FID and spectrum of one spin, with the peak list."""
    sys = _system(ctx)
    if not 1 <= spin <= sys.n:
        raise click.BadParameter(f"must be in 1..{sys.n}", param_hint="--spin")
    try:
        acq = analysis.Acquisition(dwell, points, broadening,
                                   sys.offsets_hz[spin - 1] if reference is None else reference)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    sys, prog, rho0, rho = _run(ctx, program, init, mode, seed)
    if readout != "none":
        ro = PulseProgram((Pulse(tuple(range(1, sys.n + 1)), np.pi / 2, 0.0 if readout == "x" else np.pi / 2),), sys.n)
        rho = simulate(ro, sys, rho)
    result = analysis.spectrum(analysis.simulate_fid(rho, sys, spin, acq), acq, spin)
    peaks = {"spin": spin, "resolution_hz": acq.resolution, "reference_hz": acq.reference_hz,
             "peaks": result.peaks_json()}
    text = _dumps(peaks)
    files = {f"spectrum_s{spin}.csv": result.to_csv(), f"peaks_s{spin}.json": text}
    if gnuplot:
        files[f"spectrum_s{spin}.gp"] = GNUPLOT_SPECTRUM.format(csv=f"spectrum_s{spin}.csv", spin=spin)
    _write_outputs(out, files)
    click.echo(text, nl=False)


@main.command()
@click.argument("theory", type=click.Path(exists=True, dir_okay=False))
@click.argument("experiment", type=click.Path(exists=True, dir_okay=False))
def fidelity(theory, experiment):
    """Fidelity report between two deviation matrices stored as {re, im} JSON."""
    a = matrix_from_json(_read_json(theory))
    b = matrix_from_json(_read_json(experiment))
    try:
        rep = analysis.fidelity_report(a, b)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    click.echo(_dumps(rep.to_dict()), nl=False)


@main.command()
@click.option("--program", default="eq11", show_default=True, help=f"{' | '.join(PROGRAMS)} | PATH")
@click.option("--init", default="thermal", show_default=True)
@click.option("--mode", type=click.Choice(["unitary", "relaxing"]), default="unitary", show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--gnuplot", is_flag=True)
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def tomography(ctx, program, init, mode, seed, gnuplot, out):
    """Reconstruct the final deviation matrix from the readout set."""
    sys, prog, rho0, rho = _run(ctx, program, init, mode, seed)
    if sys.n > analysis.tomography.MAX_TOMOGRAPHY_SPINS:
        raise InputError(f"tomography supports at most {analysis.tomography.MAX_TOMOGRAPHY_SPINS} spins")
    rec = analysis.reconstruct(analysis.measure(rho, sys.n), sys.n)
    err = float(np.max(np.abs(rec - rho)))
    summary = {"settings": 3**sys.n, "rank": int(np.linalg.matrix_rank(analysis.readout_map(sys.n))),
               "max_reconstruction_error": err}
    files = {"rho_reconstructed.json": _dumps(matrix_to_json(rec)), "tomography.json": _dumps(summary)}
    if gnuplot:
        files["rho_re.dat"] = "\n".join(" ".join(f"{v:.8f}" for v in row) for row in rec.real) + "\n"
        files["rho_im.dat"] = "\n".join(" ".join(f"{v:.8f}" for v in row) for row in rec.imag) + "\n"
        files["rho_re.gp"] = GNUPLOT_MATRIX.format(title="Re rho", data="rho_re.dat")
        files["rho_im.gp"] = GNUPLOT_MATRIX.format(title="Im rho", data="rho_im.dat")
    _write_outputs(out, files)
    click.echo(_dumps(summary), nl=False)
    if err > 1e-8:
        raise VerificationFailed(f"reconstruction error {err:.3e} exceeds 1e-8")


if __name__ == "__main__":  # pragma: no cover
    _sys.exit(main())
