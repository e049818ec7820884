import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qftsim.analysis import (
    Acquisition,
    align_frame,
    estimate_attenuation,
    fidelity,
    fidelity_report,
    measure,
    readout_map,
    readout_settings,
    reconstruct,
    rotate_frame,
    simulate_fid,
    spectrum,
    tomography_readout_set,
    transition_frequencies,
)
from qftsim.compiler import compile_qft, load_eq11_program, target_unitary
from qftsim.core import conjugate, spin_operator, z_rotation
from qftsim.nmr import SpinSystem, alanine, thermal_state
from qftsim.pulses import Pulse, PulseProgram, simulate

from conftest import random_deviation, random_unitary

seeds = st.integers(0, 2**31)


# fidelity


def test_fidelity_examples(rng):
    rho = random_deviation(rng, 3)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(rho, -rho) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(spin_operator("z", 1, 1), spin_operator("x", 1, 1)) == pytest.approx(0.5)


def test_fidelity_errors():
    with pytest.raises(ValueError):
        fidelity(np.zeros((2, 2)), spin_operator("z", 1, 1))
    with pytest.raises(ValueError):
        fidelity(np.eye(2), spin_operator("z", 1, 1))
    with pytest.raises(ValueError):
        fidelity(spin_operator("z", 1, 1), spin_operator("z", 1, 2))


@settings(max_examples=50, deadline=None)
@given(seed=seeds, a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3))
def test_fidelity_properties(seed, a, b):
    rng = np.random.default_rng(seed)
    r1, r2 = random_deviation(rng, 2), random_deviation(rng, 2)
    f = fidelity(r1, r2)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(fidelity(r2, r1), abs=1e-12)
    assert fidelity(a * r1, b * r2) == pytest.approx(f, abs=1e-12)
    u = random_unitary(rng, 4)
    assert fidelity(conjugate(u, r1), conjugate(u, r2)) == pytest.approx(f, abs=1e-12)


def test_attenuation_examples(rng):
    rho = random_deviation(rng, 3)
    assert estimate_attenuation(rho, 0.7 * rho) == pytest.approx(0.7)
    assert estimate_attenuation(rho, rho) == pytest.approx(1.0)
    assert estimate_attenuation(spin_operator("z", 1, 2), spin_operator("x", 2, 2)) == 0.0
    with pytest.raises(ValueError):
        estimate_attenuation(np.zeros((4, 4)), rho[:4, :4])


def test_attenuation_is_least_squares(rng):
    t, e = random_deviation(rng, 2), random_deviation(rng, 2)
    alpha = estimate_attenuation(t, e)
    residual = lambda a: np.linalg.norm(e - a * t)  # noqa: E731
    assert residual(alpha) <= min(residual(alpha + 1e-3), residual(alpha - 1e-3))


def test_align_frame_recovers_rotation(rng):
    rho = random_deviation(rng, 3)
    angles = np.array([1.0, -2.0, 0.5])
    found, f = align_frame(rho, rotate_frame(rho, angles))
    assert f == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(rotate_frame(rotate_frame(rho, angles), found), rho, atol=1e-6)


def test_rotate_frame_matches_conjugation(rng):
    rho = random_deviation(rng, 2)
    a = [0.3, 1.7]
    assert np.allclose(rotate_frame(rho, a), conjugate(z_rotation(a), rho))


def test_fidelity_report_fields(rng):
    rho = random_deviation(rng, 2)
    rep = fidelity_report(rho, 0.5 * rotate_frame(rho, [0.4, 0.0]))
    assert rep.F < 1
    assert rep.F_after_frame_alignment == pytest.approx(1.0, abs=1e-9)
    assert rep.attenuation_after_frame_alignment == pytest.approx(0.5, abs=1e-6)
    assert set(rep.to_dict()) >= {"F", "attenuation", "F_after_frame_alignment"}


# spectra


def one_spin(offset=0.0, t2=0.5):
    return SpinSystem((offset,), ((0,),), (1.0,), (t2,))


def test_acquisition_validation():
    with pytest.raises(ValueError):
        Acquisition(dwell=0)
    with pytest.raises(ValueError):
        Acquisition(points=1)
    acq = Acquisition()
    assert acq.resolution == 1.0
    assert acq.dwell == pytest.approx(61.035e-6, rel=1e-4)


def test_fid_zero_for_longitudinal(ala):
    fid = simulate_fid(thermal_state(ala), ala, 2)
    assert np.array_equal(fid, np.zeros_like(fid))
    assert spectrum(fid).peaks == []


def test_fid_single_spin_phase_convention():
    f = 37.0
    sys = one_spin(f)
    acq = Acquisition(dwell=1e-3, points=64, broadening=False)
    fid = simulate_fid(spin_operator("x", 1, 1), sys, 1, acq)
    assert np.allclose(fid, 0.5 * np.exp(2j * np.pi * f * acq.times))
    damped = simulate_fid(spin_operator("x", 1, 1), sys, 1, Acquisition(dwell=1e-3, points=64))
    assert np.allclose(damped, fid * np.exp(-acq.times / 0.5))


def test_fid_matches_trace_definition(ala, rng):
    from scipy.linalg import expm

    from qftsim.nmr import internal_hamiltonian

    rho = random_deviation(rng, 3)
    acq = Acquisition(dwell=1e-4, points=5, broadening=False)
    fid = simulate_fid(rho, ala, 3, acq)
    det = spin_operator("x", 3, 3) + 1j * spin_operator("y", 3, 3)
    h = internal_hamiltonian(ala)
    for t, s in zip(acq.times, fid):
        u = expm(-1j * h * t)
        assert s == pytest.approx(np.trace(u @ rho @ u.conj().T @ det), abs=1e-9)


def test_fid_two_spin_beat():
    j, f = 20.0, 100.0
    sys = SpinSystem((f, 0.0), ((0, j), (j, 0)), (1, 1), (1, 1))
    acq = Acquisition(dwell=1e-3, points=50, broadening=False)
    fid = simulate_fid(spin_operator("x", 1, 2), sys, 1, acq)
    t = acq.times
    expected = 0.5 * (np.exp(2j * np.pi * (f + j / 2) * t) + np.exp(2j * np.pi * (f - j / 2) * t))
    assert np.allclose(fid, expected)


def test_spectrum_pure_tone():
    acq = Acquisition(dwell=1e-3, points=1000)
    fid = np.exp(2j * np.pi * 123.0 * acq.times)
    sp = spectrum(fid, acq)
    assert len(sp.peaks) == 1
    assert abs(sp.peaks[0].freq - 123.0) <= acq.resolution
    diffs = np.diff(sp.freqs)
    assert np.all(diffs > 0) and np.allclose(diffs, acq.resolution)
    assert sp.freqs[0] == pytest.approx(-1 / (2 * acq.dwell))


def test_spectrum_parseval(rng):
    acq = Acquisition(dwell=1e-3, points=256)
    fid = rng.normal(size=256) + 1j * rng.normal(size=256)
    sp = spectrum(fid, acq)
    assert np.sum(abs(fid) ** 2) == pytest.approx(np.sum(abs(sp.amplitude) ** 2))


def test_spectrum_errors():
    with pytest.raises(ValueError):
        spectrum(np.zeros(10), Acquisition(points=16))


def test_transition_frequencies(ala):
    assert np.allclose(transition_frequencies(ala, 2), [-44.5, -9.5, 9.5, 44.5])
    assert np.allclose(transition_frequencies(ala, 1), 12587 + np.array([-27.6, -26.4, 26.4, 27.6]))
    with pytest.raises(ValueError):
        transition_frequencies(ala, 4)


def test_thermal_readout_spin2_four_peaks(ala):
    readout = PulseProgram((Pulse((1, 2, 3), math.pi / 2, math.pi / 2),), 3)
    rho = simulate(readout, ala, thermal_state(ala))
    acq = Acquisition()
    sp = spectrum(simulate_fid(rho, ala, 2, acq), acq, spin=2)
    freqs = sorted(p.freq for p in sp.peaks)
    assert len(freqs) == 4
    assert np.all(np.abs(np.array(freqs) - [-44.5, -9.5, 9.5, 44.5]) <= acq.resolution)


def qft_output(sys):
    return simulate(load_eq11_program(sys), sys, thermal_state(sys))


@pytest.mark.parametrize("spin", [1, 2, 3])
def test_fine_resolution_resolves_every_line(ala, spin):
    acq = Acquisition(dwell=1 / 16384, points=16384 * 8, broadening=False, reference_hz=ala.offsets_hz[spin - 1])
    sp = spectrum(simulate_fid(qft_output(ala), ala, spin, acq), acq)
    assert len(sp.peaks) == 4
    assert np.allclose(sorted(p.freq for p in sp.peaks), transition_frequencies(ala, spin), atol=acq.resolution)


@pytest.mark.parametrize("spin", [1, 3])
def test_coarse_resolution_merges_j13(ala, spin):
    acq = Acquisition(dwell=1 / 16384, points=8192, reference_hz=ala.offsets_hz[spin - 1])
    assert acq.resolution > 1.2
    sp = spectrum(simulate_fid(qft_output(ala), ala, spin, acq), acq)
    assert len(sp.peaks) == 2


def test_spectrum_exports():
    acq = Acquisition(dwell=1e-3, points=8)
    sp = spectrum(np.exp(2j * np.pi * 250 * acq.times), acq, spin=1)
    lines = sp.to_csv().splitlines()
    assert lines[0] == "freq_hz,re,im,magnitude" and len(lines) == 9
    assert set(sp.peaks_json()[0]) == {"freq_hz", "height", "width_hz"}


# tomography


def test_readout_set_sizes():
    assert readout_settings(1) == [("i",), ("x",), ("y",)]
    assert len(tomography_readout_set(2)) == 9
    assert len(tomography_readout_set(3)) == 27
    with pytest.raises(ValueError):
        tomography_readout_set(5)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_readout_map_rank(n):
    assert np.linalg.matrix_rank(readout_map(n)) == 4**n - 1


def test_rank_deficient_settings(rng):
    rho = random_deviation(rng, 2)
    partial = [("i", "i"), ("x", "x")]
    assert np.linalg.matrix_rank(readout_map(2, partial)) < 15
    with pytest.raises(ValueError, match="rank-deficient"):
        reconstruct(measure(rho, 2, partial), 2, partial)


def test_reconstruct_examples(ala):
    th = thermal_state(ala)
    assert np.max(np.abs(reconstruct(measure(th), 3) - th)) < 1e-8
    assert np.max(np.abs(reconstruct(np.zeros((27, 3, 4)), 3))) == 0
    with pytest.raises(ValueError):
        reconstruct(np.zeros((9, 3, 4)), 3)


def test_reconstruct_qft_output(ala):
    blk = compile_qft(3, ala, input_aware=True)
    out = simulate(blk.program, ala, thermal_state(ala))
    assert np.max(np.abs(reconstruct(measure(out), 3) - out)) < 1e-8
    ideal = conjugate(target_unitary(3), thermal_state(ala))
    assert fidelity(ideal, reconstruct(measure(out), 3)) >= 0.999


@settings(max_examples=20, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_tomography_round_trip(seed, n):
    rho = random_deviation(np.random.default_rng(seed), n)
    assert np.max(np.abs(reconstruct(measure(rho), n) - rho)) < 1e-8
