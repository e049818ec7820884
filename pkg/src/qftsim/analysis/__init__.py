from .fidelity import FidelityReport, align_frame, estimate_attenuation, fidelity, fidelity_report, rotate_frame
from .spectra import Acquisition, Peak, SpectrumResult, simulate_fid, spectrum, transition_frequencies
from .tomography import measure, readout_map, readout_settings, reconstruct, tomography_readout_set

__all__ = [
    "Acquisition",
    "FidelityReport",
    "Peak",
    "SpectrumResult",
    "align_frame",
    "estimate_attenuation",
    "fidelity",
    "fidelity_report",
    "measure",
    "readout_map",
    "readout_settings",
    "reconstruct",
    "rotate_frame",
    "simulate_fid",
    "spectrum",
    "tomography_readout_set",
    "transition_frequencies",
]
