"""Normalized-overlap fidelity between deviation density matrices."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from ..core import num_spins, z_values

__all__ = ["FidelityReport", "fidelity", "estimate_attenuation", "align_frame", "rotate_frame", "fidelity_report"]


def _validate(rho: np.ndarray, name: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    norm = np.linalg.norm(rho)
    if norm == 0:
        raise ValueError(f"{name} has zero norm; the fidelity measure is undefined")
    if abs(np.trace(rho)) > 1e-9 * max(norm, 1.0):
        raise ValueError(f"{name} is not traceless; pass the deviation matrix")
    return rho


def _overlap(a: np.ndarray, b: np.ndarray) -> float:
    """``Tr(a b)`` for Hermitian matrices (real by construction)."""
    return float(np.real(np.sum(a.T * b)))


def fidelity(rho_theory, rho_exp) -> float:
    """``1/2 + 1/2 Tr(rt re) / (sqrt(Tr rt^2) sqrt(Tr re^2))``, clipped to [0, 1]."""
    a = _validate(rho_theory, "rho_theory")
    b = _validate(rho_exp, "rho_exp")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    c = _overlap(a, b) / np.sqrt(_overlap(a, a) * _overlap(b, b))
    return float(np.clip(0.5 + 0.5 * c, 0.0, 1.0))


def estimate_attenuation(rho_theory, rho_exp) -> float:
    """Least-squares scale ``alpha`` minimizing ``||rho_exp - alpha rho_theory||_F``."""
    a = np.asarray(rho_theory, dtype=complex)
    if np.linalg.norm(a) == 0:
        raise ValueError("rho_theory has zero norm")
    return _overlap(a, np.asarray(rho_exp, dtype=complex)) / _overlap(a, a)


def _frame_objective(rho_theory, rho_exp):
    """Vectorized correlation ``c(angles)`` after rotating ``rho_exp`` by ``Rz(angles)``."""
    n = num_spins(len(rho_theory))
    z = z_values(n)
    dz = (z[:, None, :] - z[None, :, :]).reshape(-1, n)  # z_a - z_b per element
    weights = (rho_theory.T * rho_exp).ravel()
    norm = np.sqrt(_overlap(rho_theory, rho_theory) * _overlap(rho_exp, rho_exp))
    keep = np.abs(weights) > 0
    dz, weights = dz[keep], weights[keep]

    def corr(angles):
        angles = np.atleast_2d(angles)
        return np.real(np.exp(-1j * angles @ dz.T) @ weights) / norm

    return n, corr


def align_frame(rho_theory, rho_exp) -> tuple[np.ndarray, float]:
    """Per-spin z rotation of ``rho_exp`` that maximizes the fidelity.

    Coarse grid over the 2pi-periodic angles, then local refinement from the
    best grid points.  Returns ``(angles, fidelity)``.
    """
    a = _validate(rho_theory, "rho_theory")
    b = _validate(rho_exp, "rho_exp")
    n, corr = _frame_objective(a, b)
    per_axis = max(4, int(round(20000 ** (1 / n))))
    axis = np.linspace(0, 2 * np.pi, per_axis, endpoint=False)
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    values = corr(grid)
    best_angles, best = np.zeros(n), float(corr(np.zeros(n))[0])
    for idx in np.argsort(values)[::-1][:5]:
        res = minimize(lambda x: -corr(x)[0], grid[idx], method="BFGS")
        if -res.fun > best:
            best, best_angles = float(-res.fun), np.angle(np.exp(1j * res.x))
    return best_angles, float(np.clip(0.5 + 0.5 * best, 0.0, 1.0))


@dataclass(frozen=True)
class FidelityReport:
    F: float
    attenuation: float
    F_after_frame_alignment: float
    frame: tuple[float, ...]
    attenuation_after_frame_alignment: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["frame"] = list(self.frame)
        return d


def rotate_frame(rho, angles) -> np.ndarray:
    """``Rz(angles) rho Rz(angles)^dagger`` with ``Rz(a) = exp(-i sum_i a_i I_z^i)``."""
    rho = np.asarray(rho, dtype=complex)
    ph = np.exp(-1j * (z_values(num_spins(len(rho))) @ np.asarray(angles, dtype=float)))
    return ph[:, None] * rho * ph.conj()[None, :]


def fidelity_report(rho_theory, rho_exp) -> FidelityReport:
    """Raw and frame-aligned fidelity plus the attenuation estimate for each."""
    angles, aligned = align_frame(rho_theory, rho_exp)
    return FidelityReport(
        F=fidelity(rho_theory, rho_exp),
        attenuation=estimate_attenuation(rho_theory, rho_exp),
        F_after_frame_alignment=aligned,
        frame=tuple(float(a) for a in angles),
        attenuation_after_frame_alignment=estimate_attenuation(rho_theory, rotate_frame(rho_exp, angles)),
    )
