"""Closed-form references for the noiseless walk, used to validate the propagator.

``bloch_evolve`` diagonalizes the ring Hamiltonian in its plane-wave basis.
``bessel_distribution`` is the textbook infinite-line solution
``p(d) = J_d(2 tau)**2`` and is independent of everything else in the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BlochSpectrum:
    thetas: np.ndarray
    energies: np.ndarray

    def plane_wave(self, index: int) -> np.ndarray:
        n = self.thetas.size
        j = np.arange(1, n + 1)
        return np.exp(-1j * self.thetas[index] * j) / np.sqrt(n)


def bloch_spectrum(n: int, epsilon: float = 2.0) -> BlochSpectrum:
    """Ring eigenvalues ``epsilon - 2 cos(2 pi k / N)`` for k = 1..N."""
    thetas = 2.0 * np.pi * np.arange(1, n + 1) / n
    return BlochSpectrum(thetas, epsilon - 2.0 * np.cos(thetas))


def bloch_evolve(n: int, epsilon: float, psi0, tau: float) -> np.ndarray:
    """Noiseless ring evolution by projection onto plane waves."""
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (n,):
        raise ValueError(f"psi0 must have shape ({n},)")
    spec = bloch_spectrum(n, epsilon)
    j = np.arange(1, n + 1)
    # columns are the plane waves exp(-i theta_k j) / sqrt(N)
    waves = np.exp(-1j * np.outer(j, spec.thetas)) / np.sqrt(n)
    amps = waves.conj().T @ psi0
    return waves @ (np.exp(-1j * spec.energies * tau) * amps)


def bessel_j_sequence(order_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_order_max(x) by Miller's normalized downward recurrence."""
    if x == 0:
        out = np.zeros(order_max + 1)
        out[0] = 1.0
        return out
    start = 2 * ((max(order_max, int(x)) + int(np.sqrt(40 * max(order_max, x, 1.0))) + 20) // 2)
    vals = np.zeros(start + 2)
    vals[start] = 1.0
    for k in range(start, 0, -1):
        vals[k - 1] = 2.0 * k / x * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e200:
            vals *= 1e-200
    norm = vals[0] + 2.0 * vals[2:start + 1:2].sum()
    return vals[: order_max + 1] / norm


def bessel_distribution(offsets, tau: float) -> np.ndarray:
    """Infinite-line site probabilities ``J_d(2 tau)**2`` for integer offsets d."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    offsets = np.asarray(offsets, dtype=int)
    d = np.abs(offsets)
    seq = bessel_j_sequence(int(d.max(initial=0)), 2.0 * tau)
    return seq[d] ** 2
