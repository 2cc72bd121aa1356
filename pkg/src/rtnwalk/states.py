"""Initial walker states and pure/mixed state conversions.

Site indices in this module's public functions are 1-based (sites 1..N);
arrays are stored 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def localized(n: int, j0: int) -> np.ndarray:
    if not 1 <= j0 <= n:
        raise ValueError(f"site j0={j0} outside 1..{n}")
    psi = np.zeros(n, dtype=complex)
    psi[j0 - 1] = 1.0
    return psi


def gaussian_packet(n: int, center: float, delta: float, k0: float) -> np.ndarray:
    """Gaussian wavepacket ``sqrt(normal(j; center, delta)) * exp(-i k0 j)``.

    The discrete truncation to N sites is renormalized to unit norm.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta!r}")
    j = np.arange(1, n + 1, dtype=float)
    density = np.exp(-((j - center) ** 2) / (2.0 * delta**2)) / np.sqrt(2.0 * np.pi * delta**2)
    psi = np.sqrt(density) * np.exp(-1j * k0 * j)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("wavepacket has no weight on the lattice")
    return psi / norm


def superposition(n: int, sites, amplitudes=None) -> np.ndarray:
    """Normalized superposition of localized states at the given 1-based sites."""
    sites = list(sites)
    amps = np.ones(len(sites), dtype=complex) if amplitudes is None else np.asarray(amplitudes, dtype=complex)
    psi = np.zeros(n, dtype=complex)
    for s, c in zip(sites, amps):
        psi += c * localized(n, int(s))
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("superposition has zero norm")
    return psi / norm


def check_state(psi, tol: float = 1e-12) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError(f"state vector is not normalized (norm={np.linalg.norm(psi)!r})")
    return psi


def pure_density(psi) -> np.ndarray:
    psi = check_state(psi, tol=1e-8)
    return np.outer(psi, psi.conj())


def check_density(rho, herm_tol: float = 1e-12, trace_tol: float = 1e-10,
                  psd_tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real!r}, not 1")
    if np.linalg.eigvalsh(rho)[0] < -psd_tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def spectral_ensemble(rho, weight_tol: float = 1e-6) -> list[tuple[float, np.ndarray]]:
    """Decompose ``rho`` into (weight, eigenvector) pairs, heaviest first.

    Pairs are dropped from the light end while the discarded weight (including
    any round-off negative eigenvalues) stays within ``weight_tol``, which
    bounds the trace-norm reconstruction error.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if not 0 <= weight_tol < 1:
        raise ValueError("weight_tol must lie in [0, 1)")
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    # discarded mass measured from the tail, |w| so negative round-off counts too
    tail = np.append(np.cumsum(np.abs(w[::-1]))[::-1], 0.0)
    keep = next(k for k in range(1, w.size + 1) if tail[k] <= weight_tol)
    keep = max(1, min(keep, int(np.count_nonzero(w > 0))))
    return [(float(w[k]), v[:, k].copy()) for k in range(keep)]


@dataclass(frozen=True)
class StateSpec:
    """Constructor descriptor for an initial state.

    ``kind`` is one of ``localized`` (site), ``gaussian`` (center, delta, k0)
    or ``superposition`` (sites, optional amplitudes).
    """
    kind: str
    params: dict = field(default_factory=dict)

    def build(self, n: int) -> np.ndarray:
        p = self.params
        if self.kind == "localized":
            return localized(n, int(p["site"]))
        if self.kind == "gaussian":
            return gaussian_packet(n, float(p["center"]), float(p["delta"]), float(p["k0"]))
        if self.kind == "superposition":
            return superposition(n, p["sites"], p.get("amplitudes"))
        raise ValueError(f"unknown state kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        kind = d.pop("kind")
        return cls(kind, d)

    def __hash__(self):
        return hash((self.kind, repr(sorted(self.params.items()))))
