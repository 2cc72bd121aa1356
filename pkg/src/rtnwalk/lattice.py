"""Tight-binding lattice Hamiltonian with fluctuating tunneling amplitudes.

Units: the walker-environment coupling is set to one, so the noise amplitude
``a``, the switching rate ``gamma`` and the time ``tau`` are all expressed in
units of the hopping energy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

BOUNDARIES = ("ring", "line")


@dataclass(frozen=True)
class LatticeConfig:
    n_sites: int
    boundary: str = "ring"
    epsilon: float = 2.0
    a: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise ValueError(f"n_sites must be an integer >= 3, got {self.n_sites!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not np.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be finite, got {self.epsilon!r}")
        if not (np.isfinite(self.a) and self.a >= 0):
            raise ValueError(f"a must be >= 0, got {self.a!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def ring(self) -> bool:
        return self.boundary == "ring"

    @property
    def n_links(self) -> int:
        return self.n_sites if self.ring else self.n_sites - 1

    @property
    def spectral_radius(self) -> float:
        """Upper bound on ``|E - epsilon|`` for every noisy Hamiltonian."""
        return 2.0 * (1.0 + self.a)

    def replace(self, **changes) -> "LatticeConfig":
        fields = dict(n_sites=self.n_sites, boundary=self.boundary,
                      epsilon=self.epsilon, a=self.a, gamma=self.gamma)
        fields.update(changes)
        return LatticeConfig(**fields)


def link_endpoints(config: LatticeConfig) -> tuple[np.ndarray, np.ndarray]:
    """0-based site pairs (j, j+1) joined by each link; the ring closes N-1 -> 0."""
    left = np.arange(config.n_links)
    right = (left + 1) % config.n_sites
    return left, right


def build_h0(config: LatticeConfig) -> sp.csr_matrix:
    n = config.n_sites
    left, right = link_endpoints(config)
    rows = np.concatenate([np.arange(n), left, right])
    cols = np.concatenate([np.arange(n), right, left])
    vals = np.concatenate([np.full(n, config.epsilon), -np.ones(2 * left.size)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def check_couplings(config: LatticeConfig, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (config.n_links,):
        raise ValueError(f"coupling vector must have length {config.n_links}, got shape {g.shape}")
    if not np.all(np.abs(g) == config.a):
        raise ValueError("every coupling must be exactly +a or -a")
    return g


def hopping(config: LatticeConfig, g) -> np.ndarray:
    """Instantaneous off-diagonal element on every link, ``-1 + g_j``."""
    return -1.0 + np.asarray(g, dtype=float)


def noisy_matvec(config: LatticeConfig, h0, g, psi) -> np.ndarray:
    """Apply ``H0 + V`` to ``psi``, with V adding ``g_j`` on link (j, j+1)."""
    psi = np.asarray(psi)
    if psi.shape[0] != config.n_sites or h0.shape != (config.n_sites, config.n_sites):
        raise ValueError(
            f"dimension mismatch: lattice has {config.n_sites} sites, "
            f"h0 is {h0.shape}, psi is {psi.shape}")
    g = check_couplings(config, g)
    out = np.asarray(h0 @ psi, dtype=np.result_type(psi.dtype, float))
    left, right = link_endpoints(config)
    gb = g if psi.ndim == 1 else g[:, None]
    # each site is the left end of at most one link and the right end of at most one
    out[left] += gb * psi[right]
    out[right] += gb * psi[left]
    return out


def dense_hamiltonian(config: LatticeConfig, g=None) -> np.ndarray:
    """Dense ``H0 + V`` built entry by entry; used as a reference in tests and oracles."""
    n = config.n_sites
    h = np.zeros((n, n))
    for j in range(n):
        h[j, j] = config.epsilon
    g = np.zeros(config.n_links) if g is None else np.asarray(g, dtype=float)
    for link in range(config.n_links):
        j, k = link, (link + 1) % n
        h[j, k] += -1.0 + g[link]
        h[k, j] += -1.0 + g[link]
    return h
