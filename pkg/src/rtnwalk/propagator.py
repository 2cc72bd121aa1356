"""Time-ordered evolution under the piecewise-constant noisy Hamiltonian.

Between two switch events the Hamiltonian is constant, so each interval is
propagated exactly (to a truncation tolerance) with a Chebyshev expansion of
``exp(-i H dt)`` driven by sparse nearest-neighbour products. Checkpoints split
intervals without changing the couplings.

Ensembles are reduced over a fixed partition of realizations into batches.
Each batch is summed in realization order and batches are combined in index
order, so results are bit-identical for any number of worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lattice import LatticeConfig, check_couplings
from .noise import initial_couplings, merge_events, sample_links
from .states import check_state, spectral_ensemble

DEFAULT_BATCHES = 20


class PropagationError(RuntimeError):
    """The Chebyshev expansion did not converge within the term cap."""


def _check_checkpoints(checkpoints) -> np.ndarray:
    cps = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    if cps.ndim != 1 or cps.size == 0:
        raise ValueError("checkpoints must be a non-empty 1D sequence")
    if cps[0] < 0 or np.any(np.diff(cps) <= 0) or not np.all(np.isfinite(cps)):
        raise ValueError("checkpoints must be finite, strictly increasing and >= 0")
    return cps


@dataclass(frozen=True)
class EvolutionPlan:
    config: LatticeConfig
    checkpoints: np.ndarray
    n_realizations: int = 1000
    master_seed: int = 0
    chebyshev_tol: float = 1e-10
    n_batches: int = DEFAULT_BATCHES

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", _check_checkpoints(self.checkpoints))
        if int(self.n_realizations) != self.n_realizations or self.n_realizations < 1:
            raise ValueError("n_realizations must be a positive integer")
        if not self.chebyshev_tol > 0:
            raise ValueError("chebyshev_tol must be > 0")
        if self.n_batches < 1:
            raise ValueError("n_batches must be >= 1")

    def replace(self, **changes) -> "EvolutionPlan":
        fields = dict(config=self.config, checkpoints=self.checkpoints,
                      n_realizations=self.n_realizations, master_seed=self.master_seed,
                      chebyshev_tol=self.chebyshev_tol, n_batches=self.n_batches)
        fields.update(changes)
        return EvolutionPlan(**fields)

    def batch_bounds(self) -> list[tuple[int, int]]:
        r = self.n_realizations
        nb = min(self.n_batches, r)
        return [(b * r // nb, (b + 1) * r // nb) for b in range(nb)]


@dataclass
class TrajectoryResult:
    checkpoints: np.ndarray
    states: np.ndarray  # (C, N)


def _as_block(psi) -> np.ndarray:
    block = np.ascontiguousarray(np.atleast_2d(np.asarray(psi, dtype=complex)))
    if block.ndim != 2:
        raise ValueError("expected a state vector or a (m, N) block of state vectors")
    return block


def interval_propagate(config: LatticeConfig, g, psi, dt: float, tol: float = 1e-10) -> np.ndarray:
    """``exp(-i (H0 + V) dt) psi`` for a fixed coupling vector ``g``.

    Accepts one state of shape (N,) or a block of shape (m, N).
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    g = check_couplings(config, g)
    block = _as_block(psi).copy()
    if block.shape[1] != config.n_sites:
        raise ValueError(f"state has {block.shape[1]} sites, lattice has {config.n_sites}")
    hop = np.ascontiguousarray(-1.0 + g)
    if not config.ring:
        hop = np.append(hop, 0.0)
    work = [np.empty_like(block) for _ in range(3)]
    used = _kernels.chebyshev_step(block, hop, config.ring, config.epsilon,
                                   config.spectral_radius, float(dt), float(tol), *work)
    if used < 0:
        raise PropagationError(f"Chebyshev expansion failed to converge for dt={dt!r}")
    return block[0] if np.ndim(psi) == 1 else block


def realization_noise(config: LatticeConfig, t_max: float, master_seed: int,
                      realization_index: int):
    """Initial couplings and merged switch timeline for one noise realization."""
    if config.a == 0.0 or t_max <= 0.0:
        return np.zeros(config.n_links), np.empty(0), np.empty(0, dtype=np.int64)
    trajs = sample_links(config.gamma, config.a, t_max, config.n_links,
                         master_seed, realization_index)
    times, links = merge_events(trajs)
    return initial_couplings(trajs), times, links


def propagate_timeline(config: LatticeConfig, psi, g0, event_times, event_links,
                       checkpoints, tol_budget: float = 1e-10) -> np.ndarray:
    """Evolve a state (or block) through a given switch timeline.

    Returns the states at each checkpoint, shaped (C, N) or (C, m, N).
    """
    block = _as_block(psi)
    cps = _check_checkpoints(checkpoints)
    g0 = np.ascontiguousarray(np.asarray(g0, dtype=float))
    if not config.ring:
        # padded link joining the ends, never switched and kept at zero hopping
        g0 = np.append(g0, 1.0)
    out = np.empty((cps.size,) + block.shape, dtype=complex)
    status, _ = _kernels.evolve_events(block, g0, np.ascontiguousarray(event_times, dtype=float),
                                       np.ascontiguousarray(event_links, dtype=np.int64), cps,
                                       config.ring, config.epsilon, config.spectral_radius,
                                       float(tol_budget), out)
    if status != _kernels.OK:
        raise PropagationError("Chebyshev expansion failed to converge within the term cap")
    return out[:, 0, :] if np.ndim(psi) == 1 else out


def evolve_realization(plan: EvolutionPlan, psi0, realization_index: int) -> TrajectoryResult:
    psi0 = check_state(psi0, tol=1e-10)
    cfg = plan.config
    g0, times, links = realization_noise(cfg, float(plan.checkpoints[-1]),
                                         plan.master_seed, realization_index)
    states = propagate_timeline(cfg, psi0, g0, times, links, plan.checkpoints, plan.chebyshev_tol)
    return TrajectoryResult(plan.checkpoints, states)


@dataclass
class EnsembleResult:
    """Monte Carlo sums of one or more ensemble-averaged density matrices.

    ``half_sums[h]`` holds the unnormalized sum over the even (h=0) or odd
    (h=1) batches, shaped (C, n_out, N, N). ``batch_populations`` holds each
    batch's summed site populations, shaped (n_batches, C, n_out, N).
    """
    checkpoints: np.ndarray
    n_realizations: int
    half_sums: np.ndarray
    half_counts: np.ndarray
    batch_populations: np.ndarray
    batch_counts: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_outputs(self) -> int:
        return self.half_sums.shape[2]

    def density(self, output: int = 0) -> np.ndarray:
        total = self.half_sums[0, :, output] + self.half_sums[1, :, output]
        return total / self.n_realizations

    def half_density(self, half: int, output: int = 0) -> np.ndarray:
        return self.half_sums[half, :, output] / self.half_counts[half]

    def populations(self, output: int = 0) -> np.ndarray:
        return self.batch_populations[:, :, output].sum(axis=0) / self.n_realizations


def _run_batch(cfg, block, weights, cps, master_seed, tol, lo, hi):
    n_out, n = weights.shape[0], block.shape[1]
    acc = np.zeros((cps.size, n_out, n, n), dtype=complex)
    pops = np.zeros((cps.size, n_out, n))
    t_max = float(cps[-1])
    for r in range(lo, hi):
        g0, times, links = realization_noise(cfg, t_max, master_seed, r)
        states = propagate_timeline(cfg, block, g0, times, links, cps, tol)
        _kernels.accumulate_mixture(acc, states, weights)
        pops += np.einsum("ok,ckn->con", weights, np.abs(states) ** 2)
    return acc, pops


def run_ensemble(plan: EvolutionPlan, psi_block, weights=None, threads: int = 1) -> EnsembleResult:
    """Ensemble-average one or more mixtures of the states in ``psi_block``.

    Every state in the block is evolved under the same noise realizations.
    Output ``o`` is ``sum_k weights[o, k] <U psi_k psi_k^dag U^dag>``; the
    default weights give one density matrix per input state.
    """
    block = _as_block(psi_block)
    if block.shape[1] != plan.config.n_sites:
        raise ValueError(f"state has {block.shape[1]} sites, lattice has {plan.config.n_sites}")
    norms = np.linalg.norm(block, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("all initial states must be normalized")
    weights = np.eye(block.shape[0]) if weights is None else np.atleast_2d(np.asarray(weights, dtype=float))
    if weights.shape[1] != block.shape[0]:
        raise ValueError("weights must have one column per state")
    weights = np.ascontiguousarray(weights)
    cps = plan.checkpoints
    bounds = plan.batch_bounds()
    n, n_out = block.shape[1], weights.shape[0]

    half_sums = np.zeros((2, cps.size, n_out, n, n), dtype=complex)
    half_counts = np.zeros(2, dtype=np.int64)
    pops = np.zeros((len(bounds), cps.size, n_out, n))

    def job(b):
        lo, hi = bounds[b]
        return _run_batch(plan.config, block, weights, cps, plan.master_seed,
                          plan.chebyshev_tol, lo, hi)

    def combine(b, result):
        acc, p = result
        half_sums[b % 2] += acc
        half_counts[b % 2] += bounds[b][1] - bounds[b][0]
        pops[b] = p

    threads = max(1, int(threads))
    if threads == 1:
        for b in range(len(bounds)):
            combine(b, job(b))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # waves bound the number of batch accumulators held in memory
            for start in range(0, len(bounds), threads):
                wave = range(start, min(start + threads, len(bounds)))
                for b, res in zip(wave, pool.map(job, wave)):
                    combine(b, res)
    if half_counts[1] == 0:
        # single batch: both halves are the same batch
        half_sums[1] = 0.0
    return EnsembleResult(cps, plan.n_realizations, half_sums, half_counts, pops,
                          np.array([hi - lo for lo, hi in bounds]),
                          meta={"master_seed": plan.master_seed})


def ensemble_density(plan: EvolutionPlan, psi0, threads: int = 1) -> np.ndarray:
    """Ensemble-averaged density matrices ``(1/R) sum_r |psi_r><psi_r|``, shaped (C, N, N)."""
    psi0 = check_state(psi0, tol=1e-10)
    return run_ensemble(plan, psi0, threads=threads).density()


def mixture_block(rho_in, weight_tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a density matrix as (states block, weight row)."""
    pairs = spectral_ensemble(rho_in, weight_tol)
    w = np.array([p for p, _ in pairs])
    block = np.array([v for _, v in pairs])
    return block, (w / w.sum())[None, :]


def evolve_density_fresh(config: LatticeConfig, duration, n_realizations: int, master_seed: int,
                         rho_in, weight_tol: float = 1e-6, chebyshev_tol: float = 1e-10,
                         threads: int = 1, n_batches: int = DEFAULT_BATCHES):
    """Apply the ensemble-averaged map for ``duration`` to a mixed state.

    The input is decomposed into eigenvectors, which are all evolved under the
    same ``n_realizations`` noise realizations started afresh at time zero. A
    scalar duration returns one (N, N) matrix, an array returns (C, N, N).
    """
    return evolve_mixture(config, duration, n_realizations, master_seed, rho_in,
                          weight_tol, chebyshev_tol, threads, n_batches).density()[
        0 if np.ndim(duration) == 0 else slice(None)]


def evolve_mixture(config: LatticeConfig, durations, n_realizations: int, master_seed: int,
                   rho_in, weight_tol: float = 1e-6, chebyshev_tol: float = 1e-10,
                   threads: int = 1, n_batches: int = DEFAULT_BATCHES) -> EnsembleResult:
    block, weights = mixture_block(rho_in, weight_tol)
    plan = EvolutionPlan(config, np.atleast_1d(durations), n_realizations, master_seed,
                         chebyshev_tol, n_batches)
    result = run_ensemble(plan, block, weights, threads=threads)
    result.meta["n_eigenvectors"] = block.shape[0]
    return result
