"""Memory-effect diagnostics for the noise-averaged dynamical map.

Two witnesses are provided:

* the composition gap, the trace distance between the full map applied over
  [0, tau] and the composition of the map over [0, tau1] with a map over
  [tau1, tau] driven by fresh, independent noise;
* a trace-distance revival scan over pairs of initial states evolved under
  one shared set of noise realizations.

Both are Monte Carlo estimates. The resolvable scale is set by a noise
floor: for the gap, the trace distance between two independently seeded
full-map runs; for the pair scan, the spread between the two interleaved
halves of the ensemble.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import derive_seed
from .observables import trace_distance
from .propagator import EvolutionPlan, evolve_mixture, mixture_block, run_ensemble
from .states import StateSpec

MIN_REALIZATIONS = 100
REVIVAL_THRESHOLD = 0.01

_FULL, _FLOOR, _FRESH = 1, 2, 3


@dataclass
class CompositionGapSeries:
    tau1: float
    taus: np.ndarray
    gamma_values: np.ndarray
    noise_floor: np.ndarray
    gap_at_split: float = float("nan")
    floor_at_split: float = float("nan")

    @property
    def max_gap(self) -> float:
        return float(self.gamma_values.max())

    @property
    def max_floor(self) -> float:
        return float(self.noise_floor.max())


@dataclass
class GapMaximum:
    tau1: float
    max_gap: float
    max_floor: float
    series: CompositionGapSeries


def _check_realizations(plan: EvolutionPlan):
    if plan.n_realizations < MIN_REALIZATIONS:
        raise ValueError(f"composition gap needs n_realizations >= {MIN_REALIZATIONS}, "
                         f"got {plan.n_realizations}")


def _gap_series(plan: EvolutionPlan, rho0, tau1_list, threads: int, weight_tol: float):
    _check_realizations(plan)
    tau1s = np.asarray(tau1_list, dtype=float)
    if np.any(tau1s < 0):
        raise ValueError("tau1 must be >= 0")
    if np.any(tau1s >= plan.checkpoints[-1]):
        raise ValueError("every tau1 must lie before the last checkpoint")
    grid = np.union1d(plan.checkpoints, tau1s)
    block, weights = mixture_block(rho0, weight_tol)
    full = run_ensemble(plan.replace(checkpoints=grid, master_seed=derive_seed(plan.master_seed, _FULL)),
                        block, weights, threads).density()
    floor_run = run_ensemble(plan.replace(checkpoints=grid, master_seed=derive_seed(plan.master_seed, _FLOOR)),
                             block, weights, threads).density()
    floor = np.array([trace_distance(a, b) for a, b in zip(full, floor_run)])

    out = []
    for i, tau1 in enumerate(tau1s):
        split = int(np.searchsorted(grid, tau1))
        later = grid > tau1
        durations = np.concatenate([[0.0], grid[later] - tau1])
        composed = evolve_mixture(plan.config, durations, plan.n_realizations,
                                  derive_seed(plan.master_seed, _FRESH, i), floor_run[split],
                                  weight_tol, plan.chebyshev_tol, threads, plan.n_batches).density()
        gaps = np.array([trace_distance(a, b) for a, b in zip(full[later], composed[1:])])
        out.append(CompositionGapSeries(float(tau1), grid[later], gaps, floor[later],
                                        trace_distance(full[split], composed[0]), float(floor[split])))
    return out


def composition_gap(plan: EvolutionPlan, rho0, tau1: float, threads: int = 1,
                    weight_tol: float = 1e-6) -> CompositionGapSeries:
    """Gap between the full and the composed map at every checkpoint after ``tau1``.

    The intermediate state at ``tau1`` comes from the noise-floor replica, so
    it is statistically independent of the full-map run it is compared with.
    """
    if tau1 >= plan.checkpoints[0]:
        raise ValueError("tau1 must precede every requested checkpoint")
    return _gap_series(plan, rho0, [tau1], threads, weight_tol)[0]


def gap_maximum_vs_tau1(plan: EvolutionPlan, rho0, tau1_list, threads: int = 1,
                        weight_tol: float = 1e-6) -> list[GapMaximum]:
    """Maximum over tau of the gap (and of the noise floor) for each split time."""
    series = _gap_series(plan, rho0, tau1_list, threads, weight_tol)
    return [GapMaximum(s.tau1, s.max_gap, s.max_floor, s) for s in series]


def default_tau1_grid(tau_max: float, n: int = 5) -> np.ndarray:
    return tau_max / 2 * np.arange(1, n + 1) / n


@dataclass(frozen=True)
class StatePairSpec:
    label: str
    state1: StateSpec
    state2: StateSpec

    def to_dict(self) -> dict:
        return {"label": self.label, "state1": self.state1.to_dict(), "state2": self.state2.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "StatePairSpec":
        return cls(d["label"], StateSpec.from_dict(d["state1"]), StateSpec.from_dict(d["state2"]))


def default_pairs(n: int, delta: float = 4.0, k0: float = 1.5 * np.pi) -> list[StatePairSpec]:
    """The six initial pairs of the reference pair scan, centred at x0 = N // 2."""
    x0 = n // 2
    dk = 20 * np.pi / n

    def loc(site):
        return StateSpec("localized", {"site": site})

    def gauss(center, k):
        return StateSpec("gaussian", {"center": center, "delta": delta, "k0": k})

    return [
        StatePairSpec("x0|gauss(x0,k0)", loc(x0), gauss(x0, k0)),
        StatePairSpec("gauss(x0,k0)|gauss(x0,k0+dk)", gauss(x0, k0), gauss(x0, k0 + dk)),
        StatePairSpec("x0|cat(x0+-3)", loc(x0), StateSpec("superposition", {"sites": [x0 + 3, x0 - 3]})),
        StatePairSpec("x0|x0+10", loc(x0), loc(x0 + 10)),
        StatePairSpec("gauss(x0,k0)|gauss(x0+20,k0+dk)", gauss(x0, k0), gauss(x0 + 20, k0 + dk)),
        StatePairSpec("x0|gauss(x0+6,k0)", loc(x0), gauss(x0 + 6, k0)),
    ]


def revival_amplitude(series) -> float:
    """Largest rise of ``series`` above its running minimum, counted only
    after the first strict decrease."""
    d = np.asarray(series, dtype=float)
    drops = np.nonzero(d[1:] < d[:-1])[0]
    if drops.size == 0:
        return 0.0
    tail = d[drops[0] + 1:]
    return float(np.max(tail - np.minimum.accumulate(tail)))


@dataclass
class PairScanResult:
    label: str
    taus: np.ndarray
    distance: np.ndarray
    floor_series: np.ndarray
    noise_floor: float
    revival: float
    threshold: float

    @property
    def flagged(self) -> bool:
        return self.revival > self.threshold


def blp_scan(plan: EvolutionPlan, pairs, eps_rev: float = REVIVAL_THRESHOLD,
             threads: int = 1) -> list[PairScanResult]:
    """Trace distance between the members of each pair under shared noise.

    A revival is flagged when the distance climbs by more than
    ``max(2 * noise_floor, eps_rev)`` after having decreased.
    """
    n = plan.config.n_sites
    specs = []
    for p in pairs:
        for s in (p.state1, p.state2):
            if s not in specs:
                specs.append(s)
    block = np.array([s.build(n) for s in specs])
    result = run_ensemble(plan, block, threads=threads)
    rhos = [result.density(k) for k in range(len(specs))]
    halves = [(result.half_density(0, k), result.half_density(1, k)) for k in range(len(specs))]
    have_halves = result.half_counts[1] > 0

    out = []
    for p in pairs:
        i, j = specs.index(p.state1), specs.index(p.state2)
        dist = np.array([trace_distance(a, b) for a, b in zip(rhos[i], rhos[j])])
        if have_halves:
            d0 = np.array([trace_distance(a, b) for a, b in zip(halves[i][0], halves[j][0])])
            d1 = np.array([trace_distance(a, b) for a, b in zip(halves[i][1], halves[j][1])])
            floor_series = np.abs(d0 - d1) / 2
            floor = float(np.sqrt(np.mean(floor_series**2)))
        else:
            floor_series, floor = np.zeros_like(dist), 0.0
        out.append(PairScanResult(p.label, plan.checkpoints, dist, floor_series, floor,
                                  revival_amplitude(dist), max(2 * floor, eps_rev)))
    return out
