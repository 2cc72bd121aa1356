"""Random telegraph noise: per-link dichotomous processes switching between +a and -a.

Switch events form a Poisson process of rate ``gamma`` (exponential waiting
times), and the initial sign is equiprobable so the process is stationary with
autocorrelation ``a**2 * exp(-2 * gamma * t)``.

Every (master_seed, realization, link) triple owns an independent Philox
stream keyed directly by the triple, so trajectories do not depend on the order
in which realizations or links are generated.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseEnsembleSeed:
    master_seed: int
    realization_index: int = 0
    link_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if not 0 <= self.realization_index < 2**32 or not 0 <= self.link_index < 2**32:
            raise ValueError("realization_index and link_index must be in [0, 2**32)")

    def key(self) -> np.ndarray:
        return np.array([self.master_seed,
                         (self.realization_index << 32) | self.link_index], dtype=np.uint64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key()))


def derive_seed(master_seed: int, *tags: int) -> int:
    """Child master seed for an independent sub-run (e.g. a noise-floor replica)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(t) for t in tags))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class TelegraphTrajectory:
    initial_sign: int
    switch_times: np.ndarray
    amplitude: float
    t_max: float
    link_index: int = 0
    gamma: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        if self.initial_sign not in (1, -1):
            raise ValueError("initial_sign must be +1 or -1")
        times = np.asarray(self.switch_times, dtype=float)
        if times.size and (np.any(np.diff(times) <= 0) or times[0] <= 0 or times[-1] > self.t_max):
            raise ValueError("switch_times must be strictly increasing within (0, t_max]")
        object.__setattr__(self, "switch_times", times)

    def __eq__(self, other):
        if not isinstance(other, TelegraphTrajectory):
            return NotImplemented
        return (self.initial_sign == other.initial_sign and self.amplitude == other.amplitude
                and self.t_max == other.t_max and self.link_index == other.link_index
                and np.array_equal(self.switch_times, other.switch_times))

    def n_switches(self, t: float | None = None) -> int:
        if t is None:
            return int(self.switch_times.size)
        return int(np.searchsorted(self.switch_times, t, side="right"))


def _check_rate_and_horizon(gamma, t_max):
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    if not (np.isfinite(t_max) and t_max > 0):
        raise ValueError(f"t_max must be > 0, got {t_max!r}")


_CHUNK = 64


def _draw_switch_times(rng: np.random.Generator, gamma: float, t_max: float) -> np.ndarray:
    # fixed-size chunks keep the stream independent of t_max: a longer horizon
    # only extends the same trajectory
    times = np.cumsum(rng.exponential(1.0 / gamma, size=_CHUNK))
    while times[-1] <= t_max:
        more = times[-1] + np.cumsum(rng.exponential(1.0 / gamma, size=_CHUNK))
        times = np.concatenate([times, more])
    return times[: np.searchsorted(times, t_max, side="right")]


def sample_trajectory(gamma: float, a: float, t_max: float,
                      seed: NoiseEnsembleSeed) -> TelegraphTrajectory:
    _check_rate_and_horizon(gamma, t_max)
    if a < 0:
        raise ValueError(f"amplitude must be >= 0, got {a!r}")
    rng = seed.generator()
    sign = 1 if rng.random() < 0.5 else -1
    times = _draw_switch_times(rng, gamma, t_max)
    return TelegraphTrajectory(sign, times, float(a), float(t_max), seed.link_index, float(gamma))


def sample_links(gamma: float, a: float, t_max: float, n_links: int,
                 master_seed: int, realization_index: int) -> list[TelegraphTrajectory]:
    return [sample_trajectory(gamma, a, t_max, NoiseEnsembleSeed(master_seed, realization_index, j))
            for j in range(n_links)]


def value_at(traj: TelegraphTrajectory, t: float) -> float:
    if not 0 <= t <= traj.t_max:
        raise ValueError(f"t={t!r} outside [0, {traj.t_max}]")
    flips = traj.n_switches(t)
    return traj.initial_sign * traj.amplitude * (-1.0) ** flips


def merge_events(trajs: Sequence[TelegraphTrajectory]) -> tuple[np.ndarray, np.ndarray]:
    """Time-ordered union of all switch events as (times, link indices).

    Links are numbered by their position in ``trajs``. The coupling vector is
    constant between consecutive returned times.
    """
    if not trajs:
        return np.empty(0), np.empty(0, dtype=np.int64)
    t_max = trajs[0].t_max
    if any(tr.t_max != t_max for tr in trajs):
        raise ValueError("all trajectories must share the same t_max")
    times = np.concatenate([tr.switch_times for tr in trajs])
    links = np.concatenate([np.full(tr.switch_times.size, j, dtype=np.int64)
                            for j, tr in enumerate(trajs)])
    order = np.argsort(times, kind="stable")
    return times[order], links[order]


def initial_couplings(trajs: Sequence[TelegraphTrajectory]) -> np.ndarray:
    return np.array([tr.initial_sign * tr.amplitude for tr in trajs], dtype=float)


def empirical_autocorrelation(gamma: float, a: float, lags, n_samples: int,
                              master_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of ``<g(t) g(0)>`` per lag and its standard error.

    Each sample is an independent trajectory, so estimates at different lags
    are correlated with each other but not across samples.
    """
    lags = np.asarray(lags, dtype=float)
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    if np.any(lags < 0):
        raise ValueError("lags must be non-negative")
    t_max = max(float(lags.max()), 1e-12)
    _check_rate_and_horizon(gamma, t_max)
    prod = np.empty((n_samples, lags.size))
    for i in range(n_samples):
        tr = sample_trajectory(gamma, a, t_max, NoiseEnsembleSeed(master_seed, i, 0))
        flips = np.searchsorted(tr.switch_times, lags, side="right")
        prod[i] = np.where(flips % 2 == 0, 1.0, -1.0)
    # average the sign products, then scale: lag 0 comes out as a**2 exactly
    mean = a * a * prod.mean(axis=0)
    err = a * a * prod.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return mean, err


def switch_counts(gamma: float, t: float, n_samples: int, master_seed: int = 0) -> np.ndarray:
    return np.array([sample_trajectory(gamma, 1.0, t, NoiseEnsembleSeed(master_seed, i, 0)).n_switches()
                     for i in range(n_samples)])


def poisson_chi_square(counts, mean: float, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Chi-square goodness of fit of integer counts against Poisson(mean).

    Sparse tails are pooled into the outermost bins until every bin expects at
    least ``min_expected`` observations. Returns (statistic, p-value, dof).
    """
    from scipy import stats

    counts = np.asarray(counts)
    n = counts.size
    kmax = int(max(counts.max(), stats.poisson.ppf(1 - 1e-12, mean)))
    observed = np.bincount(counts, minlength=kmax + 1).astype(float)
    expected = n * stats.poisson.pmf(np.arange(kmax + 1), mean)
    expected[-1] += n * stats.poisson.sf(kmax, mean)

    lo = 0
    while expected[: lo + 1].sum() < min_expected:
        lo += 1
    hi = kmax
    while expected[hi:].sum() < min_expected:
        hi -= 1
    obs = np.concatenate([[observed[: lo + 1].sum()], observed[lo + 1:hi], [observed[hi:].sum()]])
    exp = np.concatenate([[expected[: lo + 1].sum()], expected[lo + 1:hi], [expected[hi:].sum()]])
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = obs.size - 1
    return stat, float(stats.chi2.sf(stat, dof)), dof


def dump_trajectories(path, trajs: Iterable[TelegraphTrajectory]) -> None:
    """Write one JSON record per line: link index, initial sign and switch times."""
    with open(path, "w") as fh:
        for tr in trajs:
            rec = {"link": int(tr.link_index), "initial_sign": int(tr.initial_sign),
                   "amplitude": tr.amplitude, "t_max": tr.t_max, "gamma": tr.gamma,
                   "switch_times": [float(x) for x in tr.switch_times]}
            fh.write(json.dumps(rec) + "\n")


def load_trajectories(path) -> list[TelegraphTrajectory]:
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            out.append(TelegraphTrajectory(rec["initial_sign"], np.array(rec["switch_times"], dtype=float),
                                           rec["amplitude"], rec["t_max"], rec["link"],
                                           float(rec.get("gamma", float("nan")))))
    return out
