"""Scalar and vector observables of walker distributions and density matrices."""
from __future__ import annotations

import numpy as np


class UndefinedObservable(ValueError):
    """The observable has no finite value for this input (e.g. zero variance)."""


def site_distribution(rho) -> np.ndarray:
    p = np.real(np.diagonal(np.asarray(rho))).copy()
    if np.any(p < 0):
        p[p < 0] = 0.0
        p /= p.sum()
    return p


def position_moments(p) -> tuple[float, float]:
    """Mean and variance of the 1-based site index under distribution ``p``."""
    p = np.asarray(p, dtype=float)
    x = np.arange(1, p.size + 1, dtype=float)
    mean = float(np.dot(p, x))
    var = float(np.dot(p, (x - mean) ** 2))
    return mean, var


def negentropy(p) -> float:
    """Gaussian entropy at equal variance minus the Shannon entropy, in nats.

    The Gaussian term is the differential entropy, so for near-Gaussian
    distributions on a coarse grid the result can dip slightly below zero.
    """
    p = np.asarray(p, dtype=float)
    _, var = position_moments(p)
    if var <= 0:
        raise UndefinedObservable("negentropy is undefined for a zero-variance distribution")
    nz = p[p > 0]
    return float(0.5 * (1.0 + np.log(2.0 * np.pi * var)) + np.sum(nz * np.log(nz)))


def coherence(rho) -> float:
    """Sum of the moduli of all off-diagonal density-matrix elements."""
    a = np.abs(np.asarray(rho))
    return float(a.sum() - np.trace(a))


def trace_distance(rho1, rho2) -> float:
    rho1, rho2 = np.asarray(rho1), np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise ValueError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    # fixed argument order makes the result exactly symmetric in floating point
    if rho1.tobytes() > rho2.tobytes():
        rho1, rho2 = rho2, rho1
    diff = rho1 - rho2
    ev = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.abs(ev).sum())


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.vdot(rho.conj().T, rho)))


def jackknife(batch_sums, batch_counts, statistic):
    """Leave-one-batch-out estimate and standard error of ``statistic``.

    ``batch_sums[b]`` is the sum over batch ``b`` of whatever per-realization
    quantity ``statistic`` consumes after normalization (e.g. populations).
    Returns (value on the full ensemble, jackknife standard error).
    """
    batch_sums = np.asarray(batch_sums)
    counts = np.asarray(batch_counts, dtype=float)
    total, n = batch_sums.sum(axis=0), counts.sum()
    value = statistic(total / n)
    nb = counts.size
    if nb < 2:
        return value, float("nan")
    loo = np.array([statistic((total - batch_sums[b]) / (n - counts[b])) for b in range(nb)])
    err = np.sqrt((nb - 1) / nb * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return value, err


def population_series(result, statistic, output: int = 0):
    """Per-checkpoint value and jackknife error of a function of the site distribution."""
    pops = result.batch_populations[:, :, output]
    values, errors = [], []
    for c in range(pops.shape[1]):
        v, e = jackknife(pops[:, c], result.batch_counts, statistic)
        values.append(v)
        errors.append(e)
    return np.array(values), np.array(errors)


def variance_of(p) -> float:
    return position_moments(p)[1]


def mean_of(p) -> float:
    return position_moments(p)[0]


def coherence_series(result, output: int = 0):
    """Coherence per checkpoint with a half-ensemble error estimate.

    The error is ``|C(rho_even) - C(rho_odd)| / 2`` from the two interleaved
    halves of the batch partition.
    """
    rho = result.density(output)
    values = np.array([coherence(r) for r in rho])
    if result.half_counts[1] == 0:
        return values, np.full(values.size, np.nan)
    h0, h1 = result.half_density(0, output), result.half_density(1, output)
    errors = np.array([abs(coherence(a) - coherence(b)) / 2 for a, b in zip(h0, h1)])
    return values, errors


def _fit_offset_power(t, y):
    """Least-squares fit of ``y ~ B t**q + C`` in relative residuals; returns (q, B, C, ssr)."""
    from scipy.optimize import minimize_scalar

    w = 1.0 / y

    def solve(q):
        basis = np.column_stack([t**q, np.ones_like(t)]) * w[:, None]
        coef, *_ = np.linalg.lstsq(basis, np.ones_like(t), rcond=None)
        resid = basis @ coef - 1.0
        return coef, float(resid @ resid)

    q = minimize_scalar(lambda q: solve(q)[1], bounds=(0.1, 4.0), method="bounded",
                        options={"xatol": 1e-6}).x
    (b, c), ssr = solve(q)
    return float(q), float(b), float(c), ssr


def fit_crossover(taus, variances, min_points: int = 3, late_model: str = "offset"):
    """Two-segment fit of the spreading law ``variance(tau)``.

    The early segment is a power law ``A tau**p`` (a straight line in
    log-log). The late segment is ``B tau**q + C`` when ``late_model`` is
    ``"offset"``, so a linear law with an intercept left over from the early
    phase reads as q = 1; with ``"power"`` it is a plain power law like the
    early segment. Residuals are relative (log-scale) on both sides, and the
    split with the smallest total squared residual wins.

    Returns (tau_c, p, q), with tau_c where the two fitted curves meet,
    clamped to the gap between the last early and the first late checkpoint.
    """
    taus = np.asarray(taus, dtype=float)
    variances = np.asarray(variances, dtype=float)
    mask = (taus > 0) & (variances > 0)
    t, y = taus[mask], variances[mask]
    x, ly = np.log(t), np.log(y)
    late_min = min_points + 1 if late_model == "offset" else min_points
    if t.size < min_points + late_min:
        raise ValueError("not enough positive points for a two-segment fit")
    if late_model not in ("offset", "power"):
        raise ValueError(f"unknown late_model {late_model!r}")
    best = None
    for split in range(min_points, t.size - late_min + 1):
        early = np.polyfit(x[:split], ly[:split], 1)
        ssr = float(np.sum((np.polyval(early, x[:split]) - ly[:split]) ** 2))
        if late_model == "offset":
            q, b, c, late_ssr = _fit_offset_power(t[split:], y[split:])
            late = lambda tt, q=q, b=b, c=c: b * tt**q + c
        else:
            lf = np.polyfit(x[split:], ly[split:], 1)
            q = lf[0]
            late_ssr = float(np.sum((np.polyval(lf, x[split:]) - ly[split:]) ** 2))
            late = lambda tt, lf=lf: np.exp(np.polyval(lf, np.log(tt)))
        total = ssr + late_ssr
        if best is None or total < best[0]:
            best = (total, split, early, q, late)
    _, split, early, q, late = best
    lo, hi = t[split - 1], t[split]
    grid = np.geomspace(lo, hi, 257)
    gap = np.exp(np.polyval(early, np.log(grid))) - late(grid)
    crossing = np.nonzero(np.diff(np.sign(gap)))[0]
    tau_c = float(grid[crossing[0]]) if crossing.size else float(np.sqrt(lo * hi))
    return tau_c, float(early[0]), float(q)
