"""Compiled inner loops for the event-driven Chebyshev propagator."""
import math

import numpy as np
from numba import njit

MAX_TERMS = 200_000

OK = 0
NOT_CONVERGED = 1


@njit(cache=True, nogil=True)
def bessel_coefficients(x, tol):
    """J_0(x) .. J_K(x) for x >= 0, with K the smallest order whose tail
    2 * sum_{k>K} |J_k(x)| stays below ``tol``.

    Miller's downward recurrence normalized by J_0 + 2 sum J_2k = 1. Returns an
    empty array if more than MAX_TERMS orders would be needed.
    """
    if x == 0.0:
        out = np.zeros(1)
        out[0] = 1.0
        return out
    if not (x < 1e300):
        return np.zeros(0)
    # first order past x where the asymptotic size of J_k drops under tol
    k = int(x) + 1
    target = min(tol, 1e-3) * 1e-3
    while True:
        log_size = k * math.log(math.e * x / (2.0 * k)) - 0.5 * math.log(2.0 * math.pi * k)
        if log_size < math.log(target):
            break
        k += 1
        if k > MAX_TERMS:
            return np.zeros(0)
    top = k + 16 + int(math.sqrt(k))
    if top % 2:
        top += 1
    b = np.zeros(top + 2)
    b[top] = 1e-30
    for m in range(top, 0, -1):
        b[m - 1] = (2.0 * m / x) * b[m] - b[m + 1]
        if abs(b[m - 1]) > 1e250:
            for i in range(m - 1, top + 1):
                b[i] *= 1e-250
    norm = b[0]
    for m in range(2, top + 1, 2):
        norm += 2.0 * b[m]
    for m in range(top + 1):
        b[m] /= norm
    tail = 0.0
    cut = top
    while cut > 0:
        tail += 2.0 * abs(b[cut])
        if tail > tol:
            break
        cut -= 1
    return b[: cut + 1].copy()


@njit(cache=True, nogil=True, inline="always")
def _scaled_hop(psi, out, hop, ring, scale):
    """out[v, :] = scale * (H - epsilon) psi[v, :] for nearest-neighbour hopping."""
    m, n = psi.shape
    for v in range(m):
        for i in range(n):
            out[v, i] = 0.0
        for j in range(n - 1):
            t = hop[j] * scale
            out[v, j] += t * psi[v, j + 1]
            out[v, j + 1] += t * psi[v, j]
        if ring:
            t = hop[n - 1] * scale
            out[v, n - 1] += t * psi[v, 0]
            out[v, 0] += t * psi[v, n - 1]


@njit(cache=True, nogil=True)
def chebyshev_step(psi, hop, ring, epsilon, radius, dt, tol, w0, w1, w2):
    """In-place psi <- exp(-i H dt) psi for constant hopping ``hop``.

    ``w0``, ``w1``, ``w2`` are work arrays shaped like psi. Returns the number
    of Chebyshev terms used, or -1 on failure.
    """
    if dt == 0.0:
        return 0
    coef = bessel_coefficients(radius * dt, tol)
    nterms = coef.size
    if nterms == 0:
        return -1
    m, n = psi.shape
    scale = 1.0 / radius
    phase = complex(math.cos(epsilon * dt), -math.sin(epsilon * dt))
    prev = w0
    cur = w1
    nxt = w2
    for v in range(m):
        for i in range(n):
            prev[v, i] = psi[v, i]
            psi[v, i] = coef[0] * prev[v, i]
    if nterms > 1:
        _scaled_hop(prev, cur, hop, ring, scale)
        c = -2j * coef[1]
        for v in range(m):
            for i in range(n):
                psi[v, i] += c * cur[v, i]
    ipow = -1j
    for k in range(2, nterms):
        ipow *= -1j
        c = 2.0 * coef[k] * ipow
        twoscale = 2.0 * scale
        for v in range(m):
            # nxt = 2 H~ cur - prev, fused with the accumulation
            if ring:
                left = hop[n - 1] * cur[v, n - 1]
            else:
                left = 0j
            for i in range(n):
                s = left
                if i < n - 1:
                    s += hop[i] * cur[v, i + 1]
                    left = hop[i] * cur[v, i]
                elif ring:
                    s += hop[n - 1] * cur[v, 0]
                val = twoscale * s - prev[v, i]
                nxt[v, i] = val
                psi[v, i] += c * val
        tmp = prev
        prev = cur
        cur = nxt
        nxt = tmp
    for v in range(m):
        for i in range(n):
            psi[v, i] *= phase
    return nterms


@njit(cache=True, nogil=True)
def evolve_events(psi0, g0, event_times, event_links, checkpoints, ring,
                  epsilon, radius, tol_budget, out):
    """Propagate a block of states through a switch-event timeline.

    psi0 : (m, n) complex initial states (not modified)
    g0 : couplings in force at t=0
    event_times, event_links : merged switch timeline
    checkpoints : increasing record times, out[c] receives the block at checkpoints[c]
    tol_budget : total truncation budget, shared across intervals by duration

    Returns (status, number of Chebyshev terms applied).
    """
    m, n = psi0.shape
    psi = psi0.copy()
    w0 = np.empty_like(psi)
    w1 = np.empty_like(psi)
    w2 = np.empty_like(psi)
    g = g0.copy()
    hop = np.empty(g.size)
    for j in range(g.size):
        hop[j] = -1.0 + g[j]
    t_end = checkpoints[checkpoints.size - 1]
    total_terms = 0
    t = 0.0
    ie = 0
    ne = event_times.size
    for ic in range(checkpoints.size):
        tc = checkpoints[ic]
        while True:
            if ie < ne and event_times[ie] <= tc:
                target = event_times[ie]
            else:
                target = tc
            dt = target - t
            if dt > 0.0:
                tol = max(tol_budget * dt / t_end, 1e-16)
                used = chebyshev_step(psi, hop, ring, epsilon, radius, dt, tol, w0, w1, w2)
                if used < 0:
                    return NOT_CONVERGED, total_terms
                total_terms += used
                t = target
            if ie < ne and event_times[ie] <= tc:
                link = event_links[ie]
                g[link] = -g[link]
                hop[link] = -1.0 + g[link]
                ie += 1
            else:
                break
        for v in range(m):
            for i in range(n):
                out[ic, v, i] = psi[v, i]
    return OK, total_terms


@njit(cache=True, nogil=True)
def accumulate_mixture(acc, states, weights):
    """acc[c, o] += sum_k weights[o, k] |states[c, k]><states[c, k]|."""
    nc, m, n = states.shape
    nout = weights.shape[0]
    for c in range(nc):
        for o in range(nout):
            for k in range(m):
                w = weights[o, k]
                if w == 0.0:
                    continue
                for i in range(n):
                    a = w * states[c, k, i]
                    if a == 0.0:
                        continue
                    for j in range(n):
                        acc[c, o, i, j] += a * states[c, k, j].conjugate()
