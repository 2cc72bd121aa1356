"""Named experiment configurations.

Every preset comes in two sizes: ``full`` uses the reference lattice
(N = 500, tau up to 120) and ``desk`` a reduced one that runs in minutes on
a single machine (N = 201, tau up to 40, 500 realizations for the dynamics;
N = 101, 400 realizations for the memory diagnostics).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import ExperimentConfig
from .states import StateSpec

A_VALUES = (0.2, 0.5, 0.9)
FAST, SLOW = 10.0, 0.01
K0 = 1.5 * np.pi


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    regime: str
    full: ExperimentConfig
    desk: ExperimentConfig

    def config(self, desk: bool = False) -> ExperimentConfig:
        return self.desk if desk else self.full


def _localized(n):
    return StateSpec("localized", {"site": n // 2})


def _packet(n, delta=3.0):
    return StateSpec("gaussian", {"center": n // 2, "delta": delta, "k0": K0})


def _dynamics(kind, gammas, state, **extra):
    series = {} if kind == "distribution_snapshots" else {"spacing": "union", "tau_min": 0.1}
    full_kw = {"tau_max": 120.0, "n_checkpoints": 240, **series, **extra.get("full", {})}
    desk_kw = {"tau_max": 40.0, "n_checkpoints": 80, **series, **extra.get("desk", {})}
    full = ExperimentConfig(kind=kind, n_sites=500, a_values=A_VALUES, gamma_values=gammas,
                            initial_state=state(500), n_realizations=1000, **full_kw)
    desk = ExperimentConfig(kind=kind, n_sites=201, a_values=A_VALUES, gamma_values=gammas,
                            initial_state=state(201), n_realizations=500, **desk_kw)
    return full, desk


def _memory(kind, **extra):
    full = ExperimentConfig(kind=kind, n_sites=500, a_values=(0.9,), gamma_values=(SLOW, FAST),
                            initial_state=_localized(500), tau_max=60.0, n_checkpoints=60,
                            n_realizations=1000, **extra.get("full", {}))
    desk = ExperimentConfig(kind=kind, n_sites=101, a_values=(0.9,), gamma_values=(SLOW, FAST),
                            initial_state=_localized(101), tau_max=20.0, n_checkpoints=40,
                            n_realizations=400, **extra.get("desk", {}))
    return full, desk


def _build() -> dict[str, Preset]:
    out = {}

    def add(name, description, regime, pair):
        out[name] = Preset(name, description, regime, *pair)

    snaps = {"full": {"snapshot_taus": (30.0, 60.0, 120.0)},
             "desk": {"snapshot_taus": (10.0, 20.0, 40.0)}}
    add("fig1-fast", "site distributions from a localized start, fast noise", "fast",
        _dynamics("distribution_snapshots", (FAST,), _localized, **snaps))
    add("fig1-slow", "site distributions from a localized start, slow noise", "slow",
        _dynamics("distribution_snapshots", (SLOW,), _localized, **snaps))
    add("fig2", "negentropy of the site distribution, both regimes", "both",
        _dynamics("negentropy_series", (FAST, SLOW), _localized))
    add("fig3", "position variance, ballistic to diffusive crossover vs localization", "both",
        _dynamics("variance_series", (FAST, SLOW), _localized))
    add("coherence", "l1 coherence from a localized start, both regimes", "both",
        _dynamics("coherence_series", (FAST, SLOW), _localized))
    add("fig4-fast", "site distributions of a moving Gaussian packet, fast noise", "fast",
        _dynamics("distribution_snapshots", (FAST,), _packet, **snaps))
    add("fig4-slow", "site distributions of a moving Gaussian packet, slow noise", "slow",
        _dynamics("distribution_snapshots", (SLOW,), _packet, **snaps))
    # the packet moves up to two sites per unit time; the shorter desk run keeps
    # it away from the point where the ring closes
    short = {"desk": {"tau_max": 30.0, "n_checkpoints": 60}}
    add("fig5-mean", "mean position of a moving Gaussian packet", "both",
        _dynamics("mean_position_series", (FAST, SLOW), _packet, **short))
    add("fig5-variance", "position variance of a moving Gaussian packet", "both",
        _dynamics("variance_series", (FAST, SLOW), _packet, **short))
    add("fig5-coherence", "coherence of a moving Gaussian packet", "both",
        _dynamics("coherence_series", (FAST, SLOW), _packet, **short))
    add("fig6", "maximum composition gap against the split time", "both",
        _memory("gap_vs_tau1", full={"tau1_values": tuple(np.linspace(6, 30, 5))},
                desk={"tau1_values": tuple(np.linspace(2, 10, 5))}))
    add("fig6-series", "composition gap against time for one split time", "both",
        _memory("composition_gap", full={"tau1_values": (15.0,)}, desk={"tau1_values": (5.0,)}))
    add("fig7-pairs", "trace distance between six initial pairs under shared noise", "both",
        _memory("blp_scan", full={"pair_delta": 4.0, "pair_k0": K0},
                desk={"pair_delta": 4.0, "pair_k0": K0}))
    audit = ExperimentConfig(kind="noise_audit", n_sites=3, a_values=(1.0,), gamma_values=(1.0,),
                             initial_state=StateSpec("localized", {"site": 1}), tau_max=5.0,
                             n_checkpoints=2, n_realizations=1, audit_samples=100000,
                             audit_lags=(0.0, 0.1, 0.5, 1.0, 2.0), audit_horizon=5.0)
    add("noise-audit", "switch-count and autocorrelation statistics of the telegraph noise", "n/a",
        (audit, replace(audit, audit_samples=20000)))
    return out


PRESETS = _build()


def list_presets() -> list[Preset]:
    return list(PRESETS.values())


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
