"""Experiment configuration: a flat INI file with one section per concern.

Example::

    [experiment]
    kind = variance_series
    n_realizations = 500
    master_seed = 2024

    [lattice]
    n_sites = 201
    boundary = ring
    epsilon = 2.0
    a = 0.2, 0.5, 0.9
    gamma = 10

    [initial_state]
    kind = localized
    site = 100

    [schedule]
    tau_max = 40
    n_checkpoints = 80
    spacing = linear
"""
from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .lattice import BOUNDARIES, LatticeConfig
from .states import StateSpec

KINDS = (
    "distribution_snapshots",
    "variance_series",
    "negentropy_series",
    "coherence_series",
    "mean_position_series",
    "composition_gap",
    "gap_vs_tau1",
    "blp_scan",
    "noise_audit",
)
SPACINGS = ("linear", "log", "union")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n_sites: int = 201
    boundary: str = "ring"
    epsilon: float = 2.0
    a_values: tuple = (0.5,)
    gamma_values: tuple = (10.0,)
    initial_state: StateSpec = field(default_factory=lambda: StateSpec("localized", {"site": 100}))
    tau_min: float = 0.0
    tau_max: float = 40.0
    n_checkpoints: int = 80
    spacing: str = "linear"
    snapshot_taus: tuple = ()
    tau1_values: tuple = ()
    n_realizations: int = 500
    master_seed: int = 2024
    chebyshev_tol: float = 1e-10
    n_batches: int = 20
    pairs: str = "default"
    pair_delta: float = 4.0
    pair_k0: float = 1.5 * np.pi
    eps_rev: float = 0.01
    audit_samples: int = 10000
    audit_lags: tuple = (0.0, 0.1, 0.5, 1.0, 2.0)
    audit_horizon: float = 5.0
    output_dir: str = "runs"

    def __post_init__(self):
        for name in ("a_values", "gamma_values", "snapshot_taus", "tau1_values", "audit_lags"):
            object.__setattr__(self, name, _floats(getattr(self, name)))
        self.validate()

    # validation -----------------------------------------------------------
    def validate(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        if self.kind not in KINDS:
            bad("kind", f"must be one of {', '.join(KINDS)}, got {self.kind!r}")
        if self.boundary not in BOUNDARIES:
            bad("boundary", f"must be one of {BOUNDARIES}")
        if not self.a_values:
            bad("a", "at least one noise amplitude is required")
        if not self.gamma_values:
            bad("gamma", "at least one switching rate is required")
        for a in self.a_values:
            for g in self.gamma_values:
                try:
                    LatticeConfig(self.n_sites, self.boundary, self.epsilon, a, g)
                except ValueError as exc:
                    msg = str(exc)
                    name = msg.split(" ", 1)[0]
                    raise ConfigError(f"{name}: {msg}") from None
        if not (self.tau_max > 0):
            bad("tau_max", "must be > 0")
        if not (0 <= self.tau_min < self.tau_max):
            bad("tau_min", "must satisfy 0 <= tau_min < tau_max")
        if self.n_checkpoints < 2:
            bad("n_checkpoints", "must be >= 2")
        if self.spacing not in SPACINGS:
            bad("spacing", f"must be one of {SPACINGS}")
        if self.spacing in ("log", "union") and self.tau_min <= 0:
            bad("tau_min", "log spacing needs tau_min > 0")
        if self.n_realizations < 1:
            bad("n_realizations", "must be >= 1")
        if self.kind in ("composition_gap", "gap_vs_tau1") and self.n_realizations < 100:
            bad("n_realizations", "composition-gap experiments need at least 100 realizations")
        if not 0 <= self.master_seed < 2**64:
            bad("master_seed", "must be an unsigned 64-bit integer")
        if not self.chebyshev_tol > 0:
            bad("chebyshev_tol", "must be > 0")
        if self.n_batches < 1:
            bad("n_batches", "must be >= 1")
        if self.kind == "distribution_snapshots" and not self.snapshot_taus:
            bad("snapshot_taus", "distribution_snapshots needs at least one time")
        if any(t < 0 or t > self.tau_max for t in self.snapshot_taus):
            bad("snapshot_taus", "times must lie in [0, tau_max]")
        if self.kind in ("composition_gap", "gap_vs_tau1"):
            if not self.tau1_values:
                bad("tau1", "needs at least one split time")
            if any(t < 0 or t >= self.tau_max for t in self.tau1_values):
                bad("tau1", "split times must lie in [0, tau_max)")
        if self.kind == "composition_gap" and len(self.tau1_values) != 1:
            bad("tau1", "composition_gap takes exactly one split time")
        if self.pairs != "default":
            try:
                self.pair_specs()
            except Exception as exc:  # noqa: BLE001 - report any parse failure against the field
                bad("pairs", f"cannot parse pair list ({exc})")
        try:
            self.initial_state.build(self.n_sites)
        except (KeyError, ValueError, TypeError) as exc:
            bad("initial_state", str(exc))
        if self.audit_samples < 1000:
            bad("audit_samples", "must be >= 1000")
        if not self.audit_horizon > 0:
            bad("audit_horizon", "must be > 0")

    # derived quantities -----------------------------------------------------
    def lattice(self, a: float, gamma: float) -> LatticeConfig:
        return LatticeConfig(self.n_sites, self.boundary, self.epsilon, a, gamma)

    def checkpoints(self) -> np.ndarray:
        if self.kind == "distribution_snapshots":
            return np.array(sorted(set(self.snapshot_taus)))
        lo, hi, n = self.tau_min, self.tau_max, self.n_checkpoints
        if self.spacing == "linear":
            if lo > 0:
                return np.linspace(lo, hi, n)
            grid = np.linspace(hi / n, hi, n)
            if self.kind == "blp_scan":
                grid = np.concatenate([[0.0], grid])
            return grid
        log_grid = np.geomspace(lo, hi, n)
        if self.spacing == "log":
            return log_grid
        return np.union1d(np.round(log_grid, 12), np.linspace(hi / n, hi, n))

    def pair_specs(self):
        from .nonmarkov import StatePairSpec, default_pairs

        if self.pairs == "default":
            return default_pairs(self.n_sites, self.pair_delta, self.pair_k0)
        return [StatePairSpec.from_dict(d) for d in json.loads(self.pairs)]

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    # serialization ----------------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["experiment"] = {
            "kind": self.kind,
            "n_realizations": str(self.n_realizations),
            "master_seed": str(self.master_seed),
            "chebyshev_tol": repr(self.chebyshev_tol),
            "n_batches": str(self.n_batches),
        }
        cp["lattice"] = {
            "n_sites": str(self.n_sites),
            "boundary": self.boundary,
            "epsilon": repr(self.epsilon),
            "a": _fmt(self.a_values),
            "gamma": _fmt(self.gamma_values),
        }
        cp["initial_state"] = {k: json.dumps(v) if not isinstance(v, str) else v
                               for k, v in self.initial_state.to_dict().items()}
        cp["schedule"] = {
            "tau_min": repr(self.tau_min),
            "tau_max": repr(self.tau_max),
            "n_checkpoints": str(self.n_checkpoints),
            "spacing": self.spacing,
            "snapshot_taus": _fmt(self.snapshot_taus),
            "tau1": _fmt(self.tau1_values),
        }
        cp["nonmarkov"] = {
            "pairs": self.pairs,
            "pair_delta": repr(self.pair_delta),
            "pair_k0": repr(self.pair_k0),
            "eps_rev": repr(self.eps_rev),
        }
        cp["audit"] = {
            "samples": str(self.audit_samples),
            "lags": _fmt(self.audit_lags),
            "horizon": repr(self.audit_horizon),
        }
        cp["output"] = {"directory": self.output_dir}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config: unparseable file ({exc})") from None

        kw = {}

        def take(section, key, name, conv):
            if cp.has_option(section, key):
                raw = cp.get(section, key)
                try:
                    kw[name] = conv(raw)
                except ValueError:
                    raise ConfigError(f"{key}: cannot parse {raw!r}") from None

        take("experiment", "kind", "kind", str)
        take("experiment", "n_realizations", "n_realizations", int)
        take("experiment", "master_seed", "master_seed", int)
        take("experiment", "chebyshev_tol", "chebyshev_tol", float)
        take("experiment", "n_batches", "n_batches", int)
        take("lattice", "n_sites", "n_sites", int)
        take("lattice", "boundary", "boundary", str)
        take("lattice", "epsilon", "epsilon", float)
        take("lattice", "a", "a_values", _floats)
        take("lattice", "gamma", "gamma_values", _floats)
        take("schedule", "tau_min", "tau_min", float)
        take("schedule", "tau_max", "tau_max", float)
        take("schedule", "n_checkpoints", "n_checkpoints", int)
        take("schedule", "spacing", "spacing", str)
        take("schedule", "snapshot_taus", "snapshot_taus", _floats)
        take("schedule", "tau1", "tau1_values", _floats)
        take("nonmarkov", "pairs", "pairs", str)
        take("nonmarkov", "pair_delta", "pair_delta", float)
        take("nonmarkov", "pair_k0", "pair_k0", float)
        take("nonmarkov", "eps_rev", "eps_rev", float)
        take("audit", "samples", "audit_samples", int)
        take("audit", "lags", "audit_lags", _floats)
        take("audit", "horizon", "audit_horizon", float)
        take("output", "directory", "output_dir", str)
        if "kind" not in kw:
            raise ConfigError("kind: missing [experiment] kind")
        if cp.has_section("initial_state"):
            raw = dict(cp.items("initial_state"))
            try:
                kind = raw.pop("kind")
                params = {k: json.loads(v) for k, v in raw.items()}
            except (KeyError, json.JSONDecodeError) as exc:
                raise ConfigError(f"initial_state: cannot parse ({exc})") from None
            kw["initial_state"] = StateSpec(kind, params)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial_state"] = self.initial_state.to_dict()
        return d

    def digest(self) -> str:
        """SHA-256 over the physics-defining fields (the output directory is excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))
