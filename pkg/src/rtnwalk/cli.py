"""Command-line experiment runner.

    rtnwalk --preset fig3 --desk-scale --out runs/fig3 --threads 4
    rtnwalk --config my.ini --seed 7
    rtnwalk --list-presets

Series go to CSV files (``tau,value,mc_error``), snapshots to
``site,probability`` files, and every run writes ``manifest.json``.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig
from .nonmarkov import blp_scan, composition_gap, gap_maximum_vs_tau1
from .noise import (NoiseEnsembleSeed, derive_seed, dump_trajectories, empirical_autocorrelation,
                    poisson_chi_square, sample_trajectory, switch_counts)
from .observables import (coherence_series, mean_of, negentropy, population_series,
                          site_distribution, variance_of)
from .presets import get_preset, list_presets
from .propagator import EvolutionPlan, PropagationError, run_ensemble
from .states import pure_density

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_STATISTICS = {
    "variance_series": variance_of,
    "negentropy_series": negentropy,
    "mean_position_series": mean_of,
}


@dataclass
class RunManifest:
    config: dict
    config_sha256: str
    seed: int
    version: str
    threads: int
    wall_clock_seconds: float = 0.0
    files: list = field(default_factory=list)
    batch_errors: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _num(x) -> str:
    return repr(float(x))


def _tag(x) -> str:
    return f"{float(x):g}"


class _Writer:
    def __init__(self, out: Path, cfg: ExperimentConfig, manifest: RunManifest):
        self.out, self.cfg, self.manifest = out, cfg, manifest
        self.digest = cfg.digest()

    def csv(self, name: str, columns, rows, note: str = ""):
        path = self.out / name
        head = (f"# rtnwalk {__version__} kind={self.cfg.kind} seed={self.cfg.master_seed} "
                f"config_sha256={self.digest}")
        lines = [head]
        if note:
            lines.append(f"# {note}")
        lines.append(",".join(columns))
        lines.extend(",".join(_num(v) if not isinstance(v, (int, np.integer)) else str(v) for v in row)
                     for row in rows)
        path.write_text("\n".join(lines) + "\n")
        self.manifest.files.append(name)
        return path

    def series(self, name, taus, values, errors, note="", error_column="mc_error"):
        self.csv(name, ("tau", "value", error_column), zip(taus, values, errors), note)
        errors = np.asarray(errors, dtype=float)
        finite = errors[np.isfinite(errors)]
        self.manifest.batch_errors[name] = {
            "max": float(finite.max()) if finite.size else None,
            "mean": float(finite.mean()) if finite.size else None,
        }


def _plan(cfg: ExperimentConfig, a, gamma, checkpoints=None) -> EvolutionPlan:
    return EvolutionPlan(cfg.lattice(a, gamma),
                         cfg.checkpoints() if checkpoints is None else checkpoints,
                         n_realizations=cfg.n_realizations, master_seed=cfg.master_seed,
                         chebyshev_tol=cfg.chebyshev_tol, n_batches=cfg.n_batches)


def _progress(msg: str, quiet: bool):
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def _run_dynamics(cfg, w: _Writer, threads, quiet):
    psi0 = cfg.initial_state.build(cfg.n_sites)
    for gamma in cfg.gamma_values:
        for a in cfg.a_values:
            _progress(f"[{cfg.kind}] gamma={_tag(gamma)} a={_tag(a)}", quiet)
            plan = _plan(cfg, a, gamma)
            result = run_ensemble(plan, psi0[None, :], threads=threads)
            stem = f"g{_tag(gamma)}_a{_tag(a)}"
            note = f"gamma={_tag(gamma)} a={_tag(a)} n_sites={cfg.n_sites} realizations={cfg.n_realizations}"
            if cfg.kind == "distribution_snapshots":
                for tau, rho in zip(plan.checkpoints, result.density()):
                    p = site_distribution(rho)
                    w.csv(f"distribution_{stem}_t{_tag(tau)}.csv", ("site", "probability"),
                          zip(range(1, cfg.n_sites + 1), p), f"{note} tau={_tag(tau)}")
            elif cfg.kind == "coherence_series":
                values, errors = coherence_series(result)
                w.series(f"coherence_{stem}.csv", plan.checkpoints, values, errors, note)
            else:
                values, errors = population_series(result, _STATISTICS[cfg.kind])
                w.series(f"{cfg.kind.replace('_series', '')}_{stem}.csv", plan.checkpoints,
                         values, errors, note)


def _run_gap(cfg, w: _Writer, threads, quiet):
    rho0 = pure_density(cfg.initial_state.build(cfg.n_sites))
    grid = cfg.checkpoints()
    summary = {}
    for gamma in cfg.gamma_values:
        for a in cfg.a_values:
            _progress(f"[{cfg.kind}] gamma={_tag(gamma)} a={_tag(a)}", quiet)
            stem = f"g{_tag(gamma)}_a{_tag(a)}"
            note = f"gamma={_tag(gamma)} a={_tag(a)} n_sites={cfg.n_sites} realizations={cfg.n_realizations}"
            if cfg.kind == "composition_gap":
                tau1 = cfg.tau1_values[0]
                plan = _plan(cfg, a, gamma, grid[grid > tau1])
                series = [composition_gap(plan, rho0, tau1, threads)]
            else:
                plan = _plan(cfg, a, gamma, grid)
                series = [m.series for m in gap_maximum_vs_tau1(plan, rho0, cfg.tau1_values, threads)]
                w.csv(f"gapmax_{stem}.csv", ("tau1", "max_gap", "max_floor"),
                      [(s.tau1, s.max_gap, s.max_floor) for s in series], note)
            for s in series:
                w.series(f"gap_{stem}_tau1{_tag(s.tau1)}.csv", s.taus, s.gamma_values, s.noise_floor,
                         f"{note} tau1={_tag(s.tau1)}", error_column="noise_floor")
            summary[stem] = [{"tau1": s.tau1, "max_gap": s.max_gap, "max_floor": s.max_floor,
                              "gap_at_split": s.gap_at_split, "floor_at_split": s.floor_at_split}
                             for s in series]
    w.manifest.summary = summary


def _run_blp(cfg, w: _Writer, threads, quiet):
    pairs = cfg.pair_specs()
    summary = {}
    for gamma in cfg.gamma_values:
        for a in cfg.a_values:
            _progress(f"[blp_scan] gamma={_tag(gamma)} a={_tag(a)}", quiet)
            stem = f"g{_tag(gamma)}_a{_tag(a)}"
            results = blp_scan(_plan(cfg, a, gamma), pairs, cfg.eps_rev, threads)
            rows = []
            for i, r in enumerate(results):
                note = f"gamma={_tag(gamma)} a={_tag(a)} pair={r.label}"
                w.series(f"blp_{stem}_pair{i}.csv", r.taus, r.distance, r.floor_series, note,
                         error_column="noise_floor")
                rows.append({"pair": r.label, "revival": r.revival, "threshold": r.threshold,
                             "noise_floor": r.noise_floor, "flagged": r.flagged})
            summary[stem] = rows
    w.manifest.summary = summary


def _run_audit(cfg, w: _Writer, threads, quiet):
    summary = {}
    for gamma in cfg.gamma_values:
        for a in cfg.a_values:
            _progress(f"[noise_audit] gamma={_tag(gamma)} a={_tag(a)}", quiet)
            stem = f"g{_tag(gamma)}_a{_tag(a)}"
            seed = cfg.master_seed
            lags = np.array(cfg.audit_lags)
            mean, err = empirical_autocorrelation(gamma, a, lags, cfg.audit_samples, seed)
            w.series(f"autocorrelation_{stem}.csv", lags, mean, err,
                     f"gamma={_tag(gamma)} a={_tag(a)} samples={cfg.audit_samples}")
            horizon = cfg.audit_horizon
            counts = switch_counts(gamma, horizon, cfg.audit_samples, derive_seed(seed, 1))
            stat, pvalue, dof = poisson_chi_square(counts, gamma * horizon)
            hist = np.bincount(counts)
            from scipy.stats import poisson

            expected = cfg.audit_samples * poisson.pmf(np.arange(hist.size), gamma * horizon)
            w.csv(f"switch_counts_{stem}.csv", ("count", "observed", "expected"),
                  [(int(k), int(o), float(e)) for k, (o, e) in enumerate(zip(hist, expected))],
                  f"gamma={_tag(gamma)} horizon={_tag(horizon)}")
            trajs = [sample_trajectory(gamma, a, horizon, NoiseEnsembleSeed(seed, 0, link))
                     for link in range(min(cfg.n_sites, 16))]
            name = f"trajectories_{stem}.jsonl"
            dump_trajectories(w.out / name, trajs)
            w.manifest.files.append(name)
            summary[stem] = {
                "chi_square": stat, "p_value": pvalue, "dof": dof,
                "autocorrelation_exact": [a * a * float(np.exp(-2 * gamma * t)) for t in lags],
            }
    w.manifest.summary = summary


_RUNNERS = {
    "composition_gap": _run_gap,
    "gap_vs_tau1": _run_gap,
    "blp_scan": _run_blp,
    "noise_audit": _run_audit,
}


def run(cfg: ExperimentConfig, out_dir=None, threads: int = 1, quiet: bool = True) -> RunManifest:
    """Execute ``cfg`` and write its series, snapshots and manifest to ``out_dir``."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.to_dict(), cfg.digest(), cfg.master_seed, __version__, threads)
    writer = _Writer(out, cfg, manifest)
    start = time.perf_counter()
    _RUNNERS.get(cfg.kind, _run_dynamics)(cfg, writer, threads, quiet)
    manifest.wall_clock_seconds = time.perf_counter() - start
    (out / "config.ini").write_text(cfg.to_ini())
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtnwalk", description="Noisy quantum-walk experiment runner.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="INI experiment file")
    src.add_argument("--preset", help="named preset (see --list-presets)")
    src.add_argument("--list-presets", action="store_true", help="print the preset catalog and exit")
    p.add_argument("--out", type=Path, help="output directory (default: the config's, or runs/<preset>)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--realizations", type=int, help="override the ensemble size")
    p.add_argument("--desk-scale", action="store_true", help="use the reduced variant of a preset")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def _print_catalog():
    for pr in list_presets():
        for size, cfg in (("full", pr.full), ("desk", pr.desk)):
            print(f"{pr.name:15s} {size:4s} {cfg.kind:22s} N={cfg.n_sites:<4d} "
                  f"gamma={','.join(_tag(g) for g in cfg.gamma_values):9s} "
                  f"a={','.join(_tag(a) for a in cfg.a_values):12s} R={cfg.n_realizations:<5d} "
                  f"regime={pr.regime:5s} {pr.description}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.list_presets:
        _print_catalog()
        return EXIT_OK
    if args.threads < 1:
        print("error: threads: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.config is not None:
            cfg = ExperimentConfig.from_ini(args.config.read_text())
            default_out = cfg.output_dir
        elif args.preset is not None:
            cfg = get_preset(args.preset).config(desk=args.desk_scale)
            default_out = f"runs/{args.preset}"
        else:
            print("error: one of --config, --preset or --list-presets is required", file=sys.stderr)
            return EXIT_CONFIG
        cfg = cfg.with_overrides(master_seed=args.seed, n_realizations=args.realizations)
    except (ConfigError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dump_config:
        print(cfg.to_ini(), end="")
        return EXIT_OK
    out = args.out if args.out is not None else Path(default_out)
    try:
        manifest = run(cfg, out, args.threads, quiet=args.quiet)
    except PropagationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        print(f"wrote {len(manifest.files)} files to {out} in {manifest.wall_clock_seconds:.1f} s",
              file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
