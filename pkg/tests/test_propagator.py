import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtnwalk.lattice import LatticeConfig
from rtnwalk.noise import merge_events, sample_links
from rtnwalk.observables import (coherence, negentropy, population_series, position_moments, purity,
                                 site_distribution)
from rtnwalk.oracle import bloch_evolve
from rtnwalk.propagator import (EvolutionPlan, PropagationError, ensemble_density,
                                evolve_density_fresh, evolve_realization, interval_propagate,
                                propagate_timeline, realization_noise, run_ensemble)
from rtnwalk.states import gaussian_packet, localized, pure_density

from conftest import dense_propagator, random_couplings, random_density, random_state


def test_zero_step_is_identity(rng):
    cfg = LatticeConfig(20, a=0.5)
    psi = random_state(20, rng)
    np.testing.assert_array_equal(interval_propagate(cfg, random_couplings(cfg, rng), psi, 0.0), psi)


@pytest.mark.parametrize("boundary, a", [("ring", 0.0), ("ring", 0.8), ("line", 0.3)])
def test_interval_matches_dense(boundary, a, rng):
    cfg = LatticeConfig(64, boundary, a=a)
    g = random_couplings(cfg, rng)
    psi = random_state(64, rng)
    out = interval_propagate(cfg, g, psi, 1.0)
    assert np.abs(out - dense_propagator(cfg, g, 1.0) @ psi).max() < 1e-9


def test_half_steps_compose(rng):
    cfg = LatticeConfig(30, a=0.6)
    g = random_couplings(cfg, rng)
    psi = random_state(30, rng)
    half = interval_propagate(cfg, g, interval_propagate(cfg, g, psi, 0.35), 0.35)
    assert np.abs(half - interval_propagate(cfg, g, psi, 0.7)).max() < 1e-9


def test_interval_block_and_validation(rng):
    cfg = LatticeConfig(12, a=0.2)
    g = random_couplings(cfg, rng)
    block = np.array([random_state(12, rng) for _ in range(4)])
    out = interval_propagate(cfg, g, block, 2.0)
    for k in range(4):
        np.testing.assert_allclose(out[k], interval_propagate(cfg, g, block[k], 2.0), atol=1e-13)
    with pytest.raises(ValueError):
        interval_propagate(cfg, g, block[0], -1.0)
    with pytest.raises(ValueError):
        interval_propagate(cfg, g, block[0], 1.0, tol=0.0)
    with pytest.raises(ValueError):
        interval_propagate(cfg, g, np.ones(11, dtype=complex) / np.sqrt(11), 1.0)


def test_norm_preserved_within_tolerance(rng):
    cfg = LatticeConfig(50, a=0.9)
    psi = interval_propagate(cfg, random_couplings(cfg, rng), random_state(50, rng), 25.0, tol=1e-10)
    assert abs(np.linalg.norm(psi) - 1) < 1e-9


def test_unreachable_tolerance_raises():
    cfg = LatticeConfig(8, a=0.1)
    with pytest.raises(PropagationError):
        interval_propagate(cfg, 0.1 * np.ones(8), localized(8, 1), 1e6)


def test_timeline_matches_piecewise_dense(rng):
    cfg = LatticeConfig(16, a=0.7, gamma=1.5)
    g0, times, links = realization_noise(cfg, 4.0, 3, 0)
    assert times.size > 3
    psi0 = random_state(16, rng)
    out = propagate_timeline(cfg, psi0, g0, times, links, [1.0, 4.0])
    # reference: dense propagation interval by interval
    g, psi, t, ref = g0.copy(), psi0.copy(), 0.0, []
    for stop in (1.0, 4.0):
        for te, link in zip(times, links):
            if t < te <= stop:
                psi = dense_propagator(cfg, g, te - t) @ psi
                g[link] = -g[link]
                t = te
        psi = dense_propagator(cfg, g, stop - t) @ psi
        t = stop
        ref.append(psi)
    assert np.abs(out - np.array(ref)).max() < 1e-9


def test_noiseless_realization_matches_bloch():
    n = 80
    psi0 = gaussian_packet(n, 30, 3.0, 1.5 * np.pi)
    plan = EvolutionPlan(LatticeConfig(n, a=0.0), [0.0, 1.0, 7.5, 20.0])
    res = evolve_realization(plan, psi0, 0)
    for tau, psi in zip(plan.checkpoints, res.states):
        assert np.abs(psi - bloch_evolve(n, 2.0, psi0, tau)).max() < 1e-8


def test_slow_noise_without_switches_is_constant_evolution():
    cfg = LatticeConfig(20, a=0.5, gamma=0.01)
    plan = EvolutionPlan(cfg, [1.0], master_seed=4)
    for r in range(10):
        g0, times, _ = realization_noise(cfg, 1.0, 4, r)
        if times.size == 0:
            break
    psi0 = localized(20, 10)
    out = evolve_realization(plan, psi0, r).states[0]
    assert np.abs(out - dense_propagator(cfg, g0, 1.0) @ psi0).max() < 1e-9


def test_realization_is_deterministic():
    plan = EvolutionPlan(LatticeConfig(30, a=0.5, gamma=3.0), [2.0, 5.0], master_seed=77)
    a = evolve_realization(plan, localized(30, 15), 6).states
    b = evolve_realization(plan, localized(30, 15), 6).states
    np.testing.assert_array_equal(a, b)


def test_checkpoint_consistency():
    cfg = LatticeConfig(25, a=0.8, gamma=2.0)
    g0, times, links = realization_noise(cfg, 6.0, 12, 3)
    psi0 = localized(25, 13)
    direct = propagate_timeline(cfg, psi0, g0, times, links, [6.0])[0]
    stepped = propagate_timeline(cfg, psi0, g0, times, links, [1.1, 2.9, 6.0])[-1]
    assert np.abs(direct - stepped).max() < 1e-9


def test_norm_long_run_large_lattice():
    plan = EvolutionPlan(LatticeConfig(500, a=0.9, gamma=10.0), [60.0, 120.0], master_seed=1)
    res = evolve_realization(plan, localized(500, 250), 0)
    assert np.all(np.abs(np.linalg.norm(res.states, axis=1) - 1) < 1e-8)


def test_single_realization_is_pure():
    rho = ensemble_density(EvolutionPlan(LatticeConfig(15, a=0.5), [3.0], n_realizations=1), localized(15, 8))
    assert purity(rho[0]) == pytest.approx(1.0, abs=1e-10)


def test_noiseless_ensemble_is_projector():
    n = 24
    psi0 = localized(n, 5)
    plan = EvolutionPlan(LatticeConfig(n, a=0.0), [0.5, 4.0], n_realizations=7, n_batches=3)
    for tau, rho in zip(plan.checkpoints, ensemble_density(plan, psi0)):
        psi = bloch_evolve(n, 2.0, psi0, tau)
        assert np.abs(rho - np.outer(psi, psi.conj())).max() < 1e-8


def test_density_matrix_invariants():
    plan = EvolutionPlan(LatticeConfig(30, a=0.7, gamma=2.0), [1.0, 5.0], n_realizations=40, n_batches=8)
    for rho in ensemble_density(plan, gaussian_packet(30, 15, 2.0, 1.0)):
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert abs(np.trace(rho).real - 1) < 1e-10
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_purity_decays_under_fast_noise():
    plan = EvolutionPlan(LatticeConfig(81, a=0.9, gamma=10.0), [1.0, 5.0, 20.0], n_realizations=500,
                         master_seed=5)
    res = run_ensemble(plan, localized(81, 41))
    vals = [purity(r) for r in res.density()]
    # batch-means spread of the purity
    per_batch = []
    for b in range(2):
        per_batch.append([purity(r) for r in res.half_density(b)])
    err = np.abs(np.subtract(*per_batch)) / 2
    assert vals[0] - vals[1] > 3 * (err[0] + err[1])
    assert vals[1] - vals[2] > 3 * (err[1] + err[2])


@pytest.mark.parametrize("threads", [1, 4, 8])
def test_thread_count_does_not_change_bits(threads):
    plan = EvolutionPlan(LatticeConfig(21, a=0.6, gamma=4.0), [0.7, 3.0], n_realizations=33,
                         master_seed=2, n_batches=6)
    ref = run_ensemble(plan, localized(21, 11), threads=1)
    res = run_ensemble(plan, localized(21, 11), threads=threads)
    assert res.half_sums.tobytes() == ref.half_sums.tobytes()
    assert res.batch_populations.tobytes() == ref.batch_populations.tobytes()


def test_batches_partition_realizations():
    plan = EvolutionPlan(LatticeConfig(10, a=0.3), [1.0], n_realizations=45, n_batches=20)
    res = run_ensemble(plan, localized(10, 3))
    assert res.batch_counts.sum() == 45 and res.half_counts.sum() == 45
    np.testing.assert_allclose(res.populations()[0], site_distribution(res.density()[0]), atol=1e-14)
    _, err = population_series(res, lambda p: position_moments(p)[1])
    assert np.all(err > 0)


def test_map_is_linear(rng):
    cfg = LatticeConfig(14, a=0.7, gamma=1.0)
    r1, r2 = random_density(14, 3, rng), random_density(14, 2, rng)
    alpha = 0.3
    kw = dict(weight_tol=0.0)
    mixed = evolve_density_fresh(cfg, 2.0, 25, 9, alpha * r1 + (1 - alpha) * r2, **kw)
    separate = (alpha * evolve_density_fresh(cfg, 2.0, 25, 9, r1, **kw)
                + (1 - alpha) * evolve_density_fresh(cfg, 2.0, 25, 9, r2, **kw))
    assert np.abs(mixed - separate).max() < 1e-10


def test_fresh_map_zero_duration(rng):
    cfg = LatticeConfig(12, a=0.5, gamma=1.0)
    rho = random_density(12, 4, rng)
    out = evolve_density_fresh(cfg, 0.0, 10, 1, rho)
    assert 0.5 * np.abs(np.linalg.eigvalsh(out - rho)).sum() <= 1e-6


def test_fresh_map_pure_input_agrees_with_ensemble():
    cfg = LatticeConfig(20, a=0.6, gamma=2.0)
    psi = gaussian_packet(20, 10, 2.0, 0.5)
    fresh = evolve_density_fresh(cfg, 3.0, 30, 8, pure_density(psi))
    direct = ensemble_density(EvolutionPlan(cfg, [3.0], n_realizations=30, master_seed=8), psi)[0]
    assert np.abs(fresh - direct).max() < 1e-12


def test_fresh_map_noiseless_is_conjugation(rng):
    cfg = LatticeConfig(64, a=0.0)
    rho = random_density(64, 5, rng)
    u = dense_propagator(cfg, np.zeros(64), 2.5)
    out = evolve_density_fresh(cfg, 2.5, 3, 0, rho)
    assert np.abs(out - u @ rho @ u.conj().T).max() < 1e-8
    assert abs(np.trace(out).real - 1) < 1e-8


def test_translation_covariance():
    n = 31
    plan = EvolutionPlan(LatticeConfig(n, a=0.0), [4.0])
    a = evolve_realization(plan, localized(n, 5), 0).states[0]
    b = evolve_realization(plan, localized(n, 12), 0).states[0]
    assert np.abs(np.roll(a, 7) - b).max() < 1e-12


def test_epsilon_shift_only_changes_phase():
    kw = dict(n_realizations=20, master_seed=3, n_batches=4)
    psi0 = gaussian_packet(40, 20, 3.0, 1.5 * np.pi)
    res = [run_ensemble(EvolutionPlan(LatticeConfig(40, epsilon=eps, a=0.6, gamma=2.0), [2.0, 6.0], **kw),
                        psi0) for eps in (0.0, 2.0)]
    for r0, r2 in zip(res[0].density(), res[1].density()):
        assert np.abs(r0 - r2).max() < 1e-12
        p0, p2 = site_distribution(r0), site_distribution(r2)
        assert abs(negentropy(p0) - negentropy(p2)) < 1e-12
        assert abs(coherence(r0) - coherence(r2)) < 1e-12
        assert np.abs(np.subtract(position_moments(p0), position_moments(p2))).max() < 1e-12


def test_plan_validation():
    cfg = LatticeConfig(5)
    for bad in ([], [1.0, 1.0], [-1.0, 2.0], [2.0, 1.0]):
        with pytest.raises(ValueError):
            EvolutionPlan(cfg, bad)
    with pytest.raises(ValueError):
        EvolutionPlan(cfg, [1.0], n_realizations=0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**63), n=st.integers(3, 30), a=st.floats(0, 1.5),
       gamma=st.floats(0.1, 20), boundary=st.sampled_from(["ring", "line"]))
def test_per_realization_norm(seed, n, a, gamma, boundary):
    plan = EvolutionPlan(LatticeConfig(n, boundary, a=a, gamma=gamma), [0.5, 3.0], master_seed=seed)
    res = evolve_realization(plan, localized(n, 1 + n // 2), 1)
    assert np.all(np.abs(np.linalg.norm(res.states, axis=1) - 1) < 1e-8)
