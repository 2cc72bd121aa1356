import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtnwalk.lattice import (LatticeConfig, build_h0, check_couplings, dense_hamiltonian,
                             link_endpoints, noisy_matvec)

from conftest import random_couplings, random_state


def test_ring_three_sites():
    h = build_h0(LatticeConfig(3, "ring", epsilon=2.0)).toarray()
    np.testing.assert_array_equal(h, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


def test_line_three_sites():
    h = build_h0(LatticeConfig(3, "line", epsilon=0.0)).toarray()
    np.testing.assert_array_equal(h, [[0, -1, 0], [-1, 0, -1], [0, -1, 0]])


def test_ring_spectrum_matches_plane_wave_energies():
    w = np.linalg.eigvalsh(build_h0(LatticeConfig(8, epsilon=2.0)).toarray())
    expected = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(1, 9) / 8))
    np.testing.assert_allclose(w, expected, atol=1e-12)


def test_h0_is_real_symmetric():
    h = build_h0(LatticeConfig(17, "line", epsilon=0.3))
    assert h.dtype == float
    assert abs(h - h.T).max() == 0


@pytest.mark.parametrize("kwargs, field", [
    (dict(n_sites=2), "n_sites"),
    (dict(n_sites=5, a=-0.1), "a"),
    (dict(n_sites=5, gamma=0.0), "gamma"),
    (dict(n_sites=5, boundary="torus"), "boundary"),
])
def test_config_rejects_invalid(kwargs, field):
    with pytest.raises(ValueError, match=field):
        LatticeConfig(**kwargs)


def test_links():
    ring, line = LatticeConfig(5), LatticeConfig(5, "line")
    assert ring.n_links == 5 and line.n_links == 4
    left, right = link_endpoints(ring)
    assert list(left) == [0, 1, 2, 3, 4] and list(right) == [1, 2, 3, 4, 0]


def test_matvec_zero_noise_is_h0(rng):
    cfg = LatticeConfig(12, a=0.0)
    h0 = build_h0(cfg)
    psi = random_state(12, rng)
    np.testing.assert_array_equal(noisy_matvec(cfg, h0, np.zeros(12), psi), h0 @ psi)


def test_matvec_three_site_substitution():
    a = 0.3
    cfg = LatticeConfig(3, epsilon=0.0, a=a)
    out = noisy_matvec(cfg, build_h0(cfg), [a, a, a], np.array([1, 0, 0], dtype=complex))
    np.testing.assert_allclose(out, [0, -1 + a, -1 + a], atol=1e-15)


@pytest.mark.parametrize("boundary", ["ring", "line"])
def test_matvec_matches_dense(boundary, rng):
    cfg = LatticeConfig(10, boundary, epsilon=1.3, a=0.7)
    g = random_couplings(cfg, rng)
    psi = random_state(10, rng)
    diff = noisy_matvec(cfg, build_h0(cfg), g, psi) - dense_hamiltonian(cfg, g) @ psi
    assert np.abs(diff).max() < 1e-14


def test_matvec_block_input(rng):
    cfg = LatticeConfig(9, a=0.5)
    g = random_couplings(cfg, rng)
    block = np.array([random_state(9, rng) for _ in range(3)])
    out = noisy_matvec(cfg, build_h0(cfg), g, block.T)
    np.testing.assert_allclose(out, dense_hamiltonian(cfg, g) @ block.T, atol=1e-14)


def test_matvec_dimension_mismatch():
    cfg = LatticeConfig(6, a=0.5)
    with pytest.raises(ValueError):
        noisy_matvec(cfg, build_h0(cfg), 0.5 * np.ones(6), np.ones(5, dtype=complex))
    with pytest.raises(ValueError):
        noisy_matvec(cfg, build_h0(cfg), 0.5 * np.ones(5), np.ones(6, dtype=complex))


def test_couplings_must_be_plus_minus_a():
    cfg = LatticeConfig(4, a=0.5)
    with pytest.raises(ValueError):
        check_couplings(cfg, [0.5, -0.5, 0.5, 0.4])


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 25), a=st.floats(0, 2), boundary=st.sampled_from(["ring", "line"]),
       seed=st.integers(0, 2**32 - 1))
def test_noisy_hamiltonian_is_hermitian(n, a, boundary, seed):
    rng = np.random.default_rng(seed)
    cfg = LatticeConfig(n, boundary, a=a)
    h0, g = build_h0(cfg), random_couplings(cfg, rng)
    x, y = random_state(n, rng), random_state(n, rng)
    lhs = np.vdot(x, noisy_matvec(cfg, h0, g, y))
    rhs = np.vdot(noisy_matvec(cfg, h0, g, x), y)
    assert abs(lhs - rhs) < 1e-14 * max(1.0, n)


def test_noise_does_not_commute_with_h0():
    cfg = LatticeConfig(6, a=0.5)
    h0 = dense_hamiltonian(cfg)
    v = dense_hamiltonian(cfg, [0.5, -0.5, 0.5, 0.5, -0.5, -0.5]) - h0
    assert np.linalg.norm(h0 @ v - v @ h0) > 0.1
