import numpy as np
import pytest

from rtnwalk.lattice import dense_hamiltonian


def dense_propagator(config, g, dt):
    """exp(-i H dt) from a full eigendecomposition of the entrywise matrix."""
    w, v = np.linalg.eigh(dense_hamiltonian(config, g))
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def random_couplings(config, rng):
    return config.a * rng.choice([-1.0, 1.0], size=config.n_links)


def random_state(n, rng):
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


def random_density(n, rank, rng):
    vecs = np.array([random_state(n, rng) for _ in range(rank)])
    w = rng.random(rank)
    w /= w.sum()
    return np.einsum("k,ki,kj->ij", w, vecs, vecs.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def report():
    """Record (and print) the one-line verdict of an acceptance criterion."""
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}  [{detail}]"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
