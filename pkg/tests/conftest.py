import numpy as np
import pytest

from oscnet import network


def random_orthogonal_symplectic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Symplectic orthogonal from a Haar-ish random n x n unitary."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    s = np.zeros((2 * n, 2 * n))
    s[:n, :n] = q.real
    s[:n, n:] = -q.imag
    s[n:, :n] = q.imag
    s[n:, n:] = q.real
    return s


def random_symplectic(rng: np.random.Generator, n: int, max_squeeze: float = 1.0) -> np.ndarray:
    """Euler-decomposed random symplectic: rotation, squeezers, rotation."""
    z = rng.uniform(-max_squeeze, max_squeeze, size=n)
    d = np.concatenate([np.exp(z), np.exp(-z)])
    return random_orthogonal_symplectic(rng, n) @ np.diag(d) @ random_orthogonal_symplectic(rng, n)


def random_physical_state(rng: np.random.Generator, n: int, max_nu: float = 3.0) -> np.ndarray:
    """Random covariance matrix with symplectic spectrum in [1, max_nu]."""
    nu = rng.uniform(1.0, max_nu, size=n)
    d = np.concatenate([nu, nu])
    s = random_symplectic(rng, n)
    g = s @ np.diag(d) @ s.T
    return 0.5 * (g + g.T)


def random_hamiltonian(rng: np.random.Generator, max_sites: int = 8) -> network.QuadraticHamiltonian:
    """Random connected-ish network Hamiltonian in either coupling model."""
    m = int(rng.integers(2, max_sites + 1))
    edges = [(k, k + 1, float(rng.uniform(0.01, 0.4))) for k in range(1, m)]
    extra = int(rng.integers(0, 3))
    for _ in range(extra):
        i, j = sorted(rng.choice(np.arange(1, m + 1), size=2, replace=False))
        if all((int(i), int(j)) != (a, b) for a, b, _ in edges):
            edges.append((int(i), int(j), float(rng.uniform(0.01, 0.3))))
    model = "spring" if rng.random() < 0.5 else "rwa"
    net = network.OscillatorNetwork(site_count=m, edges=tuple(edges))
    return network.assemble(net, model)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
