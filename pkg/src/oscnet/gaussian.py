"""Gaussian states as covariance matrices and their entanglement.

A state of n modes is the real symmetric 2n x 2n covariance matrix gamma in
the canonical ordering (q_1..q_n, p_1..p_n), normalised so the vacuum has
gamma = identity.  First moments are ignored throughout.  Entanglement across
a mode partition is quantified by the logarithmic negativity

    N = - sum_j log2(min(1, nu_j)),

where nu_j are the symplectic eigenvalues of the partially transposed
covariance matrix (momentum signs flipped on one party).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .network import QuadraticHamiltonian

# Symplectic eigenvalues this close to 1 (from below) are treated as exactly 1
# when accumulating negativity, suppressing log-of-rounding noise.
NEGATIVITY_CLAMP = 1e-9
PAIRING_TOL = 1e-8


def symplectic_form(n: int) -> np.ndarray:
    """The canonical form sigma = [[0, I], [-I, 0]] for n modes."""
    sigma = np.zeros((2 * n, 2 * n))
    sigma[:n, n:] = np.eye(n)
    sigma[n:, :n] = -np.eye(n)
    return sigma


@dataclass(frozen=True)
class GaussianState:
    """Immutable covariance matrix in (all q, then all p) ordering."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise ValueError("covariance matrix must be square with even dimension")
        if not np.allclose(g, g.T, atol=1e-10):
            raise ValueError("covariance matrix must be symmetric")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0] // 2

    def q_index(self, mode: int) -> int:
        return mode

    def p_index(self, mode: int) -> int:
        return self.n_modes + mode


def vacuum_state(n: int) -> GaussianState:
    """n-mode vacuum, gamma = identity."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return GaussianState(np.eye(2 * n))


def thermal_state(n: int, x: float) -> GaussianState:
    """Thermal product state at frequency/temperature ratio x = omega/T.

    Every diagonal entry equals z = 1 + 2/(e^x - 1); x -> infinity recovers
    the vacuum.
    """
    if x <= 0:
        raise ValueError("temperature ratio x must be > 0")
    z = 1.0 + 2.0 / math.expm1(x)
    return GaussianState(z * np.eye(2 * n))


def embed_two_mode_squeezed(
    state: GaussianState, i: int, j: int, r: float
) -> GaussianState:
    """Overwrite modes (i, j) with a two-mode squeezed state of parameter r.

    The pair's blocks become cosh(2r) on the diagonals with sinh(2r) (qq) and
    -sinh(2r) (pp) cross terms; all correlations of i and j with other modes
    are zeroed.  The pair is pure; its partial transpose has smaller
    symplectic eigenvalue exp(-2r), so the initial negativity is 2r/ln 2.
    """
    if i == j:
        raise ValueError("two-mode squeezing needs two distinct modes")
    n = state.n_modes
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError("mode index out of range")
    g = np.array(state.gamma)
    idx = [i, j, n + i, n + j]
    g[idx, :] = 0.0
    g[:, idx] = 0.0
    ch, sh = math.cosh(2.0 * r), math.sinh(2.0 * r)
    g[i, i] = g[j, j] = g[n + i, n + i] = g[n + j, n + j] = ch
    g[i, j] = g[j, i] = sh
    g[n + i, n + j] = g[n + j, n + i] = -sh
    return GaussianState(g)


def excite_site(state: GaussianState, i: int, kind: str, z: float) -> GaussianState:
    """Put mode i into a squeezed (gamma_qq = z = 1/gamma_pp) or thermal
    (gamma_qq = gamma_pp = z) single-mode state, decorrelated from the rest."""
    n = state.n_modes
    if not 0 <= i < n:
        raise ValueError("mode index out of range")
    if kind == "squeezed":
        if z <= 0:
            raise ValueError("squeezed excitation needs z > 0")
        qq, pp = z, 1.0 / z
    elif kind == "thermal":
        if z < 1:
            raise ValueError("thermal excitation needs z >= 1")
        qq = pp = z
    else:
        raise ValueError(f"unknown excitation kind {kind!r}")
    g = np.array(state.gamma)
    idx = [i, n + i]
    g[idx, :] = 0.0
    g[:, idx] = 0.0
    g[i, i] = qq
    g[n + i, n + i] = pp
    return GaussianState(g)


def _sym_fun(m: np.ndarray, fn) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix via eigendecomposition."""
    w, u = np.linalg.eigh(m)
    return (u * fn(w)) @ u.T


def ground_state(ham: QuadraticHamiltonian) -> GaussianState:
    """Ground-state covariance matrix of a quadratic Hamiltonian.

    For kinetic matrix T = identity this is sqrt(V^-1) (+) sqrt(V); for T = V
    it is the identity.  In general the q-block is
    T^(1/2) (T^(1/2) V T^(1/2))^(-1/2) T^(1/2) and the p-block its inverse
    pattern, which reduces to sqrt(T V^-1) (+) sqrt(V T^-1) whenever T and V
    commute.
    """
    V, T = ham.V, ham.T
    n = V.shape[0]
    if np.array_equal(T, V):
        return GaussianState(np.eye(2 * n))
    wV = np.linalg.eigvalsh(V)
    wT = np.linalg.eigvalsh(T)
    if wV[0] <= 0 or wT[0] <= 0:
        raise ValueError("ground state requires positive definite V and T")
    if np.allclose(T, np.eye(n), atol=1e-14):
        gq = _sym_fun(V, lambda w: w**-0.5)
        gp = _sym_fun(V, np.sqrt)
    else:
        th = _sym_fun(T, np.sqrt)
        thi = _sym_fun(T, lambda w: w**-0.5)
        W = th @ V @ th
        gq = th @ _sym_fun(W, lambda w: np.abs(w) ** -0.5) @ th
        gp = thi @ _sym_fun(W, lambda w: np.sqrt(np.abs(w))) @ thi
    g = np.zeros((2 * n, 2 * n))
    g[:n, :n] = 0.5 * (gq + gq.T)
    g[n:, n:] = 0.5 * (gp + gp.T)
    return GaussianState(g)


def _as_gamma(state) -> np.ndarray:
    return state.gamma if isinstance(state, GaussianState) else np.asarray(state, float)


def partial_transpose(state, modes: Iterable[int]) -> np.ndarray:
    """Flip the momenta of the given modes: gamma -> P gamma P.

    Returns the transformed matrix (which may violate physicality for
    entangled states).  Applying the same transpose twice restores gamma.
    """
    g = _as_gamma(state)
    n = g.shape[0] // 2
    modes = sorted(set(modes))
    if not modes or len(modes) >= n:
        raise ValueError("partition must be a nonempty proper subset of modes")
    if modes[0] < 0 or modes[-1] >= n:
        raise ValueError("mode index out of range")
    signs = np.ones(2 * n)
    for m in modes:
        signs[n + m] = -1.0
    return g * np.outer(signs, signs)


def symplectic_eigenvalues(matrix, pairing_tol: float = PAIRING_TOL) -> np.ndarray:
    """Symplectic spectrum: positive square roots of the eigenvalues of
    -sigma gamma sigma gamma, which come in degenerate pairs.

    The input is symmetrised first.  A failure of the eigenvalues to pair up
    (or significant imaginary parts) signals that the input is not a
    covariance-like matrix and raises ValueError.
    """
    g = _as_gamma(matrix)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
        raise ValueError("expected a square matrix of even dimension")
    if not np.allclose(g, g.T, atol=1e-8):
        raise ValueError("expected a symmetric matrix")
    g = 0.5 * (g + g.T)
    n = g.shape[0] // 2
    sigma = symplectic_form(n)
    ev = np.linalg.eigvals(-sigma @ g @ sigma @ g)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.max(np.abs(ev.imag)) > pairing_tol * scale:
        raise ValueError("spectrum of -sigma.g.sigma.g is not real; not a covariance matrix")
    vals = np.sort(ev.real)
    vals[np.abs(vals) <= 1e-12 * scale] = 0.0
    if np.any(vals < 0):
        raise ValueError("negative eigenvalues of -sigma.g.sigma.g; not a covariance matrix")
    pairs = vals.reshape(n, 2)
    if np.any(np.abs(pairs[:, 0] - pairs[:, 1]) > pairing_tol * np.maximum(1.0, pairs[:, 1])):
        raise ValueError("eigenvalues fail to pair; not a covariance matrix")
    return np.sqrt(pairs.mean(axis=1))


def _negativity_from_spectrum(nu: np.ndarray) -> float:
    below = nu < 1.0 - NEGATIVITY_CLAMP
    if not np.any(below):
        return 0.0
    return float(-np.sum(np.log2(nu[below])))


def log_negativity(state, modes: Iterable[int]) -> float:
    """Logarithmic negativity across the partition (modes | rest)."""
    gt = partial_transpose(state, modes)
    return _negativity_from_spectrum(symplectic_eigenvalues(gt))


def reduce(state, modes: Sequence[int]) -> GaussianState:
    """Trace out all modes except the given ones (rows/columns selection)."""
    g = _as_gamma(state)
    n = g.shape[0] // 2
    modes = list(modes)
    if not modes:
        raise ValueError("subset must be nonempty")
    if any(not 0 <= m < n for m in modes):
        raise ValueError("mode index out of range")
    idx = modes + [n + m for m in modes]
    return GaussianState(g[np.ix_(idx, idx)])


def assert_physical(state, tol: float = 1e-7) -> None:
    """Raise unless every symplectic eigenvalue is >= 1 - tol."""
    nu = symplectic_eigenvalues(state)
    if nu[0] < 1.0 - tol:
        raise ValueError(f"unphysical covariance matrix: min symplectic eigenvalue {nu[0]!r}")


# --- fast closed-form routes for two-mode (4 x 4) covariance matrices -------
#
# For gamma = [[A, C], [C^T, B]] in mode blocks, the symplectic eigenvalues
# solve nu^4 - Delta nu^2 + det(gamma) = 0 with Delta = det A + det B + 2 det C;
# the partial transpose flips the sign of det C.  These helpers are vectorised
# over a leading stack of 4 x 4 matrices in (q1, q2, p1, p2) ordering.


def _two_mode_dets(g: np.ndarray):
    a = g[..., 0, 0] * g[..., 2, 2] - g[..., 0, 2] * g[..., 2, 0]
    b = g[..., 1, 1] * g[..., 3, 3] - g[..., 1, 3] * g[..., 3, 1]
    c = g[..., 0, 1] * g[..., 2, 3] - g[..., 0, 3] * g[..., 2, 1]
    return a, b, c, np.linalg.det(g)


def _quartic_roots(delta: np.ndarray, detg: np.ndarray):
    disc = delta * delta - 4.0 * detg
    bad = disc < -1e-9 * np.maximum(1.0, delta * delta)
    if np.any(bad):
        raise ValueError("two-mode symplectic quartic has complex roots")
    # near-degenerate roots: the subtraction leaves O(eps) noise that the
    # square root amplifies to ~1e-8; below the noise floor the splitting is
    # numerically zero
    floor = 1e-13 * np.maximum(1.0, delta) ** 2
    disc = np.where(disc < floor, 0.0, disc)
    disc = np.sqrt(np.clip(disc, 0.0, None))
    hi2 = 0.5 * (delta + disc)
    # small root via the root product, avoiding cancellation when detg << delta^2
    lo2 = np.where(hi2 > 0.0, np.clip(detg, 0.0, None) / np.where(hi2 > 0.0, hi2, 1.0), 0.0)
    lo = np.sqrt(np.clip(lo2, 0.0, None))
    hi = np.sqrt(np.clip(hi2, 0.0, None))
    return lo, hi


def two_mode_pt_minimum(g: np.ndarray) -> np.ndarray:
    """Smaller symplectic eigenvalue of the partial transpose (vectorised)."""
    a, b, c, detg = _two_mode_dets(np.asarray(g, float))
    lo, _ = _quartic_roots(a + b - 2.0 * c, detg)
    return lo


def two_mode_minimum(g: np.ndarray) -> np.ndarray:
    """Smaller symplectic eigenvalue of the matrix itself (vectorised)."""
    a, b, c, detg = _two_mode_dets(np.asarray(g, float))
    lo, _ = _quartic_roots(a + b + 2.0 * c, detg)
    return lo


def log_negativity_two_mode(g: np.ndarray) -> np.ndarray:
    """Logarithmic negativity of 4 x 4 covariance matrices via the quartic
    closed form; vectorised over a leading stack axis."""
    a, b, c, detg = _two_mode_dets(np.asarray(g, float))
    lo, hi = _quartic_roots(a + b - 2.0 * c, detg)
    out = np.zeros_like(lo)
    for nu in (lo, hi):
        mask = nu < 1.0 - NEGATIVITY_CLAMP
        if np.any(mask):
            out = out - np.where(mask, np.log2(np.where(mask, nu, 1.0)), 0.0)
    return out


# --- serialization -----------------------------------------------------------


def save_covariance_csv(state: GaussianState, path) -> None:
    """Write a covariance matrix as CSV with a header naming the convention."""
    n = state.n_modes
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# modes={n} ordering=q1..q{n},p1..p{n} vacuum=identity\n")
        for row in state.gamma:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_covariance_csv(path) -> GaussianState:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# modes="):
            raise ValueError("missing covariance CSV header")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return GaussianState(np.array(rows))
