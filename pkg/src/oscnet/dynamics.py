"""Exact and closed-form time evolution of covariance matrices.

The Heisenberg equations of a quadratic Hamiltonian H = R[V(+)T]R^T/2 give
R(t) = S(t) R(0) with the symplectic propagator

    S(t) = exp([[0, T], [-V, 0]] t),    gamma(t) = S(t) gamma S(t)^T.

S(t) is evaluated in closed form from one spectral decomposition:

* T = identity: blocks [cos(Wt), W^-1 sin(Wt); -W sin(Wt), cos(Wt)] with
  W = sqrt(V).
* T = V (number-conserving model): blocks [cos(Vt), sin(Vt); -sin(Vt),
  cos(Vt)].
* otherwise: the symmetrised pencil sqrt(T) V sqrt(T) supplies the normal
  frequencies and the blocks pick up sqrt(T) factors.

Uniform rings admit normal-mode kernel functions; infinite chains admit
Bessel-function closed forms.  Squeezing convention: the two-mode squeezed
input of the propagation scenarios has covariance entries cosh(2r) /
sinh(2r), so its initial negativity is exactly 2r/ln 2, and all ring /
infinite-chain formulas below take their hyperbolic factors at 2r.

Momentum diffusion: a generator term -xi [q_n, [q_n, rho]] leaves every
second moment untouched except <p_n^2>: using tr(p^2 [q,[q,rho]]) =
tr([q,[q,p^2]] rho) and [q, [q, p^2]] = -2, one finds d<p_n^2>/dt = 2 xi,
i.e. d gamma_pp / dt = 4 xi in the gamma = 2 Re<..> normalisation used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gaussian import (
    GaussianState,
    symplectic_form,
    two_mode_minimum,
)
from .network import PositiveDefiniteError, QuadraticHamiltonian

PHYSICALITY_TOL = 1e-7


class FastPathError(RuntimeError):
    """Raised when the reduced-series fast path cannot handle a Hamiltonian."""


# --------------------------------------------------------------------------
# Bessel functions of the first kind, integer order
# --------------------------------------------------------------------------


def _bessel_table(kmax: int, x: np.ndarray) -> np.ndarray:
    """All orders 0..kmax at strictly positive arguments by downward (Miller)
    recurrence, normalised with J_0 + 2 sum_{even k} J_k = 1."""
    start = max(kmax, int(math.ceil(float(np.max(x)))))
    start = start + 60 + int(2.0 * math.sqrt(start))
    if start % 2:
        start += 1
    table = np.zeros((kmax + 1, x.size))
    jp = np.zeros_like(x)
    jc = np.full_like(x, 1e-250)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        jm = (2.0 * k / x) * jc - jp
        jp, jc = jc, jm
        order = k - 1
        if order % 2 == 0 and order > 0:
            norm += 2.0 * jc
        if order <= kmax:
            table[order] = jc
        big = np.abs(jc) > 1e250
        if np.any(big):
            jp[big] *= 1e-250
            jc[big] *= 1e-250
            norm[big] *= 1e-250
            table[:, big] *= 1e-250
    norm += jc  # J_0 term
    return table / norm


def bessel_j(order: int, x):
    """J_order(x) for integer order >= 0 and x >= 0 (scalar or array)."""
    if order < 0 or int(order) != order:
        raise ValueError("order must be a nonnegative integer")
    order = int(order)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    if np.any(xs < 0):
        raise ValueError("argument must be >= 0")
    out = np.zeros(xs.shape)
    zero = xs == 0.0
    if order == 0:
        out[zero] = 1.0
    tiny = (xs > 0.0) & (xs < 1e-8)
    if np.any(tiny):
        t = xs[tiny]
        # leading power-series term; error O((x/2)^(k+2))
        lead = np.exp(order * np.log(t / 2.0) - math.lgamma(order + 1))
        out[tiny] = lead * (1.0 - (t * t / 4.0) / (order + 1))
    rest = xs >= 1e-8
    if np.any(rest):
        out[rest] = _bessel_table(order, xs[rest])[order]
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Spectral propagators
# --------------------------------------------------------------------------


def _classify(ham: QuadraticHamiltonian) -> str:
    n = ham.n_modes
    if np.array_equal(ham.T, ham.V):
        return "rwa"
    if np.array_equal(ham.T, np.eye(n)) or np.allclose(ham.T, np.eye(n), atol=1e-14):
        return "position"
    if np.allclose(ham.T, ham.V, atol=1e-14):
        return "rwa"
    return "general"


@dataclass(frozen=True)
class HamiltonianSpectrum:
    """Eigen-data of a quadratic Hamiltonian, reusable across times.

    ``freq`` holds the angles-per-unit-time of the normal modes: sqrt(eig V)
    for T = identity, eig V for T = V, sqrt(eig(sqrt(T) V sqrt(T))) in
    general.
    """

    kind: str
    U: np.ndarray
    freq: np.ndarray
    t_half: np.ndarray | None = None
    t_half_inv: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.U.shape[0]

    def blocks(self, t: float):
        """The four n x n blocks (S_qq, S_qp, S_pq, S_pp) of S(t)."""
        U = self.U
        if self.kind == "rwa":
            th = self.freq * t
            c, s = np.cos(th), np.sin(th)
            Sqq = (U * c) @ U.T
            Sqp = (U * s) @ U.T
            return Sqq, Sqp, -Sqp, Sqq
        mu = self.freq
        c, s = np.cos(mu * t), np.sin(mu * t)
        if self.kind == "position":
            Sqq = (U * c) @ U.T
            Sqp = (U * (s / mu)) @ U.T
            Spq = -(U * (s * mu)) @ U.T
            return Sqq, Sqp, Spq, Sqq
        th, thi = self.t_half, self.t_half_inv
        cosm = (U * c) @ U.T
        Sqq = th @ cosm @ thi
        Sqp = th @ ((U * (s / mu)) @ U.T) @ th
        Spq = -thi @ ((U * (s * mu)) @ U.T) @ thi
        Spp = thi @ cosm @ th
        return Sqq, Sqp, Spq, Spp

    def matrix(self, t: float) -> np.ndarray:
        n = self.n_modes
        S = np.empty((2 * n, 2 * n))
        Sqq, Sqp, Spq, Spp = self.blocks(t)
        S[:n, :n] = Sqq
        S[:n, n:] = Sqp
        S[n:, :n] = Spq
        S[n:, n:] = Spp
        return S


def _sqrt_and_inv(m: np.ndarray):
    w, u = np.linalg.eigh(m)
    if w[0] <= 0:
        raise PositiveDefiniteError("matrix is not positive definite")
    return (u * np.sqrt(w)) @ u.T, (u / np.sqrt(w)) @ u.T


def spectral_decomposition(ham: QuadraticHamiltonian) -> HamiltonianSpectrum:
    kind = _classify(ham)
    if kind == "general":
        th, thi = _sqrt_and_inv(ham.T)
        w, U = np.linalg.eigh(th @ ham.V @ th)
        if w[0] <= 0:
            raise PositiveDefiniteError("sqrt(T) V sqrt(T) is not positive definite")
        return HamiltonianSpectrum("general", U, np.sqrt(w), th, thi)
    w, U = np.linalg.eigh(ham.V)
    if w[0] <= 0:
        raise PositiveDefiniteError("V is not positive definite")
    freq = w if kind == "rwa" else np.sqrt(w)
    return HamiltonianSpectrum(kind, U, freq)


def propagator(ham: QuadraticHamiltonian, t: float) -> np.ndarray:
    """The 2n x 2n symplectic matrix S(t) = exp([[0,T],[-V,0]] t)."""
    return spectral_decomposition(ham).matrix(t)


def evolve(state: GaussianState, ham: QuadraticHamiltonian, t: float) -> GaussianState:
    """gamma(t) = S(t) gamma S(t)^T."""
    if state.n_modes != ham.n_modes:
        raise ValueError("state and Hamiltonian mode counts differ")
    S = propagator(ham, t)
    g = S @ state.gamma @ S.T
    return GaussianState(0.5 * (g + g.T))


def evolve_series(
    state: GaussianState,
    ham: QuadraticHamiltonian,
    times,
    modes=None,
) -> np.ndarray:
    """Evolve over a time grid, reusing one spectral decomposition.

    Returns an array of covariance matrices, reduced to ``modes`` when given
    (full 2n x 2n matrices otherwise, which is memory-hungry for long grids).
    """
    if state.n_modes != ham.n_modes:
        raise ValueError("state and Hamiltonian mode counts differ")
    spec = spectral_decomposition(ham)
    times = np.asarray(times, dtype=float)
    n = ham.n_modes
    if modes is not None:
        modes = list(modes)
        idx = modes + [n + m for m in modes]
        out = np.empty((times.size, 2 * len(modes), 2 * len(modes)))
    else:
        out = np.empty((times.size, 2 * n, 2 * n))
    for k, t in enumerate(times):
        S = spec.matrix(float(t))
        g = S @ state.gamma @ S.T
        g = 0.5 * (g + g.T)
        out[k] = g[np.ix_(idx, idx)] if modes is not None else g
    return out


# --------------------------------------------------------------------------
# Reduced one/two-mode series, fast path for T = identity or T = V
# --------------------------------------------------------------------------


def _check_series_physical(series: np.ndarray, times: np.ndarray) -> None:
    if series.shape[-1] == 4:
        nu = two_mode_minimum(series)
    else:
        nu = np.sqrt(np.clip(np.linalg.det(series), 0.0, None))
    worst = int(np.argmin(nu))
    # tolerance scales with the matrix magnitude: double precision cannot
    # resolve 1e-7 absolute on eigenvalues of strongly squeezed states
    scale = max(1.0, float(np.max(np.abs(series))))
    if nu[worst] < 1.0 - PHYSICALITY_TOL * scale:
        raise ValueError(
            f"unphysical reduced state at t={times[worst]}: "
            f"min symplectic eigenvalue {nu[worst]!r}"
        )


def _pair_series_fast(
    ham: QuadraticHamiltonian,
    state: GaussianState,
    modes,
    times: np.ndarray,
) -> np.ndarray:
    spec = spectral_decomposition(ham)
    if spec.kind == "general":
        raise FastPathError("fast path needs T = identity or T = V")
    n = ham.n_modes
    U, freq = spec.U, spec.freq
    ph = freq[:, None] * times[None, :]
    C, S = np.cos(ph), np.sin(ph)
    if spec.kind == "position":
        Sg = S / freq[:, None]
        Sm = S * freq[:, None]
    else:
        Sg, Sm = S, S
    # vacuum part: entries of S(t) S(t)^T through eigenbasis orthogonality
    wqq = C * C + Sg * Sg
    wqp = C * Sg - Sm * C
    wpp = C * C + Sm * Sm
    k = len(modes)
    rows = {(a, b): U[a] * U[b] for a in modes for b in modes}
    vac = np.zeros((times.size, 2 * k, 2 * k))
    for ia, a in enumerate(modes):
        for ib, b in enumerate(modes):
            u = rows[(a, b)]
            vac[:, ia, ib] = u @ wqq
            vac[:, ia, k + ib] = u @ wqp
            vac[:, k + ia, ib] = u @ wqp
            vac[:, k + ia, k + ib] = u @ wpp
    # correction part: S Delta S^T restricted to the requested modes
    delta = state.gamma - np.eye(2 * n)
    rowsum = np.abs(delta).sum(axis=1)
    support = np.nonzero(rowsum[:n] + rowsum[n:] > 0.0)[0]
    if support.size:
        dq = np.concatenate([support, n + support])
        dC = delta[np.ix_(dq, dq)]
        nt = times.size
        ns = support.size
        # entry series of the propagator blocks for (mode, support) pairs
        K = np.empty((k * ns, n))
        for ia, a in enumerate(modes):
            K[ia * ns:(ia + 1) * ns] = U[a] * U[support]
        Eqq = (K @ C).reshape(k, ns, nt)
        Eqp = (K @ Sg).reshape(k, ns, nt)
        Epq = -(K @ Sm).reshape(k, ns, nt)
        Rq = np.concatenate([Eqq, Eqp], axis=1)   # q-row over (q_a.., p_a..)
        Rp = np.concatenate([Epq, Eqq], axis=1)   # p-row
        cqq = np.einsum("iat,ab,jbt->tij", Rq, dC, Rq)
        cqp = np.einsum("iat,ab,jbt->tij", Rq, dC, Rp)
        cpp = np.einsum("iat,ab,jbt->tij", Rp, dC, Rp)
        vac[:, :k, :k] += cqq
        vac[:, :k, k:] += cqp
        vac[:, k:, :k] += np.transpose(cqp, (0, 2, 1))
        vac[:, k:, k:] += cpp
    return 0.5 * (vac + np.transpose(vac, (0, 2, 1)))


def reduced_series(
    ham: QuadraticHamiltonian,
    state: GaussianState,
    modes,
    times,
    check_physical: bool = True,
) -> np.ndarray:
    """Covariance series of one or two modes over a time grid.

    Uses an O(n) per-time normal-mode kernel whenever T = identity or T = V;
    falls back to dense propagation otherwise.  Ordering of the output is
    (q_modes..., p_modes...).
    """
    modes = list(modes)
    if not 1 <= len(modes) <= 2 or len(set(modes)) != len(modes):
        raise ValueError("modes must be one or two distinct indices")
    if any(not 0 <= m < ham.n_modes for m in modes):
        raise ValueError("mode index out of range")
    if state.n_modes != ham.n_modes:
        raise ValueError("state and Hamiltonian mode counts differ")
    times = np.asarray(times, dtype=float)
    try:
        out = _pair_series_fast(ham, state, modes, times)
    except FastPathError:
        out = evolve_series(state, ham, times, modes=modes)
    if check_physical:
        _check_series_physical(out, times)
    return out


# --------------------------------------------------------------------------
# Ring normal-mode kernels
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RingKernels:
    """Kernel functions of a uniform periodic chain of M sites.

    Mode frequencies: omega_s^2 = 1 + 4c sin^2(pi s / M) for the spring model;
    the number-conserving model rotates each normal mode at the rate
    Omega_s^2 = 1 + 2c sin^2(pi s / M).  The position response kernels are

        f_k(t) = (1/M) sum_m cos(2 pi m k / M) cos(omega_m t)

    and likewise g_k (sin, weighted 1/omega_m) in the spring model, and
    F_k / G_k (cos / sin of Omega_m^2 t, unweighted) in the other.
    """

    ring_size: int
    coupling: float
    model: str

    def __post_init__(self):
        if self.ring_size < 1:
            raise ValueError("ring_size must be >= 1")
        if self.coupling < 0:
            raise ValueError("coupling must be >= 0")
        if self.model not in ("spring", "rwa"):
            raise ValueError(f"unknown model {self.model!r}")
        M = self.ring_size
        m = np.arange(1, M + 1)
        s2 = np.sin(np.pi * m / M) ** 2
        if self.model == "spring":
            rate = np.sqrt(1.0 + 4.0 * self.coupling * s2)
        else:
            rate = 1.0 + 2.0 * self.coupling * s2
        table = np.cos(2.0 * np.pi * np.outer(np.arange(M), m) / M)
        rate.setflags(write=False)
        table.setflags(write=False)
        object.__setattr__(self, "_rate", rate)
        object.__setattr__(self, "_table", table)

    @property
    def mode_rates(self) -> np.ndarray:
        """omega_s (spring) or Omega_s^2 (rwa) for s = 1..M."""
        return self._rate

    def _phases(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return self._rate[:, None] * times[None, :]

    def f(self, times) -> np.ndarray:
        """(M, n_times) array of f_k (spring) or F_k (rwa) for k = 0..M-1."""
        return self._table @ np.cos(self._phases(times)) / self.ring_size

    def g(self, times) -> np.ndarray:
        """g_k with the 1/omega weight (spring) or G_k (rwa)."""
        ph = self._phases(times)
        s = np.sin(ph)
        if self.model == "spring":
            s = s / self._rate[:, None]
        return self._table @ s / self.ring_size

    def f_dot(self, times) -> np.ndarray:
        """Time derivative of f_k (spring model only)."""
        if self.model != "spring":
            raise ValueError("f_dot is defined for the spring model")
        ph = self._phases(times)
        return -self._table @ (np.sin(ph) * self._rate[:, None]) / self.ring_size


def _rotate_site_zero(d_qq, d_qp, d_pq, d_pp, times):
    """Apply the decoupled site's free rotation (frequency 1) to the
    (q0, p0) rows of the cross block."""
    c, s = np.cos(times), np.sin(times)
    return (
        c * d_qq + s * d_pq,
        c * d_qp + s * d_pp,
        -s * d_qq + c * d_pq,
        -s * d_qp + c * d_pp,
    )


def _assemble_pair(ch, d_qq, d_qp, d_pq, d_pp, qnqn, qnpn, pnpn, nt):
    g = np.zeros((nt, 4, 4))
    g[:, 0, 0] = ch
    g[:, 2, 2] = ch
    g[:, 1, 1] = qnqn
    g[:, 3, 3] = pnpn
    g[:, 1, 3] = g[:, 3, 1] = qnpn
    g[:, 0, 1] = g[:, 1, 0] = d_qq
    g[:, 0, 3] = g[:, 3, 0] = d_qp
    g[:, 2, 1] = g[:, 1, 2] = d_pq
    g[:, 2, 3] = g[:, 3, 2] = d_pp
    return g


def evolve_ring_analytic(
    ring_size: int,
    coupling: float,
    model: str,
    r: float,
    site: int,
    times,
    rotate_site_zero: bool = True,
    kernels: RingKernels | None = None,
    check_physical: bool = True,
) -> np.ndarray:
    """Exact reduced covariance of (decoupled mode 0, ring site n) over time.

    The initial condition is the two-mode squeezed pair on (0, 1) with the
    rest of the ring in vacuum.  Output ordering is (q0, qn, p0, pn).  By
    default the decoupled mode's free rotation is included so the result
    matches dense propagation elementwise; disabling it freezes mode 0, which
    only changes the cross block by a local rotation and leaves every
    entanglement quantity untouched.
    """
    if not 1 <= site <= ring_size:
        raise ValueError("site must lie in 1..ring_size")
    K = kernels if kernels is not None else RingKernels(ring_size, coupling, model)
    if (K.ring_size, K.coupling, K.model) != (ring_size, coupling, model):
        raise ValueError("kernels do not match the requested ring")
    times = np.asarray(times, dtype=float)
    ch = math.cosh(2.0 * r)
    sh = math.sinh(2.0 * r)
    cr = ch - 1.0
    k = (site - 1) % ring_size
    f = K.f(times)
    g = K.g(times)
    fn, gn = f[k], g[k]
    if model == "spring":
        fd = K.f_dot(times)
        fdn = fd[k]
        qnqn = cr * (fn**2 + gn**2) + np.sum(f * f + g * g, axis=0)
        qnpn = cr * (fn * fdn + gn * fn) + np.sum(f * fd + g * f, axis=0)
        pnpn = cr * (fdn**2 + fn**2) + np.sum(fd * fd + f * f, axis=0)
        d_qq, d_qp, d_pq, d_pp = sh * fn, sh * fdn, -sh * gn, -sh * fn
    else:
        qnqn = cr * (fn**2 + gn**2) + np.sum(f * f + g * g, axis=0)
        qnpn = np.zeros_like(qnqn)
        pnpn = qnqn
        d_qq, d_qp, d_pq, d_pp = sh * fn, -sh * gn, -sh * gn, -sh * fn
    if rotate_site_zero:
        d_qq, d_qp, d_pq, d_pp = _rotate_site_zero(d_qq, d_qp, d_pq, d_pp, times)
    out = _assemble_pair(ch, d_qq, d_qp, d_pq, d_pp, qnqn, qnpn, pnpn, times.size)
    if check_physical:
        _check_series_physical(out, times)
    return out


# --------------------------------------------------------------------------
# Infinite-chain Bessel closed forms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InfiniteChainKernel:
    """Bessel envelope and carrier phase of the infinite-chain response.

    Spring model: with zeta = c/(1+2c) and Om = sqrt(1+2c), the kernel is
    J_{n-1}(zeta Om t) with phase Om t - pi (n-1)/2; the number-conserving
    model has envelope J_{n-1}(c t) and phase (1+c) t - pi (n-1)/2.  The
    spring self-correlation constants are the long-time averages 1/2, 0,
    Om^2/2, 1/(2 sqrt(1+4c)) and 0.
    """

    site: int
    coupling: float
    model: str

    def __post_init__(self):
        if self.site < 1:
            raise ValueError("site must be >= 1")
        if self.coupling < 0:
            raise ValueError("coupling must be >= 0")
        if self.model not in ("spring", "rwa"):
            raise ValueError(f"unknown model {self.model!r}")

    @property
    def zeta(self) -> float:
        c = self.coupling
        return c / (1.0 + 2.0 * c) if self.model == "spring" else c / (1.0 + c)

    @property
    def group_rate(self) -> float:
        """Envelope argument rate: zeta * Om (spring) or c (rwa)."""
        c = self.coupling
        return c / math.sqrt(1.0 + 2.0 * c) if self.model == "spring" else c

    @property
    def carrier_rate(self) -> float:
        c = self.coupling
        return math.sqrt(1.0 + 2.0 * c) if self.model == "spring" else 1.0 + c

    def envelope(self, times) -> np.ndarray:
        return bessel_j(self.site - 1, self.group_rate * np.asarray(times, float))

    def phase(self, times) -> np.ndarray:
        return self.carrier_rate * np.asarray(times, float) - 0.5 * np.pi * (self.site - 1)

    def averages(self):
        """Time-averaged spring self-correlation constants (a, b, c, d, e)."""
        c = self.coupling
        return (0.5, 0.0, 0.5 * (1.0 + 2.0 * c), 0.5 / math.sqrt(1.0 + 4.0 * c), 0.0)


def infinite_chain_two_mode(
    site: int,
    coupling: float,
    r: float,
    times,
    model: str,
    rotate_site_zero: bool = True,
) -> np.ndarray:
    """Closed-form reduced covariance of (decoupled mode 0, chain site n).

    Exact in the Bessel kernel for the number-conserving model; for the
    spring model the self-correlations are replaced by their long-time
    averages, which makes the block of site n slightly non-vacuum at t = 0.
    Output ordering (q0, qn, p0, pn).
    """
    kern = InfiniteChainKernel(site, coupling, model)
    times = np.asarray(times, dtype=float)
    ch = math.cosh(2.0 * r)
    sh = math.sinh(2.0 * r)
    cr = ch - 1.0
    J = kern.envelope(times)
    P = kern.phase(times)
    d_qq = sh * J * np.cos(P)
    d_qp = -sh * J * np.sin(P)
    d_pq = d_qp.copy()
    d_pp = -d_qq
    if model == "spring":
        a, _, cbar, dbar, _ = kern.averages()
        qnqn = cr * J * J + a + dbar
        pnpn = cr * J * J + cbar + a
    else:
        qnqn = cr * J * J + 1.0
        pnpn = qnqn
    qnpn = np.zeros_like(qnqn)
    if rotate_site_zero:
        d_qq, d_qp, d_pq, d_pp = _rotate_site_zero(d_qq, d_qp, d_pq, d_pp, times)
    return _assemble_pair(ch, d_qq, d_qp, d_pq, d_pp, qnqn, qnpn, pnpn, times.size)


def analytic_negativity(site: int, coupling: float, r: float, times, model: str) -> np.ndarray:
    """Closed-form negativity between mode 0 and chain site n over time.

    Evaluates the smaller partial-transpose symplectic eigenvalue eta of the
    infinite-chain two-mode covariance through its quartic invariants, in the
    Bessel envelope J = J_{n-1}; N = -log2(min(|eta|, 1)).
    """
    kern = InfiniteChainKernel(site, coupling, model)
    times = np.asarray(times, dtype=float)
    ch = math.cosh(2.0 * r)
    sh2 = math.sinh(2.0 * r) ** 2
    ch2 = 2.0 * ch * ch - 1.0
    J = kern.envelope(times)
    jj = J * J
    c = coupling
    # the small root (eta^2) is recovered from the root product det(gamma) =
    # eta^2 eta_+^2 rather than by subtraction, which cancels badly at large r
    if model == "spring":
        u = 1.0 / math.sqrt(1.0 + 4.0 * c)
        y1 = (
            2.0 + c + (1.0 + c) * u
            - (5.0 + 2.0 * c + u) * jj
            + 3.0 * jj * jj
            + jj * (3.0 + 2.0 * c + u - 4.0 * jj) * ch
            + (1.0 + jj) ** 2 * ch2
        )
        w = -8.0 * (2.0 * jj + (1.0 + u - 2.0 * jj) * ch) * (jj + (1.0 + c - jj) * ch)
        rad = w + y1 * y1
        detg = -w / 16.0
        eta_plus2 = 0.25 * (y1 + np.sqrt(np.clip(rad, 0.0, None)))
    else:
        z1 = (
            (1.0 + jj * jj) * ch * ch
            + 2.0 * jj * sh2
            + 2.0 * jj * (1.0 - jj) * ch
            + (1.0 - jj) ** 2
        )
        v = -4.0 * ((1.0 - jj) * ch + jj) ** 2
        rad = v + z1 * z1
        detg = -v / 4.0
        eta_plus2 = 0.5 * (z1 + np.sqrt(np.clip(rad, 0.0, None)))
    if np.any(rad < -1e-12 * np.maximum(1.0, np.abs(rad).max())):
        raise ValueError("negative radicand in closed-form negativity")
    eta2 = np.where(eta_plus2 > 0.0, detg / np.where(eta_plus2 > 0.0, eta_plus2, 1.0), 0.0)
    eta = np.sqrt(np.clip(eta2, 0.0, None))
    out = np.zeros_like(eta)
    mask = eta < 1.0 - 1e-9
    out[mask] = -np.log2(eta[mask])
    return out


# --------------------------------------------------------------------------
# Decoherence
# --------------------------------------------------------------------------


def momentum_diffusion_step(state: GaussianState, xi, dt: float) -> GaussianState:
    """Apply the double-commutator dephasing for a step dt: each site's
    gamma_pp grows by 4 xi dt (xi may be a scalar or per-site array)."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = state.n_modes
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (n,))
    if np.any(xi < 0):
        raise ValueError("xi must be >= 0")
    g = np.array(state.gamma)
    g[np.arange(n, 2 * n), np.arange(n, 2 * n)] += 4.0 * xi * dt
    return GaussianState(g)


def evolve_with_diffusion(
    state: GaussianState,
    ham: QuadraticHamiltonian,
    t: float,
    xi,
    max_substep: float = 0.05,
) -> GaussianState:
    """Strang splitting of Hamiltonian flow and momentum diffusion.

    Each substep applies a half diffusion kick, the exact unitary substep,
    and another half kick; the splitting error is second order in the
    substep and the unitary factor is reused across steps.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return state
    steps = max(1, int(math.ceil(t / max_substep)))
    dt = t / steps
    spec = spectral_decomposition(ham)
    S = spec.matrix(dt)
    n = state.n_modes
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (n,))
    kick = np.zeros(2 * n)
    kick[n:] = 4.0 * xi * (dt / 2.0)
    g = np.array(state.gamma)
    for _ in range(steps):
        g[np.arange(2 * n), np.arange(2 * n)] += kick
        g = S @ g @ S.T
        g[np.arange(2 * n), np.arange(2 * n)] += kick
    return GaussianState(0.5 * (g + g.T))


# --------------------------------------------------------------------------
# Explicit Ohmic heat baths
# --------------------------------------------------------------------------


def _decay_rate(g_scale: float, bath_size: int, cutoff: float) -> float:
    """Fitted energy-decay rate of one excited oscillator against its bath."""
    V = _bath_matrix(1.0, g_scale, bath_size, cutoff)
    ham = QuadraticHamiltonian(V=V, T=np.eye(V.shape[0]), model="spring")
    n = V.shape[0]
    g0 = np.eye(2 * n)
    g0[0, 0] = g0[n, n] = 3.0
    state = GaussianState(g0)
    recurrence = 2.0 * math.pi * bath_size / cutoff
    t_end = 0.6 * recurrence
    times = np.arange(2.0, t_end, 0.25)
    series = reduced_series(ham, state, [0], times, check_physical=False)
    energy = 0.25 * (series[:, 0, 0] + series[:, 1, 1]) - 0.5
    if np.any(energy <= 0):
        return math.inf
    slope = np.polyfit(times, np.log(energy), 1)[0]
    return -slope


def _bath_matrix(site_v: float, g_scale: float, bath_size: int, cutoff: float) -> np.ndarray:
    m = bath_size
    V = np.zeros((1 + m, 1 + m))
    V[0, 0] = site_v
    ladder = np.arange(1, m + 1) * cutoff / m
    V[np.arange(1, m + 1), np.arange(1, m + 1)] = ladder**2
    V[0, 1:] = V[1:, 0] = g_scale * ladder
    return V


@lru_cache(maxsize=32)
def calibrate_bath_coupling(
    q_factor: float, bath_size: int = 50, cutoff: float = 5.0
) -> float:
    """Coupling scale for an Ohmic ladder bath matching a quality factor.

    Bisects the global scale of the ladder weights j * cutoff / bath_size so
    that the fitted exponential decay rate of a single excited oscillator's
    mean energy above ground equals 1/Q, i.e. the energy falls by 1/e after
    Q radians of the omega = 1 oscillation.
    """
    if q_factor <= 0 or bath_size < 1 or cutoff <= 0:
        raise ValueError("q_factor, bath_size and cutoff must be positive")
    target = 1.0 / q_factor
    lo, hi = 1e-6, 0.95 / math.sqrt(bath_size)
    if _decay_rate(hi, bath_size, cutoff) < target:
        raise ValueError(f"q_factor {q_factor} too small for this bath")
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if _decay_rate(mid, bath_size, cutoff) < target:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-3:
            break
    return math.sqrt(lo * hi)


def ohmic_bath_augment(
    ham: QuadraticHamiltonian,
    sites,
    bath_size: int = 50,
    cutoff: float = 5.0,
    q_factor: float = 1000.0,
) -> QuadraticHamiltonian:
    """Append an independent Ohmic ladder bath to each listed site.

    Bath oscillator j of each bath has frequency j * cutoff / bath_size and
    couples to its site's position with weight scale * j * cutoff /
    bath_size, the scale being calibrated from the quality factor.  ``sites``
    are mode indices; system modes keep their indices and bath modes are
    appended after them.  Requires a position-coupled Hamiltonian
    (T = identity).
    """
    n0 = ham.n_modes
    if not np.allclose(ham.T, np.eye(n0), atol=1e-14):
        raise ValueError("bath augmentation requires T = identity")
    site_modes = [int(s) for s in sites]
    if any(not 0 <= s < n0 for s in site_modes):
        raise ValueError("bath site index out of range")
    if len(set(site_modes)) != len(site_modes):
        raise ValueError("duplicate sites")
    scale = calibrate_bath_coupling(q_factor, bath_size, cutoff)
    m = bath_size
    n = n0 + m * len(site_modes)
    V = np.zeros((n, n))
    V[:n0, :n0] = ham.V
    ladder = np.arange(1, m + 1) * cutoff / m
    for b, mode in enumerate(site_modes):
        sl = slice(n0 + b * m, n0 + (b + 1) * m)
        V[sl, sl] = np.diag(ladder**2)
        V[mode, sl] = V[sl, mode] = scale * ladder
    lo = float(np.linalg.eigvalsh(V)[0])
    if lo <= 0:
        raise PositiveDefiniteError(
            f"bath coupling scale {scale:.3e} destroys positive definiteness "
            f"(smallest eigenvalue {lo:.3e})"
        )
    return QuadraticHamiltonian(V=V, T=np.eye(n), model="spring")
