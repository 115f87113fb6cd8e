"""Oscillator networks and their quadratic Hamiltonians.

A network is a weighted interaction graph over sites 1..M, optionally with a
distinguished decoupled site labeled 0 that occupies matrix index 0.  From a
network and a coupling model the quadratic Hamiltonian

    H = 1/2 R [V (+) T] R^T,   R = (q_0.., q_M, p_0.., p_M)

is assembled, where V is the potential matrix and T the kinetic matrix.

Coupling models:

* ``"spring"``: position-position coupling ``c (q_i - q_j)^2`` per edge.
  Each edge adds ``c`` to both incident diagonals of V and ``-c`` off
  diagonal; T is the diagonal matrix of inverse masses.
* ``"rwa"``: number-conserving coupling ``(c/2)(q_i - q_j)^2 +
  (c/2)(p_i - p_j)^2`` per edge, so V and T receive identical coupling
  contributions and T = V whenever frequencies and masses are uniform.

Per-site terms are ``omega_i^2 q_i^2 / 2`` (enters V only) and
``p_i^2 / (2 m_i)`` (enters T only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

MODELS = ("spring", "rwa")


class PositiveDefiniteError(ValueError):
    """A potential or kinetic matrix failed its positive-definiteness check."""


def _check_model(model: str) -> str:
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    return model


@dataclass(frozen=True)
class OscillatorNetwork:
    """Weighted interaction graph plus per-site frequency and mass overrides.

    Sites carry 1-based labels 1..site_count; the optional decoupled site has
    label 0 and never carries edges.  Edges are unordered pairs with a
    nonnegative coupling weight; parallel edges are merged by summing weights
    before construction.
    """

    site_count: int
    edges: tuple[tuple[int, int, float], ...] = ()
    frequencies: tuple[float, ...] = ()
    masses: tuple[float, ...] = ()
    has_decoupled_site: bool = False
    boundary: str = "open"

    def __post_init__(self):
        if self.site_count < 1:
            raise ValueError("site_count must be >= 1")
        if not self.frequencies:
            object.__setattr__(self, "frequencies", (1.0,) * self.site_count)
        if not self.masses:
            object.__setattr__(self, "masses", (1.0,) * self.site_count)
        if len(self.frequencies) != self.site_count or len(self.masses) != self.site_count:
            raise ValueError("frequencies and masses must have one entry per site")
        if any(w <= 0 for w in self.frequencies) or any(m <= 0 for m in self.masses):
            raise ValueError("site frequencies and masses must be positive")
        seen = set()
        for i, j, c in self.edges:
            if i == j:
                raise ValueError(f"self-edge at site {i}")
            if not (1 <= i <= self.site_count and 1 <= j <= self.site_count):
                raise ValueError(f"edge ({i},{j}) out of range 1..{self.site_count}")
            if c < 0:
                raise ValueError(f"negative coupling on edge ({i},{j})")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def n_modes(self) -> int:
        return self.site_count + (1 if self.has_decoupled_site else 0)

    def mode_index(self, site: int) -> int:
        """Matrix index of a site label (label 0 is the decoupled site)."""
        if site == 0:
            if not self.has_decoupled_site:
                raise ValueError("network has no decoupled site 0")
            return 0
        if not (1 <= site <= self.site_count):
            raise ValueError(f"site {site} out of range 1..{self.site_count}")
        return site - 1 + (1 if self.has_decoupled_site else 0)

    def degree(self, site: int) -> int:
        return sum(1 for i, j, _ in self.edges if site in (i, j))

    def incident_edges(self, site: int) -> tuple[int, ...]:
        return tuple(k for k, (i, j, _) in enumerate(self.edges) if site in (i, j))


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Symmetric potential matrix V and kinetic matrix T for H = R[V(+)T]R^T/2.

    Matrix ordering is (q_0?, q_1..q_M, p_0?, p_1..p_M): the decoupled site,
    when present, sits at index 0.  Arrays are read-only.
    """

    V: np.ndarray
    T: np.ndarray
    model: str
    network: OscillatorNetwork | None = None
    site_map: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        T = np.asarray(self.T, dtype=float)
        if V.shape != T.shape or V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ValueError("V and T must be square matrices of equal shape")
        V.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "T", T)
        _check_model(self.model)

    @property
    def n_modes(self) -> int:
        return self.V.shape[0]

    def mode_index(self, site: int) -> int:
        if self.network is None:
            raise ValueError("Hamiltonian carries no network; address modes directly")
        return self.network.mode_index(site)


def assemble(network: OscillatorNetwork, model: str) -> QuadraticHamiltonian:
    """Build (V, T) from a network under the given coupling model."""
    _check_model(model)
    n = network.n_modes
    off = 1 if network.has_decoupled_site else 0
    V = np.zeros((n, n))
    T = np.zeros((n, n))
    if off:
        V[0, 0] = T[0, 0] = 1.0
    for k in range(network.site_count):
        V[off + k, off + k] = network.frequencies[k] ** 2
        T[off + k, off + k] = 1.0 / network.masses[k]
    half = 0.5 if model == "rwa" else 1.0
    for i, j, c in network.edges:
        a, b = network.mode_index(i), network.mode_index(j)
        V[a, a] += half * c
        V[b, b] += half * c
        V[a, b] -= half * c
        V[b, a] -= half * c
        if model == "rwa":
            T[a, a] += half * c
            T[b, b] += half * c
            T[a, b] -= half * c
            T[b, a] -= half * c
    return QuadraticHamiltonian(V=V, T=T, model=model, network=network)


def validate(ham: QuadraticHamiltonian, tol: float = 1e-10) -> None:
    """Check symmetry and positive definiteness of V and T (raises on failure)."""
    for name, m in (("V", ham.V), ("T", ham.T)):
        if not np.allclose(m, m.T, atol=tol):
            raise PositiveDefiniteError(f"{name} is not symmetric")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo <= tol:
            raise PositiveDefiniteError(
                f"{name} is not positive definite (smallest eigenvalue {lo:.3e})"
            )


def _merge_edges(pairs: list[tuple[int, int, float]]) -> tuple[tuple[int, int, float], ...]:
    acc: dict[tuple[int, int], float] = {}
    order: list[tuple[int, int]] = []
    for i, j, c in pairs:
        key = (min(i, j), max(i, j))
        if key not in acc:
            acc[key] = 0.0
            order.append(key)
        acc[key] += c
    return tuple((i, j, acc[(i, j)]) for i, j in order)


def build_chain(
    site_count: int,
    coupling: float,
    boundary: str = "open",
    model: str = "spring",
    with_decoupled_site: bool = False,
) -> QuadraticHamiltonian:
    """Uniform nearest-neighbour chain, open or periodic.

    A periodic two-site chain carries the wrap-around spring twice, so the
    merged edge weight is 2c; this keeps the matrix consistent with the ring
    normal-mode frequencies for every M >= 2.
    """
    if site_count < 1:
        raise ValueError("site_count must be >= 1")
    if coupling < 0:
        raise ValueError("coupling must be >= 0")
    if boundary not in ("open", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    pairs = [(k, k + 1, coupling) for k in range(1, site_count)]
    if boundary == "periodic" and site_count >= 2:
        pairs.append((site_count, 1, coupling))
    net = OscillatorNetwork(
        site_count=site_count,
        edges=_merge_edges(pairs) if coupling > 0 else (),
        has_decoupled_site=with_decoupled_site,
        boundary=boundary,
    )
    ham = assemble(net, model)
    validate(ham)
    return ham


def build_y_shape(
    base_length: int,
    arm_length: int,
    coupling: float,
    model: str = "rwa",
) -> QuadraticHamiltonian:
    """Open base chain whose last site feeds two open arms.

    Sites are labeled base 1..base_length (junction = base_length), first arm
    next, second arm after that.  The site map records base_start, junction,
    arm1_end and arm2_end.
    """
    if base_length < 1 or arm_length < 1:
        raise ValueError("base_length and arm_length must be >= 1")
    if coupling < 0:
        raise ValueError("coupling must be >= 0")
    b, a = base_length, arm_length
    pairs = [(k, k + 1, coupling) for k in range(1, b)]
    arm1 = list(range(b + 1, b + a + 1))
    arm2 = list(range(b + a + 1, b + 2 * a + 1))
    for arm in (arm1, arm2):
        pairs.append((b, arm[0], coupling))
        pairs += [(arm[k], arm[k + 1], coupling) for k in range(a - 1)]
    net = OscillatorNetwork(site_count=b + 2 * a, edges=_merge_edges(pairs))
    ham = assemble(net, model)
    validate(ham)
    return replace(
        ham,
        site_map={
            "base_start": 1,
            "junction": b,
            "arm1_end": arm1[-1],
            "arm2_end": arm2[-1],
        },
    )


def build_interferometer(
    left_length: int,
    upper_length: int,
    lower_length: int,
    right_length: int,
    coupling: float,
    model: str = "rwa",
    arm_frequency: float | None = None,
    with_decoupled_site: bool = False,
) -> QuadraticHamiltonian:
    """Left chain splitting into two arms that rejoin into a right chain.

    The left junction is the last left-chain site and the right junction the
    first right-chain site; both arms attach to each with the common coupling.
    When ``arm_frequency`` is given, upper-arm site i takes the smoothly ramped
    eigenfrequency 1 + (w - 1) * min(i, U+1-i) / (U/2), peaking mid-arm.
    """
    for name, v in (
        ("left_length", left_length),
        ("upper_length", upper_length),
        ("lower_length", lower_length),
        ("right_length", right_length),
    ):
        if v < 1:
            raise ValueError(f"{name} must be >= 1")
    if coupling < 0:
        raise ValueError("coupling must be >= 0")
    L, U, D, R = left_length, upper_length, lower_length, right_length
    upper = list(range(L + 1, L + U + 1))
    lower = list(range(L + U + 1, L + U + D + 1))
    right = list(range(L + U + D + 1, L + U + D + R + 1))
    pairs = [(k, k + 1, coupling) for k in range(1, L)]
    for arm in (upper, lower):
        pairs.append((L, arm[0], coupling))
        pairs += [(arm[k], arm[k + 1], coupling) for k in range(len(arm) - 1)]
        pairs.append((arm[-1], right[0], coupling))
    pairs += [(right[k], right[k + 1], coupling) for k in range(R - 1)]
    freqs = [1.0] * (L + U + D + R)
    if arm_frequency is not None:
        for i, site in enumerate(upper, start=1):
            freqs[site - 1] = 1.0 + (arm_frequency - 1.0) * min(i, U + 1 - i) / (U / 2)
    net = OscillatorNetwork(
        site_count=L + U + D + R,
        edges=_merge_edges(pairs),
        frequencies=tuple(freqs),
        has_decoupled_site=with_decoupled_site,
    )
    ham = assemble(net, model)
    validate(ham)
    return replace(
        ham,
        site_map={
            "left_start": 1,
            "left_junction": L,
            "right_junction": right[0],
            "right_end": right[-1],
        },
    )


def engineered_transfer_chain(
    site_count: int,
    coupling: float,
    with_decoupled_site: bool = False,
) -> QuadraticHamiltonian:
    """Open RWA chain with couplings shaped for perfect end-to-end transfer.

    The number-conserving hopping between sites n and n+1 has strength
    (c/2) sqrt(n (M - n)) while every diagonal of V and T is pinned to 1, so
    the interaction-picture generator is exactly a spin-(M-1)/2 rotation and
    the end-to-end amplitude follows sin(ct/2)^(M-1) with a full swap at
    t = pi/c.  Site frequencies and masses absorb the diagonal pinning.
    """
    if site_count < 2:
        raise ValueError("site_count must be >= 2")
    if coupling <= 0:
        raise ValueError("coupling must be > 0")
    M = site_count
    # edge weight c sqrt(n(M-n)); the number-conserving assembly rule halves
    # it, leaving hopping (c/2) sqrt(n(M-n)) as the rotation generator needs
    kappa = [coupling * math.sqrt(n * (M - n)) for n in range(1, M)]
    pairs = [(n, n + 1, kappa[n - 1]) for n in range(1, M)]
    freqs, masses = [], []
    for n in range(1, M + 1):
        incident = 0.0
        if n > 1:
            incident += kappa[n - 2]
        if n < M:
            incident += kappa[n - 1]
        w2 = 1.0 - 0.5 * incident
        if w2 <= 0:
            raise PositiveDefiniteError(
                f"coupling {coupling} too strong: site {n} frequency would be imaginary"
            )
        freqs.append(math.sqrt(w2))
        masses.append(1.0 / w2)
    net = OscillatorNetwork(
        site_count=M,
        edges=tuple(pairs),
        frequencies=tuple(freqs),
        masses=tuple(masses),
        has_decoupled_site=with_decoupled_site,
    )
    ham = assemble(net, "rwa")
    # the masses are exact reciprocals of the frequencies squared, so T = V
    # up to rounding; pin the equality bitwise
    ham = QuadraticHamiltonian(V=ham.V, T=ham.V.copy(), model="rwa", network=net)
    validate(ham)
    return ham


def perturb_couplings(
    ham: QuadraticHamiltonian,
    relative_sigma: float,
    seed,
) -> tuple[QuadraticHamiltonian, int]:
    """Redraw every coupling as c + N(0, relative_sigma * c), clamped at 0.

    Requires a uniform-coupling source Hamiltonian.  Returns the perturbed
    Hamiltonian (diagonals rebuilt from the new weights) and the number of
    couplings clamped to zero.  Deterministic for a fixed seed.
    """
    if relative_sigma < 0:
        raise ValueError("relative_sigma must be >= 0")
    net = ham.network
    if net is None or not net.edges:
        raise ValueError("Hamiltonian has no couplings to perturb")
    weights = np.array([c for _, _, c in net.edges])
    if not np.allclose(weights, weights[0]):
        raise ValueError("perturb_couplings requires a uniform-coupling network")
    c0 = float(weights[0])
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    delta = rng.normal(0.0, relative_sigma * c0, size=len(weights))
    new = weights + delta
    clamped = int(np.sum(new < 0))
    new = np.clip(new, 0.0, None)
    edges = tuple((i, j, float(w)) for (i, j, _), w in zip(net.edges, new))
    out = assemble(replace(net, edges=edges), ham.model)
    validate(out)
    return replace(out, site_map=dict(ham.site_map)), clamped


def set_site(
    ham: QuadraticHamiltonian,
    site: int,
    frequency: float | None = None,
    mass: float | None = None,
) -> QuadraticHamiltonian:
    """Override one site's eigenfrequency and/or mass and reassemble.

    The frequency redefines the site potential term omega^2 q^2 / 2 (coupling
    contributions to the diagonal are untouched); the mass enters T as 1/m.
    The decoupled site 0 is fixed at omega = m = 1 and cannot be changed.
    """
    net = ham.network
    if net is None:
        raise ValueError("Hamiltonian carries no network")
    if site == 0:
        raise ValueError("the decoupled site is fixed at omega = m = 1")
    if not (1 <= site <= net.site_count):
        raise ValueError(f"site {site} out of range 1..{net.site_count}")
    if frequency is not None and frequency <= 0:
        raise ValueError("frequency must be > 0")
    if mass is not None and mass <= 0:
        raise ValueError("mass must be > 0")
    freqs = list(net.frequencies)
    masses = list(net.masses)
    if frequency is not None:
        freqs[site - 1] = float(frequency)
    if mass is not None:
        masses[site - 1] = float(mass)
    out = assemble(
        replace(net, frequencies=tuple(freqs), masses=tuple(masses)), ham.model
    )
    validate(out)
    return replace(out, site_map=dict(ham.site_map))


def set_junction_coupling(
    ham: QuadraticHamiltonian, site: int, coupling: float
) -> QuadraticHamiltonian:
    """Set every edge incident to a site to the given weight and reassemble."""
    net = ham.network
    if net is None:
        raise ValueError("Hamiltonian carries no network")
    if coupling < 0:
        raise ValueError("coupling must be >= 0")
    edges = tuple(
        (i, j, float(coupling)) if site in (i, j) else (i, j, c)
        for i, j, c in net.edges
    )
    out = assemble(replace(net, edges=edges), ham.model)
    validate(out)
    return replace(out, site_map=dict(ham.site_map))
