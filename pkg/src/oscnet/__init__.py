"""Entanglement dynamics in networks of coupled harmonic oscillators.

Gaussian covariance-matrix simulation of oscillator networks: network and
Hamiltonian builders, symplectic propagation, ring normal-mode and
infinite-chain Bessel closed forms, logarithmic negativity, and the study
runners behind the ``oscnet`` command line tool.
"""

from . import cli, dynamics, gaussian, network, studies

__all__ = ["cli", "dynamics", "gaussian", "network", "studies"]
__version__ = "0.1.0"
