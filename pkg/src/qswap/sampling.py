"""Random states on the Bell-measurement registry, for property checks."""

from __future__ import annotations

import numpy as np

from .fock import PHOTON_CAP, Ensemble, JointBasisState, PureState
from .optics import POLARIZATION_MODES
from .protocol import fock_basis

_BASIS = fock_basis(len(POLARIZATION_MODES), PHOTON_CAP)


def random_pure_state(rng: np.random.Generator, n_terms: int = 6, max_photons: int = PHOTON_CAP,
                      real: bool = False) -> PureState:
    """Unit-norm superposition of ``n_terms`` random basis states."""
    pool = [occ for occ in _BASIS if sum(occ) <= max_photons]
    amps: dict[JointBasisState, complex] = {}
    while len(amps) < n_terms:
        occ = pool[rng.integers(len(pool))]
        mem = tuple(int(x) for x in rng.integers(0, 3, size=2))
        c = rng.normal() + (0 if real else 1j * rng.normal())
        amps[JointBasisState(mem, occ)] = c
    return PureState(amps, POLARIZATION_MODES).normalized()


def random_ensemble(rng: np.random.Generator, n_branches: int = 3, n_terms: int = 6,
                    max_photons: int = PHOTON_CAP) -> Ensemble:
    weights = rng.dirichlet(np.ones(n_branches))
    return Ensemble(tuple((float(w), random_pure_state(rng, n_terms, max_photons)) for w in weights))


def random_unitary(rng: np.random.Generator, n: int = len(POLARIZATION_MODES)) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
