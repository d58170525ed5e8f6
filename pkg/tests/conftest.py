"""Shared builders for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qtraj import GkslSpec, ThreeScaleModel

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def random_hermitian(rng, d, scale=1.0):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (A + A.conj().T)


def random_matrix(rng, d, scale=1.0):
    return scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))


def random_gksl(rng, d, n_kraus=2, scale=1.0, diagonal=False, efficiencies=None):
    kraus = []
    for _ in range(n_kraus):
        if diagonal:
            kraus.append(np.diag(rng.standard_normal(d)
                                 + 1j * rng.standard_normal(d)) * scale)
        else:
            kraus.append(random_matrix(rng, d, scale))
    if efficiencies is None:
        efficiencies = tuple(rng.uniform(0.0, 1.0, size=n_kraus))
    H = np.diag(rng.standard_normal(d)) if diagonal else random_hermitian(rng, d, scale)
    return GkslSpec(dim=d, hamiltonian=H, kraus=tuple(kraus),
                    efficiencies=tuple(efficiencies))


def random_qnd_model(rng, d, gamma=10.0, ell0=2, ell1=1, ell2=2, with_h1=True):
    """Random model satisfying the structural assumptions: dominant level
    diagonal with one perfectly read channel of well-separated real
    diagonals, diagonal intermediate Kraus, arbitrary H1 and level 0."""
    # guaranteed identifiable read channel: distinct real diagonals
    base = np.arange(d) + rng.uniform(0.3, 1.0, size=d).cumsum()
    kraus2 = [np.diag(base.astype(complex))]
    eta2 = [1.0]
    for _ in range(ell2 - 1):
        kraus2.append(np.diag(rng.standard_normal(d) + 1j * rng.standard_normal(d)))
        eta2.append(float(rng.uniform(0.0, 1.0)))
    level2 = GkslSpec(dim=d, hamiltonian=np.diag(rng.standard_normal(d)),
                      kraus=tuple(kraus2), efficiencies=tuple(eta2))
    kraus1 = tuple(np.diag(rng.standard_normal(d) + 1j * rng.standard_normal(d))
                   for _ in range(ell1))
    H1 = random_hermitian(rng, d) if with_h1 else np.zeros((d, d))
    level1 = GkslSpec(dim=d, hamiltonian=H1, kraus=kraus1,
                      efficiencies=tuple(rng.uniform(0, 1, size=len(kraus1))))
    level0 = random_gksl(rng, d, n_kraus=ell0, scale=0.7)
    return ThreeScaleModel(level0=level0, level1=level1, level2=level2, gamma=gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
