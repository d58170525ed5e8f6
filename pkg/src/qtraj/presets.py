"""Packaged example models.

`three_level_model` is the collapse demo used throughout the test suite
and by the `fig1` CLI recipe: no Hamiltonians, an unread weak-coupling
environment at level 0 (all nine matrix units as Kraus operators,
eta = 0), nothing at level 1, and a single perfectly read measurement
channel diag(1, 2, 3) at level 2.  Its jump generator has every
off-diagonal rate equal to 1, and its diagonal process is autonomous
(see `qtraj.sde.simulate_three_level_diagonal`).

`rabi_model` is the smallest model with an intermediate-scale coherent
drive: a level-1 Hamiltonian couples the two pointer states, and the
level-2 measurement diag(0, 1) produces jump rates T_12 = T_21 = 1.
"""

from __future__ import annotations

import numpy as np

from .qnd import ThreeScaleModel
from .superop import GkslSpec, basis_matrix

__all__ = ["three_level_model", "rabi_model"]


def three_level_model(gamma):
    d = 3
    kraus0 = tuple(basis_matrix(i, j, d) for i in range(d) for j in range(d))
    level0 = GkslSpec(dim=d, hamiltonian=np.zeros((d, d)),
                      kraus=kraus0, efficiencies=(0.0,) * 9)
    level1 = GkslSpec.empty(d)
    level2 = GkslSpec(dim=d, hamiltonian=np.zeros((d, d)),
                      kraus=(np.diag([1.0, 2.0, 3.0]).astype(complex),),
                      efficiencies=(1.0,))
    return ThreeScaleModel(level0=level0, level1=level1, level2=level2, gamma=gamma)


def rabi_model(gamma):
    d = 2
    level0 = GkslSpec.empty(d)
    level1 = GkslSpec(dim=d, hamiltonian=np.array([[0.0, 0.5], [0.5, 0.0]]))
    level2 = GkslSpec(dim=d, hamiltonian=np.zeros((d, d)),
                      kraus=(np.diag([0.0, 1.0]).astype(complex),),
                      efficiencies=(1.0,))
    return ThreeScaleModel(level0=level0, level1=level1, level2=level2, gamma=gamma)
