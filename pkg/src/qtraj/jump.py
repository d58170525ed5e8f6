"""The limiting pure-jump Markov process on the pointer basis.

A path holds in pointer state i for an Exp(-T_ii) time, then moves to j
with probability T_ij / (-T_ii).  States are 0-based indices into the
computational basis.  Absorbing states (zero rate row) are legal: the
path simply holds forever.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ModelValidationError
from .qnd import MarkovGenerator
from .superop import _as_complex_matrix

__all__ = [
    "JumpPath", "initial_distribution", "simulate_jump", "marginal",
    "state_at", "occupation_at",
]

_MU_CLIP = 1e-12   # diagonals of numerical density matrices can be -1e-16


@dataclass(frozen=True)
class JumpPath:
    """states[k] holds on [jump_times[k-1], jump_times[k]) with
    jump_times[-1] implicitly t_end; states has one entry per holding
    interval, so len(states) == len(jump_times) + 1."""

    jump_times: np.ndarray
    states: np.ndarray
    t_end: float

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        s = np.asarray(self.states, dtype=int)
        if s.size != t.size + 1:
            raise ModelValidationError("need exactly one state per holding interval")
        if t.size and (np.diff(t) <= 0).any():
            raise ModelValidationError("jump times must be strictly increasing")
        if t.size and (t[0] <= 0 or t[-1] > self.t_end):
            raise ModelValidationError("jump times must lie in (0, t_end]")
        if (s[1:] == s[:-1]).any():
            raise ModelValidationError("consecutive states must differ")
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "states", s)


def initial_distribution(rho0):
    """Pointer-basis law of a state: mu_i = (rho0)_{i,i}, clipped at zero
    and renormalized if clipping occurred."""
    rho0 = _as_complex_matrix(rho0, "state")
    mu = np.diagonal(rho0).real.copy()
    if mu.min() < -_MU_CLIP:
        raise ModelValidationError(
            f"diagonal entry {mu.min():.3e} is too negative for a state")
    clipped = mu < 0
    if clipped.any():
        mu[clipped] = 0.0
        mu /= mu.sum()
    total = mu.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-9:
        raise ModelValidationError(f"diagonal mass {total} is not 1")
    return mu / total


def _check_mu(mu, d):
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (d,):
        raise ModelValidationError(f"mu has shape {mu.shape}, expected ({d},)")
    if mu.min() < 0 or abs(mu.sum() - 1.0) > 1e-9:
        raise ModelValidationError("mu must be a probability vector")
    return mu / mu.sum()


def simulate_jump(T, mu, t_end, seed=0):
    """Gillespie sampling of the jump process with generator T.

    Exponential holding time with rate -T_ii, next state proportional to
    the off-diagonal rates; deterministic given the seed (Philox stream).
    """
    if not isinstance(T, MarkovGenerator):
        T = MarkovGenerator(dim=np.asarray(T).shape[0], rates=T)
    d = T.dim
    mu = _check_mu(mu, d)
    t_end = float(t_end)
    if t_end <= 0:
        raise ModelValidationError(f"t_end must be positive, got {t_end}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))

    state = int(np.searchsorted(np.cumsum(mu), rng.uniform()))
    state = min(state, d - 1)
    times, states = [], [state]
    t = 0.0
    while True:
        rate = -T.rates[state, state]
        if rate <= 0.0:
            break                      # absorbing: hold forever
        t += rng.exponential(1.0 / rate)
        if t > t_end:
            break
        row = T.rates[state].copy()
        row[state] = 0.0
        nxt = int(np.searchsorted(np.cumsum(row) / rate, rng.uniform()))
        nxt = min(nxt, d - 1)
        times.append(t)
        states.append(nxt)
        state = nxt
    return JumpPath(jump_times=np.asarray(times), states=np.asarray(states),
                    t_end=t_end)


def marginal(T, mu, t):
    """Law at time t: the row vector mu^T e^{tT}, renormalized within 1e-12."""
    if not isinstance(T, MarkovGenerator):
        T = MarkovGenerator(dim=np.asarray(T).shape[0], rates=T)
    mu = _check_mu(mu, T.dim)
    t = float(t)
    if t < 0:
        raise ModelValidationError(f"t must be >= 0, got {t}")
    p = mu @ scipy.linalg.expm(t * T.rates)
    p = np.clip(p.real, 0.0, None)
    s = p.sum()
    if abs(s - 1.0) > 1e-12 * max(1.0, abs(s)) and abs(s - 1.0) > 1e-9:
        raise ModelValidationError(f"marginal mass {s} strayed from 1")
    return p / s


def state_at(path, t):
    """Pointer index occupied at time t (cadlag convention)."""
    if t < 0 or t > path.t_end:
        raise ModelValidationError(f"t = {t} outside [0, {path.t_end}]")
    k = int(np.searchsorted(path.jump_times, t, side="right"))
    return int(path.states[k])


def occupation_at(paths, t, d):
    """Empirical distribution over pointer states at time t."""
    counts = np.zeros(d)
    for p in paths:
        counts[state_at(p, t)] += 1.0
    return counts / len(paths)
