"""Convergence diagnostics for sampled paths.

Paths are piecewise-constant (cadlag) between grid points and constant
after the last one; all integrals below are exact under that
interpretation, which removes quadrature ambiguity.  Norms are
Hilbert-Schmidt throughout.

The pseudo-path distance between two paths,

    d(w, w') = int_0^inf min(1, ||w(t) - w'(t)||) e^{-t} dt,

is truncated at t_max (default 30); the truncation error is at most
e^{-t_max} and is reported alongside the value rather than silently
absorbed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ModelValidationError
from .sde import drift

__all__ = [
    "PathFunction", "MzDistance",
    "mz_distance", "smooth", "time_outside_balls", "offdiag_norm",
    "conditional_variation", "empirical_marginal", "pointer_distances",
]

DEFAULT_T_MAX = 30.0


@dataclass(frozen=True)
class PathFunction:
    """Sampled path: values[k] on [times[k], times[k+1]), cadlag."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.ndim != 1 or t.size == 0:
            raise ModelValidationError("times must be a non-empty 1-d grid")
        if (np.diff(t) <= 0).any():
            raise ModelValidationError("times must be strictly increasing")
        if v.shape[0] != t.size:
            raise ModelValidationError(
                f"{v.shape[0]} values for {t.size} grid points")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_trajectory(cls, traj):
        return cls(times=traj.times, values=traj.states)

    @property
    def horizon(self):
        return float(self.times[-1])

    def value_at(self, t):
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(k, 0)]


class MzDistance(NamedTuple):
    value: float
    truncation_error: float


def _norm_per_sample(values):
    v = np.asarray(values)
    flat = v.reshape(v.shape[0], -1)
    return np.sqrt((np.abs(flat) ** 2).sum(axis=1))


def mz_distance(w1, w2, t_max=DEFAULT_T_MAX):
    """Exponentially weighted pseudo-path distance, exact on the merged grid.

    Returns MzDistance(value, truncation_error) with
    truncation_error = e^{-t_max}.
    """
    if t_max <= 0:
        raise ModelValidationError(f"t_max must be positive, got {t_max}")
    a1 = np.asarray(w1.values)
    a2 = np.asarray(w2.values)
    if a1.shape[1:] != a2.shape[1:]:
        raise ModelValidationError(
            f"paths have incompatible value shapes {a1.shape[1:]} vs {a2.shape[1:]}")
    grid = np.union1d(w1.times, w2.times)
    grid = grid[grid < t_max]
    if grid.size == 0 or grid[0] > 0.0:
        grid = np.concatenate(([min(w1.times[0], w2.times[0], 0.0)], grid))
    edges = np.concatenate((grid, [t_max]))
    i1 = np.clip(np.searchsorted(w1.times, grid, side="right") - 1, 0, None)
    i2 = np.clip(np.searchsorted(w2.times, grid, side="right") - 1, 0, None)
    diff = a1[i1].reshape(grid.size, -1) - a2[i2].reshape(grid.size, -1)
    dist = np.minimum(1.0, np.sqrt((np.abs(diff) ** 2).sum(axis=1)))
    weights = np.exp(-edges[:-1]) - np.exp(-edges[1:])
    return MzDistance(value=float(dist @ weights),
                      truncation_error=float(np.exp(-t_max)))


def smooth(path, window):
    """Right-aligned moving average over `window` consecutive samples;
    the output grid is the input grid truncated to full windows."""
    window = int(window)
    if window < 1:
        raise ModelValidationError(f"window must be >= 1, got {window}")
    n = path.times.size
    if window > n:
        raise ModelValidationError(f"window {window} exceeds {n} samples")
    if window == 1:
        return path
    v = np.asarray(path.values, dtype=complex if np.iscomplexobj(path.values) else float)
    csum = np.cumsum(v, axis=0)
    out = csum[window - 1:].copy()
    out[1:] -= csum[:-window]
    out /= window
    return PathFunction(times=path.times[window - 1:], values=out)


def pointer_distances(states):
    """Hilbert-Schmidt distances ||rho - E_ii|| for a batch of states.

    ||rho - E_ii||^2 = ||rho||^2 - 2 Re rho_ii + 1.  Input (..., d, d),
    output (..., d).
    """
    states = np.asarray(states)
    d = states.shape[-1]
    nrm2 = (np.abs(states) ** 2).sum(axis=(-2, -1))
    diag = np.einsum('...ii->...i', states).real
    return np.sqrt(np.maximum(nrm2[..., None] - 2.0 * diag + 1.0, 0.0))


def time_outside_balls(path, epsilon):
    """Lebesgue time with min_i ||rho_t - E_ii|| >= epsilon, up to the horizon."""
    if epsilon <= 0:
        raise ModelValidationError(f"epsilon must be positive, got {epsilon}")
    dmin = pointer_distances(path.values).min(axis=-1)
    dt = np.diff(path.times)
    return float(np.sum(dt * (dmin[:-1] >= epsilon)))


def offdiag_norm(path):
    """Path of Hilbert-Schmidt norms of the off-diagonal part."""
    v = np.asarray(path.values)
    d = v.shape[-1]
    off = v.copy()
    idx = np.arange(d)
    off[..., idx, idx] = 0.0
    return PathFunction(times=path.times,
                        values=np.sqrt((np.abs(off) ** 2).sum(axis=(-2, -1))))


def conditional_variation(model, ensemble, tau, gamma=None):
    """Monte-Carlo estimate of int_0^tau E|| diag(L_gamma(rho_t)) || dt.

    Prefers the integrator's per-step accumulator when present (exact at
    step resolution); otherwise quadratures the saved grid, which must
    then cover [0, tau].  Returns (estimate, standard_error).
    """
    if tau < 0:
        raise ModelValidationError(f"tau must be >= 0, got {tau}")
    if ensemble.pi_l_norm_integral is not None and tau >= ensemble.times[-1] - 1e-12:
        per = ensemble.pi_l_norm_integral
        return float(per.mean()), float(per.std(ddof=1) / np.sqrt(per.size)
                                        if per.size > 1 else 0.0)
    if ensemble.states is None:
        raise ModelValidationError(
            "need keep_states=True (or the per-step accumulator) to estimate "
            "the conditional variation")
    if ensemble.times[-1] < tau - 1e-12:
        raise ModelValidationError(
            f"ensemble horizon {ensemble.times[-1]} is shorter than tau={tau}")
    times = ensemble.times
    keep = times <= tau + 1e-12
    t_kept = times[keep]
    per = np.zeros(ensemble.n_traj)
    for i in range(ensemble.n_traj):
        norms = np.array([
            np.linalg.norm(np.diagonal(drift(model, s, gamma=gamma)))
            for s in ensemble.states[i][keep]])
        edges = np.concatenate((t_kept, [tau]))
        per[i] = float(np.sum(np.diff(edges) * norms))
    se = per.std(ddof=1) / np.sqrt(per.size) if per.size > 1 else 0.0
    return float(per.mean()), float(se)


def empirical_marginal(ensemble, t, assignment_radius):
    """Fraction of trajectories within `assignment_radius` of each pointer
    state at time t, plus the unassigned remainder.

    Uses the saved grid cadlag value at t.  Returns (probability vector
    over pointer states, unassigned mass); the vector sums to
    1 - unassigned.
    """
    if ensemble.states is None:
        raise ModelValidationError("need keep_states=True for empirical marginals")
    if t < -1e-12 or t > ensemble.times[-1] + 1e-12:
        raise ModelValidationError(
            f"t = {t} outside the saved horizon [0, {ensemble.times[-1]}]")
    if assignment_radius <= 0:
        raise ModelValidationError("assignment_radius must be positive")
    k = max(int(np.searchsorted(ensemble.times, t + 1e-15, side="right")) - 1, 0)
    states = ensemble.states[:, k]
    dists = pointer_distances(states)
    nearest = dists.argmin(axis=1)
    assigned = dists.min(axis=1) < assignment_radius
    d = states.shape[-1]
    counts = np.bincount(nearest[assigned], minlength=d).astype(float)
    return counts / ensemble.n_traj, float(1.0 - assigned.mean())
