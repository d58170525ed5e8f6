"""Euler-Maruyama integration of the three-scale stochastic master equation.

The state SDE, in Ito form, is

    d rho = L_gamma(rho) dt + sum_{alpha=0,1,2} gamma^{alpha/2}
            sum_k sigma_k^(alpha)(rho) dW^{alpha,k}

with independent standard Wiener processes per channel and volatilities

    sigma_k^(alpha)(rho) = sqrt(eta_alpha(k)) ( Lk rho + rho Lk^*
                            - tr[(Lk^* + Lk) rho] rho ).

Scheme
------
Explicit Euler-Maruyama with a post-step projection: Hermitize, clip
eigenvalues below -TOL_PSD to zero when the smallest eigenvalue falls
below -TOL_PSD, renormalize the trace to one.  Drift and volatilities are
traceless, so the projection is an O(h) correction; the exact-mean
identity E[rho_t] = e^{t L_gamma} rho_0 is the integrator's strongest
test.  The default step size is capped at 1e-2 / gamma^2: drift stiffness
grows like gamma^2 and the per-step noise variance like gamma^2 h, so the
cap keeps both increments small.

Randomness
----------
Counter-based and reproducible.  Every (trajectory, channel) pair owns an
independent Philox stream keyed by
``SeedSequence(entropy=trajectory_seed, spawn_key=(channel_index,))``
where channels are numbered consecutively over level 0, then level 1,
then level 2 Kraus operators.  Trajectory i of an ensemble uses seed
``base_seed + i``.  Gaussians come from ``Generator.standard_normal``
(numpy's ziggurat); draws are blocked for speed, which does not change
the per-stream sequence.  Unread channels (eta = 0) keep their stream
slot but are never drawn from and contribute no volatility, so results
are unchanged by adding or removing unread channels elsewhere in the
layout.  Output is bit-identical for any worker count: trajectories are
partitioned into fixed-size units and unit partials are folded in index
order.
"""

from __future__ import annotations

import concurrent.futures
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, ModelValidationError
from .qnd import ThreeScaleModel
from .superop import TOL_PSD, _as_complex_matrix, _gksl_matrix, check_density_matrix, gksl_apply

__all__ = [
    "DEFAULT_STEP_CAP", "UNIT_SIZE",
    "NoiseIncrement", "Trajectory", "ObservableStats", "EnsembleResult",
    "volatility", "drift", "effective_step_size", "step",
    "simulate_trajectory", "simulate_ensemble", "simulate_three_level_diagonal",
    "channel_generators",
]

DEFAULT_STEP_CAP = 1e-2   # effective h = min(h, DEFAULT_STEP_CAP / gamma^2)
UNIT_SIZE = 25            # trajectories per work unit (fixed so that results
                          # do not depend on the worker count)
_BLOCK = 4096             # steps per noise block
_PSD_SLACK = 0.999        # clip when lambda_min < -_PSD_SLACK * TOL_PSD


def effective_step_size(gamma, h=None):
    """min(h, 1e-2 / gamma^2); h=None means the cap itself."""
    cap = DEFAULT_STEP_CAP / float(gamma) ** 2
    if h is None:
        return cap
    h = float(h)
    if not (np.isfinite(h) and h > 0):
        raise ModelValidationError(f"step size must be positive, got {h}")
    return min(h, cap)


# ---------------------------------------------------------------------------
# public pointwise operations
# ---------------------------------------------------------------------------

def volatility(spec, rho):
    """Measurement-noise volatilities sigma_k(rho) for every channel of a
    GKSL specification (unread channels give the zero matrix)."""
    rho = _as_complex_matrix(rho, "state")
    if rho.shape != (spec.dim, spec.dim):
        raise ModelValidationError(
            f"state has shape {rho.shape}, expected ({spec.dim}, {spec.dim})")
    out = []
    for K, eta in zip(spec.kraus, spec.efficiencies):
        if eta == 0.0:
            out.append(np.zeros_like(rho))
            continue
        tr = np.trace((K + K.conj().T) @ rho)
        out.append(np.sqrt(eta) * (K @ rho + rho @ K.conj().T - tr * rho))
    return out


def drift(model, rho, gamma=None):
    """(L0 + gamma L1 + gamma^2 L2)(rho), evaluated by the direct GKSL sum."""
    g = model.gamma if gamma is None else float(gamma)
    out = gksl_apply(model.level0, rho)
    out += g * gksl_apply(model.level1, rho)
    out += g * g * gksl_apply(model.level2, rho)
    return out


def channel_generators(trajectory_seed, n_channels):
    """One Philox generator per channel slot, in the documented layout."""
    return [
        np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=int(trajectory_seed), spawn_key=(c,))))
        for c in range(n_channels)
    ]


@dataclass(frozen=True)
class NoiseIncrement:
    """Brownian increments for one step, one entry per channel and level;
    each entry is N(0, h) distributed for step size h."""

    dw0: np.ndarray
    dw1: np.ndarray
    dw2: np.ndarray

    def for_model(self, model):
        arrays = []
        for name, arr, spec in (("dw0", self.dw0, model.level0),
                                ("dw1", self.dw1, model.level1),
                                ("dw2", self.dw2, model.level2)):
            a = np.asarray(arr, dtype=float).reshape(-1)
            if a.size != spec.n_channels:
                raise ModelValidationError(
                    f"{name} has {a.size} entries for {spec.n_channels} channels")
            arrays.append(a)
        return np.concatenate(arrays) if arrays else np.zeros(0)


# ---------------------------------------------------------------------------
# compiled kernel
# ---------------------------------------------------------------------------

class _Compiled:
    """Model data baked into flat arrays for the batched loop.

    Internally the loop uses row-major vectorization (vec by rows) because
    it matches C-contiguous ``reshape``; the public superoperator
    convention stays column-stacking.
    """

    def __init__(self, model, gamma=None):
        g = model.gamma if gamma is None else float(gamma)
        if not (np.isfinite(g) and g > 0):
            raise ModelValidationError(f"gamma must be positive and finite, got {g}")
        d = model.dim
        self.dim = d
        self.gamma = g
        weights = (1.0, g, g * g)
        gen = np.zeros((d * d, d * d), dtype=complex)
        for w, spec in zip(weights, model.levels):
            if spec.kraus or np.any(spec.hamiltonian):
                gen = gen + w * _gksl_matrix(spec, row_major=True)
        self.generator_row = gen

        I = np.eye(d)
        self.stream_index = []   # global channel slot per read channel
        self.prefactor = []      # gamma^{alpha/2} sqrt(eta)
        sig_blocks, tr_rows = [], []
        slot = 0
        for alpha, spec in enumerate(model.levels):
            for K, eta in zip(spec.kraus, spec.efficiencies):
                if eta > 0.0:
                    self.stream_index.append(slot)
                    self.prefactor.append(g ** (alpha / 2.0) * np.sqrt(eta))
                    # row-major: vec(K rho) = (K kron I) v, vec(rho K^*) = (I kron conj(K)) v
                    sig_blocks.append(np.kron(K, I) + np.kron(I, K.conj()))
                    tr_rows.append((K + K.conj().T).T.reshape(-1))
                slot += 1
        self.n_slots = slot
        self.n_read = len(self.stream_index)
        self.prefactor = np.asarray(self.prefactor)
        self.sig_T = (np.ascontiguousarray(np.hstack([S.T for S in sig_blocks]))
                      if self.n_read else np.zeros((d * d, 0), dtype=complex))
        self.tr_T = (np.ascontiguousarray(np.stack(tr_rows, axis=1))
                     if self.n_read else np.zeros((d * d, 0), dtype=complex))

        self.diag_cols = np.arange(d) * (d + 1)
        self.offdiag_cols = np.array(
            [c for c in range(d * d) if c not in set(self.diag_cols)], dtype=int)
        self.perm_T = np.arange(d * d).reshape(d, d).T.reshape(-1)

    def combined_matrix(self, h):
        """[h * drift | sigma linear parts], transposed for right-multiplying."""
        return np.ascontiguousarray(
            np.hstack([(h * self.generator_row).T, self.sig_T]))


def _lambda_min(v, d, diag_cols):
    """Smallest eigenvalue per row of a batch of Hermitized flat matrices.

    Closed forms for d <= 3 (the hot sizes), exact eigvalsh otherwise.
    """
    if d == 1:
        return v[:, 0].real
    if d == 2:
        t00 = v[:, 0].real
        t11 = v[:, 3].real
        b = v[:, 1]
        half = 0.5 * (t00 - t11)
        return 0.5 * (t00 + t11) - np.sqrt(half * half + b.real ** 2 + b.imag ** 2)
    if d == 3:
        t00 = v[:, 0].real
        t11 = v[:, 4].real
        t22 = v[:, 8].real
        b01 = v[:, 1]
        c02 = v[:, 2]
        g12 = v[:, 5]
        ab2 = b01.real ** 2 + b01.imag ** 2
        ac2 = c02.real ** 2 + c02.imag ** 2
        fg2 = g12.real ** 2 + g12.imag ** 2
        q = (t00 + t11 + t22) / 3.0
        a = t00 - q
        f = t11 - q
        l = t22 - q
        p2 = (a * a + f * f + l * l + 2.0 * (ab2 + ac2 + fg2)) / 6.0
        p = np.sqrt(p2)
        det = (a * (f * l - fg2)
               - (b01 * (b01.conj() * l - g12 * c02.conj())).real
               + (c02 * (b01.conj() * g12.conj() - f * c02.conj())).real)
        denom = 2.0 * p2 * p
        r = np.divide(det, denom, out=np.zeros_like(det), where=denom > 0)
        np.clip(r, -1.0, 1.0, out=r)
        return q + 2.0 * p * np.cos(np.arccos(r) / 3.0 + 2.0 * np.pi / 3.0)
    return np.linalg.eigvalsh(v.reshape(-1, d, d)).min(axis=1)


def _project_batch(new, d, diag_cols, offdiag_cols):
    """In-place positivity clip (when needed) and trace renormalization.

    ``new`` must already be Hermitized, so diagonal entries are exactly
    real.  States whose smallest eigenvalue is below -TOL_PSD get their
    offending eigenvalues clipped to zero; exactly diagonal states take a
    cheap diagonal-clip shortcut (their eigenvalues are the diagonal).
    """
    lam = _lambda_min(new, d, diag_cols)
    bad = lam < -_PSD_SLACK * TOL_PSD
    if bad.any():
        idx = np.nonzero(bad)[0]
        sub = new[idx]
        if offdiag_cols.size:
            offmax = np.abs(sub[:, offdiag_cols]).max(axis=1)
        else:
            offmax = np.zeros(idx.size)
        diag_rows = idx[offmax == 0.0]
        eig_rows = idx[offmax > 0.0]
        if diag_rows.size:
            sel = np.ix_(diag_rows, diag_cols)
            dv = new[sel].real
            dv[dv < -TOL_PSD] = 0.0
            new[sel] = dv
        if eig_rows.size:
            mats = new[eig_rows].reshape(-1, d, d)
            w, V = np.linalg.eigh(mats)
            w[w < -TOL_PSD] = 0.0
            new[eig_rows] = ((V * w[:, None, :])
                             @ V.conj().transpose(0, 2, 1)).reshape(-1, d * d)
    tr = new[:, diag_cols].real.sum(axis=1)
    new /= tr[:, None]
    return new


def _step_batch(v, comp, W, coef, d2):
    """One Euler-Maruyama step plus projection for a batch of flat states.

    ``coef`` holds gamma^{alpha/2} sqrt(eta(k)) dW per read channel,
    shape (n, n_read).  Returns (projected new state, drift part), where
    the drift part is h * L_gamma(rho) flattened (used by accumulators).
    """
    d = comp.dim
    prod = v @ W
    dv = prod[:, :d2]
    new = v + dv
    if comp.n_read:
        trs = v @ comp.tr_T
        if comp.n_read == 1:
            cc = coef[:, 0]
            new += cc[:, None] * prod[:, d2:]
            new -= (cc * trs[:, 0].real)[:, None] * v
        else:
            sig = prod[:, d2:].reshape(v.shape[0], comp.n_read, d2)
            new += np.einsum('nc,ncd->nd', coef, sig)
            new -= (coef * trs.real).sum(axis=1)[:, None] * v
    # hermitize; makes diagonal entries exactly real
    new += np.conj(new[:, comp.perm_T])
    new *= 0.5
    _project_batch(new, d, comp.diag_cols, comp.offdiag_cols)
    return new, dv


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """One sampled path: state at times[k], including t = 0."""

    times: np.ndarray
    states: np.ndarray          # (T, d, d) complex
    seed: int
    h: float

    @property
    def dim(self):
        return self.states.shape[-1]


@dataclass(frozen=True)
class ObservableStats:
    per_traj: np.ndarray        # (n_traj, T)
    mean: np.ndarray            # (T,)
    stderr: np.ndarray          # (T,)


@dataclass(frozen=True)
class EnsembleResult:
    """Ensemble statistics on the saved grid.

    ``stderr_real``/``stderr_imag`` are componentwise standard errors of
    the mean for the real and imaginary parts.  ``time_outside`` maps each
    requested epsilon to the per-trajectory Lebesgue time spent at
    Hilbert-Schmidt distance >= epsilon from every pointer state,
    accumulated at full step resolution.  ``pi_l_norm_integral`` likewise
    accumulates int ||diag(L_gamma(rho_t))|| dt per trajectory when
    requested.  ``states`` is (n_traj, T, d, d) when kept.
    """

    times: np.ndarray
    n_traj: int
    mean: np.ndarray
    stderr_real: np.ndarray
    stderr_imag: np.ndarray
    h: float
    gamma: float
    seeds: tuple
    observables: dict = field(default_factory=dict)
    time_outside: dict = field(default_factory=dict)
    pi_l_norm_integral: np.ndarray | None = None
    states: np.ndarray | None = None


# ---------------------------------------------------------------------------
# the batched integrator
# ---------------------------------------------------------------------------

def _run_unit(payload):
    """Simulate one contiguous unit of trajectories; return partials."""
    (model, gamma, rho0, seeds, n_steps, h, save_idx, opts) = payload
    comp = _Compiled(model, gamma)
    d = comp.dim
    d2 = d * d
    n = len(seeds)
    W = comp.combined_matrix(h)
    sqrt_h = np.sqrt(h)
    pref = comp.prefactor * sqrt_h

    gens = [channel_generators(s, comp.n_slots) for s in seeds]
    read = comp.stream_index

    v = np.repeat(rho0.reshape(1, d2), n, axis=0)
    save_set = {int(m): k for k, m in enumerate(save_idx)}
    T = len(save_idx)

    keep = opts.get("keep_states", False)
    eps = tuple(opts.get("outside_epsilons", ()))
    track_pi = opts.get("track_pi_l_norm", False)
    observables = opts.get("observables") or {}

    sum_states = np.zeros((T, d2), dtype=complex)
    sumsq_re = np.zeros((T, d2))
    sumsq_im = np.zeros((T, d2))
    obs_vals = {name: np.empty((n, T)) for name in observables}
    states_unit = np.empty((n, T, d, d), dtype=complex) if keep else None
    t_outside = np.zeros((n, len(eps)))
    eps2 = np.array([e * e for e in eps])
    pi_int = np.zeros(n) if track_pi else None
    dcols = comp.diag_cols

    def record(k):
        sum_states[k] += v.sum(axis=0)
        sumsq_re[k] += (v.real ** 2).sum(axis=0)
        sumsq_im[k] += (v.imag ** 2).sum(axis=0)
        if keep:
            states_unit[:, k] = v.reshape(n, d, d)
        if observables:
            mats = v.reshape(n, d, d)
            for name, fn in observables.items():
                obs_vals[name][:, k] = np.asarray(fn(mats), dtype=float)

    m = 0
    while m <= n_steps:
        if m == n_steps:
            if m in save_set:
                record(save_set[m])
            break
        b = min(_BLOCK, n_steps - m)
        noise = None
        if comp.n_read:
            noise = np.empty((b, n, comp.n_read))
            for i in range(n):
                gi = gens[i]
                for c, slot in enumerate(read):
                    noise[:, i, c] = gi[slot].standard_normal(b)
            noise *= pref
        v_block_start = v.copy()
        for j in range(b):
            if m in save_set:
                record(save_set[m])
            if eps2.size:
                nrm2 = np.einsum('ni,ni->n', v, v.conj()).real
                mx = v[:, dcols].real.max(axis=1)
                d2min = (nrm2 - 2.0 * mx + 1.0)[:, None]
                t_outside += h * (d2min >= eps2[None, :])
            coef = noise[j] if comp.n_read else None
            v, dv = _step_batch(v, comp, W, coef, d2)
            if track_pi:
                dd = dv[:, dcols]
                pi_int += np.sqrt((dd.real ** 2 + dd.imag ** 2).sum(axis=1))
            m += 1
        if not np.isfinite(v.view(float)).all():
            # replay the block one step at a time to locate the failure
            vr = v_block_start
            for j in range(b):
                coef = noise[j] if comp.n_read else None
                vr, _ = _step_batch(vr, comp, W, coef, d2)
                if not np.isfinite(vr.view(float)).all():
                    raise BlowUpError(m - b + j + 1, h)
            raise BlowUpError(m, h)

    return {
        "sum_states": sum_states,
        "sumsq_re": sumsq_re,
        "sumsq_im": sumsq_im,
        "obs": obs_vals,
        "states": states_unit,
        "t_outside": t_outside,
        "pi_int": pi_int,
    }


def _combine_units(partials, model_dim, save_times, seeds, h, gamma, eps, opts):
    d = model_dim
    d2 = d * d
    T = len(save_times)
    n = len(seeds)
    sum_states = np.zeros((T, d2), dtype=complex)
    sumsq_re = np.zeros((T, d2))
    sumsq_im = np.zeros((T, d2))
    for part in partials:                       # fixed unit order
        sum_states += part["sum_states"]
        sumsq_re += part["sumsq_re"]
        sumsq_im += part["sumsq_im"]
    mean = sum_states / n
    if n > 1:
        var_re = np.maximum(sumsq_re / n - mean.real ** 2, 0.0) * (n / (n - 1))
        var_im = np.maximum(sumsq_im / n - mean.imag ** 2, 0.0) * (n / (n - 1))
        se_re = np.sqrt(var_re / n)
        se_im = np.sqrt(var_im / n)
    else:
        se_re = np.zeros((T, d2))
        se_im = np.zeros((T, d2))

    observables = {}
    for name in (opts.get("observables") or {}):
        per = np.concatenate([p["obs"][name] for p in partials], axis=0)
        omean = per.mean(axis=0)
        ose = per.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(T)
        observables[name] = ObservableStats(per_traj=per, mean=omean, stderr=ose)

    time_outside = {}
    if eps:
        allout = np.concatenate([p["t_outside"] for p in partials], axis=0)
        for k, e in enumerate(eps):
            time_outside[float(e)] = allout[:, k]

    pi_int = None
    if opts.get("track_pi_l_norm"):
        pi_int = np.concatenate([p["pi_int"] for p in partials])

    states = None
    if opts.get("keep_states"):
        states = np.concatenate([p["states"] for p in partials], axis=0)

    return EnsembleResult(
        times=save_times,
        n_traj=n,
        mean=mean.reshape(T, d, d),
        stderr_real=se_re.reshape(T, d, d),
        stderr_imag=se_im.reshape(T, d, d),
        h=h,
        gamma=gamma,
        seeds=tuple(seeds),
        observables=observables,
        time_outside=time_outside,
        pi_l_norm_integral=pi_int,
        states=states,
    )


def _save_indices(n_steps, stride):
    idx = list(range(0, n_steps + 1, int(stride)))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return np.asarray(idx, dtype=int)


def simulate_ensemble(model, rho0, n_traj, t_end, h=None, base_seed=0,
                      observables=None, save_stride=1, outside_epsilons=(),
                      track_pi_l_norm=False, keep_states=False, workers=1,
                      gamma=None):
    """Monte-Carlo ensemble of N independent trajectories.

    Returns per-time mean state with componentwise standard errors, any
    requested scalar observables (callables mapping a (n, d, d) state
    batch to (n,) floats, evaluated on the saved grid), and the per-step
    accumulators described on EnsembleResult.  Trajectory i uses seed
    ``base_seed + i``; the result is bit-identical for any ``workers``.
    """
    if n_traj < 1:
        raise ModelValidationError(f"n_traj must be >= 1, got {n_traj}")
    if t_end <= 0:
        raise ModelValidationError(f"t_end must be positive, got {t_end}")
    if save_stride < 1:
        raise ModelValidationError(f"save_stride must be >= 1, got {save_stride}")
    g = model.gamma if gamma is None else float(gamma)
    rho0 = check_density_matrix(rho0)
    if rho0.shape[0] != model.dim:
        raise ModelValidationError("initial state dimension does not match the model")
    h_eff = effective_step_size(g, h)
    n_steps = int(np.ceil(float(t_end) / h_eff))
    save_idx = _save_indices(n_steps, save_stride)
    save_times = save_idx * h_eff
    seeds = [int(base_seed) + i for i in range(int(n_traj))]
    opts = {
        "observables": observables,
        "outside_epsilons": tuple(outside_epsilons),
        "track_pi_l_norm": bool(track_pi_l_norm),
        "keep_states": bool(keep_states),
    }
    units = [seeds[a:a + UNIT_SIZE] for a in range(0, len(seeds), UNIT_SIZE)]
    payloads = [(model, g, rho0.astype(complex), tuple(u), n_steps, h_eff,
                 save_idx, opts) for u in units]

    if workers and workers > 1 and len(payloads) > 1:
        try:
            ctx = multiprocessing.get_context("fork")
            with concurrent.futures.ProcessPoolExecutor(
                    max_workers=int(workers), mp_context=ctx) as pool:
                partials = list(pool.map(_run_unit, payloads))
        except (OSError, ValueError):
            partials = [_run_unit(p) for p in payloads]
    else:
        partials = [_run_unit(p) for p in payloads]

    return _combine_units(partials, model.dim, save_times, seeds, h_eff, g,
                          tuple(outside_epsilons), opts)


def simulate_trajectory(model, rho0, t_end, h=None, seed=0, save_stride=1,
                        gamma=None):
    """One trajectory, saving every save_stride-th state (plus the last)."""
    res = simulate_ensemble(model, rho0, 1, t_end, h=h, base_seed=seed,
                            save_stride=save_stride, keep_states=True,
                            gamma=gamma)
    return Trajectory(times=res.times, states=res.states[0], seed=int(seed),
                      h=res.h)


def step(model, rho, h, dw, gamma=None):
    """One explicit Euler-Maruyama step with post-step projection.

    ``dw`` is a NoiseIncrement whose entries are the Brownian increments
    (variance h) for every channel; unread channels are ignored.  The
    arithmetic is exactly the integrator's, so iterating `step` with the
    stream increments reproduces `simulate_trajectory`.
    """
    if h <= 0 or not np.isfinite(h):
        raise ModelValidationError(f"step size must be positive and finite, got {h}")
    comp = _Compiled(model, gamma)
    d = comp.dim
    rho = _as_complex_matrix(rho, "state")
    if rho.shape != (d, d):
        raise ModelValidationError(f"state has shape {rho.shape}, expected ({d}, {d})")
    all_dw = dw.for_model(model)
    coef = None
    if comp.n_read:
        coef = (comp.prefactor * all_dw[comp.stream_index]).reshape(1, -1)
    v = rho.reshape(1, d * d).astype(complex)
    W = comp.combined_matrix(float(h))
    new, _ = _step_batch(v, comp, W, coef, d * d)
    if not np.isfinite(new.view(float)).all():
        raise BlowUpError(0, float(h))
    return new.reshape(d, d)


# ---------------------------------------------------------------------------
# reduced three-level diagonal demo
# ---------------------------------------------------------------------------

_REDUCED_L = np.array([1.0, 2.0, 3.0])
_REDUCED_R = np.ones((3, 3)) - 3.0 * np.eye(3)


def simulate_three_level_diagonal(gamma, n_steps, h=None, seed=0, x0=None,
                                  n_traj=1, save_stride=1):
    """Autonomous diagonal SDE of the packaged three-level collapse demo:

        dX = R X dt + 2 gamma [ L X - <L X, 1> X ] dW,
        L = diag(1, 2, 3),  R_ij = 1 - 3 delta_ij,

    one scalar Brownian motion per trajectory, Euler-Maruyama with a
    simplex projection (clip negative coordinates, renormalize the sum)
    each step.  Returns (times, values) with values of shape
    (n_traj, T, 3).  Trajectory i draws from the channel-0 stream of seed
    ``seed + i``, mirroring the full simulator's layout.
    """
    gamma = float(gamma)
    if gamma < 0:
        raise ModelValidationError("gamma must be non-negative")
    h_eff = effective_step_size(max(gamma, 1.0), h)
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ModelValidationError("n_steps must be >= 1")
    x0 = np.full(3, 1.0 / 3.0) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (3,) or x0.min() < 0 or abs(x0.sum() - 1.0) > 1e-9:
        raise ModelValidationError("x0 must be a probability vector of length 3")

    gens = [channel_generators(int(seed) + i, 1)[0] for i in range(int(n_traj))]
    X = np.repeat(x0.reshape(1, 3), n_traj, axis=0)
    save_idx = _save_indices(n_steps, save_stride)
    save_set = {int(m): k for k, m in enumerate(save_idx)}
    values = np.empty((n_traj, len(save_idx), 3))
    sqrt_h = np.sqrt(h_eff)
    RT = _REDUCED_R.T.copy()

    m = 0
    while m < n_steps:
        b = min(_BLOCK, n_steps - m)
        noise = np.empty((b, n_traj))
        for i in range(n_traj):
            noise[:, i] = gens[i].standard_normal(b)
        noise *= sqrt_h
        for j in range(b):
            if m in save_set:
                values[:, save_set[m]] = X
            lx = X * _REDUCED_L
            s = lx.sum(axis=1)
            sig = 2.0 * gamma * (lx - s[:, None] * X)
            X = X + h_eff * (X @ RT) + noise[j][:, None] * sig
            np.clip(X, 0.0, None, out=X)
            tot = X.sum(axis=1)
            if not np.isfinite(tot).all() or (tot <= 0).any():
                raise BlowUpError(m + 1, h_eff)
            X /= tot[:, None]
            m += 1
    values[:, save_set[n_steps]] = X
    return save_idx * h_eff, values
