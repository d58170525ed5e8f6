"""Structural assumptions and closed-form spectral data for three-scale models.

A three-scale model is a triple of GKSL specifications (levels 0, 1, 2)
sharing one dimension, plus a scale parameter gamma > 0; the generator is

    L_gamma = L0 + gamma L1 + gamma^2 L2.

The structural requirements checked here, always in the computational
basis (see DESIGN note below):

* non-demolition: H2, every level-2 Kraus operator and every level-1
  Kraus operator are diagonal.  Nothing is required of H1 or of level 0.
* identifiability: for every pair i != j some level-2 channel with
  eta > 0 separates the real parts of the diagonal entries.
* decoherence (weaker): for every pair i != j some level-2 channel
  separates the diagonal entries, efficiency and real parts ignored.

Under non-demolition, every matrix unit E_{i,j} is an eigenvector of the
level-2 generator with eigenvalue

    tau_{i,j} = -1/2 sum_k |(Lk)_{ii} - (Lk)_{jj}|^2
                - i ( H_{ii} - H_{jj} + sum_k Im( conj((Lk)_{ii}) (Lk)_{jj} ) )

and the strong-noise limit of the trajectories is a Markov jump process on
the pointer states with rates (i != j)

    T_{i,j} = sum_k |(Lk^(0))_{j,i}|^2
              + |H1_{i,j}|^2 / |tau_{i,j}|^2 * sum_k |(Lk^(2))_{ii} - (Lk^(2))_{jj}|^2.

DESIGN: the pointer basis is required to be the computational basis.
Co-diagonalizing a commuting normal family is numerically delicate;
demanding inputs already expressed in the pointer basis keeps every
assumption check exact.  Inputs in any other basis are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import IdentifiabilityError, ModelValidationError
from .superop import GkslSpec, basis_matrix, hs_norm, lindblad_from_gksl

DEFAULT_ASSUMPTION_TOL = 1e-10

__all__ = [
    "DEFAULT_ASSUMPTION_TOL",
    "ThreeScaleModel", "AssumptionReport", "MarkovGenerator",
    "check_qnd", "check_identifiability", "tau_eigenvalues",
    "transition_rates", "decoherence_rates", "markov_from_pi_l_pi",
]


@dataclass(frozen=True)
class ThreeScaleModel:
    """Levels 0, 1, 2 with a common dimension, plus gamma > 0."""

    level0: GkslSpec
    level1: GkslSpec
    level2: GkslSpec
    gamma: float

    def __post_init__(self):
        dims = {self.level0.dim, self.level1.dim, self.level2.dim}
        if len(dims) != 1:
            raise ModelValidationError(f"levels have mismatched dimensions {sorted(dims)}")
        g = float(self.gamma)
        if not (np.isfinite(g) and g > 0):
            raise ModelValidationError(f"gamma must be positive and finite, got {g}")
        object.__setattr__(self, "gamma", g)

    @property
    def dim(self):
        return self.level0.dim

    @property
    def levels(self):
        return (self.level0, self.level1, self.level2)

    def with_gamma(self, gamma):
        return ThreeScaleModel(self.level0, self.level1, self.level2, gamma)

    def lindblad(self, gamma=None):
        """L_gamma = L0 + gamma L1 + gamma^2 L2 as a SuperOperator."""
        g = self.gamma if gamma is None else float(gamma)
        l0 = lindblad_from_gksl(self.level0)
        l1 = lindblad_from_gksl(self.level1)
        l2 = lindblad_from_gksl(self.level2)
        return l0 + g * l1 + (g * g) * l2

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "level0": self.level0.to_dict(),
            "level1": self.level1.to_dict(),
            "level2": self.level2.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ModelValidationError("model must be a JSON object")
        missing = {"gamma", "level0", "level1", "level2"} - set(obj)
        if missing:
            raise ModelValidationError(f"model is missing fields: {sorted(missing)}")
        return cls(
            level0=GkslSpec.from_dict(obj["level0"]),
            level1=GkslSpec.from_dict(obj["level1"]),
            level2=GkslSpec.from_dict(obj["level2"]),
            gamma=float(obj["gamma"]),
        )

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelValidationError(f"invalid JSON: {exc}") from None
        return cls.from_dict(obj)


@dataclass(frozen=True)
class MarkovGenerator:
    """Real rate matrix with non-negative off-diagonals and zero row sums
    (probabilistic convention: T applied to the all-ones vector is zero).
    Entry (i, j), i != j, is the rate from pointer state i to j."""

    dim: int
    rates: np.ndarray

    ROW_SUM_TOL = 1e-12

    def __post_init__(self):
        R = np.asarray(self.rates, dtype=float)
        d = int(self.dim)
        if R.shape != (d, d):
            raise ModelValidationError(f"rate matrix has shape {R.shape}, expected ({d}, {d})")
        if not np.all(np.isfinite(R)):
            raise ModelValidationError("rate matrix has non-finite entries")
        off = R[~np.eye(d, dtype=bool)]
        if off.size and off.min() < 0:
            raise ModelValidationError(f"negative off-diagonal rate {off.min():.3e}")
        worst = float(np.abs(R.sum(axis=1)).max(initial=0.0))
        if worst > self.ROW_SUM_TOL:
            raise ModelValidationError(f"row sums deviate from zero by {worst:.3e}")
        R = R.copy()
        R.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "rates", R)

    def to_dict(self):
        return {"dim": self.dim, "rates": [[float(x) for x in row] for row in self.rates]}

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict) or "rates" not in obj:
            raise ModelValidationError("Markov generator must be an object with 'rates'")
        rates = np.asarray(obj["rates"], dtype=float)
        return cls(dim=int(obj.get("dim", rates.shape[0])), rates=rates)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelValidationError(f"invalid JSON: {exc}") from None
        return cls.from_dict(obj)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the structural checks.

    ``witnesses`` lists offending index triples: (i, j, k) means entry
    (i, j) of operator k violated the check that produced the report
    (k = -1 refers to a Hamiltonian).  The invariant
    identifiability_ok => decoherence_ok holds by construction.
    """

    qnd_ok: bool
    identifiability_ok: bool
    decoherence_ok: bool
    witnesses: tuple = ()
    max_offdiag: float = 0.0

    def __post_init__(self):
        if self.identifiability_ok and not self.decoherence_ok:
            raise ModelValidationError(
                "inconsistent report: identifiability without decoherence")

    @property
    def all_ok(self):
        return self.qnd_ok and self.identifiability_ok and self.decoherence_ok

    def to_dict(self):
        return {
            "qnd_ok": bool(self.qnd_ok),
            "identifiability_ok": bool(self.identifiability_ok),
            "decoherence_ok": bool(self.decoherence_ok),
            "witnesses": [list(map(int, w)) for w in self.witnesses],
            "max_offdiag": float(self.max_offdiag),
        }


def _offdiagonal_witnesses(M, k, tol):
    """(i, j, k) for every off-diagonal entry of M larger than tol."""
    A = np.abs(np.asarray(M))
    np.fill_diagonal(A, 0.0)
    ii, jj = np.nonzero(A > tol)
    return [(int(i), int(j), k) for i, j in zip(ii, jj)], float(A.max(initial=0.0))


def check_identifiability(level2, tol=DEFAULT_ASSUMPTION_TOL):
    """Identifiability and decoherence checks for the dominant level.

    Identifiability: for every i != j there is a channel k with
    eta(k) > 0 and |Re (Lk)_{ii} - Re (Lk)_{jj}| > tol.  Decoherence is
    the same without the efficiency and real-part restrictions.  Returns
    an AssumptionReport fragment whose qnd flag is vacuously True and
    whose witnesses are the unseparated pairs (i, j, -1).
    """
    d = level2.dim
    diags = np.array([np.diagonal(K) for K in level2.kraus])  # (ell, d)
    eta = np.asarray(level2.efficiencies, dtype=float)
    ident_ok, dec_ok = True, True
    witnesses = []
    for i in range(d):
        for j in range(i + 1, d):
            if diags.size:
                gap = np.abs(diags[:, i] - diags[:, j])
                regap = np.abs(diags[:, i].real - diags[:, j].real)
                pair_dec = bool((gap > tol).any())
                pair_id = bool(((eta > 0) & (regap > tol)).any())
            else:
                pair_dec = pair_id = False
            if not pair_dec:
                dec_ok = False
            if not pair_id:
                ident_ok = False
                witnesses.append((i, j, -1))
    return AssumptionReport(
        qnd_ok=True,
        identifiability_ok=ident_ok,
        decoherence_ok=dec_ok,
        witnesses=tuple(witnesses),
    )


def check_qnd(model, tol=DEFAULT_ASSUMPTION_TOL):
    """Full structural report for a three-scale model.

    qnd_ok is true iff H2, every level-2 Kraus operator and every level-1
    Kraus operator have all off-diagonal magnitudes <= tol.  Nothing is
    required of H1 or level 0.  The identifiability and decoherence flags
    come from `check_identifiability` on level 2.
    """
    witnesses = []
    max_off = 0.0
    checked = [(model.level2.hamiltonian, -1)]
    checked += [(K, k) for k, K in enumerate(model.level2.kraus)]
    checked += [(K, k) for k, K in enumerate(model.level1.kraus)]
    for M, k in checked:
        w, mx = _offdiagonal_witnesses(M, k, tol)
        witnesses += w
        max_off = max(max_off, mx)
    frag = check_identifiability(model.level2, tol)
    return AssumptionReport(
        qnd_ok=not witnesses,
        identifiability_ok=frag.identifiability_ok,
        decoherence_ok=frag.decoherence_ok,
        witnesses=tuple(witnesses) + frag.witnesses,
        max_offdiag=max_off,
    )


def _require_diagonal(spec, tol, what):
    mats = [(spec.hamiltonian, -1)] + [(K, k) for k, K in enumerate(spec.kraus)]
    for M, k in mats:
        w, _ = _offdiagonal_witnesses(M, k, tol)
        if w:
            raise ModelValidationError(
                f"{what} is not diagonal in the computational basis "
                f"(first witness i={w[0][0]}, j={w[0][1]}, operator {w[0][2]})")


def tau_eigenvalues(level2, tol=DEFAULT_ASSUMPTION_TOL):
    """Eigenvalues tau_{i,j} of a diagonal GKSL generator on the units E_{i,j}.

    Requires H and all Kraus operators diagonal.  The closed form is
    verified against the dense generator: each E_{i,j} must be an
    eigenvector with eigenvalue tau_{i,j} within 1e-10; a failure means
    the closed form and the generator disagree and is raised, never
    repaired.  The returned matrix satisfies tau_{i,i} = 0,
    tau_{i,j} = conj(tau_{j,i}) and Re tau_{i,j} <= 0.
    """
    _require_diagonal(level2, tol, "level-2 generator")
    d = level2.dim
    hd = np.diagonal(level2.hamiltonian).real  # Hermitian + diagonal => real
    tau = np.zeros((d, d), dtype=complex)
    tau -= 1j * (hd[:, None] - hd[None, :])
    for K in level2.kraus:
        kd = np.diagonal(K)
        tau -= 0.5 * np.abs(kd[:, None] - kd[None, :]) ** 2
        tau -= 1j * np.imag(kd.conj()[:, None] * kd[None, :])
    np.fill_diagonal(tau, 0.0)

    gen = lindblad_from_gksl(level2)
    for i in range(d):
        for j in range(d):
            E = basis_matrix(i, j, d)
            resid = hs_norm(gen.apply(E) - tau[i, j] * E)
            if resid > 1e-10:
                raise ModelValidationError(
                    f"E_{{{i},{j}}} fails the eigenvector check: residual {resid:.3e}")
    return tau


def decoherence_rates(model, tol=DEFAULT_ASSUMPTION_TOL):
    """Off-diagonal damping rates D^gamma_{i,j} of the flow that carries
    the matrix units, with D^gamma_{i,i} = 0:

        D = sum_{alpha=1,2} gamma^alpha sum_k ( (Re delta_k)^2
              + (1 - eta_alpha(k)) (Im delta_k)^2 ),
        delta_k = (Lk^(alpha))_{ii} - (Lk^(alpha))_{jj}.
    """
    report = check_qnd(model, tol)
    if not report.qnd_ok:
        raise ModelValidationError(
            "decoherence rates need the non-demolition structure; "
            f"witnesses {report.witnesses[:3]}")
    d = model.dim
    D = np.zeros((d, d))
    for power, spec in ((1, model.level1), (2, model.level2)):
        w = model.gamma ** power
        for K, eta in zip(spec.kraus, spec.efficiencies):
            kd = np.diagonal(K)
            delta = kd[:, None] - kd[None, :]
            D += w * (delta.real ** 2 + (1.0 - eta) * delta.imag ** 2)
    np.fill_diagonal(D, 0.0)
    return D


def markov_from_pi_l_pi(spec):
    """Markov generator obtained by compressing a Lindbladian to the
    diagonal: Q_{i,j} = (L(E_{i,i}))_{j,j}.

    Works for any GKSL specification, diagonal or not, and reduces to

        Q_{i,j} = sum_k ( |(Lk)_{j,i}|^2 - delta_{i,j} ||Lk e_j||^2 );

    the Hamiltonian drops out.  Row sums vanish identically and the
    off-diagonals are non-negative, so the result is a valid generator.
    """
    d = spec.dim
    Q = np.zeros((d, d))
    for K in spec.kraus:
        A = np.abs(K) ** 2
        Q += A.T
        Q[np.diag_indices(d)] -= A.sum(axis=0)
    return MarkovGenerator(dim=d, rates=Q)


def transition_rates(model, tol=DEFAULT_ASSUMPTION_TOL):
    """Jump rates of the strong-noise limit process.

    For i != j,

        T_{i,j} = sum_k |(Lk^(0))_{j,i}|^2
                  + |H1_{i,j}|^2 / |tau_{i,j}|^2
                    * sum_k |(Lk^(2))_{ii} - (Lk^(2))_{jj}|^2

    with the diagonal fixed by zero row sums.  The rates are independent
    of the level-1 Kraus operators and of H0.

    A pair coupled by H1 (H1_{i,j} != 0) whose tau_{i,j} vanishes, or is
    not backed by a read channel separating real parts, has no defined
    rate; this refuses with IdentifiabilityError rather than guessing.
    """
    report = check_qnd(model, tol)
    if not report.qnd_ok:
        raise ModelValidationError(
            "transition rates need the non-demolition structure; "
            f"witnesses {report.witnesses[:3]}")
    d = model.dim
    T = markov_from_pi_l_pi(model.level0).rates.copy()

    H1 = model.level1.hamiltonian
    coupled = np.abs(H1) > tol
    np.fill_diagonal(coupled, False)
    if coupled.any():
        frag = check_identifiability(model.level2, tol)
        bad = [(i, j) for (i, j, _) in frag.witnesses
               if coupled[i, j] or coupled[j, i]]
        if bad:
            raise IdentifiabilityError(
                f"H1 couples pointer pairs {bad[:3]} that no read channel "
                "separates; the limit would be a degenerate measurement")
        tau = tau_eigenvalues(model.level2, tol)
        gap2 = np.zeros((d, d))
        for K in model.level2.kraus:
            kd = np.diagonal(K)
            gap2 += np.abs(kd[:, None] - kd[None, :]) ** 2
        ii, jj = np.nonzero(coupled)
        for i, j in zip(ii, jj):
            if abs(tau[i, j]) <= tol:
                raise IdentifiabilityError(
                    f"tau_({i},{j}) = 0 while H1 couples the pair")
            T[i, j] += abs(H1[i, j]) ** 2 / abs(tau[i, j]) ** 2 * gap2[i, j]

    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(T, -T.sum(axis=1))
    return MarkovGenerator(dim=d, rates=T)
