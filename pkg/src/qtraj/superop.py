"""Dense complex matrix and superoperator algebra.

Conventions
-----------
* Matrices live in M_d(C) with the Hilbert-Schmidt inner product
  <X, Y> = tr(X^* Y) and its norm.
* A superoperator is a linear map on M_d(C), stored as a d^2 x d^2 complex
  matrix over the column-stacking vectorization: vec(X) stacks the columns
  of X, so vec(A X B) = (B^T kron A) vec(X).  The basis E_{i,j} = e_i e_j^*
  is ordered with the column index j major and the row index i minor, i.e.
  vec(E_{i,j}) = e_{j*d + i}.
* Because (E_{i,j}) is orthonormal for the Hilbert-Schmidt product, the
  matrix of the adjoint superoperator is the conjugate transpose of the
  stored matrix.

The GKSL (Lindblad) generator of a quantum dynamical semigroup is

    L(X) = -i [H, X] + sum_k ( L_k X L_k^* - 1/2 {L_k^* L_k, X} )

with H Hermitian and arbitrary Kraus operators L_k.  Channel efficiencies
eta(k) in [0, 1] ride along with the Kraus list; they do not enter the
generator, only the measurement-noise volatilities (see `qtraj.sde`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ModelValidationError

# Default tolerances, comfortably above double-precision accumulation at
# d <= 8 and far below physical scales.
TOL_HERM = 1e-9
TOL_TR = 1e-9
TOL_PSD = 1e-9
TOL_LIN = 1e-10
TOL_EXP = 1e-12

__all__ = [
    "TOL_HERM", "TOL_TR", "TOL_PSD", "TOL_LIN", "TOL_EXP",
    "GkslSpec", "SuperOperator",
    "vec", "unvec", "basis_matrix", "hs_inner", "hs_norm",
    "lindblad_from_gksl", "gksl_apply", "apply", "hs_adjoint",
    "check_trace_preserving", "expm",
    "identity_superop", "zero_superop",
    "check_density_matrix", "project_to_density", "maximally_mixed",
    "maximally_coherent", "pointer_state",
]


# ---------------------------------------------------------------------------
# vectorization helpers
# ---------------------------------------------------------------------------

def vec(X):
    """Column-stacking vectorization of a d x d matrix."""
    X = np.asarray(X)
    return X.reshape(X.shape[0] * X.shape[1], order="F")


def unvec(v, d):
    """Inverse of `vec`."""
    return np.asarray(v).reshape((d, d), order="F")


def basis_matrix(i, j, d):
    """Matrix unit E_{i,j} = e_i e_j^* (zero-based indices)."""
    E = np.zeros((d, d), dtype=complex)
    E[i, j] = 1.0
    return E


def hs_inner(X, Y):
    """Hilbert-Schmidt inner product tr(X^* Y)."""
    return complex(np.vdot(np.asarray(X), np.asarray(Y)))


def hs_norm(X):
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(X)))


def _as_complex_matrix(M, name="matrix"):
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ModelValidationError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ModelValidationError(f"{name} has non-finite entries")
    return A


def _matrix_to_pairs(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _matrix_from_pairs(rows, name="matrix"):
    try:
        A = np.array([[complex(re, im) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise ModelValidationError(f"cannot parse {name}: {exc}") from None
    return _as_complex_matrix(A, name)


# ---------------------------------------------------------------------------
# GKSL specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GkslSpec:
    """One Lindbladian: Hamiltonian, Kraus operators, channel efficiencies.

    The JSON wire format (canonical for every module of this package) is

        {"dim": d,
         "hamiltonian": [[[re, im], ...] per row, ...],
         "kraus": [matrix, ...],
         "efficiencies": [eta_1, ...]}

    with matrices given as arrays of rows and entries as [re, im] pairs.
    """

    dim: int
    hamiltonian: np.ndarray
    kraus: tuple = ()
    efficiencies: tuple = ()

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ModelValidationError(f"dim must be >= 1, got {d}")
        H = _as_complex_matrix(self.hamiltonian, "hamiltonian")
        if H.shape != (d, d):
            raise ModelValidationError(
                f"hamiltonian has shape {H.shape}, expected ({d}, {d})")
        if hs_norm(H - H.conj().T) > TOL_HERM * (1.0 + hs_norm(H)):
            raise ModelValidationError("hamiltonian is not Hermitian")
        kraus = tuple(_as_complex_matrix(K, f"kraus[{k}]") for k, K in enumerate(self.kraus))
        for k, K in enumerate(kraus):
            if K.shape != (d, d):
                raise ModelValidationError(
                    f"kraus[{k}] has shape {K.shape}, expected ({d}, {d})")
        eta = tuple(float(e) for e in self.efficiencies)
        if len(eta) != len(kraus):
            raise ModelValidationError(
                f"{len(eta)} efficiencies for {len(kraus)} Kraus operators")
        for k, e in enumerate(eta):
            if not 0.0 <= e <= 1.0:
                raise ModelValidationError(f"efficiency eta({k}) = {e} outside [0, 1]")
        H.setflags(write=False)
        for K in kraus:
            K.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "efficiencies", eta)

    @property
    def n_channels(self):
        return len(self.kraus)

    @classmethod
    def empty(cls, dim):
        """The zero generator: H = 0, no Kraus operators."""
        return cls(dim=dim, hamiltonian=np.zeros((dim, dim), dtype=complex))

    def to_dict(self):
        return {
            "dim": self.dim,
            "hamiltonian": _matrix_to_pairs(self.hamiltonian),
            "kraus": [_matrix_to_pairs(K) for K in self.kraus],
            "efficiencies": [float(e) for e in self.efficiencies],
        }

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ModelValidationError("GKSL spec must be a JSON object")
        missing = {"dim", "hamiltonian", "kraus", "efficiencies"} - set(obj)
        if missing:
            raise ModelValidationError(f"GKSL spec is missing fields: {sorted(missing)}")
        return cls(
            dim=int(obj["dim"]),
            hamiltonian=_matrix_from_pairs(obj["hamiltonian"], "hamiltonian"),
            kraus=tuple(_matrix_from_pairs(K, f"kraus[{k}]")
                        for k, K in enumerate(obj["kraus"])),
            efficiencies=tuple(obj["efficiencies"]),
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


# ---------------------------------------------------------------------------
# superoperators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuperOperator:
    """Linear map on M_d(C) as a d^2 x d^2 matrix, column-stacking convention."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ModelValidationError(f"dim must be >= 1, got {d}")
        M = np.asarray(self.matrix, dtype=complex)
        if M.shape != (d * d, d * d):
            raise ModelValidationError(
                f"superoperator matrix has shape {M.shape}, expected ({d*d}, {d*d})")
        if not np.all(np.isfinite(M)):
            raise ModelValidationError("superoperator matrix has non-finite entries")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "matrix", M)

    def apply(self, X):
        X = _as_complex_matrix(X, "operand")
        if X.shape != (self.dim, self.dim):
            raise ModelValidationError(
                f"operand has shape {X.shape}, expected ({self.dim}, {self.dim})")
        return unvec(self.matrix @ vec(X), self.dim)

    def __call__(self, X):
        return self.apply(X)

    def compose(self, other):
        """self after other (matrix product)."""
        if other.dim != self.dim:
            raise ModelValidationError("dimension mismatch in composition")
        return SuperOperator(self.dim, self.matrix @ other.matrix)

    def __matmul__(self, other):
        return self.compose(other)

    def __add__(self, other):
        if other.dim != self.dim:
            raise ModelValidationError("dimension mismatch in sum")
        return SuperOperator(self.dim, self.matrix + other.matrix)

    def __sub__(self, other):
        if other.dim != self.dim:
            raise ModelValidationError("dimension mismatch in difference")
        return SuperOperator(self.dim, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return SuperOperator(self.dim, self.matrix * scalar)

    __rmul__ = __mul__

    def norm(self):
        """Operator norm induced by the Hilbert-Schmidt norm (spectral norm)."""
        return float(np.linalg.norm(self.matrix, 2))


def identity_superop(d):
    return SuperOperator(d, np.eye(d * d, dtype=complex))


def zero_superop(d):
    return SuperOperator(d, np.zeros((d * d, d * d), dtype=complex))


def _left_mult(A):
    """vec(A X) = (I kron A) vec(X)."""
    d = A.shape[0]
    return np.kron(np.eye(d), A)


def _right_mult(B):
    """vec(X B) = (B^T kron I) vec(X)."""
    d = B.shape[0]
    return np.kron(B.T, np.eye(d))


def _gksl_matrix(spec, row_major=False):
    """GKSL generator as a d^2 x d^2 matrix.

    ``row_major=False`` gives the public column-stacking convention.  The
    row-major variant (vec by rows, used internally by the SDE integrator
    because it matches C-contiguous reshapes) is the same map conjugated by
    the transpose permutation; both are produced directly from the kron
    identities to keep the entries exact.
    """
    d = spec.dim
    I = np.eye(d)

    if row_major:
        # vec_r(A X) = (A kron I) vec_r(X), vec_r(X B) = (I kron B^T) vec_r(X)
        left = lambda A: np.kron(A, I)
        right = lambda B: np.kron(I, B.T)
    else:
        left = _left_mult
        right = _right_mult

    H = spec.hamiltonian
    M = -1j * (left(H) - right(H))
    for K in spec.kraus:
        KdK = K.conj().T @ K
        M = M + left(K) @ right(K.conj().T)
        M = M - 0.5 * (left(KdK) + right(KdK))
    return M


def lindblad_from_gksl(spec):
    """Build the GKSL generator of `spec` as a SuperOperator.

    Efficiencies are ignored here; they only enter the volatilities.
    """
    return SuperOperator(spec.dim, _gksl_matrix(spec, row_major=False))


def gksl_apply(spec, X):
    """Evaluate the GKSL sum directly on X, without the d^2 x d^2 matrix.

    Independent of `lindblad_from_gksl`; used to cross-check the
    vectorized form.
    """
    X = _as_complex_matrix(X, "operand")
    if X.shape != (spec.dim, spec.dim):
        raise ModelValidationError(
            f"operand has shape {X.shape}, expected ({spec.dim}, {spec.dim})")
    H = spec.hamiltonian
    out = -1j * (H @ X - X @ H)
    for K in spec.kraus:
        KdK = K.conj().T @ K
        out = out + K @ X @ K.conj().T - 0.5 * (KdK @ X + X @ KdK)
    return out


def apply(op, X):
    """Apply a SuperOperator to a matrix."""
    return op.apply(X)


def hs_adjoint(op):
    """Adjoint with respect to the Hilbert-Schmidt inner product.

    In the orthonormal basis (E_{i,j}) the stored matrix is the literal
    basis representation, so the adjoint is the conjugate transpose.
    """
    return SuperOperator(op.dim, op.matrix.conj().T)


def check_trace_preserving(op, tol=TOL_LIN):
    """True iff sup_{i,j} |tr(op(E_{i,j}))| <= tol.

    tr(op(E_{i,j})) is row vec(I)^* of the matrix applied to the basis
    column, so the check reduces to one vector-matrix product.
    """
    traces = vec(np.eye(op.dim)).conj() @ op.matrix
    return bool(np.max(np.abs(traces)) <= tol)


def expm(op, t):
    """Semigroup element e^{t op} (scaling-and-squaring Pade, via SciPy)."""
    t = float(t)
    if not np.isfinite(t):
        raise ModelValidationError(f"time must be finite, got {t}")
    return SuperOperator(op.dim, scipy.linalg.expm(t * op.matrix))


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------

def check_density_matrix(rho, tol_herm=TOL_HERM, tol_psd=TOL_PSD, tol_tr=TOL_TR):
    """Raise ModelValidationError unless rho is a density matrix.

    Hermitian within tol_herm, eigenvalues >= -tol_psd, |tr - 1| <= tol_tr.
    """
    rho = _as_complex_matrix(rho, "state")
    if hs_norm(rho - rho.conj().T) > tol_herm:
        raise ModelValidationError("state is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > tol_tr or abs(np.trace(rho).imag) > tol_tr:
        raise ModelValidationError("state trace differs from 1 beyond tolerance")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -tol_psd:
        raise ModelValidationError(
            f"state has eigenvalue {w.min():.3e} below -{tol_psd:g}")
    return rho


def project_to_density(rho, tol_psd=TOL_PSD):
    """Hermitize, clip eigenvalues below -tol_psd to zero when needed,
    renormalize the trace to one."""
    rho = np.asarray(rho, dtype=complex)
    rho = 0.5 * (rho + rho.conj().T)
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol_psd:
        w, V = np.linalg.eigh(rho)
        w[w < -tol_psd] = 0.0
        rho = (V * w) @ V.conj().T
    tr = np.trace(rho).real
    if tr <= 0 or not np.isfinite(tr):
        raise ModelValidationError(f"cannot renormalize state with trace {tr}")
    return rho / tr


def maximally_mixed(d):
    return np.eye(d, dtype=complex) / d


def maximally_coherent(d):
    """Pure state with all entries 1/d (the flat superposition)."""
    psi = np.ones(d) / np.sqrt(d)
    return np.outer(psi, psi.conj()).astype(complex)


def pointer_state(i, d):
    """E_{i,i} as a density matrix."""
    return basis_matrix(i, i, d)
