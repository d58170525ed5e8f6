"""Homogenization of three-scale generators on a finite-dimensional space.

Given linear operators L0, L1, L2 with L_gamma = L0 + gamma L1 + gamma^2 L2,
when L2 has no purely imaginary eigenvalues, a semi-simple zero eigenvalue
and generates a bounded semigroup, the long-time projector

    P = lim_{t -> oo} e^{t L2}

exists; it projects onto Ker L2 parallel to Im L2.  With the pseudo-inverse
L2^- (zero on Ker L2, the inverse of L2 on the complementary invariant
subspace) and the centering condition P L1 P = 0, the semigroups converge:

    e^{t L_gamma}  ->  P e^{t Linf} P,   Linf = P L0 P - P L1 L2^- L1 P.

Everything here works on plain square complex matrices of any size.
SuperOperator inputs are accepted too and produce SuperOperator outputs,
so Lindbladian triples can be fed directly.

Numerical choices:
* kernels of L2 and L2^* are extracted from one singular value
  decomposition (singular values <= tol_zero), then biorthogonalized by
  inverting the Gram matrix; this realizes P x = sum_i <l_i, x> r_i with
  <l_i, r_j> = delta_{ij}.
* semi-simplicity of the zero eigenvalue is checked by comparing the
  kernel dimension with the number of eigenvalues inside the zero
  threshold, together with ||P L2|| <= tol; Jordan structure is reported,
  never silently repaired.
* the pseudo-inverse solves (L2 + c P) X = I - P with c on the scale of
  L2, not the integral formula; the integral -int_0^oo (e^{s L2} - P) ds
  is kept as a test oracle only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    CenteringError,
    ConditioningError,
    DegeneracyError,
    JordanBlockError,
    ModelValidationError,
    SpectralPropertyError,
)
from .superop import SuperOperator

__all__ = [
    "HomogenizationResult",
    "kernel_projector", "pseudo_inverse", "check_centering",
    "homogenized_generator", "compare_semigroups",
    "default_zero_tol", "spectral_data",
]


def _coerce(op, name="operator"):
    """Accept a SuperOperator or a square array; return (matrix, wrapper)."""
    if isinstance(op, SuperOperator):
        return np.asarray(op.matrix, dtype=complex), (lambda M: SuperOperator(op.dim, M))
    M = np.asarray(op, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ModelValidationError(f"{name} must be square, got shape {M.shape}")
    return M, (lambda X: X)


def default_zero_tol(M):
    """Scale-invariant threshold separating zero from decaying modes."""
    return 1e-9 * (1.0 + float(np.linalg.norm(M, 2)))


def spectral_data(L2, tol_zero=None):
    """Eigen-screening of the dominant generator.

    Returns (eigenvalues, kernel_dim, spectral_gap) and raises if the
    spectrum is incompatible with a long-time projector:
    * an eigenvalue with real part above tol_zero (no decay),
    * a purely imaginary eigenvalue (|Re| <= tol_zero < |Im|),
    * a zero eigenvalue that is not semi-simple.
    """
    M, _ = _coerce(L2, "L2")
    if tol_zero is None:
        tol_zero = default_zero_tol(M)
    eigvals = np.linalg.eigvals(M)

    growing = eigvals[eigvals.real > tol_zero]
    if growing.size:
        raise SpectralPropertyError(
            f"eigenvalue {growing[0]:.6e} has positive real part; "
            "the semigroup does not converge")
    rotating = eigvals[(np.abs(eigvals.real) <= tol_zero) & (np.abs(eigvals.imag) > tol_zero)]
    if rotating.size:
        raise SpectralPropertyError(
            f"purely imaginary eigenvalue {rotating[0]:.6e} detected")

    zero_count = int(np.sum(np.abs(eigvals) <= tol_zero))
    sv = np.linalg.svd(M, compute_uv=False)
    kernel_dim = int(np.sum(sv <= tol_zero))
    if kernel_dim != zero_count:
        raise JordanBlockError(
            f"zero eigenvalue has algebraic multiplicity {zero_count} but "
            f"geometric multiplicity {kernel_dim}; non-trivial Jordan block")

    nonzero = eigvals[np.abs(eigvals) > tol_zero]
    gap = float(-nonzero.real.max()) if nonzero.size else float("inf")
    return eigvals, kernel_dim, gap


def kernel_projector(L2, tol_zero=None):
    """Projector onto Ker L2 parallel to Im L2, from biorthogonal bases.

    One SVD of L2 supplies an orthonormal basis (r_i) of Ker L2 (right
    singular vectors of the small singular values) and (l_i) of
    Ker L2^* (the corresponding left singular vectors); the projector is
    R (L^* R)^{-1} L^* with R, L the basis column matrices.
    """
    M, wrap = _coerce(L2, "L2")
    if tol_zero is None:
        tol_zero = default_zero_tol(M)
    _, kernel_dim, _ = spectral_data(M, tol_zero)
    if kernel_dim == 0:
        # trivial kernel: every mode decays and the long-time limit is zero
        return wrap(np.zeros_like(M))

    U, sv, Vh = np.linalg.svd(M)
    small = sv <= tol_zero
    # svd orders singular values descending; the kernel lives in the tail
    R = Vh.conj().T[:, small]          # basis of Ker L2
    Lf = U[:, small]                   # basis of Ker L2^*
    gram = Lf.conj().T @ R
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegeneracyError(
            f"biorthogonalization Gram matrix is singular (cond ~ {cond:.3e}); "
            "Ker L2 and Im L2 are not complementary at this tolerance")
    P = R @ np.linalg.solve(gram, Lf.conj().T)
    # cheap residual guard: P must annihilate the dynamics it absorbs
    resid = max(np.linalg.norm(P @ M, 2), np.linalg.norm(M @ P, 2))
    if resid > 1e-6 * (1.0 + np.linalg.norm(M, 2)):
        raise JordanBlockError(
            f"projector residual ||P L2||, ||L2 P|| = {resid:.3e}; "
            "zero eigenvalue is defective at this tolerance")
    return wrap(P)


def pseudo_inverse(L2, P, cond_limit=1e14):
    """Inverse of L2 on Ker P, zero on Im P.

    Solves (L2 + c P) X = I - P with c ~ ||L2||; the shift makes the
    system non-singular because L2 + c P acts as c on Im P and as L2 on
    the complementary invariant subspace.
    """
    M, wrap = _coerce(L2, "L2")
    Pm, _ = _coerce(P, "P")
    n = M.shape[0]
    scale = float(np.linalg.norm(M, 2))
    c = scale if scale > 0 else 1.0
    shifted = M + c * Pm
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(
            "restricted generator is numerically singular", condition_number=cond)
    Q = np.eye(n) - Pm
    try:
        X = np.linalg.solve(shifted, Q)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"linear solve failed: {exc}",
                                condition_number=cond) from None
    return wrap(X)


def check_centering(L1, P, tol=None):
    """True iff ||P L1 P|| <= tol (operator norm)."""
    M1, _ = _coerce(L1, "L1")
    Pm, _ = _coerce(P, "P")
    if tol is None:
        tol = 1e-9 * (1.0 + np.linalg.norm(M1, 2))
    return bool(np.linalg.norm(Pm @ M1 @ Pm, 2) <= tol)


@dataclass(frozen=True)
class HomogenizationResult:
    """Projector, pseudo-inverse, homogenized generator and spectral data.

    The defining identities, all holding within the linear-algebra
    tolerance used to build them: P P = P, P L2 = L2 P = 0,
    L2^- P = P L2^- = 0 and L2 L2^- = L2^- L2 = I - P.
    """

    projector: object
    pseudo_inverse: object
    l_infinity: object
    spectral_gap: float
    kernel_dim: int


def homogenized_generator(L0, L1, L2, tol_zero=None, centering_tol=None):
    """Homogenized generator Linf = P L0 P - P L1 L2^- L1 P.

    Raises CenteringError when P L1 P does not vanish, and propagates the
    spectral/Jordan/conditioning errors of the sub-steps.
    """
    M0, wrap = _coerce(L0, "L0")
    M1, _ = _coerce(L1, "L1")
    M2, _ = _coerce(L2, "L2")
    if M0.shape != M2.shape or M1.shape != M2.shape:
        raise ModelValidationError("L0, L1, L2 must share one shape")
    if tol_zero is None:
        tol_zero = default_zero_tol(M2)
    _, kernel_dim, gap = spectral_data(M2, tol_zero)
    P = kernel_projector(M2, tol_zero)
    if not check_centering(M1, P, centering_tol):
        raise CenteringError(
            f"||P L1 P|| = {np.linalg.norm(P @ M1 @ P, 2):.3e} does not vanish; "
            "no homogenized generator at this scaling")
    pinv = pseudo_inverse(M2, P)
    linf = P @ M0 @ P - P @ M1 @ pinv @ M1 @ P
    return HomogenizationResult(
        projector=wrap(P),
        pseudo_inverse=wrap(pinv),
        l_infinity=wrap(linf),
        spectral_gap=gap,
        kernel_dim=kernel_dim,
    )


def compare_semigroups(L0, L1, L2, gammas, t, tol_zero=None):
    """Operator-norm distance between the true and homogenized semigroups.

    For each gamma: || e^{t (L0 + gamma L1 + gamma^2 L2)} - P e^{t Linf} P ||.
    Returns a list of (gamma, error) pairs.
    """
    M0, _ = _coerce(L0, "L0")
    M1, _ = _coerce(L1, "L1")
    M2, _ = _coerce(L2, "L2")
    t = float(t)
    result = homogenized_generator(M0, M1, M2, tol_zero=tol_zero)
    P = result.projector
    limit = P @ scipy.linalg.expm(t * result.l_infinity) @ P
    out = []
    for g in gammas:
        g = float(g)
        full = scipy.linalg.expm(t * (M0 + g * M1 + g * g * M2))
        out.append((g, float(np.linalg.norm(full - limit, 2))))
    return out
