"""Kernel projector, pseudo-inverse, homogenized generator."""

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from qtraj import (
    CenteringError, JordanBlockError, SpectralPropertyError,
    check_centering, compare_semigroups, homogenized_generator,
    kernel_projector, lindblad_from_gksl, pointer_state, pseudo_inverse,
    rabi_model, three_level_model, transition_rates,
)
from qtraj.homogenize import spectral_data
from qtraj.superop import SuperOperator, basis_matrix

from conftest import random_qnd_model


def lindblad_triple(model):
    return tuple(lindblad_from_gksl(s) for s in model.levels)


def integral_pseudo_inverse(M, P, gap, tol=1e-9):
    """Quadrature oracle: -int_0^inf (e^{sM} - P) ds, truncated where the
    integrand has decayed below tol."""
    T = max(60.0 / gap, 1.0)
    val, _ = scipy.integrate.quad_vec(
        lambda s: (scipy.linalg.expm(s * M) - P).ravel(), 0.0, T,
        epsabs=1e-11, epsrel=1e-11)
    return -val.reshape(M.shape)


class TestKernelProjector:
    def test_two_by_two_example(self):
        # eigenbasis (1,0) and (1,-1): projector [[1,1],[0,0]]
        M = np.array([[0.0, 1.0], [0.0, -1.0]])
        P = kernel_projector(M)
        assert np.abs(P - np.array([[1.0, 1.0], [0.0, 0.0]])).max() < 1e-12
        # cross-check against the long-time exponential
        assert np.abs(P - scipy.linalg.expm(40.0 * M)).max() < 1e-12

    def test_scalar_zero_generator(self):
        assert kernel_projector(np.zeros((1, 1)))[0, 0] == 1.0

    def test_trivial_kernel_gives_zero_projector(self):
        P = kernel_projector(np.array([[-1.0, 0.0], [0.0, -2.0]]))
        assert np.abs(P).max() == 0.0

    def test_demo_level2_projects_onto_diagonals(self):
        l2 = lindblad_from_gksl(three_level_model(10.0).level2)
        P = kernel_projector(l2)
        for i in range(3):
            for j in range(3):
                E = basis_matrix(i, j, 3)
                expected = E if i == j else np.zeros((3, 3))
                assert np.abs(P.apply(E) - expected).max() < 1e-12

    def test_agrees_with_long_time_exponential(self):
        for seed in range(6):
            rng = np.random.default_rng(seed)
            m = random_qnd_model(rng, int(rng.integers(2, 5)))
            l2 = lindblad_from_gksl(m.level2).matrix
            _, _, gap = spectral_data(l2)
            P = kernel_projector(l2)
            t_large = 50.0 / gap
            assert np.abs(P - scipy.linalg.expm(t_large * l2)).max() < 1e-6

    def test_rejects_purely_imaginary_eigenvalues(self):
        M = np.array([[0.0, 1.0], [-1.0, 0.0]])   # eigenvalues +-i
        with pytest.raises(SpectralPropertyError):
            kernel_projector(M)

    def test_rejects_growth(self):
        with pytest.raises(SpectralPropertyError):
            kernel_projector(np.array([[1.0]]))

    def test_rejects_jordan_block_at_zero(self):
        M = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(JordanBlockError):
            kernel_projector(M)


class TestPseudoInverse:
    def test_two_by_two_example(self):
        M = np.array([[0.0, 1.0], [0.0, -1.0]])
        P = kernel_projector(M)
        pinv = pseudo_inverse(M, P)
        v = np.array([1.0, -1.0])          # eigenvector of eigenvalue -1
        assert np.abs(pinv @ v + v).max() < 1e-12
        assert np.abs(pinv @ np.array([1.0, 0.0])).max() < 1e-12

    def test_diagonal_reciprocal(self):
        M = np.diag([0.0, -2.0])
        pinv = pseudo_inverse(M, kernel_projector(M))
        assert np.abs(pinv - np.diag([0.0, -0.5])).max() < 1e-14

    def test_zero_generator_gives_zero(self):
        M = np.zeros((3, 3))
        assert np.abs(pseudo_inverse(M, kernel_projector(M))).max() == 0.0

    def test_matches_integral_formula(self):
        for seed in range(4):
            rng = np.random.default_rng(seed)
            m = random_qnd_model(rng, 2)
            M = lindblad_from_gksl(m.level2).matrix
            _, _, gap = spectral_data(M)
            P = kernel_projector(M)
            pinv = pseudo_inverse(M, P)
            oracle = integral_pseudo_inverse(M, P, gap)
            assert np.abs(pinv - oracle).max() < 1e-7


class TestCheckCentering:
    def test_diagonal_models_are_centered(self, rng):
        m = random_qnd_model(rng, 3)
        l0, l1, l2 = lindblad_triple(m)
        P = kernel_projector(l2.matrix)
        assert check_centering(l1.matrix, P)

    def test_identity_is_not_centered(self):
        l2 = lindblad_from_gksl(three_level_model(5.0).level2)
        P = kernel_projector(l2.matrix)
        assert not check_centering(np.eye(9), P)

    def test_zero_is_centered(self):
        l2 = lindblad_from_gksl(three_level_model(5.0).level2)
        P = kernel_projector(l2.matrix)
        assert check_centering(np.zeros((9, 9)), P)


class TestHomogenizedGenerator:
    def test_operator_identities_on_random_models(self):
        # P^2 = P, P L2 = L2 P = 0, pinv P = P pinv = 0,
        # L2 pinv = pinv L2 = I - P, all within 1e-9; 20 random models
        for seed in range(20):
            rng = np.random.default_rng(seed)
            d = (2, 3, 4)[seed % 3]
            m = random_qnd_model(rng, d)
            l0, l1, l2 = (op.matrix for op in lindblad_triple(m))
            res = homogenized_generator(l0, l1, l2)
            P, pinv = res.projector, res.pseudo_inverse
            eye = np.eye(d * d)
            assert np.linalg.norm(P @ P - P, 2) < 1e-9
            assert np.linalg.norm(P @ l2, 2) < 1e-9
            assert np.linalg.norm(l2 @ P, 2) < 1e-9
            assert np.linalg.norm(pinv @ P, 2) < 1e-9
            assert np.linalg.norm(P @ pinv, 2) < 1e-9
            assert np.linalg.norm(l2 @ pinv - (eye - P), 2) < 1e-9
            assert np.linalg.norm(pinv @ l2 - (eye - P), 2) < 1e-9

    def test_no_intermediate_scale_reduces_to_compression(self, rng):
        m = random_qnd_model(rng, 3, with_h1=False)
        stripped = m.level1
        l0, l1, l2 = lindblad_triple(m)
        zero1 = SuperOperator(3, np.zeros((9, 9)))
        res = homogenized_generator(l0, zero1, l2)
        P = res.projector
        expected = P @ l0 @ P
        assert np.abs(res.l_infinity.matrix - expected.matrix).max() < 1e-12

    def test_demo_model_matches_jump_rates(self):
        m = three_level_model(10.0)
        res = homogenized_generator(*lindblad_triple(m))
        T = transition_rates(m).rates
        for i in range(3):
            out = res.l_infinity.apply(pointer_state(i, 3))
            assert np.abs(np.diagonal(out).real - T[i]).max() < 1e-10

    def test_rabi_model_rate(self):
        res = homogenized_generator(*lindblad_triple(rabi_model(10.0)))
        out = res.l_infinity.apply(pointer_state(0, 2))
        assert abs(out[1, 1].real - 1.0) < 1e-10

    def test_matches_analytic_rates_on_random_models(self):
        # the acceptance identity at unit-test scale
        for seed in range(8):
            rng = np.random.default_rng(1000 + seed)
            d = (2, 3, 4)[seed % 3]
            m = random_qnd_model(rng, d)
            res = homogenized_generator(*lindblad_triple(m))
            T = transition_rates(m).rates
            for i in range(d):
                out = res.l_infinity.apply(pointer_state(i, d))
                assert np.abs(np.diagonal(out).real - T[i]).max() < 1e-8

    def test_centering_failure_raises(self):
        l2 = lindblad_from_gksl(three_level_model(5.0).level2)
        with pytest.raises(CenteringError):
            homogenized_generator(np.zeros((9, 9)), np.eye(9), l2.matrix)

    def test_limit_generator_is_trace_preserving(self, rng):
        from qtraj import check_trace_preserving
        m = random_qnd_model(rng, 3)
        res = homogenized_generator(*lindblad_triple(m))
        assert check_trace_preserving(res.l_infinity, 1e-10)


class TestCompareSemigroups:
    def test_pure_dominant_scale_decays_like_the_gap(self):
        # L0 = L1 = 0: error(gamma) = ||e^{t gamma^2 L2} - P||
        m = three_level_model(5.0)
        l2 = lindblad_from_gksl(m.level2).matrix
        z = np.zeros_like(l2)
        t = 0.05
        pairs = compare_semigroups(z, z, l2, [1.0, 2.0, 3.0], t)
        P = kernel_projector(l2)
        for g, err in pairs:
            direct = np.linalg.norm(scipy.linalg.expm(t * g * g * l2) - P, 2)
            assert abs(err - direct) < 1e-12
        # spectral decay: gap = 1/4 on the slowest coherence
        errs = [e for _, e in pairs]
        assert errs[0] > errs[1] > errs[2]

    def test_demo_model_converges_far_beyond_the_generic_rate(self):
        # this model has no intermediate scale and its level-0 generator
        # commutes with the dominant one, so the finite-gamma corrections
        # vanish identically and the distance collapses to the coherence
        # decay e^{-gamma^2 t / 4}; by gamma = 10 it sits at the expm
        # roundoff floor instead of the generic O(1/gamma) tail
        m = three_level_model(10.0)
        pairs = compare_semigroups(*lindblad_triple(m), [3.0, 10.0, 30.0], 1.0)
        errs = dict((int(g), e) for g, e in pairs)
        assert errs[3] > 1e-5
        assert errs[10] < 1e-10
        assert errs[30] < 1e-10

    def test_intermediate_scale_model_shows_one_over_gamma(self):
        # the two-level drive model has a genuine 1/gamma tail
        pairs = compare_semigroups(*lindblad_triple(rabi_model(10.0)),
                                   [10.0, 30.0, 100.0], 1.0)
        errs = [e for _, e in pairs]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] / errs[0] <= 0.3
