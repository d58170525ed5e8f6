"""Structural checks, eigenvalue formulas, jump rates, damping rates."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qtraj import (
    GkslSpec, IdentifiabilityError, MarkovGenerator, ModelValidationError,
    ThreeScaleModel, check_identifiability, check_qnd, decoherence_rates,
    lindblad_from_gksl, markov_from_pi_l_pi, tau_eigenvalues, three_level_model,
    transition_rates,
)
from qtraj.superop import basis_matrix, hs_norm

from conftest import random_gksl, random_hermitian, random_qnd_model


def diag_spec(d, entries, eta=1.0, h=None):
    return GkslSpec(dim=d, hamiltonian=np.zeros((d, d)) if h is None else h,
                    kraus=(np.diag(np.asarray(entries, dtype=complex)),),
                    efficiencies=(float(eta),))


class TestCheckQnd:
    def test_demo_model_passes(self):
        rep = check_qnd(three_level_model(10.0))
        assert rep.qnd_ok and rep.identifiability_ok and rep.decoherence_ok
        assert rep.witnesses == ()

    def test_offdiagonal_level2_kraus_witnessed(self):
        m = three_level_model(10.0)
        bad2 = GkslSpec(dim=3, hamiltonian=np.zeros((3, 3)),
                        kraus=(basis_matrix(0, 1, 3),), efficiencies=(1.0,))
        rep = check_qnd(ThreeScaleModel(m.level0, m.level1, bad2, 10.0))
        assert not rep.qnd_ok
        assert (0, 1, 0) in rep.witnesses
        assert rep.max_offdiag == 1.0

    def test_level0_is_unconstrained(self, rng):
        level0 = random_gksl(rng, 3, n_kraus=3)   # dense, arbitrary
        m = ThreeScaleModel(level0, GkslSpec.empty(3), GkslSpec.empty(3), 1.0)
        assert check_qnd(m).qnd_ok

    def test_h1_is_unconstrained(self, rng):
        level1 = GkslSpec(dim=3, hamiltonian=random_hermitian(rng, 3))
        m = ThreeScaleModel(GkslSpec.empty(3), level1, GkslSpec.empty(3), 1.0)
        assert check_qnd(m).qnd_ok

    def test_offdiagonal_level1_kraus_fails(self):
        level1 = GkslSpec(dim=2, hamiltonian=np.zeros((2, 2)),
                          kraus=(np.array([[0, 1], [0, 0]], dtype=complex),),
                          efficiencies=(0.0,))
        m = ThreeScaleModel(GkslSpec.empty(2), level1, GkslSpec.empty(2), 1.0)
        assert not check_qnd(m).qnd_ok


class TestCheckIdentifiability:
    def test_perfectly_read_separated_channel(self):
        rep = check_identifiability(diag_spec(3, [1, 2, 3], eta=1.0))
        assert rep.identifiability_ok and rep.decoherence_ok

    def test_unread_channel_fails_identifiability_only(self):
        rep = check_identifiability(diag_spec(3, [1, 2, 3], eta=0.0))
        assert not rep.identifiability_ok
        assert rep.decoherence_ok

    def test_imaginary_gaps_fail_identifiability_only(self):
        rep = check_identifiability(diag_spec(2, [1j, 2j], eta=1.0))
        assert not rep.identifiability_ok
        assert rep.decoherence_ok

    def test_no_channels_fails_both(self):
        rep = check_identifiability(GkslSpec.empty(2))
        assert not rep.identifiability_ok and not rep.decoherence_ok

    def test_implication_identifiability_to_decoherence(self, rng):
        for seed in range(30):
            r = np.random.default_rng(seed)
            spec = random_gksl(r, 3, n_kraus=2, diagonal=True)
            rep = check_identifiability(spec)
            assert (not rep.identifiability_ok) or rep.decoherence_ok


class TestTauEigenvalues:
    def test_demo_values(self):
        tau = tau_eigenvalues(three_level_model(10.0).level2)
        assert tau[0, 1] == -0.5 and tau[1, 0] == -0.5
        assert tau[0, 2] == -2.0 and tau[2, 0] == -2.0
        assert tau[1, 2] == -0.5
        assert np.all(np.diagonal(tau) == 0.0)

    def test_hamiltonian_only(self):
        spec = GkslSpec(dim=2, hamiltonian=np.diag([1.0, -1.0]))
        tau = tau_eigenvalues(spec)
        assert tau[0, 1] == -2j and tau[1, 0] == 2j

    def test_zero_spec(self):
        tau = tau_eigenvalues(GkslSpec.empty(4))
        assert np.all(tau == 0.0)

    def test_rejects_offdiagonal_input(self):
        spec = GkslSpec(dim=2, hamiltonian=np.zeros((2, 2)),
                        kraus=(basis_matrix(0, 1, 2),), efficiencies=(1.0,))
        with pytest.raises(ModelValidationError):
            tau_eigenvalues(spec)

    @given(st.integers(0, 10 ** 6))
    def test_structure_and_eigenvector_property(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 5))
        spec = random_gksl(rng, d, n_kraus=2, diagonal=True)
        tau = tau_eigenvalues(spec)
        assert np.all(np.diagonal(tau) == 0.0)
        assert np.abs(tau - tau.conj().T).max() < 1e-12
        assert tau.real.max() <= 0.0
        gen = lindblad_from_gksl(spec)
        for i in range(d):
            for j in range(d):
                E = basis_matrix(i, j, d)
                assert hs_norm(gen.apply(E) - tau[i, j] * E) <= 1e-10


class TestMarkovFromPiLPi:
    def test_lowering_kraus(self):
        spec = GkslSpec(dim=2, hamiltonian=np.zeros((2, 2)),
                        kraus=(basis_matrix(1, 0, 2),), efficiencies=(0.5,))
        Q = markov_from_pi_l_pi(spec)
        assert np.array_equal(Q.rates, np.array([[-1.0, 1.0], [0.0, 0.0]]))

    def test_hamiltonian_only_gives_zero(self, rng):
        spec = GkslSpec(dim=3, hamiltonian=random_hermitian(rng, 3))
        assert np.abs(markov_from_pi_l_pi(spec).rates).max() == 0.0

    def test_zero_spec(self):
        assert np.abs(markov_from_pi_l_pi(GkslSpec.empty(3)).rates).max() == 0.0

    def test_matches_generator_compression(self, rng):
        # Q_{i,j} must equal (L(E_{i,i}))_{j,j} for dense Kraus operators
        spec = random_gksl(rng, 3, n_kraus=2)
        gen = lindblad_from_gksl(spec)
        Q = markov_from_pi_l_pi(spec).rates
        for i in range(3):
            out = gen.apply(basis_matrix(i, i, 3))
            assert np.abs(np.diagonal(out).real - Q[i]).max() < 1e-12

    def test_zero_iff_diagonal_kraus(self):
        # 20 random specs: the compressed generator vanishes exactly when
        # every Kraus operator is diagonal
        for seed in range(20):
            rng = np.random.default_rng(seed)
            diagonal = bool(seed % 2)
            spec = random_gksl(rng, 3, n_kraus=2, diagonal=diagonal)
            Q = markov_from_pi_l_pi(spec).rates
            if diagonal:
                assert np.abs(Q).max() <= 1e-10
            else:
                assert np.abs(Q).max() > 1e-10


class TestTransitionRates:
    def test_demo_model_rates(self):
        T = transition_rates(three_level_model(10.0)).rates
        assert np.array_equal(T, np.ones((3, 3)) - 3 * np.eye(3))

    def test_rabi_hand_value(self):
        # level0 empty, H1 = [[0, 1/2], [1/2, 0]], level2 = diag(0, 1):
        # tau_01 = -1/2, rate = (1/4) / (1/4) * 1 = 1
        level1 = GkslSpec(dim=2, hamiltonian=np.array([[0.0, 0.5], [0.5, 0.0]]))
        m = ThreeScaleModel(GkslSpec.empty(2), level1, diag_spec(2, [0, 1]), 7.0)
        T = transition_rates(m).rates
        assert np.allclose(T, np.array([[-1.0, 1.0], [1.0, -1.0]]), atol=1e-14)

    def test_no_coupling_gives_zero(self):
        m = ThreeScaleModel(GkslSpec.empty(3), GkslSpec.empty(3),
                            diag_spec(3, [1, 2, 3]), 5.0)
        assert np.abs(transition_rates(m).rates).max() == 0.0

    def test_independent_of_level1_kraus_and_h0(self, rng):
        m = random_qnd_model(rng, 3)
        T1 = transition_rates(m).rates
        stripped1 = GkslSpec(dim=3, hamiltonian=m.level1.hamiltonian)
        h0 = GkslSpec(dim=3, hamiltonian=random_hermitian(rng, 3),
                      kraus=m.level0.kraus, efficiencies=m.level0.efficiencies)
        T2 = transition_rates(ThreeScaleModel(h0, stripped1, m.level2, 3.0)).rates
        assert np.abs(T1 - T2).max() < 1e-12

    def test_refuses_unidentifiable_coupled_pair(self):
        level1 = GkslSpec(dim=2, hamiltonian=np.array([[0.0, 0.5], [0.5, 0.0]]))
        unread = diag_spec(2, [0, 1], eta=0.0)
        m = ThreeScaleModel(GkslSpec.empty(2), level1, unread, 2.0)
        with pytest.raises(IdentifiabilityError):
            transition_rates(m)

    def test_uncoupled_pairs_need_no_identifiability(self):
        # H1 = 0: rates reduce to the level-0 compression even though the
        # dominant level reads nothing
        level0 = GkslSpec(dim=2, hamiltonian=np.zeros((2, 2)),
                          kraus=(basis_matrix(1, 0, 2),), efficiencies=(0.0,))
        m = ThreeScaleModel(level0, GkslSpec.empty(2),
                            diag_spec(2, [0, 1], eta=0.0), 2.0)
        T = transition_rates(m).rates
        assert np.array_equal(T, np.array([[-1.0, 1.0], [0.0, 0.0]]))

    @given(st.integers(0, 10 ** 6))
    def test_output_is_a_valid_generator(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 5))
        m = random_qnd_model(rng, d)
        T = transition_rates(m)            # constructor enforces invariants
        assert isinstance(T, MarkovGenerator)

    def test_detailed_balance_witness(self):
        # single level-0 Kraus with (L)_{j,i} = sqrt(p_j) makes
        # p_i T_{i,j} = p_i p_j symmetric, so T is reversible for p
        p = np.array([0.5, 0.3, 0.2])
        K = np.sqrt(np.tile(p[:, None], (1, 3))).astype(complex)
        level0 = GkslSpec(dim=3, hamiltonian=np.zeros((3, 3)), kraus=(K,),
                          efficiencies=(0.0,))
        m = ThreeScaleModel(level0, GkslSpec.empty(3), diag_spec(3, [1, 2, 3]), 4.0)
        T = transition_rates(m).rates
        flux = p[:, None] * T
        assert np.abs(flux - flux.T).max() < 1e-12


class TestDecoherenceRates:
    def test_demo_values_at_gamma_ten(self):
        D = decoherence_rates(three_level_model(10.0))
        assert D[0, 1] == 100.0
        assert D[0, 2] == 400.0
        assert D[1, 2] == 100.0
        assert np.all(np.diagonal(D) == 0.0)

    def test_perfectly_read_imaginary_diagonals_give_zero(self):
        m = ThreeScaleModel(GkslSpec.empty(2), GkslSpec.empty(2),
                            diag_spec(2, [1j, 2j], eta=1.0), 10.0)
        assert np.abs(decoherence_rates(m)).max() == 0.0

    def test_unread_imaginary_diagonals_do_damp(self):
        m = ThreeScaleModel(GkslSpec.empty(2), GkslSpec.empty(2),
                            diag_spec(2, [1j, 2j], eta=0.0), 10.0)
        assert decoherence_rates(m)[0, 1] == 100.0

    def test_empty_levels_give_zero(self):
        m = ThreeScaleModel(random_gksl(np.random.default_rng(0), 3, 2),
                            GkslSpec.empty(3), GkslSpec.empty(3), 10.0)
        assert np.abs(decoherence_rates(m)).max() == 0.0


class TestMarkovGenerator:
    def test_rejects_negative_off_diagonal(self):
        with pytest.raises(ModelValidationError):
            MarkovGenerator(dim=2, rates=np.array([[1.0, -1.0], [0.0, 0.0]]))

    def test_rejects_nonzero_row_sum(self):
        with pytest.raises(ModelValidationError):
            MarkovGenerator(dim=2, rates=np.array([[-1.0, 1.5], [1.0, -1.0]]))

    def test_json_round_trip(self):
        T = MarkovGenerator(dim=2, rates=np.array([[-1.0, 1.0], [2.0, -2.0]]))
        again = MarkovGenerator.from_json(T.to_json())
        assert np.array_equal(again.rates, T.rates)


class TestThreeScaleModel:
    def test_rejects_mismatched_dims(self):
        with pytest.raises(ModelValidationError):
            ThreeScaleModel(GkslSpec.empty(2), GkslSpec.empty(3),
                            GkslSpec.empty(2), 1.0)

    def test_rejects_bad_gamma(self):
        with pytest.raises(ModelValidationError):
            ThreeScaleModel(GkslSpec.empty(2), GkslSpec.empty(2),
                            GkslSpec.empty(2), -1.0)

    def test_json_round_trip(self, rng):
        m = random_qnd_model(rng, 3)
        again = ThreeScaleModel.from_json(m.to_json())
        assert again.gamma == m.gamma
        assert np.array_equal(again.level2.kraus[0], m.level2.kraus[0])

    def test_lindblad_combines_scales(self, rng):
        m = random_qnd_model(rng, 2, gamma=3.0)
        full = m.lindblad()
        parts = (lindblad_from_gksl(m.level0).matrix
                 + 3.0 * lindblad_from_gksl(m.level1).matrix
                 + 9.0 * lindblad_from_gksl(m.level2).matrix)
        assert np.abs(full.matrix - parts).max() < 1e-12
