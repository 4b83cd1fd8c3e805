import json
import math

import numpy as np
import pytest

from aqeclab.codes import (
    binomial_code,
    break_even_pair,
    code_pair_from_coeffs,
    engineered_jump,
    error_basis,
    hamiltonian_distance,
    has_vacuum_branch,
    kl_check,
    kl_compensator,
    load_code_file,
    load_sqrt3_code_file,
    logical_paulis,
    mean_photon_number,
    naive_jump,
    recovery_coupling,
    rl_code,
    save_code_file,
    shifted_fock_code,
    single_branch_jump,
)
from aqeclab.fock import annihilation, identity, number


class TestCodeConstruction:
    def test_rl_code_is_fock_2_and_4(self):
        code = code_pair_from_coeffs([0.0, 1.0], [1.0], truncation=7)
        assert abs(code.zero_logical.amplitudes[4]) == pytest.approx(1.0)
        assert abs(code.one_logical.amplitudes[2]) == pytest.approx(1.0)

    def test_single_entry_vectors_give_orthogonal_pair(self):
        code = code_pair_from_coeffs([1.0], [1.0], truncation=5)
        assert abs(code.zero_logical.amplitudes[0]) == pytest.approx(1.0)
        assert abs(code.one_logical.amplitudes[2]) == pytest.approx(1.0)
        assert code.zero_logical.inner(code.one_logical) == 0.0

    def test_binomial_mean_photon_number(self):
        assert mean_photon_number(binomial_code()) == pytest.approx(2.0)

    def test_rl_mean_photon_number(self):
        assert mean_photon_number(rl_code()) == pytest.approx(3.0)

    def test_break_even_mean_photon_number(self):
        assert mean_photon_number(break_even_pair()) == pytest.approx(0.5)

    def test_rejects_unnormalized_coefficients(self):
        with pytest.raises(ValueError, match="unit 2-norm"):
            code_pair_from_coeffs([0.5, 0.5], [1.0], truncation=7)

    def test_rejects_small_truncation(self):
        with pytest.raises(ValueError, match="truncation"):
            code_pair_from_coeffs([0.0, 1.0], [1.0], truncation=4)

    @pytest.mark.parametrize("seed", range(4))
    def test_ansatz_codes_orthogonal_exactly(self, seed):
        rng = np.random.default_rng(seed)
        c0 = rng.normal(size=2)
        c0 /= np.linalg.norm(c0)
        c1 = rng.normal(size=2)
        c1 /= np.linalg.norm(c1)
        code = code_pair_from_coeffs(c0, c1, truncation=9)
        assert code.zero_logical.inner(code.one_logical) == 0.0


class TestEngineeredJump:
    def test_rl_jump_matrix(self):
        l_eng = engineered_jump(rl_code())
        expected = np.zeros((7, 7), dtype=complex)
        expected[4, 3] = 1.0 / math.sqrt(2.0)
        expected[2, 1] = 1.0 / math.sqrt(2.0)
        np.testing.assert_allclose(l_eng.data, expected, atol=1e-14)

    def test_unit_trace_norm(self):
        for code in (rl_code(), binomial_code(), shifted_fock_code(3)):
            l_eng = engineered_jump(code)
            tr = np.trace(l_eng.data.conj().T @ l_eng.data).real
            assert tr == pytest.approx(1.0, abs=1e-12)

    def test_vacuum_codeword_rejected(self):
        with pytest.raises(ValueError, match="photon content"):
            engineered_jump(break_even_pair())

    def test_recovery_is_information_preserving(self):
        # L maps each normalized error state back to its codeword with one
        # common factor; cross terms vanish
        for code in (rl_code(), binomial_code()):
            l_eng = engineered_jump(code)
            basis = error_basis(code)
            out0 = l_eng.data @ basis.zero_error.amplitudes
            out1 = l_eng.data @ basis.one_error.amplitudes
            amp0 = np.vdot(code.zero_logical.amplitudes, out0)
            amp1 = np.vdot(code.one_logical.amplitudes, out1)
            assert amp0 == pytest.approx(amp1, abs=1e-12)
            cross0 = np.vdot(code.one_logical.amplitudes, out0)
            cross1 = np.vdot(code.zero_logical.amplitudes, out1)
            assert abs(cross0) <= 1e-10 and abs(cross1) <= 1e-10

    def test_recovery_coupling_unit_branch_weights(self):
        lo = recovery_coupling(rl_code())
        assert lo.data[4, 3] == pytest.approx(1.0)
        assert lo.data[2, 1] == pytest.approx(1.0)


class TestNaiveJump:
    def test_returns_error_state_to_code_space_undisturbed(self):
        l_eng = naive_jump(7)
        for theta, phi in ((0.9, 0.0), (1.7, 1.2), (2.4, 4.0)):
            c, s = math.cos(theta / 2.0), math.sin(theta / 2.0) * np.exp(1j * phi)
            err = np.zeros(7, dtype=complex)
            err[1] = math.sqrt(2.0) * c
            err[3] = 2.0 * s
            out = l_eng.data @ err
            expected = np.zeros(7, dtype=complex)
            expected[2], expected[4] = c, s
            ratio = out[2] / expected[2]
            np.testing.assert_allclose(out, ratio * expected, atol=1e-12)
            assert ratio.real == pytest.approx(2.0 / math.sqrt(3.0))

    def test_unit_trace_norm(self):
        l_eng = naive_jump()
        assert np.trace(l_eng.data.conj().T @ l_eng.data).real == pytest.approx(1.0)

    def test_unequal_branch_weights(self):
        ll = naive_jump().dag() @ naive_jump()
        assert ll.data[1, 1].real == pytest.approx(2.0 / 3.0)
        assert ll.data[3, 3].real == pytest.approx(1.0 / 3.0)
        assert ll.data[1, 1].real > ll.data[3, 3].real


class TestShiftedCodes:
    def test_m2_is_rl_code(self):
        code = shifted_fock_code(2)
        rl = rl_code()
        np.testing.assert_array_equal(code.zero_logical.amplitudes,
                                      rl.zero_logical.amplitudes)
        np.testing.assert_array_equal(code.one_logical.amplitudes,
                                      rl.one_logical.amplitudes)

    def test_m0_has_vacuum_branch(self):
        code = shifted_fock_code(0)
        assert has_vacuum_branch(code)
        with pytest.raises(ValueError):
            engineered_jump(code)
        single = single_branch_jump(code)
        expected = np.zeros((5, 5), dtype=complex)
        expected[2, 1] = 1.0
        np.testing.assert_allclose(single.data, expected, atol=1e-14)

    @pytest.mark.parametrize("m", [0, 2, 4, 7])
    def test_code_average_photon_number(self, m):
        # sphere-averaged jump probability scales as (m+1) gamma_a
        assert mean_photon_number(shifted_fock_code(m)) == pytest.approx(m + 1.0)

    @pytest.mark.parametrize("m", range(2, 9))
    def test_engineered_jump_distance_one(self, m):
        code = shifted_fock_code(m)
        assert hamiltonian_distance(engineered_jump(code)) == 1


class TestLogicalPaulis:
    def test_rl_sigma_x_matrix(self):
        paulis = logical_paulis(rl_code())
        expected = np.zeros((7, 7), dtype=complex)
        expected[2, 4] = 1.0
        expected[4, 2] = 1.0
        np.testing.assert_allclose(paulis.sx.data, expected, atol=1e-14)

    def test_sigma_z_squared_is_code_identity(self):
        for code in (rl_code(), binomial_code()):
            paulis = logical_paulis(code)
            np.testing.assert_allclose((paulis.sz @ paulis.sz).data, paulis.s0.data,
                                       atol=1e-12)

    def test_commutator_algebra(self):
        for code in (rl_code(), binomial_code(), shifted_fock_code(4)):
            paulis = logical_paulis(code)
            comm = (paulis.sx @ paulis.sy).data - (paulis.sy @ paulis.sx).data
            np.testing.assert_allclose(comm, 2j * paulis.sz.data, atol=1e-12)

    def test_paulis_hermitian(self):
        paulis = logical_paulis(rl_code())
        for op in (paulis.s0, paulis.sx, paulis.sy, paulis.sz):
            assert op.hermitian


class TestHamiltonianDistance:
    def test_engineered_jump_distance(self):
        assert hamiltonian_distance(engineered_jump(rl_code())) == 1

    def test_logical_gate_distance(self):
        paulis = logical_paulis(rl_code())
        assert hamiltonian_distance(paulis.sx) == 2
        assert hamiltonian_distance(paulis.sy) == 2

    def test_number_operator_distance_zero(self):
        assert hamiltonian_distance(number(7)) == 0

    def test_threshold_filters_noise(self):
        noisy = number(5) + 1e-12 * annihilation(5)
        assert hamiltonian_distance(noisy) == 0


class TestKLCheck:
    def test_rl_code_with_loss(self):
        report = kl_check(rl_code())
        assert report.offdiag_violation == pytest.approx(0.0, abs=1e-12)
        assert report.diag_violation == pytest.approx(2.0, abs=1e-12)

    def test_binomial_code_balanced(self):
        report = kl_check(binomial_code())
        assert report.diag_violation == pytest.approx(0.0, abs=1e-12)
        assert report.offdiag_violation == pytest.approx(0.0, abs=1e-12)

    def test_compensated_loss_satisfies_condition(self):
        code = rl_code()
        a_comp = annihilation(7) + kl_compensator(7)
        report = kl_check(code, [identity(code.space), a_comp])
        assert report.diag_violation == pytest.approx(0.0, abs=1e-12)
        assert report.offdiag_violation == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_ansatz_codes_have_no_offdiagonal_violation(self, seed):
        rng = np.random.default_rng(seed)
        c0 = rng.normal(size=2)
        c0 /= np.linalg.norm(c0)
        c1 = rng.normal(size=2)
        c1 /= np.linalg.norm(c1)
        code = code_pair_from_coeffs(c0, c1, truncation=9)
        report = kl_check(code)
        assert report.offdiag_violation <= 1e-12

    def test_alpha_matrices_shape(self):
        report = kl_check(rl_code())
        assert set(report.alpha) == {(0, 0), (0, 1), (1, 0), (1, 1)}
        assert report.alpha[(1, 1)].shape == (2, 2)
        # number expectations of |4> and |2>
        assert report.alpha[(1, 1)][0, 0].real == pytest.approx(4.0)
        assert report.alpha[(1, 1)][1, 1].real == pytest.approx(2.0)


class TestKLCompensator:
    def test_balanced_error_probability(self):
        a_comp = (annihilation(7) + kl_compensator(7)).data
        prod = a_comp.conj().T @ a_comp
        assert prod[2, 2].real == pytest.approx(4.0)
        assert prod[4, 4].real == pytest.approx(4.0)

    def test_action_on_zero_logical_unchanged(self):
        a_comp = (annihilation(7) + kl_compensator(7)).data
        out = a_comp @ rl_code().zero_logical.amplitudes
        expected = np.zeros(7, dtype=complex)
        expected[3] = 2.0
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_action_on_one_logical_amplified(self):
        a_comp = (annihilation(7) + kl_compensator(7)).data
        out = a_comp @ rl_code().one_logical.amplitudes
        expected = np.zeros(7, dtype=complex)
        expected[1] = 2.0  # sqrt(2) + (2 - sqrt(2))
        np.testing.assert_allclose(out, expected, atol=1e-14)


class TestCodeFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "code.json"
        save_code_file(path, [0.0, 1.0], [1.0], truncation=7)
        code = load_code_file(path)
        np.testing.assert_array_equal(code.zero_logical.amplitudes,
                                      rl_code().zero_logical.amplitudes)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text(json.dumps({"c0": [1.0], "truncation": 5}))
        with pytest.raises(ValueError, match="missing key"):
            load_code_file(path)

    def test_sqrt3_file_accepted_at_matching_mean_photon(self, tmp_path):
        x1 = math.sqrt((math.sqrt(3.0) - 1.0) / 2.0)
        x0 = math.sqrt(1.0 - x1 * x1)
        path = tmp_path / "sqrt3.json"
        save_code_file(path, [x0, x1], [1.0], truncation=7)
        code = load_sqrt3_code_file(path)
        assert mean_photon_number(code) == pytest.approx(math.sqrt(3.0), abs=1e-9)

    def test_sqrt3_file_rejected_otherwise(self, tmp_path):
        path = tmp_path / "notsqrt3.json"
        save_code_file(path, [0.0, 1.0], [1.0], truncation=7)
        with pytest.raises(ValueError, match="sqrt"):
            load_sqrt3_code_file(path)
