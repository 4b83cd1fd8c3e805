import numpy as np
import pytest

from aqeclab.fock import (
    DensityMatrix,
    Ket,
    Operator,
    SpaceSignature,
    annihilation,
    as_space,
    creation,
    density_from_ket,
    expectation,
    fock_ket,
    identity,
    ket,
    number,
    partial_trace,
    projector,
    qubit_excited,
    qubit_ground,
    qubit_lowering,
    qubit_raising,
    tensor,
)


def random_ket(dim, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return Ket(as_space(dim), v / np.linalg.norm(v))


class TestSpaceSignature:
    def test_dim_is_product(self):
        assert SpaceSignature((7, 2)).dim == 14

    def test_rejects_zero_factor(self):
        with pytest.raises(ValueError):
            SpaceSignature((7, 0))


class TestAnnihilation:
    def test_qubit_lowering_matrix(self):
        np.testing.assert_array_equal(annihilation(2).data,
                                      np.array([[0, 1], [0, 0]], dtype=complex))

    def test_ladder_entry(self):
        assert annihilation(5).data[3, 4] == pytest.approx(2.0)

    def test_number_expectation(self):
        n = creation(5) @ annihilation(5)
        assert n.data[2, 2].real == pytest.approx(2.0)

    def test_ladder_rule_all_levels(self):
        dim = 9
        a = annihilation(dim).data
        for n in range(1, dim):
            assert a[n - 1, n] == pytest.approx(np.sqrt(n))

    def test_top_state_lowering(self):
        a = annihilation(6).data
        assert a[4, 5] == pytest.approx(np.sqrt(5))

    def test_rejects_dim_below_two(self):
        with pytest.raises(ValueError):
            annihilation(1)


class TestQubitOps:
    def test_lowering_maps_excited_to_ground(self):
        out = qubit_lowering().data @ qubit_excited().amplitudes
        np.testing.assert_allclose(out, qubit_ground().amplitudes)

    def test_raising_lowering_is_excited_projector(self):
        prod = (qubit_raising() @ qubit_lowering()).data
        np.testing.assert_allclose(prod, np.diag([0.0, 1.0]))

    def test_lowering_squared_vanishes(self):
        prod = (qubit_lowering() @ qubit_lowering()).data
        assert np.abs(prod).max() == 0.0


class TestTensor:
    def test_identity_tensor_identity(self):
        out = tensor(identity(2), identity(3))
        np.testing.assert_array_equal(out.data, np.eye(6))
        assert out.space.factors == (2, 3)

    def test_lowering_on_first_factor(self):
        op = tensor(annihilation(3), identity(2))
        state = tensor(fock_ket(3, 1), qubit_excited())
        out = op.data @ state.amplitudes
        expected = tensor(fock_ket(3, 0), qubit_excited()).amplitudes
        np.testing.assert_allclose(out, expected)

    def test_mixed_product_identity(self):
        # tensor(A,B) @ tensor(C,D) == tensor(A@C, B@D), oracle = plain matmul
        rng = np.random.default_rng(42)
        a, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
        b, d = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2))
        ops = {k: Operator(as_space(v.shape[0]), v) for k, v in
               {"a": a, "b": b, "c": c, "d": d}.items()}
        lhs = (tensor(ops["a"], ops["b"]) @ tensor(ops["c"], ops["d"])).data
        rhs = np.kron(a @ c, b @ d)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_associativity_exact(self):
        # integer entries make the triple products exact in float64
        rng = np.random.default_rng(3)
        mats = [rng.integers(-4, 5, size=(d, d)).astype(float) for d in (2, 3, 2)]
        ops = [Operator(as_space(m.shape[0]), m) for m in mats]
        left = tensor(tensor(ops[0], ops[1]), ops[2])
        right = tensor(ops[0], tensor(ops[1], ops[2]))
        np.testing.assert_array_equal(left.data, right.data)
        assert left.space.factors == right.space.factors == (2, 3, 2)


class TestProjector:
    def test_vacuum_projector(self):
        np.testing.assert_array_equal(projector(fock_ket(4, 0)).data,
                                      np.diag([1.0, 0, 0, 0]).astype(complex))

    def test_plus_state_block(self):
        plus = ket(2, np.array([1.0, 1.0]) / np.sqrt(2))
        np.testing.assert_allclose(projector(plus).data, np.full((2, 2), 0.5), atol=1e-15)

    def test_idempotent_random(self):
        p = projector(random_ket(6, seed=7))
        np.testing.assert_allclose((p @ p).data, p.data, atol=1e-12)

    def test_eigenvalues_one_and_zeros(self):
        p = projector(random_ket(6, seed=11))
        eigs = np.sort(np.linalg.eigvalsh(p.data))
        np.testing.assert_allclose(eigs[:-1], 0.0, atol=1e-10)
        assert eigs[-1] == pytest.approx(1.0, abs=1e-10)

    def test_rejects_unnormalized(self):
        bad = Ket(as_space(3), np.array([2.0, 0, 0]), normalized=False)
        with pytest.raises(ValueError):
            projector(bad)


class TestExpectation:
    def test_fock_state_number(self):
        state = density_from_ket(fock_ket(5, 2))
        val = expectation(number(5), state)
        assert val == pytest.approx(2.0)

    def test_even_mixture_photon_number(self):
        data = 0.5 * (projector(fock_ket(7, 2)).data + projector(fock_ket(7, 4)).data)
        state = DensityMatrix(as_space(7), data)
        assert expectation(number(7), state).real == pytest.approx(3.0)

    def test_trivial_encoding_photon_number(self):
        data = 0.5 * (projector(fock_ket(4, 0)).data + projector(fock_ket(4, 1)).data)
        state = DensityMatrix(as_space(4), data)
        assert expectation(number(4), state).real == pytest.approx(0.5)

    def test_space_mismatch_raises(self):
        with pytest.raises(ValueError, match="mismatch"):
            expectation(number(5), density_from_ket(fock_ket(4, 0)))

    @pytest.mark.parametrize("seed", range(5))
    def test_hermitian_expectation_real(self, seed):
        rng = np.random.default_rng(seed)
        h = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        h = h + h.conj().T
        op = Operator(as_space(6), h, hermitian=True)
        state = density_from_ket(random_ket(6, seed + 100))
        val = expectation(op, state)
        assert abs(val.imag) <= 1e-10


class TestOperatorValidation:
    def test_hermitian_flag_checked(self):
        with pytest.raises(ValueError, match="Hermitian"):
            Operator(as_space(2), np.array([[0, 1], [0, 0]]), hermitian=True)

    def test_shape_must_match_space(self):
        with pytest.raises(ValueError):
            Operator(as_space(3), np.eye(2))

    def test_data_read_only(self):
        op = identity(3)
        with pytest.raises(ValueError):
            op.data[0, 0] = 2.0


class TestDensityMatrix:
    def test_trace_validated(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(as_space(2), np.diag([0.6, 0.6]))

    def test_positivity_validated(self):
        data = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix(as_space(2), data)

    def test_hermiticity_validated(self):
        data = np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(as_space(2), data)


class TestPartialTrace:
    def test_product_state_reduces_to_factor(self):
        full = density_from_ket(tensor(fock_ket(3, 1), qubit_ground()))
        red = partial_trace(full, keep=[0])
        np.testing.assert_allclose(red.data, projector(fock_ket(3, 1)).data, atol=1e-14)

    def test_traces_are_consistent(self):
        psi = random_ket(12, seed=5)
        full = DensityMatrix(SpaceSignature((3, 4)),
                             np.outer(psi.amplitudes, psi.amplitudes.conj()))
        red = partial_trace(full, keep=[1])
        assert red.space.factors == (4,)
        assert np.trace(red.data).real == pytest.approx(1.0, abs=1e-12)

    def test_entangled_pair_reduces_to_mixed(self):
        bell = ket((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))
        red = partial_trace(density_from_ket(bell), keep=[0])
        np.testing.assert_allclose(red.data, np.eye(2) / 2, atol=1e-14)

    def test_three_factor_keep_first(self):
        psi = tensor(fock_ket(3, 2), tensor(qubit_excited(), fock_ket(4, 0)))
        red = partial_trace(density_from_ket(psi), keep=[0])
        np.testing.assert_allclose(red.data, projector(fock_ket(3, 2)).data, atol=1e-14)
