import math

import numpy as np
import pytest

from aqeclab.codes import binomial_code, code_pair_from_coeffs, rl_code
from aqeclab.fidelity import (
    BlochPoint,
    FidelityCurve,
    RL_CODE_U,
    bloch_grid_fidelity,
    bloch_state,
    break_even_mean_fidelity,
    coarse_grained,
    mean_fidelity_curve,
    mean_fidelity_six,
    mean_fidelity_sphere,
    rl_analytic_mean_fidelity,
    rl_analytic_state_fidelity,
    six_code_states,
    state_fidelity,
    write_bloch_grid_csv,
)
from aqeclab.fock import DensityMatrix, as_space, density_from_ket, fock_ket
from aqeclab.models import effective_recovery_model, fixed_time_channel, full_recovery_model


def random_code(seed, truncation=9):
    rng = np.random.default_rng(seed)
    c0 = rng.normal(size=2)
    c0 /= np.linalg.norm(c0)
    c1 = rng.normal(size=2)
    c1 /= np.linalg.norm(c1)
    return code_pair_from_coeffs(c0, c1, truncation)


def random_cptp_channel(dim, seed, n_kraus=3):
    """Random Kraus channel via a Haar-ish isometry (trace preserving by QR)."""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n_kraus * dim, dim)) + 1j * rng.normal(size=(n_kraus * dim, dim))
    q, _ = np.linalg.qr(g)
    kraus = [q[i * dim:(i + 1) * dim, :] for i in range(n_kraus)]

    def channel(rho: DensityMatrix) -> DensityMatrix:
        out = sum(k @ rho.data @ k.conj().T for k in kraus)
        return DensityMatrix(rho.space, out)

    return channel


def identity_channel(rho):
    return rho


class TestStateFidelity:
    def test_identity(self):
        rho = density_from_ket(fock_ket(5, 2))
        assert state_fidelity(rho, rho) == pytest.approx(1.0)

    def test_orthogonal_states(self):
        rho0 = density_from_ket(fock_ket(5, 2))
        rho1 = density_from_ket(fock_ket(5, 1))
        assert state_fidelity(rho0, rho1) == 0.0

    @pytest.mark.parametrize("dim", [3, 6])
    def test_maximally_mixed(self, dim):
        rng = np.random.default_rng(dim)
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        rho0 = DensityMatrix(as_space(dim), np.outer(v, v.conj()))
        mixed = DensityMatrix(as_space(dim), np.eye(dim) / dim)
        assert state_fidelity(rho0, mixed) == pytest.approx(1.0 / dim, abs=1e-12)

    def test_rejects_mixed_reference(self):
        mixed = DensityMatrix(as_space(3), np.eye(3) / 3)
        with pytest.raises(ValueError, match="pure"):
            state_fidelity(mixed, mixed)


class TestMeanFidelitySix:
    def test_identity_channel(self):
        assert mean_fidelity_six(identity_channel, rl_code()) == pytest.approx(1.0)

    def test_depolarize_onto_code_space(self):
        code = rl_code()
        states = six_code_states(code)
        s0_half = DensityMatrix(code.space,
                                0.5 * (states[0].data + states[1].data))

        def channel(rho):
            return s0_half

        assert mean_fidelity_six(channel, code) == pytest.approx(0.5, abs=1e-12)

    def test_non_trace_preserving_rejected(self):
        code = rl_code()

        def broken(rho):
            data = 0.9 * rho.data
            out = DensityMatrix.__new__(DensityMatrix)
            object.__setattr__(out, "space", rho.space)
            object.__setattr__(out, "data", data)
            object.__setattr__(out, "eig_floor", 1.0)
            return out

        with pytest.raises(ValueError, match="trace"):
            mean_fidelity_six(broken, code)


class TestMeanFidelitySphere:
    def test_identity_channel(self):
        val = mean_fidelity_sphere(identity_channel, rl_code(), 16, 16)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_depolarizing_channel(self):
        code = rl_code()
        states = six_code_states(code)
        s0_half = DensityMatrix(code.space, 0.5 * (states[0].data + states[1].data))
        val = mean_fidelity_sphere(lambda rho: s0_half, code, 16, 16)
        assert val == pytest.approx(0.5, abs=1e-10)

    def test_minimum_node_counts(self):
        with pytest.raises(ValueError, match="16"):
            mean_fidelity_sphere(identity_channel, rl_code(), 8, 16)

    @pytest.mark.parametrize("seed", range(5))
    def test_equals_six_state_formula(self, seed):
        # the sphere average of a linear trace-preserving map reduces to the
        # six Pauli-eigenstate average; quadrature is the independent oracle
        code = random_code(seed)
        channel = random_cptp_channel(code.dim, seed + 50)
        six = mean_fidelity_six(channel, code)
        sphere = mean_fidelity_sphere(channel, code, 32, 32)
        assert abs(six - sphere) <= 1e-6


class TestClosedForms:
    def test_break_even_at_zero(self):
        assert break_even_mean_fidelity(0.0) == pytest.approx(1.0)

    def test_break_even_at_0p6(self):
        expected = (math.exp(-0.6) + 2.0 * math.exp(-0.3) + 3.0) / 6.0
        assert break_even_mean_fidelity(0.6) == pytest.approx(expected, abs=1e-15)
        assert break_even_mean_fidelity(0.6) == pytest.approx(0.8384, abs=1e-4)

    def test_break_even_at_0p17(self):
        assert break_even_mean_fidelity(0.17) == pytest.approx(0.9468, abs=5e-5)

    def test_rl_analytic_at_zero(self):
        assert rl_analytic_mean_fidelity(0.0) == pytest.approx(1.0)

    def test_rl_analytic_at_0p17(self):
        # 0.9905 quotes the rounded exponent u ~ 0.17; exact u gives 0.99042
        assert rl_analytic_mean_fidelity(0.17) == pytest.approx(0.9905, abs=2e-4)

    def test_rl_analytic_at_0p6(self):
        expected = 2.0 / 3.0 + math.exp(-RL_CODE_U * 0.6) / 3.0
        assert rl_analytic_mean_fidelity(0.6) == pytest.approx(expected, abs=1e-15)
        assert rl_analytic_mean_fidelity(0.6) == pytest.approx(0.96739, abs=1e-5)

    def test_state_fidelity_poles(self):
        assert rl_analytic_state_fidelity(BlochPoint(0.0, 0.0), 3.0) == pytest.approx(1.0)
        assert rl_analytic_state_fidelity(BlochPoint(math.pi, 0.0), 5.0) == pytest.approx(1.0)

    def test_state_fidelity_equator_at_0p6(self):
        val = rl_analytic_state_fidelity(BlochPoint(math.pi / 2.0, 0.3), 0.6)
        assert val == pytest.approx(0.95109, abs=1e-5)

    def test_state_fidelity_phi_independent(self):
        vals = [rl_analytic_state_fidelity(BlochPoint(1.1, phi), 0.8)
                for phi in (0.0, 1.0, 4.0)]
        assert max(vals) - min(vals) == 0.0

    def test_equator_minimizes_state_fidelity(self):
        for t in (0.1, 0.6, 2.0):
            vals = [rl_analytic_state_fidelity(BlochPoint(th, 0.0), t)
                    for th in np.linspace(0.0, math.pi, 41)]
            assert np.argmin(vals) == 20

    def test_closed_forms_decreasing_and_bounded(self):
        grid = np.linspace(0.0, 4.0, 81)
        be = break_even_mean_fidelity(grid)
        rl = rl_analytic_mean_fidelity(grid)
        assert np.all(np.diff(be) < 0.0)
        assert np.all(np.diff(rl) < 0.0)
        assert np.all(rl > 2.0 / 3.0)

    def test_rl_above_break_even(self):
        grid = np.linspace(0.05, 4.0, 80)
        assert np.all(rl_analytic_mean_fidelity(grid) > break_even_mean_fidelity(grid))

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            break_even_mean_fidelity(-0.1)
        with pytest.raises(ValueError):
            rl_analytic_mean_fidelity(-0.1)


class TestCoarseGrained:
    def _curve(self, values, dt=0.001):
        times = np.arange(len(values)) * dt
        return FidelityCurve(times=times, mean=np.asarray(values, dtype=float))

    def test_tau_zero_identity(self):
        curve = self._curve([1.0, 0.3, 0.8, 0.5])
        out = coarse_grained(curve, 0.0)
        np.testing.assert_array_equal(out.mean, curve.mean)

    def test_tau_spanning_gives_suffix_max(self):
        curve = self._curve([0.4, 0.9, 0.2, 0.7, 0.1])
        out = coarse_grained(curve, 1.0)
        np.testing.assert_allclose(out.mean, [0.9, 0.9, 0.7, 0.7, 0.1])
        assert out.mean[0] == curve.mean.max()

    def test_monotone_in_tau(self):
        rng = np.random.default_rng(17)
        curve = self._curve(rng.uniform(size=200))
        prev = coarse_grained(curve, 0.0).mean
        for tau in (0.006, 0.012, 0.018):
            cur = coarse_grained(curve, tau).mean
            assert np.all(cur >= prev - 1e-15)
            prev = cur

    def test_rejects_coarse_sampling(self):
        curve = self._curve([1.0, 0.5, 0.25], dt=0.01)
        with pytest.raises(ValueError, match="too coarse"):
            coarse_grained(curve, 0.02)

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError):
            coarse_grained(self._curve([1.0, 1.0]), -1.0)


class TestMeanFidelityCurve:
    def test_basis_route_matches_direct(self):
        code = rl_code()
        model = full_recovery_model(code, 40.0, 1.0, 175.0)
        grid = np.linspace(0.0, 0.5, 5)
        direct = mean_fidelity_curve(model, code, grid, method="direct")
        basis = mean_fidelity_curve(model, code, grid, method="basis")
        np.testing.assert_allclose(direct.mean, basis.mean, atol=1e-10)
        np.testing.assert_allclose(direct.fmin, basis.fmin, atol=1e-10)

    def test_matches_fixed_time_channel(self):
        code = binomial_code()
        model = effective_recovery_model(code, lam=300.0)
        grid = np.array([0.0, 0.4])
        curve = mean_fidelity_curve(model, code, grid)
        channel = fixed_time_channel(model, 0.4, code=code)
        assert curve.mean[-1] == pytest.approx(mean_fidelity_six(channel, code), abs=1e-8)


class TestFidelityCurveType:
    def test_rejects_out_of_range_values(self):
        with pytest.raises(ValueError, match="outside"):
            FidelityCurve(times=np.array([0.0, 1.0]), mean=np.array([1.0, 1.5]))

    def test_csv_emission(self, tmp_path):
        curve = FidelityCurve(times=np.array([0.0, 1.0]), mean=np.array([1.0, 0.5]),
                              fmin=np.array([0.9, 0.4]), fmax=np.array([1.0, 0.6]))
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# units:")
        assert lines[1] == "t,F_mean,F_min,F_max"


class TestBlochGrid:
    def test_identity_channel_grid(self, tmp_path):
        code = rl_code()
        thetas = np.linspace(0.0, math.pi, 5)
        phis = np.linspace(0.0, 2.0 * math.pi, 4, endpoint=False)
        grid = bloch_grid_fidelity(identity_channel, code, thetas, phis)
        np.testing.assert_allclose(grid, 1.0, atol=1e-12)
        path = tmp_path / "grid.csv"
        write_bloch_grid_csv(path, thetas, phis, grid)
        lines = path.read_text().splitlines()
        assert lines[1] == "theta,phi,F"
        assert len(lines) == 2 + thetas.size * phis.size

    def test_bloch_state_poles(self):
        code = rl_code()
        north = bloch_state(code, BlochPoint(0.0, 0.0))
        np.testing.assert_allclose(north.amplitudes, code.zero_logical.amplitudes)
        south = bloch_state(code, BlochPoint(math.pi, 0.0))
        np.testing.assert_allclose(np.abs(south.amplitudes),
                                   np.abs(code.one_logical.amplitudes), atol=1e-15)
