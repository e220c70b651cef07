import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from prefbasis import states as S
from prefbasis.decoherence import (
    EnvironmentModel, brute_force_decoherence_factor, build_env_coupling, commutator_norm,
    decoherence_factor, default_candidates, demo_einselection_pathology,
    demo_pointer_superposition, evolve, evolve_dephasing, run_decoherence, singlet_identity,
)
from prefbasis.errors import BranchCountUnsupported, DimensionMismatch
from prefbasis.tensor import DenseOperator, Observable, PureState, kron_all, partial_trace, random_state

seeds = st.integers(0, 2**32 - 1)
Z_POINTER = Observable.from_basis([S.Z_PLUS, S.Z_MINUS], (1.0, -1.0))
X_POINTER = Observable.from_basis([S.X_PLUS, S.X_MINUS], (1.0, -1.0))


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return DenseOperator(a + a.conj().T, "hermitian")


class TestCoupling:
    def test_zero_couplings(self):
        env = EnvironmentModel((0.0, 0.0))
        h = build_env_coupling(Z_POINTER, env)
        assert not np.any(h.entries)
        for p in default_candidates(Z_POINTER).values():
            assert commutator_norm(Z_POINTER, env, p) == 0

    def test_pointer_projectors_commute_exactly(self):
        env = EnvironmentModel.random(4, seed=2)
        h = build_env_coupling(Z_POINTER, env)
        for p in Z_POINTER.projectors:
            big = DenseOperator(np.kron(p.entries, np.eye(16)), "projector")
            assert h.commutator_norm(big) == 0.0

    def test_factorized_norm_matches_dense(self):
        env = EnvironmentModel.random(4, seed=2)
        h = build_env_coupling(Z_POINTER, env)
        for name, p in default_candidates(Z_POINTER).items():
            big = DenseOperator(np.kron(p.entries, np.eye(16)), "projector")
            assert np.isclose(commutator_norm(Z_POINTER, env, p), h.commutator_norm(big), rtol=1e-12)

    def test_one_qubit_spectrum(self):
        h = build_env_coupling(Observable.from_basis(np.eye(2), (0.7, -0.3)), EnvironmentModel((1.0,)))
        w = np.linalg.eigvalsh(h.entries)
        np.testing.assert_allclose(np.sort(w), np.sort([0.7, -0.7, -0.3, 0.3]), atol=1e-14)

    def test_hermitian(self):
        h = build_env_coupling(X_POINTER, EnvironmentModel.random(3, seed=1))
        assert np.abs(h.entries - h.entries.conj().T).max() <= 1e-12

    def test_dense_limit(self):
        with pytest.raises(DimensionMismatch):
            build_env_coupling(Z_POINTER, EnvironmentModel.random(12))


class TestEvolve:
    def test_zero_time(self, rng):
        s = random_state((2, 2), rng)
        np.testing.assert_allclose(evolve(s, random_hermitian(rng, 4), 0.0).amps, s.amps, atol=1e-14)

    def test_z_quarter_period(self):
        s = PureState((2,), S.X_PLUS)
        out = evolve(s, DenseOperator(S.PAULI_Z, "hermitian"), np.pi / 2).amps
        assert np.isclose(out[1] / out[0], np.exp(1j * np.pi))
        out = evolve(s, DenseOperator(S.PAULI_Z / 2, "hermitian"), np.pi / 2).amps
        assert np.isclose(out[1] / out[0], 1j)

    @given(seeds, st.floats(-3, 3), st.floats(-3, 3))
    def test_group_property(self, seed, t1, t2):
        rng = np.random.default_rng(seed)
        s = random_state((2, 3), rng)
        h = random_hermitian(rng, 6)
        a = evolve(evolve(s, h, t1), h, t2)
        b = evolve(s, h, t1 + t2)
        assert np.linalg.norm(a.amps - b.amps) <= 1e-9
        assert abs(np.linalg.norm(a.amps) - 1) <= 1e-10
        back = evolve(evolve(s, h, t1), h, -t1)
        assert np.linalg.norm(back.amps - s.amps) <= 1e-10

    @given(seeds, st.floats(0, 5))
    def test_matches_expm(self, seed, t):
        rng = np.random.default_rng(seed)
        s = random_state((4,), rng)
        h = random_hermitian(rng, 4)
        ref = expm(-1j * t * h.entries) @ s.amps
        assert np.linalg.norm(evolve(s, h, t).amps - ref) <= 1e-10

    def test_structured_matches_dense(self, rng):
        env = EnvironmentModel.random(4, seed=7)
        s = PureState.from_amplitudes((2,) * 5, kron_all(S.bloch_ket(1.0, 0.4), env.initial_vector()))
        for pointer in (Z_POINTER, X_POINTER):
            a = evolve_dephasing(s, pointer, env, 1.3, apparatus=0)
            b = evolve(s, build_env_coupling(pointer, env), 1.3)
            assert np.linalg.norm(a.amps - b.amps) <= 1e-12


class TestDecoherenceFactor:
    def test_r0(self):
        env = EnvironmentModel.random(5, seed=1)
        assert abs(decoherence_factor(env, [0.0], Z_POINTER)[0] - 1) <= 1e-12

    @pytest.mark.parametrize("n", [1, 4, 12])
    @pytest.mark.parametrize("pointer", [Z_POINTER, X_POINTER], ids=["z", "x"])
    def test_matches_brute_force(self, n, pointer):
        env = EnvironmentModel.random(n, seed=n)
        times = np.linspace(0, 10, 25)
        closed = decoherence_factor(env, times, pointer)
        brute = brute_force_decoherence_factor(env, times, pointer)
        assert np.abs(closed - brute).max() <= 1e-9

    def test_brute_force_dense_route_n4(self):
        env = EnvironmentModel.random(4, seed=4)
        times = np.linspace(0, 10, 15)
        brute = brute_force_decoherence_factor(env, times, Z_POINTER, dense=True)
        assert np.abs(decoherence_factor(env, times, Z_POINTER) - brute).max() <= 1e-9

    def test_non_symmetric_initial_state(self):
        rng = np.random.default_rng(5)
        init = [S.bloch_ket(*rng.uniform(0, np.pi, 2)) for _ in range(3)]
        env = EnvironmentModel((0.4, 1.1, 0.9), tuple(init))
        times = np.linspace(0, 6, 13)
        assert np.abs(decoherence_factor(env, times, Z_POINTER)
                      - brute_force_decoherence_factor(env, times, Z_POINTER)).max() <= 1e-9

    def test_single_qubit_recurs(self):
        env = EnvironmentModel((1.0,))
        times = np.linspace(0, np.pi, 401)
        r = np.abs(decoherence_factor(env, times, Z_POINTER))
        # |r| = |cos(2 g t)|: zero at pi/4, back to one at pi/2
        np.testing.assert_allclose(r, np.abs(np.cos(2 * times)), atol=1e-12)
        assert r.min() < 1e-12 and abs(r[200] - 1) < 1e-12

    @given(st.lists(st.floats(0.0, 3.0), min_size=1, max_size=8), st.floats(0, 50))
    def test_bounded(self, g, t):
        r = decoherence_factor(EnvironmentModel(tuple(g)), [t], Z_POINTER)
        assert abs(r[0]) <= 1 + 1e-12

    def test_n12_decays_and_stays_low(self):
        rep = run_decoherence()
        t_star = rep.first_decohered_time()
        assert t_star is not None
        assert np.all(rep.abs_r[rep.times >= t_star] < 0.1)

    def test_three_branches_unsupported(self):
        obs = Observable.from_basis(np.eye(3))
        with pytest.raises(BranchCountUnsupported):
            decoherence_factor(EnvironmentModel((1.0,)), [0.0], obs)

    @pytest.mark.parametrize("pointer", [Z_POINTER, X_POINTER], ids=["z", "x"])
    def test_coherence_decays_entrywise(self, pointer):
        env = EnvironmentModel.random(6, seed=11)
        c = np.array([0.6, 0.8j])
        v0, v1 = [np.linalg.eigh(p.entries)[1][:, -1] for p in pointer.projectors]
        a0 = c[0] * v0 + c[1] * v1
        s = PureState.from_amplitudes((2,) + (2,) * 6, kron_all(a0, env.initial_vector()))
        basis = np.array([v0, v1])
        rho0 = basis.conj() @ partial_trace(s, [0]).entries @ basis.T
        for t in (0.3, 1.0, 2.7):
            r = decoherence_factor(env, [t], pointer)[0]
            out = evolve_dephasing(s, pointer, env, t, apparatus=0)
            rho = basis.conj() @ partial_trace(out, [0]).entries @ basis.T
            # rho_01 = c0 c1* <E_1|E_0> = rho_01(0) * conj(r)
            assert abs(rho[0, 1] - rho0[0, 1] * np.conj(r)) <= 1e-9
            assert abs(abs(rho[0, 1]) - abs(rho0[0, 1]) * abs(r)) <= 1e-9
            np.testing.assert_allclose(np.diag(rho), np.diag(rho0), atol=1e-12)


class TestCommutatorCriterion:
    def test_dichotomy(self):
        rep = run_decoherence()
        assert rep.commutator_norms["P_0"] == 0 and rep.commutator_norms["P_1"] == 0
        assert rep.commutator_norms["P_up"] > 0.1 and rep.commutator_norms["P_down"] > 0.1


class TestWorkedExamples:
    def test_singlet_identity(self):
        res, phase = singlet_identity()
        assert res <= 1e-12
        assert np.isclose(phase, -1)

    def test_pointer_superposition(self):
        rep = demo_pointer_superposition()
        assert rep.identity_residual <= 1e-12
        assert rep.schmidt_degenerate
        np.testing.assert_allclose(rep.schmidt_coeffs, [S.SQRT1_2] * 2, atol=1e-12)
        assert rep.x_form_residual <= 1e-12 and rep.z_form_residual <= 1e-12
        assert rep.rotated_residual <= 1e-12
        assert rep.n_clusters == 2
        assert rep.a_family_match_pointer >= 1 - 1e-8
        assert rep.a_family_match_superposition < 0.75

    def test_pathology_z(self):
        rep = demo_einselection_pathology("z")
        assert rep.abs_r < 0.01
        np.testing.assert_allclose(rep.spin1_reduced, np.eye(2) / 2, atol=1e-6)
        assert abs(rep.fidelity_prepared - 0.5) <= 1e-6
        np.testing.assert_allclose(rep.record_probabilities, [0.5, 0.5], atol=1e-12)
        # the z+ record on spin 2 reports spin 1 opposite to its preparation
        np.testing.assert_allclose(rep.conditional_fidelity_prepared, [1.0, 0.0], atol=1e-12)
        assert rep.joint_coherence <= 0.5 * rep.abs_r + 1e-12

    def test_pathology_x(self):
        rep = demo_einselection_pathology("x")
        rho_x = np.array([S.X_PLUS, S.X_MINUS]).conj() @ rep.spin1_reduced @ np.array([S.X_PLUS, S.X_MINUS]).T
        assert abs(rho_x[0, 1]) <= 1e-6
        np.testing.assert_allclose(rep.record_probabilities, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(rep.conditional_fidelity_prepared, [0.5, 0.5], atol=1e-12)

    def test_pathology_t0_identical(self):
        z, x = demo_einselection_pathology("z"), demo_einselection_pathology("x")
        np.testing.assert_allclose(z.spin1_reduced_t0, x.spin1_reduced_t0, atol=1e-15)

    def test_pathology_bad_basis(self):
        with pytest.raises(ValueError):
            demo_einselection_pathology("y")
