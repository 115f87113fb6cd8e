import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_orthogonal_symplectic, random_physical_state
from oscnet import dynamics, gaussian, network
from oscnet.gaussian import (
    GaussianState,
    embed_two_mode_squeezed,
    excite_site,
    ground_state,
    load_covariance_csv,
    log_negativity,
    log_negativity_two_mode,
    partial_transpose,
    reduce,
    save_covariance_csv,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_state,
    two_mode_pt_minimum,
    vacuum_state,
)

LN2 = math.log(2.0)


class TestConstructors:
    def test_vacuum(self):
        assert np.array_equal(vacuum_state(1).gamma, np.eye(2))
        st6 = vacuum_state(3)
        assert np.array_equal(st6.gamma, np.eye(6))
        assert np.allclose(symplectic_eigenvalues(st6), 1.0)

    def test_thermal_values(self):
        assert thermal_state(2, math.log(3.0)).gamma[0, 0] == pytest.approx(2.0)
        assert thermal_state(1, 6.0).gamma[0, 0] == pytest.approx(1.0 + 2.0 / np.expm1(6.0))
        assert thermal_state(1, 6.0).gamma[0, 0] == pytest.approx(1.00497, abs=1e-5)
        assert thermal_state(1, 50.0).gamma[0, 0] == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            thermal_state(1, 0.0)

    def test_thermal_is_separable(self):
        st = thermal_state(3, 1.5)
        assert log_negativity(st, [0]) == 0.0
        assert log_negativity(st, [0, 2]) == 0.0


class TestTwoModeSqueezed:
    def test_zero_squeezing_is_vacuum(self):
        st = embed_two_mode_squeezed(vacuum_state(4), 1, 3, 0.0)
        assert np.array_equal(st.gamma, np.eye(8))

    def test_negativity_value(self):
        # oracle: the partial transpose of the squeezed pair has smaller
        # symplectic eigenvalue exp(-2r)
        r = 0.8
        st = embed_two_mode_squeezed(vacuum_state(2), 0, 1, r)
        gt = partial_transpose(st, [1])
        nu = symplectic_eigenvalues(gt)
        assert nu[0] == pytest.approx(math.exp(-2 * r), rel=1e-12)
        assert log_negativity(st, [1]) == pytest.approx(2.3083120654223417, abs=1e-12)

    def test_pair_is_pure(self):
        st = embed_two_mode_squeezed(vacuum_state(5), 0, 4, 1.3)
        red = reduce(st, [0, 4])
        assert np.linalg.det(red.gamma) == pytest.approx(1.0, rel=1e-8)
        assert np.allclose(symplectic_eigenvalues(red), 1.0, atol=1e-9)

    def test_decorrelates_from_rest(self):
        st = embed_two_mode_squeezed(
            GaussianState(2.0 * np.eye(6)), 0, 1, 0.5
        )
        g = st.gamma
        assert g[2, 2] == 2.0
        assert np.all(g[0, [2, 5]] == 0)

    def test_same_mode_rejected(self):
        with pytest.raises(ValueError):
            embed_two_mode_squeezed(vacuum_state(3), 1, 1, 0.5)


class TestExciteSite:
    def test_squeezed_block(self):
        st = excite_site(vacuum_state(3), 1, "squeezed", 10.0)
        assert st.gamma[1, 1] == 10.0
        assert st.gamma[4, 4] == pytest.approx(0.1)
        assert np.linalg.det(reduce(st, [1]).gamma) == pytest.approx(1.0)

    def test_thermal_block(self):
        st = excite_site(vacuum_state(3), 0, "thermal", 10.0)
        assert st.gamma[0, 0] == 10.0 and st.gamma[3, 3] == 10.0
        assert symplectic_eigenvalues(reduce(st, [0]))[0] == pytest.approx(10.0)

    def test_unit_is_vacuum(self):
        st = excite_site(vacuum_state(2), 0, "squeezed", 1.0)
        assert np.array_equal(st.gamma, np.eye(4))

    def test_invalid(self):
        with pytest.raises(ValueError):
            excite_site(vacuum_state(2), 0, "thermal", 0.5)
        with pytest.raises(ValueError):
            excite_site(vacuum_state(2), 0, "squeezed", 0.0)
        with pytest.raises(ValueError):
            excite_site(vacuum_state(2), 0, "coherent", 2.0)


class TestGroundState:
    def test_uncoupled_is_vacuum(self):
        h = network.build_chain(3, 0.0, "open", "spring")
        assert np.array_equal(ground_state(h).gamma, np.eye(6))

    def test_rwa_is_vacuum(self):
        h = network.build_chain(5, 0.3, "periodic", "rwa")
        assert np.array_equal(ground_state(h).gamma, np.eye(10))

    def test_spring_ring_blocks_inverse(self):
        h = network.build_chain(3, 0.1, "periodic", "spring")
        g = ground_state(h).gamma
        gq, gp = g[:3, :3], g[3:, 3:]
        assert np.allclose(gq @ gp, np.eye(3), atol=1e-12)
        # q-block equals the inverse square root of V by eigendecomposition
        w, u = np.linalg.eigh(np.asarray(h.V))
        assert np.allclose(gq, (u / np.sqrt(w)) @ u.T, atol=1e-12)

    def test_stationary_under_own_flow(self):
        h = network.build_chain(4, 0.2, "periodic", "spring")
        gs = ground_state(h)
        ev = dynamics.evolve(gs, h, 7.3)
        assert np.allclose(ev.gamma, gs.gamma, atol=1e-12)

    def test_general_kinetic_matrix(self):
        h0 = network.build_chain(4, 0.15, "open", "spring")
        h = network.set_site(h0, 2, mass=2.5)
        gs = ground_state(h)
        assert np.allclose(symplectic_eigenvalues(gs), 1.0, atol=1e-10)
        assert np.allclose(dynamics.evolve(gs, h, 3.1).gamma, gs.gamma, atol=1e-10)


class TestPartialTranspose:
    def test_involution(self):
        rng = np.random.default_rng(5)
        g = random_physical_state(rng, 4)
        gt = partial_transpose(partial_transpose(g, [1, 3]), [1, 3])
        assert np.array_equal(gt, g)

    def test_vacuum_unchanged(self):
        assert np.array_equal(partial_transpose(vacuum_state(3), [2]), np.eye(6))

    def test_flips_momentum_signs(self):
        st = embed_two_mode_squeezed(vacuum_state(2), 0, 1, 0.7)
        gt = partial_transpose(st, [1])
        assert gt[2, 3] == -st.gamma[2, 3]
        assert gt[0, 1] == st.gamma[0, 1]

    def test_rejects_trivial_partitions(self):
        with pytest.raises(ValueError):
            partial_transpose(vacuum_state(2), [])
        with pytest.raises(ValueError):
            partial_transpose(vacuum_state(2), [0, 1])


class TestSymplecticEigenvalues:
    def test_identity(self):
        assert np.allclose(symplectic_eigenvalues(np.eye(8)), 1.0)

    def test_single_mode_squeezed(self):
        for a in (0.2, 1.0, 7.0):
            nu = symplectic_eigenvalues(np.diag([a, 1.0 / a]))
            assert nu[0] == pytest.approx(1.0, rel=1e-12)

    def test_thermal(self):
        assert np.allclose(symplectic_eigenvalues(2.0 * np.eye(4)), [2.0, 2.0])

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            symplectic_eigenvalues(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            symplectic_eigenvalues(np.diag([1.0, 1.0, -1.0, 1.0]))

    def test_symplectic_invariance(self, rng):
        n = 3
        g = random_physical_state(rng, n)
        from conftest import random_symplectic

        s = random_symplectic(rng, n)
        sigma = symplectic_form(n)
        assert np.allclose(s @ sigma @ s.T, sigma, atol=1e-10)
        assert np.allclose(
            symplectic_eigenvalues(s @ g @ s.T), symplectic_eigenvalues(g), atol=1e-8
        )


class TestLogNegativity:
    def test_product_state_zero(self):
        st = excite_site(excite_site(vacuum_state(3), 0, "squeezed", 5.0), 2, "thermal", 3.0)
        assert log_negativity(st, [0]) == 0.0
        assert log_negativity(st, [0, 1]) == 0.0

    def test_local_rotation_invariance(self, rng):
        st = embed_two_mode_squeezed(vacuum_state(2), 0, 1, 0.9)
        base = log_negativity(st, [1])
        o1 = random_orthogonal_symplectic(rng, 1)
        o2 = random_orthogonal_symplectic(rng, 1)
        s = np.zeros((4, 4))
        # block-diagonal local symplectic in (q1,q2,p1,p2) ordering
        s[np.ix_([0, 2], [0, 2])] = o1
        s[np.ix_([1, 3], [1, 3])] = o2
        g = s @ st.gamma @ s.T
        assert log_negativity(g, [1]) == pytest.approx(base, abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_two_mode_routes_agree(self, seed):
        rng = np.random.default_rng(seed)
        g = random_physical_state(rng, 2)
        general = log_negativity(g, [1])
        quartic = float(log_negativity_two_mode(g))
        assert quartic == pytest.approx(general, abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_physicality_of_random_states(self, seed):
        rng = np.random.default_rng(seed)
        g = random_physical_state(rng, 3)
        gaussian.assert_physical(GaussianState(g))

    def test_pure_state_unit_determinant(self, rng):
        for _ in range(20):
            g = random_physical_state(rng, 2, max_nu=1.0)
            assert np.linalg.det(g) == pytest.approx(1.0, abs=1e-8)

    def test_pt_minimum_vectorised(self, rng):
        gs = np.stack([random_physical_state(rng, 2) for _ in range(32)])
        single = np.array([symplectic_eigenvalues(partial_transpose(g, [1]))[0] for g in gs])
        assert np.allclose(two_mode_pt_minimum(gs), single, atol=1e-9)


class TestReduce:
    def test_full_subset_identity(self, rng):
        g = random_physical_state(rng, 3)
        assert np.allclose(reduce(g, [0, 1, 2]).gamma, g)

    def test_vacuum_reduces_to_vacuum(self):
        assert np.array_equal(reduce(vacuum_state(5), [1, 3]).gamma, np.eye(4))

    def test_ordering(self):
        st = embed_two_mode_squeezed(vacuum_state(4), 0, 2, 0.6)
        red = reduce(st, [0, 2])
        assert red.gamma[0, 1] == pytest.approx(math.sinh(1.2))
        assert red.gamma[2, 3] == pytest.approx(-math.sinh(1.2))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            reduce(vacuum_state(2), [])


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        st = GaussianState(random_physical_state(rng, 3))
        path = tmp_path / "state.csv"
        save_covariance_csv(st, path)
        back = load_covariance_csv(path)
        assert np.array_equal(back.gamma, st.gamma)
        header = path.read_text().splitlines()[0]
        assert "modes=3" in header and "q1..q3" in header
