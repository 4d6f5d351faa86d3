import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from difflms.basis import sample_basis
from difflms.errors import DomainError, IterationLimitError
from difflms.pde_model import (GroundTruthModel, Poisson2DProblem, PoissonStream, RegressorSpec,
                               SampleStream, SpatialDomain, discretize_theta_to_h,
                               ground_truth_from_theta, laplacian, node_snr, two_bump_input,
                               poisson_reference_stream, poisson_solve, random_ground_truth,
                               random_regressor_spec, snr_noise_variances, synthesize_batch)
from oracles import chebyshev_cos, five_point, theta_to_h


class TestSpatialDomain:
    def test_grid(self):
        d = SpatialDomain(2.0, 3, dt=0.01)
        assert d.dx == 0.5
        assert d.nu == pytest.approx(0.04)
        np.testing.assert_allclose(d.positions, [0.5, 1.0, 1.5])

    @pytest.mark.parametrize("args", [(0.0, 3), (1.0, 0), (1.0, 3, -1e-3)])
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            SpatialDomain(*args)


class TestThetaToH:
    def test_constant_profile(self):
        nu = 0.3
        np.testing.assert_allclose(discretize_theta_to_h(np.ones(5), nu),
                                   np.tile([nu, 1 - 2 * nu, nu], (3, 1)))

    def test_matches_transcription(self, rng):
        theta = rng.uniform(0.5, 2.0, 9)
        np.testing.assert_allclose(discretize_theta_to_h(theta, 0.17), theta_to_h(theta, 0.17),
                                   atol=1e-15)

    @given(hnp.arrays(float, st.integers(3, 15), elements=st.floats(-5, 5)),
           st.floats(0.0, 1.0))
    def test_rows_sum_to_one(self, theta, nu):
        h = discretize_theta_to_h(theta, nu)
        np.testing.assert_allclose(h.sum(axis=1), 1.0, atol=1e-12)

    def test_too_short(self):
        with pytest.raises(DomainError):
            discretize_theta_to_h([1.0, 2.0], 0.1)

    def test_truth_from_theta_profile(self):
        dom = SpatialDomain(1.0, 6, dt=2e-3)
        coeffs = [1.0, 0.3, -0.1]
        truth, basis = ground_truth_from_theta(coeffs, dom, 3)
        x = dom.dx * np.arange(dom.n_nodes + 2)
        theta = sum(c * chebyshev_cos(n + 1, x) for n, c in enumerate(coeffs))
        np.testing.assert_allclose(truth.h, theta_to_h(theta, dom.nu), atol=1e-10)
        assert basis.count == 3 and truth.n_params == 3


class TestGroundTruth:
    def test_h_is_block_product(self, rng):
        b = sample_basis(SpatialDomain(1.0, 4), 3, n_params=2)
        t = random_ground_truth(b, 2, rng)
        for k in range(4):
            np.testing.assert_allclose(t.h[k], b.blocks[k] @ t.w)

    def test_vector_roundtrip(self, rng):
        b = sample_basis(SpatialDomain(1.0, 4), 3, n_params=2)
        w = rng.standard_normal(6)
        t = GroundTruthModel.from_vector(w, b.blocks)
        np.testing.assert_array_equal(t.w, w)
        assert t.W.shape == (2, 3)

    def test_shape_mismatch(self):
        b = sample_basis(SpatialDomain(1.0, 4), 3, n_params=2)
        with pytest.raises(DomainError):
            GroundTruthModel(np.zeros((2, 4)), b.blocks)


class TestRegressors:
    def test_square_root(self, rng):
        A = rng.standard_normal((3, 3))
        R = A @ A.T + np.eye(3)
        spec = RegressorSpec(R, [0.1])
        np.testing.assert_allclose(spec.sqrt_cov[0] @ spec.sqrt_cov[0], R, atol=1e-12)

    @pytest.mark.parametrize("R, s2", [
        (np.array([[[1.0, 0], [0, 0]]]), [0.1]),     # singular
        (np.array([[[1.0, 0.5], [0, 1]]]), [0.1]),   # asymmetric
        (np.eye(2)[None], [0.1, 0.2]),               # one variance too many
        (np.eye(2)[None], [-0.1]),
        (np.eye(2)[None], [np.nan]),
    ])
    def test_rejected(self, R, s2):
        with pytest.raises(DomainError):
            RegressorSpec(R, s2)

    def test_random_spec_ranges(self, rng):
        spec = random_regressor_spec(50, 2, rng)
        tr = np.trace(spec.covariances, axis1=1, axis2=2)
        assert tr.min() >= 1.0 and tr.max() <= 5.0
        assert spec.noise_vars.min() >= 0.05 and spec.noise_vars.max() <= 0.1
        np.testing.assert_allclose(spec.covariances[:, 0, 1], 0.0)

    def test_node_snr_hand_value(self):
        b = sample_basis([0.5], 1, n_params=2)
        t = GroundTruthModel(np.array([[1.0], [1.0]]), b.blocks)
        spec = RegressorSpec(2 * np.eye(2)[None], [0.04])
        assert node_snr(spec, t, 0) == pytest.approx(20.0)
        assert node_snr(RegressorSpec(np.eye(2)[None], [0.0]), t, 0) == math.inf


class TestStreams:
    @pytest.fixture
    def model(self, rng):
        b = sample_basis(SpatialDomain(1.0, 3), 2, n_params=2)
        return random_regressor_spec(3, 2, rng), random_ground_truth(b, 2, rng)

    def test_batch_deterministic(self, model):
        spec, truth = model
        a, b = synthesize_batch(spec, truth, 5, 3), synthesize_batch(spec, truth, 5, 3)
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.d, b.d)
        c = synthesize_batch(spec, truth, 5, 4)
        assert not np.array_equal(a.u, c.u)

    def test_batch_model_equation(self, model):
        spec, truth = model
        bt = synthesize_batch(spec, truth, 1, 0)
        np.testing.assert_allclose(bt.d, np.einsum("km,km->k", bt.u, truth.h) + bt.v)

    @given(st.integers(1, 30))
    def test_stream_chunking_invariant(self, split):
        rng = np.random.default_rng(0)
        b = sample_basis(SpatialDomain(1.0, 3), 2, n_params=2)
        spec, truth = random_regressor_spec(3, 2, rng), random_ground_truth(b, 2, rng)
        whole = SampleStream(spec, truth, 99).draw(31)
        s = SampleStream(spec, truth, 99)
        parts = [s.draw(split), s.draw(31 - split)] if split < 31 else [s.draw(31)]
        for a, p in zip(whole, zip(*parts)):
            np.testing.assert_array_equal(a, np.concatenate(p))

    def test_stream_moments(self, model):
        spec, truth = model
        u, d, v = SampleStream(spec, truth, 3).draw(40000)
        for k in range(3):
            emp = u[:, k].T @ u[:, k] / u.shape[0]
            np.testing.assert_allclose(emp, spec.covariances[k], atol=0.1)
            assert v[:, k].var() == pytest.approx(spec.noise_vars[k], rel=0.05)
        np.testing.assert_allclose(d, np.einsum("tkm,km->tk", u, truth.h) + v)


class TestPoisson:
    def test_two_bump_input_landmarks(self):
        h = two_bump_input()
        assert h.shape == (11, 11)
        assert h[3, 3] == pytest.approx(2.0, abs=1e-12)
        assert h[7, 7] == pytest.approx(-4.0, abs=1e-12)
        assert h[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_laplacian_matches_five_point(self, rng):
        z = rng.standard_normal((6, 7))
        L = laplacian(z, 0.2)
        for k1 in range(1, 5):
            for k2 in range(1, 6):
                assert L[k1 - 1, k2 - 1] == pytest.approx(five_point(z, k1, k2, 0.2))

    def test_laplacian_batched(self, rng):
        z = rng.standard_normal((3, 5, 5))
        np.testing.assert_allclose(laplacian(z, 0.5)[1], laplacian(z[1], 0.5))

    def test_solver_recovers_manufactured_field(self):
        n = 9
        c = np.arange(n + 2) / (n + 1)
        f = np.outer(np.sin(np.pi * c), np.sin(2 * np.pi * c))
        f[0], f[-1], f[:, 0], f[:, -1] = 0, 0, 0, 0
        prob = Poisson2DProblem(laplacian(f, 1 / (n + 1)))
        sol = poisson_solve(prob, tol=1e-9)
        assert np.max(np.abs(laplacian(sol, prob.dx) - prob.h)) <= 1e-9
        np.testing.assert_allclose(sol, f, atol=1e-9)

    def test_solver_iteration_limit(self):
        with pytest.raises(IterationLimitError) as info:
            poisson_solve(Poisson2DProblem.default(), max_iter=3)
        assert info.value.residual > 1e-8

    def test_non_square_rejected(self):
        with pytest.raises(DomainError):
            Poisson2DProblem(np.zeros((3, 4)))

    def test_snr_variances(self):
        f = np.zeros((4, 4))
        f[1:-1, 1:-1] = [[1.0, 2.0], [-3.0, 0.5]]
        s2 = snr_noise_variances(f, 20.0)
        np.testing.assert_allclose(s2, f[1:-1, 1:-1] ** 2 / 100.0)

    def test_noiseless_reference_equals_input(self):
        prob = Poisson2DProblem.default(7)
        f = poisson_solve(prob, tol=1e-10)
        bt = poisson_reference_stream(f, np.zeros((7, 7)), np.random.default_rng(0))
        np.testing.assert_allclose(bt.d, prob.h.reshape(-1), atol=1e-10)
        np.testing.assert_array_equal(bt.u, 1.0)
        sub = poisson_reference_stream(f, np.zeros((7, 7)), np.random.default_rng(0),
                                       nodes=[(1, 1), (4, 5)])
        np.testing.assert_allclose(sub.d, [prob.h[0, 0], prob.h[3, 4]], atol=1e-10)

    def test_boundary_node_rejected(self):
        f = np.zeros((5, 5))
        with pytest.raises(DomainError):
            poisson_reference_stream(f, np.zeros((3, 3)), np.random.default_rng(0), nodes=[(0, 1)])

    def test_stream_noise_variance(self):
        # interior node away from the boundary: Var v = (4^2 + 4) s2 / dx^4
        n, s2 = 5, 1e-4
        f = np.zeros((n + 2, n + 2))
        st_ = PoissonStream(f, np.full((n, n), s2), 11)
        _, d, v = st_.draw(20000)
        np.testing.assert_array_equal(d, v)
        dx = 1 / (n + 1)
        centre = 2 * n + 2
        assert v[:, centre].var() == pytest.approx(20 * s2 / dx**4, rel=0.05)

    def test_stream_chunking_invariant(self):
        f = poisson_solve(Poisson2DProblem.default(5))
        s2 = snr_noise_variances(f, 25.0)
        whole = PoissonStream(f, s2, 4).draw(12)
        s = PoissonStream(f, s2, 4)
        a, b = s.draw(5), s.draw(7)
        for w, x, y in zip(whole, a, b):
            np.testing.assert_array_equal(w, np.concatenate([x, y]))
