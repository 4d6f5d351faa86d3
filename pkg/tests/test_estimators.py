import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from difflms.basis import sample_basis
from difflms.errors import DomainError
from difflms.estimators import (CentralizedState, EstimatorState, atc_step, centralized_step,
                                diffusion_step, run_trial, simulate, trial_seed)
from difflms.harness import load_preset
from difflms.network import (CombinationPolicy, line_topology, metropolis_weights,
                             relative_degree_weights, uniform_weights)
from difflms.pde_model import (SampleBatch, SampleStream, SpatialDomain, random_ground_truth,
                               random_regressor_spec)
from oracles import single_lms_run


class ArrayStream:
    """Replays pre-drawn ``(u, d, v)`` arrays in order."""

    def __init__(self, u, d, v=None):
        self.u, self.d = u, d
        self.v = np.zeros_like(d) if v is None else v
        self.pos = 0

    def draw(self, n):
        s = slice(self.pos, self.pos + n)
        self.pos += n
        return self.u[s], self.d[s], self.v[s]


def _data(setup, seed, horizon):
    b, truth, spec, _ = setup
    return SampleStream(spec, truth, seed).draw(horizon)


class TestHandComputed:
    def test_centralized_single_step(self):
        blocks = np.ones((2, 1, 1))
        st_ = CentralizedState(np.array([0.5]), 0.1)
        bt = SampleBatch(0, np.array([[2.0], [-1.0]]), np.array([1.0, 0.5]))
        out = centralized_step(st_, bt, blocks)
        # node 1 residual 0, node 2 contributes -1 * 1.0
        np.testing.assert_allclose(out.w, [0.4])
        assert out.i == 0

    def test_atc_single_step(self):
        blocks = np.ones((2, 1, 1))
        A = np.array([[0.75, 0.5], [0.25, 0.5]])
        st_ = EstimatorState(np.array([[0.5], [-0.2]]), np.zeros((2, 1)), np.array([0.1, 0.2]))
        bt = SampleBatch(0, np.array([[2.0], [-1.0]]), np.array([1.0, 0.5]))
        out = atc_step(st_, bt, blocks, A)
        # psi = (0.5, -0.26); w = A^T psi
        np.testing.assert_allclose(out.w[:, 0], [0.31, 0.12], atol=1e-15)
        np.testing.assert_allclose(out.h[:, 0], [0.31, 0.12], atol=1e-15)

    def test_diffusion_uses_neighbour_data_at_own_estimate(self):
        blocks = np.ones((2, 1, 1))
        C = np.array([[0.5, 0.5], [0.5, 0.5]])
        policy = CombinationPolicy(np.eye(2), np.eye(2), C)
        st_ = EstimatorState(np.array([[1.0], [0.0]]), np.zeros((2, 1)), np.array([0.1, 0.1]))
        bt = SampleBatch(0, np.array([[1.0], [1.0]]), np.array([2.0, 2.0]))
        out = diffusion_step(st_, bt, blocks, policy)
        # node 1: 1 + 0.1 (0.5 (2-1) + 0.5 (2-1)) = 1.1 ; node 2: 0 + 0.1 * 2 = 0.2
        np.testing.assert_allclose(out.w[:, 0], [1.1, 0.2])


class TestStepAgreement:
    @pytest.mark.parametrize("algorithm", ["diffusion", "atc", "noncooperative"])
    def test_simulate_matches_loop(self, small_setup, algorithm):
        b, truth, spec, policy = small_setup
        u, d, v = _data(small_setup, 4, 60)
        mu = np.array([0.05, 0.08, 0.1])
        traj = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], mu, 60, algorithm,
                        policy=policy, chunk=7)
        state = EstimatorState.zeros(b.blocks, mu)
        eye = CombinationPolicy.identity(3)
        for i in range(60):
            bt = SampleBatch(i, u[i], d[i])
            if algorithm == "diffusion":
                state = diffusion_step(state, bt, b.blocks, policy)
            elif algorithm == "atc":
                state = atc_step(state, bt, b.blocks, policy.A2)
            else:
                state = diffusion_step(state, bt, b.blocks, eye)
            err = truth.w - state.w
            np.testing.assert_allclose(traj.msd_w[0, i], (err**2).sum(axis=1), rtol=1e-10,
                                       atol=1e-14)
        np.testing.assert_allclose(traj.w_final[0], state.w, atol=1e-12)

    def test_centralized_simulate_matches_loop(self, small_setup):
        b, truth, spec, _ = small_setup
        u, d, v = _data(small_setup, 8, 40)
        traj = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], 0.03, 40, "centralized")
        state = CentralizedState.zeros(b.blocks, 0.03)
        for i in range(40):
            state = centralized_step(state, SampleBatch(i, u[i], d[i]), b.blocks)
        np.testing.assert_allclose(traj.w_final[0, 0], state.w, atol=1e-12)
        np.testing.assert_allclose(traj.w_final[0, 2], state.w, atol=1e-12)

    def test_atc_equals_general_form(self, small_setup):
        b, truth, spec, policy = small_setup
        u, d, v = _data(small_setup, 2, 300)
        mu = 0.07
        atc = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], mu, 300, "atc", policy=policy)
        general = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], mu, 300, "diffusion",
                           policy=CombinationPolicy.atc(policy.A2))
        np.testing.assert_allclose(atc.w_final, general.w_final, rtol=0, atol=1e-10)
        np.testing.assert_allclose(atc.msd_w, general.msd_w, rtol=1e-9, atol=1e-14)

    def test_noncooperative_decouples(self, small_setup):
        b, truth, spec, policy = small_setup
        u, d, v = _data(small_setup, 6, 200)
        mu = np.array([0.02, 0.05, 0.1])
        traj = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], mu, 200, "noncooperative",
                        keep=range(200))
        for k in range(3):
            g = np.einsum("tm,md->td", u[:, k], b.blocks[k])
            ref = single_lms_run(g, d[:, k], mu[k], b.blocks.shape[2])
            got = np.array([traj.checkpoints[i][0, k] for i in range(200)])
            np.testing.assert_allclose(got, ref, atol=1e-12)


class TestSimulate:
    def test_h_domain_consistency(self, small_setup):
        b, truth, spec, policy = small_setup
        s = SampleStream(spec, truth, 1)
        traj = simulate(b.blocks, truth.w, [s], 0.05, 30, policy=policy, keep=[29])
        w = traj.checkpoints[29][0]
        eh = truth.h - np.einsum("kmd,kd->km", b.blocks, w)
        np.testing.assert_allclose(traj.msd_h[0, 29], (eh**2).sum(axis=1))

    def test_emse_uses_prior_estimate(self, small_setup):
        b, truth, spec, policy = small_setup
        u, d, v = _data(small_setup, 3, 5)
        traj = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], 0.05, 5, policy=policy)
        # first iteration: prior estimate is zero
        np.testing.assert_allclose(traj.emse[0, 0], np.einsum("km,km->k", u[0], truth.h) ** 2)

    def test_reduce_sums_trials(self, small_setup):
        b, truth, spec, policy = small_setup
        streams = lambda: [SampleStream(spec, truth, s) for s in range(4)]  # noqa: E731
        full = simulate(b.blocks, truth.w, streams(), 0.05, 20, policy=policy)
        red = simulate(b.blocks, truth.w, streams(), 0.05, 20, policy=policy, reduce=True)
        np.testing.assert_allclose(red.msd_w, full.msd_w.sum(axis=0))
        np.testing.assert_allclose(red.emse, full.emse.sum(axis=0))

    def test_trials_are_independent_of_batching(self, small_setup):
        b, truth, spec, policy = small_setup
        both = simulate(b.blocks, truth.w, [SampleStream(spec, truth, s) for s in (1, 2)], 0.05,
                        25, policy=policy)
        one = simulate(b.blocks, truth.w, [SampleStream(spec, truth, 2)], 0.05, 25, policy=policy)
        np.testing.assert_allclose(both.msd_w[1], one.msd_w[0], atol=1e-15)

    def test_node_permutation_equivariance(self, rng):
        n = 4
        b = sample_basis(SpatialDomain(1.0, n), 3, n_params=2)
        truth = random_ground_truth(b, 2, rng)
        spec = random_regressor_spec(n, 2, rng)
        g = line_topology(n)
        pol = CombinationPolicy(uniform_weights(g), relative_degree_weights(g),
                                metropolis_weights(g))
        u, d, v = SampleStream(spec, truth, 0).draw(80)
        mu = np.array([0.02, 0.04, 0.06, 0.08])
        p = np.array([2, 0, 3, 1])
        Pm = np.eye(n)[p]
        ppol = CombinationPolicy(Pm @ pol.A1 @ Pm.T, Pm @ pol.A2 @ Pm.T, Pm @ pol.C @ Pm.T)
        base = simulate(b.blocks, truth.w, [ArrayStream(u, d, v)], mu, 80, policy=pol)
        perm = simulate(b.blocks[p], truth.w, [ArrayStream(u[:, p], d[:, p], v[:, p])], mu[p],
                        80, policy=ppol)
        np.testing.assert_allclose(perm.msd_w[0], base.msd_w[0][:, p], rtol=1e-10, atol=1e-15)
        np.testing.assert_allclose(perm.w_final[0], base.w_final[0][p], atol=1e-12)

    @given(st.integers(0, 2**31), st.sampled_from(["diffusion", "atc", "noncooperative",
                                                    "centralized"]))
    def test_noiseless_truth_is_fixed_point(self, seed, algorithm):
        rng = np.random.default_rng(seed)
        b = sample_basis(SpatialDomain(1.0, 3), 3, n_params=2)
        truth = random_ground_truth(b, 2, rng)
        spec = random_regressor_spec(3, 2, rng, noise_range=(0.0, 0.0))
        g = line_topology(3)
        pol = CombinationPolicy(uniform_weights(g), metropolis_weights(g), metropolis_weights(g))
        traj = simulate(b.blocks, truth.w, [SampleStream(spec, truth, seed)], 0.05, 15,
                        algorithm, policy=pol, w_init=truth.w)
        assert traj.msd_w.max() < 1e-25

    @given(st.floats(-3, 3), st.sampled_from(["diffusion", "atc"]))
    def test_zero_step_keeps_consensus(self, c, algorithm):
        rng = np.random.default_rng(1)
        b = sample_basis(SpatialDomain(1.0, 3), 2)
        truth = random_ground_truth(b, 1, rng)
        spec = random_regressor_spec(3, 1, rng)
        g = line_topology(3)
        pol = CombinationPolicy(uniform_weights(g), relative_degree_weights(g),
                                metropolis_weights(g))
        w0 = np.full(2, c)
        traj = simulate(b.blocks, truth.w, [SampleStream(spec, truth, 0)], 0.0, 10, algorithm,
                        policy=pol, w_init=w0)
        np.testing.assert_allclose(traj.w_final[0], np.tile(w0, (3, 1)), atol=1e-12)

    @pytest.mark.parametrize("kwargs, match", [
        ({"algorithm": "gossip"}, "unknown algorithm"),
        ({"algorithm": "diffusion", "policy": None}, "policy"),
        ({"horizon": 0}, "horizon"),
        ({"h_true": np.zeros((2, 2))}, "h_true"),
    ])
    def test_errors(self, small_setup, kwargs, match):
        b, truth, spec, policy = small_setup
        args = dict(algorithm="diffusion", policy=policy, horizon=5)
        args.update(kwargs)
        with pytest.raises(DomainError, match=match):
            simulate(b.blocks, truth.w, [SampleStream(spec, truth, 0)], 0.1, **args)

    def test_negative_step_rejected(self, small_setup):
        with pytest.raises(DomainError):
            EstimatorState.zeros(small_setup[0].blocks, -0.1)

    def test_step_shape_checks(self, small_setup):
        b = small_setup[0]
        st_ = EstimatorState.zeros(b.blocks, 0.1)
        with pytest.raises(DomainError):
            atc_step(st_, SampleBatch(0, np.zeros((2, 2)), np.zeros(2)), b.blocks, np.eye(3))


class TestTrials:
    def test_trial_seeds_distinct(self):
        draws = {np.random.default_rng(trial_seed(5, t)).integers(2**62) for t in range(50)}
        assert len(draws) == 50
        setup = np.random.default_rng(np.random.SeedSequence(5, spawn_key=(0,))).integers(2**62)
        assert setup not in draws

    def test_run_trial_deterministic(self):
        cfg = load_preset("s5a").with_overrides(horizon=40, steady_window=10)
        a = run_trial(cfg, 3, trial=2)
        b = run_trial(cfg.build(), 3, trial=2)
        np.testing.assert_array_equal(a.msd_w, b.msd_w)
        assert a.msd_w.shape == (1, 40, 4)
        c = run_trial(cfg, 3, trial=1)
        assert not np.array_equal(a.msd_w, c.msd_w)

    def test_run_trial_centralized_step(self):
        cfg = load_preset("s5b-nb5").with_overrides(horizon=10, steady_window=5)
        scen = cfg.build()
        t = run_trial(scen, 0, algorithm="centralized")
        manual = simulate(scen.blocks, scen.truth.w,
                          [SampleStream(scen.regressors, scen.truth, trial_seed(0, 0))],
                          scen.mu_centralized, 10, "centralized")
        np.testing.assert_array_equal(t.msd_w, manual.msd_w)
