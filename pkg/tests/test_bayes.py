import math

import numpy as np
import pytest

from ltiverify.bayes import (
    BayesError,
    Dataset,
    GaussianPosterior,
    GaussianPrior,
    UniformBox,
    UniformPosterior,
    information,
    log_likelihood,
    posterior_gaussian,
    posterior_numeric,
    sample_experiment,
    trapezoid_weights,
)
from ltiverify.lti import LtiModelSet, ParameterDomain, regressors, simulate

import oracles

THETA0 = np.array([1.0, 0.0])


@pytest.fixture
def case_data(case_model):
    return sample_experiment(case_model, THETA0, n_samples=200, sigma_e=0.5, seed=0)


class TestExperiment:
    def test_vanishing_noise(self, case_model):
        ds = sample_experiment(case_model, THETA0, sigma_e=1e-12, seed=3)
        y0 = simulate(case_model, THETA0, None, ds.u)
        assert np.max(np.abs(ds.y.ravel() - y0)) < 1e-5

    def test_same_seed_identical(self, case_model):
        a = sample_experiment(case_model, THETA0, seed=11)
        b = sample_experiment(case_model, THETA0, seed=11)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.y, b.y)
        c = sample_experiment(case_model, THETA0, seed=12)
        assert not np.array_equal(a.y, c.y)

    def test_noise_variance(self, case_model):
        ds = sample_experiment(case_model, THETA0, n_samples=10_000, sigma_e=0.5, seed=1)
        resid = ds.y.ravel() - simulate(case_model, THETA0, None, ds.u)
        assert 0.47 <= np.var(resid) <= 0.53

    def test_inputs_uniform(self, case_model):
        ds = sample_experiment(case_model, THETA0, n_samples=5000, seed=2)
        assert ds.u.min() >= -0.2 and ds.u.max() <= 0.2
        assert abs(ds.u.mean()) < 0.01

    def test_fixed_input_sequence(self, case_model):
        u = np.linspace(-1, 1, 20)
        ds = sample_experiment(case_model, THETA0, input_law=u, n_samples=20, seed=0)
        assert np.array_equal(ds.u.ravel(), u)

    @pytest.mark.parametrize("bad", [0.0, -1.0, [[1.0, 2.0], [2.0, 1.0]]])
    def test_invalid_covariance(self, case_model, bad):
        with pytest.raises(BayesError):
            sample_experiment(case_model, THETA0, sigma_e=bad)

    def test_no_samples(self, case_model):
        with pytest.raises(BayesError):
            sample_experiment(case_model, THETA0, n_samples=0)

    def test_csv_round_trip(self, case_data, tmp_path):
        path = tmp_path / "data.csv"
        case_data.save(path)
        assert path.read_text().splitlines()[0] == "t,u,y_measured"
        again = Dataset.load(path)
        assert np.array_equal(again.u, case_data.u) and np.array_equal(again.y, case_data.y)
        assert np.array_equal(again.sigma_e, case_data.sigma_e)
        assert again.seed == 0 and np.array_equal(again.theta0, THETA0)

    def test_length_mismatch(self):
        with pytest.raises(BayesError):
            Dataset(np.zeros(3), np.zeros(4), [0, 0], 0.5)


class TestLikelihood:
    def test_single_sample_hand_value(self, case_model):
        # x(0) = 0 gives y(0, θ) = 0, so a zero measurement is matched exactly
        ds = Dataset([0.3], [0.0], [0.0, 0.0], 0.5)
        expected = -0.5 * math.log(0.5) - 0.5 * math.log(2 * math.pi)
        assert log_likelihood([2.0, -1.0], ds, case_model) == pytest.approx(expected, abs=1e-14)

    def test_hessian(self, case_model, case_data):
        Phi = regressors(case_model, case_data.x0, case_data.u)
        H_ref = -Phi.T @ Phi / 0.5
        h = 1e-3
        t = np.array([0.3, -0.2])
        E = np.eye(2)
        H = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                H[i, j] = (log_likelihood(t + h * E[i] + h * E[j], case_data, case_model)
                           - log_likelihood(t + h * E[i] - h * E[j], case_data, case_model)
                           - log_likelihood(t - h * E[i] + h * E[j], case_data, case_model)
                           + log_likelihood(t - h * E[i] - h * E[j], case_data, case_model)) / (4 * h * h)
        assert np.allclose(H, H_ref, rtol=1e-6)
        assert np.all(np.linalg.eigvalsh(H_ref) <= 0)

    def test_noiseless_argmax(self, case_model):
        ds = sample_experiment(case_model, [0.6, -0.4], sigma_e=1e-12, seed=4)
        ds = Dataset(ds.u, simulate(case_model, [0.6, -0.4], None, ds.u), ds.x0, 0.5)
        grid = np.round(np.arange(-1, 1.0001, 0.1), 10)
        best = max(((a, b) for a in grid for b in grid), key=lambda t: log_likelihood(t, ds, case_model))
        assert np.allclose(best, [0.6, -0.4])

    def test_multi_output(self):
        ms = LtiModelSet(np.diag([0.5, -0.3]), np.array([[1.0], [1.0]]), p=2)
        theta = np.array([1.0, -1.0, 0.5, 2.0])
        ds = sample_experiment(ms, theta, sigma_e=[[0.5, 0.1], [0.1, 0.4]], n_samples=30, seed=0)
        S = ds.sigma_e
        Y = simulate(ms, theta, None, ds.u)
        r = Y - ds.y
        ref = sum(-0.5 * ri @ np.linalg.solve(S, ri) for ri in r)
        ref -= 15 * math.log(np.linalg.det(S)) + 30 * math.log(2 * math.pi)
        assert log_likelihood(theta, ds, ms) == pytest.approx(ref, rel=1e-12)

    def test_unknown_initial_state(self, case_model):
        ds = Dataset([0.1, 0.2], [0.0, 0.1], np.zeros(0), 0.5)
        with pytest.raises(BayesError, match="initial state"):
            log_likelihood([0, 0], ds, case_model)


class TestPosterior:
    def test_no_data_gaussian_prior(self, case_model):
        prior = GaussianPrior([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
        post = posterior_gaussian(prior, Dataset(np.zeros(0), np.zeros(0), [0, 0], 0.5), case_model)
        assert np.allclose(post.mean, prior.mean) and np.allclose(post.cov, prior.cov)

    def test_no_data_box_prior(self, case_model, domain):
        post = posterior_gaussian(UniformBox(domain), Dataset(np.zeros(0), np.zeros(0), [0, 0], 0.5), case_model)
        assert isinstance(post, UniformPosterior)
        grid = posterior_numeric(UniformBox(domain), Dataset(np.zeros(0), np.zeros(0), [0, 0], 0.5),
                                 case_model, resolution=51)
        assert np.allclose(grid.density_values, 1 / 400)

    def test_flat_prior_normal_equations(self, case_model, case_data):
        post = posterior_gaussian(None, case_data, case_model)
        Phi = regressors(case_model, case_data.x0, case_data.u)
        assert np.allclose(post.mean, oracles.normal_equations(Phi, case_data.y.ravel()), rtol=1e-8, atol=1e-12)

    def test_wide_gaussian_prior_approaches_flat(self, case_model, case_data):
        flat = posterior_gaussian(None, case_data, case_model)
        wide = posterior_gaussian(GaussianPrior([5.0, 5.0], 1e8 * np.eye(2)), case_data, case_model)
        assert np.allclose(wide.mean, flat.mean, atol=1e-6)

    def test_singular_information(self, case_model):
        ds = Dataset(np.zeros(10), np.zeros(10), [0, 0], 0.5)
        with pytest.raises(BayesError, match="singular"):
            posterior_gaussian(None, ds, case_model)

    @pytest.mark.parametrize("seed", range(10))
    def test_covariance_shrinks(self, case_model, seed):
        r = np.random.default_rng(seed)
        M = r.standard_normal((2, 2))
        prior = GaussianPrior(r.standard_normal(2), M @ M.T + 0.1 * np.eye(2))
        ds = sample_experiment(case_model, THETA0, n_samples=int(r.integers(1, 50)), seed=seed)
        post = posterior_gaussian(prior, ds, case_model)
        assert np.allclose(post.cov, post.cov.T)
        assert np.all(np.linalg.eigvalsh(post.cov) > 0)
        assert np.all(np.linalg.eigvalsh(prior.cov - post.cov) >= -1e-12)

    def test_conjugate_update_formula(self, case_model, case_data):
        prior = GaussianPrior([0.5, 0.5], np.diag([2.0, 3.0]))
        post = posterior_gaussian(prior, case_data, case_model)
        J, h = information(case_data, case_model)
        Ri = np.linalg.inv(prior.cov)
        cov = np.linalg.inv(Ri + J)
        assert np.allclose(post.cov, cov) and np.allclose(post.mean, cov @ (Ri @ prior.mean + h))

    def test_grid_integrates_to_one(self, case_model, case_data, domain):
        grid = posterior_numeric(UniformBox(domain), case_data, case_model)
        assert float(np.sum(grid.weights() * grid.density_values)) == pytest.approx(1.0, abs=1e-6)

    def test_grid_concentrates_near_truth(self, case_model, case_data, domain):
        grid = posterior_numeric(UniformBox(domain), case_data, case_model)
        peak = grid.nodes()[np.argmax(grid.density_values)]
        assert np.linalg.norm(peak - THETA0) < 1.0
        assert grid.density([peak])[0] > 100 * grid.density([[-9.0, 9.0]])[0]

    def test_grid_matches_gaussian(self, case_model, case_data):
        flat = posterior_gaussian(None, case_data, case_model)
        sd = np.sqrt(np.diag(flat.cov))
        box = ParameterDomain(flat.mean - 8 * sd, flat.mean + 8 * sd)
        grid = posterior_numeric(UniformBox(box), case_data, case_model, resolution=101)
        g = flat.untruncated_density(grid.nodes()).reshape(grid.density_values.shape)
        w = trapezoid_weights(grid.axes)
        a = g / np.sum(w * g)
        b = grid.density_values
        mask = b > 1e-300
        assert np.max(np.abs(a[mask] / b[mask] - 1)) < 1e-6

    def test_grid_errors(self, case_model, case_data, domain):
        with pytest.raises(BayesError, match="at least 51"):
            posterior_numeric(UniformBox(domain), case_data, case_model, resolution=21)
        ms = LtiModelSet(np.diag([0.5, 0.4, 0.3, 0.2]), np.ones((4, 1)))
        ds = sample_experiment(ms, np.ones(4), n_samples=10, seed=0)
        dom = ParameterDomain(-np.ones(4), np.ones(4))
        with pytest.raises(BayesError, match="Monte Carlo"):
            posterior_numeric(UniformBox(dom), ds, ms)

    def test_truncated_density_normalised(self, case_model, case_data):
        post = posterior_gaussian(UniformBox(ParameterDomain([0.0, -1.0], [2.0, 0.0])), case_data, case_model)
        ax = np.linspace(0, 2, 401), np.linspace(-1, 0, 401)
        pts = np.stack([g.ravel() for g in np.meshgrid(*ax, indexing="ij")], axis=1)
        total = np.sum(trapezoid_weights(ax).ravel() * post.density(pts))
        assert total == pytest.approx(1.0, abs=1e-3)
        s = post.sample(np.random.default_rng(0), 1000)
        assert np.all((s >= [0, -1]) & (s <= [2, 0]))

    def test_grid_sampler_mean(self, case_model, case_data, domain):
        grid = posterior_numeric(UniformBox(domain), case_data, case_model)
        flat = posterior_gaussian(None, case_data, case_model)
        s = grid.sample(np.random.default_rng(0), 40_000)
        assert np.allclose(s.mean(axis=0), flat.mean, atol=0.05)

    @pytest.mark.slow
    def test_consistency(self, case_model):
        def errors(n):
            out = []
            for seed in range(50):
                ds = sample_experiment(case_model, THETA0, n_samples=n, seed=seed)
                out.append(np.linalg.norm(posterior_gaussian(None, ds, case_model).mean - THETA0))
            return np.median(out)

        assert errors(800) < errors(200)
