import numpy as np
import pytest

from ltiverify.geometry import Polytope, UnboundedError, hausdorff, is_subset
from ltiverify.lti import LtiModelSet, ParameterDomain, StabilityError, fir_set, laguerre_set
from ltiverify.logic import AtomicProposition, compile_formula, feasible_set
from ltiverify.reach import (
    bound_table,
    c1_bound,
    eps_reach,
    eps_theta,
    label_precision,
    matrix_power_norm,
    max_vertex_norm,
    post,
    power_norms,
    reach,
    write_bounds_csv,
)

import oracles


def scalar(a, b):
    return LtiModelSet(np.array([[a]]), np.array([[b]]))


class TestPost:
    def test_scalar_interval(self):
        P = post(Polytope.box([0.0], [1.0]), scalar(0.5, 1.0), Polytope.box([-0.2], [0.2]))
        assert np.allclose(np.sort(P.vertices.ravel()), [-0.2, 0.7])

    def test_case_study_first_step(self, case_model, inputs):
        P = post(Polytope.point([0, 0]), case_model, inputs)
        expected = np.array([[0.183303, -0.073321], [-0.183303, 0.073321]])
        assert hausdorff(P, Polytope.from_points(expected)) < 1e-6

    def test_samples_inside(self, case_model, inputs, rng):
        P = Polytope.box([-1, -1], [1, 1])
        S = post(P, case_model, inputs)
        x = rng.uniform(-1, 1, (500, 2))
        u = rng.uniform(-0.2, 0.2, (500, 1))
        assert np.all(S.contains_points(x @ case_model.A.T + u @ case_model.B.T))

    def test_unbounded_input_rejected(self, case_model):
        with pytest.raises(UnboundedError):
            post(Polytope.point([0, 0]), case_model, Polytope.from_halfspaces([[1.0]], [1.0]))


class TestReach:
    def test_scalar_sequence(self):
        seq = reach(scalar(0.5, 1.0), Polytope.box([-1.0], [1.0]), k=4)
        radii = [np.max(np.abs(S.vertices)) for S in seq.sets]
        assert np.allclose(radii, [0, 1, 1.5, 1.75, 1.875])

    def test_nested_origin_started(self, case_model, inputs):
        seq = reach(case_model, inputs, k=15)
        for a, b in zip(seq.sets, seq.sets[1:]):
            assert is_subset(a, b)

    def test_fir_fixed_point(self):
        seq = reach(fir_set(2), Polytope.box([-1.0], [1.0]), k=5)
        assert seq.fixed_point_at == 3

    def test_converges(self, case_model, inputs):
        seq = reach(case_model, inputs, k=40)
        assert hausdorff(seq.sets[30], seq.sets[40]) < 1e-6

    def test_tube_limit_equals_origin_limit(self, case_model, inputs):
        X0 = Polytope.box([-0.1, -0.1], [0.1, 0.1])
        tube = reach(case_model, inputs, X0=X0, k=40, tube=True).last
        orig = reach(case_model, inputs, k=40).last
        limit = Polytope.from_points(np.vstack([orig.vertices, X0.vertices]))
        # the tube keeps X0 and converges to a set containing the origin-started limit;
        # hull simplification may shave off a few 1e-10 so containment is checked with slack
        H, b = tube.halfspaces
        assert np.max(limit.vertices @ H.T - b) < 1e-7
        assert hausdorff(tube, reach(case_model, inputs, X0=X0, k=50, tube=True).last) < 1e-6

    def test_negative_k(self, case_model, inputs):
        with pytest.raises(ValueError):
            reach(case_model, inputs, k=-1)


class TestConstants:
    def test_c1_zero_matrix(self):
        ms = LtiModelSet(np.zeros((2, 2)), np.array([[3.0], [4.0]]))
        assert c1_bound(ms) == pytest.approx(5.0)

    def test_c1_nilpotent(self):
        assert c1_bound(fir_set(3)) == pytest.approx(3.0)

    def test_c1_scalar_geometric(self):
        assert c1_bound(scalar(0.5, 2.0)) == pytest.approx(4.0, rel=1e-10)
        assert c1_bound(scalar(0.5, 2.0), method="closed_form") == pytest.approx(4.0)

    def test_c1_case_study(self, case_model):
        c = c1_bound(case_model)
        assert c == pytest.approx(3.49821, rel=1e-5)
        assert c <= c1_bound(case_model, method="closed_form")

    def test_c1_dominates_series(self, case_model):
        series = sum(np.linalg.norm(np.linalg.matrix_power(case_model.A, i) @ case_model.B, 2) for i in range(200))
        assert series <= c1_bound(case_model) + 1e-12

    def test_power_norms_unstable(self):
        with pytest.raises(StabilityError):
            power_norms(scalar(1.0, 1.0))

    def test_eps_reach_case_study(self, case_model, inputs):
        assert eps_reach(case_model, inputs, 1) == pytest.approx(0.700413, rel=0.01)
        assert eps_reach(case_model, inputs, 10) == pytest.approx(0.00154581, rel=0.01)
        r = eps_reach(case_model, inputs, 2) / eps_reach(case_model, inputs, 1)
        assert r == pytest.approx(matrix_power_norm(case_model.A, 2) / matrix_power_norm(case_model.A, 1), abs=1e-12)

    def test_eps_reach_zero_start_terms_agree(self, case_model, inputs):
        X0 = Polytope.point([0, 0])
        for term in ("next_power", "rigorous"):
            assert eps_reach(case_model, inputs, 5, X0=X0, x0_term=term) == eps_reach(case_model, inputs, 5)

    def test_label_precision(self, iota):
        assert label_precision(iota.atoms) == 2.0
        with pytest.raises(ValueError):
            label_precision([AtomicProposition("z", [1.0], 0.0)])

    def test_eps_theta_examples(self):
        box = Polytope.box([-1, -1], [1, 1])
        m = np.sqrt(2)
        assert eps_theta(0.1, 2.0, box, simplified=True) == pytest.approx(0.2 * 2)
        assert eps_theta(0.1, 2.0, box) == pytest.approx(0.2 * 2 / (1 + 0.2 * m))
        assert eps_theta(0.0, 2.0, box) == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_full_below_simplified(self, seed):
        r = np.random.default_rng(seed)
        P = Polytope.from_points(r.uniform(-3, 3, (8, 2)) + 0.0)
        P = Polytope.from_points(np.vstack([P.vertices, [[-4, -4], [4, -4], [0, 4]]]))
        ex, ep = r.uniform(0, 1), r.uniform(0.1, 3)
        assert eps_theta(ex, ep, P) <= eps_theta(ex, ep, P, simplified=True)

    def test_eps_theta_requires_origin_interior(self):
        with pytest.raises(ValueError):
            eps_theta(0.1, 1.0, Polytope.box([0, 0], [1, 1]))

    def test_max_vertex_norm_unbounded(self):
        with pytest.raises(UnboundedError, match="no finite bound"):
            max_vertex_norm(Polytope.from_halfspaces([[1.0, 0.0]], [1.0]))


class TestBoundValidity:
    @pytest.mark.parametrize("seed", range(15))
    def test_origin_started(self, seed):
        r = np.random.default_rng(seed)
        ms = oracles.random_stable_model(r, radius=0.8)
        U = Polytope.box([-0.5], [0.5])
        seq = reach(ms, U, k=30)
        for k in (1, 2, 4, 8):
            assert hausdorff(seq.sets[k], seq.sets[30]) <= eps_reach(ms, U, k) + 1e-9

    @pytest.mark.parametrize("seed", range(15))
    def test_tube_rigorous(self, seed):
        r = np.random.default_rng(seed)
        ms = oracles.random_stable_model(r, radius=0.8)
        U = Polytope.box([-0.5], [0.5])
        X0 = Polytope.from_points(r.uniform(-1, 1, (4, 2)))
        seq = reach(ms, U, X0=X0, k=40, tube=True)
        for k in (1, 2, 4, 8):
            bound = eps_reach(ms, U, k, X0=X0, x0_term="rigorous")
            assert hausdorff(seq.sets[k], seq.sets[40]) <= bound + 1e-9

    def test_next_power_x0_term_can_fail(self):
        # x(t+1) = x/2 started at 1: the tube is [2^-k, 1] and its limit [0, 1]
        ms = scalar(0.5, 0.0)
        U = Polytope.box([-1.0], [1.0])
        X0 = Polytope.point([1.0])
        seq = reach(ms, U, X0=X0, k=40, tube=True)
        for k in (1, 3, 5):
            d = hausdorff(seq.sets[k], seq.sets[40])
            assert d == pytest.approx(0.5**k, rel=1e-6)
            assert d > eps_reach(ms, U, k, X0=X0, x0_term="next_power")
            assert d <= eps_reach(ms, U, k, X0=X0, x0_term="rigorous") + 1e-12


class TestTable:
    def test_case_study_table(self, case_model, inputs, iota, tmp_path):
        cs = compile_formula(iota, case_model, inputs.vertices)
        rows = bound_table(case_model, inputs, cs, iota.atoms, range(1, 11))
        assert not rows[0].bounded and np.isinf(rows[0].eps_theta)
        assert all(r.bounded for r in rows[1:])
        assert rows[1].eps_theta == pytest.approx(2.71492, rel=0.01)
        eps = [r.eps_theta for r in rows[1:]]
        assert all(a > b for a, b in zip(eps, eps[1:]))
        path = tmp_path / "bounds.csv"
        write_bounds_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "k,eps_reach,eps_theta,max_vertex_norm"
        assert lines[1].startswith("1,") and "inf" in lines[1]

    def test_sandwich_sampling(self, case_model, inputs, iota):
        # the k-step feasible set lies within eps_theta of the limit (approximated at k=30)
        cs = compile_formula(iota, case_model, inputs.vertices)
        seq = reach(case_model, inputs, k=30)
        limit = feasible_set(cs, seq.sets[30].vertices)
        rows = bound_table(case_model, inputs, cs, iota.atoms, range(2, 11))
        for r in rows:
            Fk = feasible_set(cs, seq.sets[r.k].vertices)
            assert is_subset(limit, Fk)
            assert hausdorff(Fk, limit) <= r.eps_theta
