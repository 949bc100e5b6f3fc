import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import project_by_enumeration, random_feasible
from trafficassign import is_feasible, paper_network, project, project_simplex

finite = st.floats(-1e4, 1e4, allow_nan=False)
blocks = st.integers(1, 6).flatmap(lambda n: arrays(float, n, elements=finite))
totals = st.floats(0.0, 1e4, allow_nan=False)


class TestProjectSimplex:
    def test_examples(self):
        np.testing.assert_allclose(project_simplex([3.0, -1.0], 2.0), [[2.0, 0.0]])
        np.testing.assert_allclose(project_simplex([1.0, 1.0], 4.0), [[2.0, 2.0]])
        np.testing.assert_allclose(project_simplex([-400.0, 1300.0], 1300.0), [[0.0, 1300.0]])

    def test_zero_total(self):
        np.testing.assert_array_equal(project_simplex([3.0, -1.0], 0.0), [[0.0, 0.0]])

    def test_rows_independent(self):
        v = np.array([[5.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        out = project_simplex(v, [3.0, 3.0])
        np.testing.assert_allclose(out, [[3.0, 0.0, 0.0], [1.0, 1.0, 1.0]])

    @settings(max_examples=300, deadline=None)
    @given(blocks, totals)
    def test_matches_oracle(self, v, total):
        np.testing.assert_allclose(project_simplex(v, total)[0], project_by_enumeration(v, total),
                                   atol=1e-6 * max(1.0, total, np.abs(v).max()))

    @settings(max_examples=300, deadline=None)
    @given(blocks, totals)
    def test_feasible_and_idempotent(self, v, total):
        y = project_simplex(v, total)[0]
        assert y.min() >= 0.0
        assert y.sum() == pytest.approx(total, rel=1e-9, abs=1e-9)
        np.testing.assert_allclose(project_simplex(y, total)[0], y, atol=1e-9 * max(1.0, total))

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 6).flatmap(
        lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))),
        totals)
    def test_non_expansive(self, pair, total):
        a, b = pair
        pa, pb = project_simplex(a, total)[0], project_simplex(b, total)[0]
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) * (1 + 1e-9) + 1e-9

    @settings(max_examples=200, deadline=None)
    @given(blocks, totals)
    def test_variational_inequality(self, v, total):
        # <v - P(v), y - P(v)> <= 0 for every feasible y, checked on the vertices
        p = project_simplex(v, total)[0]
        for i in range(len(v)):
            vertex = np.zeros(len(v))
            vertex[i] = total
            assert np.dot(v - p, vertex - p) <= 1e-6 * max(1.0, total, np.abs(v).max()) ** 2


class TestProject:
    def test_feasible_point_unchanged(self, dynamic_net, rng):
        h = random_feasible(dynamic_net, rng)
        np.testing.assert_allclose(project(h, dynamic_net), h, atol=1e-9)

    def test_result_feasible(self, dynamic_net, rng):
        point = rng.normal(0, 2000, (dynamic_net.n_paths, dynamic_net.n_steps))
        ok, viol = is_feasible(project(point, dynamic_net), dynamic_net)
        assert ok, viol

    def test_single_path_od_gets_its_demand(self, dynamic_net):
        out = project(np.zeros((3, dynamic_net.n_steps)), dynamic_net)
        np.testing.assert_array_equal(out[2], dynamic_net.demand_matrix()[1])

    def test_rejects_nan(self, static_net):
        with pytest.raises(ValueError, match="non-finite"):
            project(np.array([[np.nan], [0.0], [0.0]]), static_net)

    def test_rejects_shape(self, static_net):
        with pytest.raises(ValueError, match="shape"):
            project(np.zeros((2, 1)), static_net)


class TestFeasibility:
    def test_example(self):
        net = paper_network(dt=3600.0, horizon=3600.0, demand_end=None)
        assert is_feasible(np.array([[1000.0], [300.0], [300.0]]), net)[0]
        ok, viol = is_feasible(np.array([[1000.0], [200.0], [300.0]]), net)
        assert not ok and viol == pytest.approx(100.0)
        ok, viol = is_feasible(np.array([[1400.0], [-100.0], [300.0]]), net)
        assert not ok and viol == pytest.approx(100.0)
