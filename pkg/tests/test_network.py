import dataclasses
import warnings

import numpy as np
import pytest

from trafficassign import (DemandProfile, Link, Network, ODPair, Path, build_incidence,
                           paper_network, validate)


def two_link_network(path_links=(0, 1), demand=100.0):
    links = [Link(0, 0, 1, 100.0, 1800.0, 72.0), Link(1, 1, 2, 100.0, 1800.0, 72.0),
             Link(2, 5, 6, 100.0, 1800.0, 72.0)]
    paths = [Path(10, tuple(path_links), 0)]
    od = ODPair(0, 0, 2, (10,), DemandProfile.constant(demand, 5.0, 20.0))
    return Network(links, [od], paths)


class TestLink:
    def test_free_flow_time(self):
        link = Link(0, 0, 1, 200.0, 2000.0, 70.0)
        assert link.free_flow_travel_time == pytest.approx(200.0 / (70.0 / 3.6), rel=1e-15)

    def test_critical_density(self):
        assert Link(0, 0, 1, 200.0, 2000.0, 80.0).critical_density == pytest.approx(25.0)


class TestDemandProfile:
    def test_breakpoints(self):
        d = DemandProfile.from_breakpoints([(10.0, 600.0), (20.0, 0.0)], 5.0, 30.0)
        np.testing.assert_array_equal(d.values, [0, 0, 600, 600, 0, 0])

    def test_values_read_only(self):
        d = DemandProfile.constant(1.0, 5.0, 10.0)
        with pytest.raises(ValueError):
            d.values[0] = 2.0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="multiple"):
            DemandProfile.constant(1.0, 7.0, 10.0)


class TestExampleNetwork:
    def test_shape(self):
        net = paper_network()
        assert (net.n_links, len(net.ods), net.n_paths) == (6, 2, 3)
        assert net.n_steps == 120
        assert validate(net) == []

    def test_link_two_is_twice_link_three(self):
        net = paper_network()
        assert net.link(2).free_flow_travel_time == pytest.approx(
            2 * net.link(3).free_flow_travel_time)

    def test_incidence(self):
        delta = build_incidence(paper_network())
        expected = np.array([[1, 1, 0], [0, 0, 1], [0, 1, 0],
                             [1, 0, 1], [1, 1, 1], [1, 1, 1]], dtype=float)
        np.testing.assert_array_equal(delta, expected)
        assert not delta.flags.writeable

    def test_free_flow_path_times(self):
        t0 = 200.0 / (70.0 / 3.6)
        np.testing.assert_allclose(paper_network().free_flow_path_times(), [4 * t0, 5 * t0, 4 * t0])

    def test_constant_demand(self):
        net = paper_network(dt=3600.0, horizon=3600.0, demand_end=None)
        np.testing.assert_array_equal(net.demand_matrix(), [[1300.0], [300.0]])


class TestValidate:
    def test_disconnected_path_reported(self):
        net = two_link_network(path_links=(0, 2))
        errors = validate(net)
        assert any("path 10: path not connected (link 0 -> link 2)" in e for e in errors)

    def test_od_without_paths(self):
        net = paper_network()
        od = dataclasses.replace(net.ods[1], paths=())
        bad = Network(net.links, [net.ods[0], od], net.paths[:2])
        assert "od 1: OD has no paths" in validate(bad)

    def test_unused_link_warns(self):
        with pytest.warns(UserWarning, match=r"\[2\]"):
            assert validate(two_link_network()) == []

    def test_jam_density_below_critical(self):
        net = paper_network().with_links(jam_density=20.0)
        assert any("critical density" in e for e in validate(net))

    def test_repeated_link(self):
        links = [Link(0, 0, 1, 100.0, 1800.0, 72.0), Link(1, 1, 0, 100.0, 1800.0, 72.0)]
        od = ODPair(0, 0, 1, (1,), DemandProfile.constant(1.0, 5.0, 10.0))
        net = Network(links, [od], [Path(1, (0, 1, 0), 0)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert any("repeats" in e for e in validate(net))

    def test_wrong_destination(self):
        links = [Link(0, 0, 1, 100.0, 1800.0, 72.0)]
        od = ODPair(0, 0, 9, (1,), DemandProfile.constant(1.0, 5.0, 10.0))
        net = Network(links, [od], [Path(1, (0,), 0)])
        assert any("destination" in e for e in validate(net))

    def test_negative_demand(self):
        net = paper_network()
        od = dataclasses.replace(net.ods[0], demand=DemandProfile(-net.ods[0].demand.values, 5.0, 600.0))
        assert any("nonnegative" in e for e in validate(net.with_demand({0: od.demand})))
