import json

import numpy as np
import pytest

from trafficassign import ScenarioError, load_scenario, paper_network
from trafficassign.scenario import builtin_path, resolve


def builtin_doc(name="paper_fig3_dynamic"):
    return json.loads(builtin_path(name).read_text())


class TestBuiltins:
    def test_dynamic_matches_paper_network(self):
        s = load_scenario("paper_fig3_dynamic")
        net = s.network
        assert (net.n_links, len(net.ods), net.n_paths) == (6, 2, 3)
        assert (s.model, s.cost_mode, s.solver.method) == ("ctm", "actual", "msa_then_epm")
        np.testing.assert_array_equal(net.demand_matrix(), paper_network().demand_matrix())
        assert [l.to_node for l in net.links] == [l.to_node for l in paper_network().links]

    def test_static(self):
        s = load_scenario("paper_fig3_static")
        assert (s.model, s.cost_mode, s.solver.method) == ("static", "bpr", "fw")
        assert s.network.n_steps == 1
        np.testing.assert_array_equal(s.network.demand_matrix(), [[1300.0], [300.0]])


class TestResolve:
    def test_fw_with_dynamic_model(self):
        doc = builtin_doc()
        doc["solver"]["method"] = "fw"
        with pytest.raises(ScenarioError) as exc:
            resolve(doc)
        assert "/solver/method: FW requires static model" in exc.value.errors

    def test_incompatible_cost_mode(self):
        doc = builtin_doc()
        doc["cost_mode"] = "bpr"
        with pytest.raises(ScenarioError, match="/cost_mode"):
            resolve(doc)

    def test_unknown_key_rejected(self):
        doc = builtin_doc()
        doc["network"]["links"][0]["lanes"] = 2
        with pytest.raises(ScenarioError) as exc:
            resolve(doc)
        assert exc.value.errors[0].startswith("/network/links/0")

    def test_missing_required(self):
        doc = builtin_doc()
        del doc["grid"]["horizon_seconds"]
        with pytest.raises(ScenarioError, match="/grid"):
            resolve(doc)

    def test_jam_density_default_warns(self):
        doc = builtin_doc()
        for link in doc["network"]["links"]:
            del link["jam_density_vpkm"]
        with pytest.warns(UserWarning, match="jam_density"):
            s = resolve(doc)
        assert s.network.links[0].jam_density == 140.0
        assert any("jam_density" in d for d in s.defaults_applied)

    def test_defaults_recorded(self):
        doc = builtin_doc()
        del doc["cost_mode"]
        doc["solver"] = {}
        s = resolve(doc)
        assert s.cost_mode == "actual"
        assert "cost_mode=actual" in s.defaults_applied
        assert s.effective_config()["scenario"]["solver"]["eps"] == 1e-4

    def test_overrides_recorded(self):
        s = load_scenario("paper_fig3_dynamic", {"eps": 1e-3, "model": "mn"})
        assert s.solver.eps == 1e-3 and s.model == "mn"
        assert s.overrides["eps"] == {"file": 0.0001, "override": 0.001}

    def test_model_override_drops_incompatible_cost_mode(self):
        s = load_scenario("paper_fig3_dynamic", {"model": "static", "solver": "fw"})
        assert s.cost_mode == "bpr"

    def test_horizon_not_multiple(self):
        doc = builtin_doc()
        doc["grid"]["horizon_seconds"] = 602
        with pytest.raises(ScenarioError, match="multiple"):
            resolve(doc)

    def test_cfl(self):
        doc = builtin_doc()
        doc["grid"]["dt_seconds"] = 20
        with pytest.raises(ScenarioError, match="CFL"):
            resolve(doc)

    def test_broken_path(self):
        doc = builtin_doc()
        doc["ods"][0]["paths"][0]["links"] = [0, 4, 5]
        with pytest.raises(ScenarioError, match="not connected"):
            resolve(doc)

    def test_parse_error(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{\"name\": ")
        with pytest.raises(ScenarioError, match="line 1"):
            load_scenario(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="not found"):
            load_scenario(tmp_path / "nope.json")
