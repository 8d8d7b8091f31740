"""Scenario parsing, validation errors with key paths, normalization."""

import copy

import pytest
import yaml

from nrsecsim.scenario import ScenarioError, load_scenario, parse_scenario

MINIMAL = {
    "config": {"max_ticks": 50},
    "subscribers": [{"supi": "00101-0000000001"}],
    "amfs": [{"id": "amf1"}],
    "gnbs": [{"id": "gnb1", "pci": 101, "plmn": "00101", "tac": 7, "amf": "amf1"}],
    "ues": [{"id": "ue1", "supi": "00101-0000000001", "hplmn": "00101"}],
    "links": [["gnb1", "ue1", -80.0]],
}


def errors_of(doc):
    return parse_scenario(copy.deepcopy(doc), name="t").validate()


def test_minimal_scenario_is_valid():
    assert errors_of(MINIMAL) == []


def test_duplicate_pci_names_both_cells():
    doc = copy.deepcopy(MINIMAL)
    doc["gnbs"].append({"id": "gnb2", "pci": 101, "plmn": "00101", "tac": 8,
                        "amf": "amf1"})
    errs = errors_of(doc)
    assert any("gnbs[1].pci" in e and "gnb1" in e for e in errs)


def test_unknown_attacker_target():
    doc = copy.deepcopy(MINIMAL)
    doc["attackers"] = [{"id": "atk1", "mode": "ssb_spoof", "target_pci": 999,
                         "overlay": {"cell_barred": True}}]
    errs = errors_of(doc)
    assert any("attackers[0].target_pci" in e for e in errs)


def test_missing_amf():
    doc = copy.deepcopy(MINIMAL)
    doc["amfs"] = []
    doc["gnbs"][0]["amf"] = "amf1"
    errs = errors_of(doc)
    assert any(e.startswith("amfs:") for e in errs)


def test_unknown_link_endpoint():
    doc = copy.deepcopy(MINIMAL)
    doc["links"].append(["ghost", "ue1", -70.0])
    errs = errors_of(doc)
    assert any("links[1].tx" in e or "links[2].tx" in e for e in errs)


def test_unserved_home_network():
    doc = copy.deepcopy(MINIMAL)
    doc["ues"][0]["hplmn"] = "99999"
    errs = errors_of(doc)
    assert any("ues[0]" in e and "served" in e for e in errs)


def test_unknown_subscriber_reference():
    doc = copy.deepcopy(MINIMAL)
    doc["ues"][0]["supi"] = "00101-0000000099"
    assert any("ues[0].supi" in e for e in errors_of(doc))


def test_stimulus_bounds_and_refs():
    doc = copy.deepcopy(MINIMAL)
    doc["stimuli"] = [{"kind": "page", "ue": "ghost", "tick": 10},
                      {"kind": "page", "ue": "ue1", "tick": 500},
                      {"kind": "warp", "tick": 1}]
    errs = errors_of(doc)
    assert any("stimuli[0].ue" in e for e in errs)
    assert any("stimuli[1].tick" in e for e in errs)
    assert any("stimuli[2].kind" in e for e in errs)


def test_linkability_requires_probes():
    doc = copy.deepcopy(MINIMAL)
    doc["attackers"] = [{"id": "atk1", "mode": "sqn_linkability"}]
    assert any("probes" in e for e in errors_of(doc))


def test_duplicate_entity_ids():
    doc = copy.deepcopy(MINIMAL)
    doc["ues"].append({"id": "gnb1", "supi": "00101-0000000001",
                       "hplmn": "00101"})
    assert any("already used" in e for e in errors_of(doc))


def test_unknown_config_key_rejected():
    doc = copy.deepcopy(MINIMAL)
    doc["config"]["no_such_knob"] = 1
    with pytest.raises(ScenarioError, match="no_such_knob"):
        parse_scenario(doc, name="t")


def test_overlay_field_names_checked():
    doc = copy.deepcopy(MINIMAL)
    doc["attackers"] = [{"id": "atk1", "mode": "ssb_spoof", "target_pci": 101,
                         "overlay": {"nonsense": 1}}]
    assert any("overlay.nonsense" in e for e in errors_of(doc))


def test_symmetric_links_expand_both_directions():
    scenario = parse_scenario(copy.deepcopy(MINIMAL), name="t")
    assert ("gnb1", "ue1", -80.0) in scenario.links
    assert ("ue1", "gnb1", -80.0) in scenario.links


def test_normalized_echo_is_stable_and_complete(tmp_path):
    scenario = parse_scenario(copy.deepcopy(MINIMAL), name="t")
    echo = scenario.normalized_yaml()
    assert echo == scenario.normalized_yaml()
    doc = yaml.safe_load(echo)
    # defaults are filled in explicitly
    assert doc["config"]["capture_margin_db"] == 3.0
    assert doc["config"]["mode"] == "baseline"
    assert doc["subscribers"][0]["k"]   # derived key is echoed
    # the echo itself parses and validates
    reparsed = parse_scenario({**doc, "links": doc["links"]}, name="t2")
    assert reparsed.validate() == []


def test_load_scenario_reports_all_faults(tmp_path):
    doc = copy.deepcopy(MINIMAL)
    doc["amfs"] = []
    doc["links"].append(["ghost", "ue1", -1.0])
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(doc))
    with pytest.raises(ScenarioError) as excinfo:
        load_scenario(path)
    assert len(excinfo.value.errors) >= 2
