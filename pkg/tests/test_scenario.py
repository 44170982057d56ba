import json

import numpy as np
import pytest

from swarmdnn.scenario import (BUILTIN_PROFILES, ScenarioError,
                               build_model_profile, generate_random_scenario,
                               load_builtin_profile, load_layer_profiles,
                               load_scenario, profile_to_csv, save_scenario,
                               scenario_from_dict, scenario_to_canonical,
                               scenario_to_dict, validate_scenario)


def test_file_round_trip(tmp_path, demo_scenario):
    path = tmp_path / "sc.json"
    save_scenario(demo_scenario, path)
    loaded = load_scenario(path)
    assert loaded == demo_scenario
    # canonical form is byte-stable under save(load(x))
    path2 = tmp_path / "sc2.json"
    save_scenario(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_minimal_file_counts(tmp_path):
    sc = generate_random_scenario(1, 2, seed=0)
    path = tmp_path / "one.json"
    save_scenario(sc, path)
    assert len(load_scenario(path).targets) == 1


def test_zero_targets_rejected(demo_scenario):
    doc = scenario_to_dict(demo_scenario)
    doc["targets"] = []
    with pytest.raises(ScenarioError, match="targets non-empty"):
        scenario_from_dict(doc)


def test_two_leaders_rejected(demo_scenario):
    doc = scenario_to_dict(demo_scenario)
    doc["fleet"][1]["role"] = "leader"
    with pytest.raises(ScenarioError, match="exactly one leader"):
        scenario_from_dict(doc)


def test_unknown_key_rejected(demo_scenario):
    doc = scenario_to_dict(demo_scenario)
    doc["surprise"] = 1
    with pytest.raises(ScenarioError, match="unknown key.*surprise"):
        scenario_from_dict(doc)
    doc = scenario_to_dict(demo_scenario)
    doc["radio"]["mystery_field"] = 0.0
    with pytest.raises(ScenarioError, match="mystery_field"):
        scenario_from_dict(doc)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScenarioError, match="malformed"):
        load_scenario(path)


def test_builtin_model_reference(tmp_path, demo_scenario):
    doc = scenario_to_dict(demo_scenario)
    doc["models"] = [{"kind": 1, "builtin": "alexnet"}]
    sc = scenario_from_dict(doc)
    assert sc.models[0].num_layers == 8
    # re-save embeds the layers canonically
    path = tmp_path / "c.json"
    save_scenario(sc, path)
    assert load_scenario(path) == sc


def test_generator_determinism_and_seed_sensitivity():
    a = generate_random_scenario(10, 9, seed=7)
    b = generate_random_scenario(10, 9, seed=7)
    c = generate_random_scenario(10, 9, seed=8)
    assert scenario_to_canonical(a) == scenario_to_canonical(b)
    assert [t.center.x for t in a.targets] != [t.center.x for t in c.targets]


def test_generator_task_size_range():
    sc = generate_random_scenario(50, 9, seed=1)
    sizes = [t.task_size_gb for t in sc.targets]
    assert len(sizes) == 50
    assert all(0.0 <= s <= 80.0 for s in sizes)


def test_generator_geometry():
    sc = generate_random_scenario(10, 9, seed=7)
    assert all(t.center.z == 0.0 for t in sc.targets)
    assert all(0.0 <= t.center.x <= 12000.0 for t in sc.targets)
    assert all(u.position.z == 3000.0 for u in sc.fleet)
    assert sum(u.is_leader for u in sc.fleet) == 1


def test_generator_fuzz_invariants():
    for seed in range(1000):
        sc = generate_random_scenario(3, 3, seed=seed)
        validate_scenario(sc)  # raises on any violated invariant


def test_generator_preconditions():
    with pytest.raises(ScenarioError):
        generate_random_scenario(0, 9, seed=1)
    with pytest.raises(ScenarioError):
        generate_random_scenario(5, 1, seed=1)


# --- layer profiles ---------------------------------------------------------

def test_profile_csv_round_trip(tmp_path):
    prof = build_model_profile("alexnet")
    path = tmp_path / "p.csv"
    path.write_text(profile_to_csv(prof), encoding="utf-8")
    again = load_layer_profiles(path)
    assert again.layers == prof.layers


def test_profile_well_formed(tmp_path):
    rows = ["layer_index,compute_cycles,memory_bytes,output_bits"]
    rows += [f"{i},1e9,1e6,8e6" for i in range(1, 6)]
    path = tmp_path / "p.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    assert load_layer_profiles(path).num_layers == 5


def test_profile_zero_compute_rejected(tmp_path):
    text = ("layer_index,compute_cycles,memory_bytes,output_bits\n"
            "1,1e9,1e6,8e6\n2,0,1e6,8e6\n")
    path = tmp_path / "p.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ScenarioError, match="row 3"):
        load_layer_profiles(path)


def test_profile_missing_column(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("layer_index,compute_cycles,memory_bytes\n1,1,1\n",
                    encoding="utf-8")
    with pytest.raises(ScenarioError, match="output_bits"):
        load_layer_profiles(path)


def test_alexnet_matches_analytic_calculator():
    """The shipped CSV must equal the layer-shape computation, and selected
    layers must match independently hand-computed FLOP/size values."""
    shipped = load_builtin_profile("alexnet")
    calc = build_model_profile("alexnet")
    assert shipped.layers == calc.layers
    conv1 = shipped.layers[0]
    # 2 * 11*11*3 * 96 * 55*55 multiply-adds; post-pool activation 96*27*27
    assert conv1.compute_cycles == 210_830_400.0
    assert conv1.output_bits == 96 * 27 * 27 * 32
    assert conv1.memory_bytes == 4 * (11 * 11 * 3 * 96 + 96 + 96 * 27 * 27)
    fc8 = shipped.layers[7]
    assert fc8.compute_cycles == 2 * 4096 * 1000
    assert fc8.output_bits == 1000 * 32


@pytest.mark.parametrize("name", BUILTIN_PROFILES)
def test_all_builtin_profiles_match_calculator(name):
    assert load_builtin_profile(name).layers == build_model_profile(name).layers


def test_builtin_profiles_validate(demo_scenario):
    for name in BUILTIN_PROFILES:
        prof = load_builtin_profile(name)
        assert prof.num_layers >= 8
        assert all(l.compute_cycles > 0 and l.memory_bytes > 0
                   for l in prof.layers)
