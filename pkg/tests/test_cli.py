import json

import numpy as np
import pytest

from treespec.cli import (
    ConfigError,
    apply_overrides,
    main,
    parse_config,
    validate_config,
)


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


MINIMAL = {"tree": {"k": 2, "l0": 0.5, "r": 0.5, "delta": 0.6, "N": 2, "J": 2}}


def test_minimal_config_fills_defaults(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, MINIMAL))
    assert cfg.data["tree"]["omega"] == 1.0
    assert cfg.data["geometry"]["eps_list"] == [0.2, 0.1, 0.05]
    assert cfg.data["experiment"]["m"] == 4
    assert cfg.data["weights"]["zone_factor"] == 1.1


def test_bad_delta_rejected_with_key_name(tmp_path):
    with pytest.raises(ConfigError, match="delta"):
        parse_config(write_cfg(tmp_path, {"tree": {"delta": 1.2}}))


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError, match="tree.branching"):
        validate_config({"tree": {"branching": 2}})
    with pytest.raises(ConfigError, match="meshes"):
        validate_config({"meshes": {}})


def test_missing_seed_with_randomized_check_rejected():
    with pytest.raises(ConfigError, match="seed"):
        validate_config({"experiment": {"rayleigh_samples": 10}})
    validate_config({"experiment": {"rayleigh_samples": 10}, "seed": 1})


def test_type_errors_carry_path():
    with pytest.raises(ConfigError, match="tree.k"):
        validate_config({"tree": {"k": "two"}})
    with pytest.raises(ConfigError, match="geometry.eps_list"):
        validate_config({"geometry": {"eps_list": 0.1}})


def test_config_round_trip():
    cfg = validate_config(dict(MINIMAL, seed=3))
    again = validate_config(json.loads(cfg.serialize()))
    assert again.data == cfg.data
    assert again.config_hash() == cfg.config_hash()


def test_overrides_parse_dotted_paths():
    raw = apply_overrides(json.loads(json.dumps(MINIMAL)),
                          ["tree.delta=0.4", "seed=9"])
    assert raw["tree"]["delta"] == 0.4
    assert raw["seed"] == 9
    with pytest.raises(ConfigError):
        apply_overrides({}, ["no_equals_sign"])


def test_single_edge_spectrum_csv(tmp_path):
    cfg = write_cfg(tmp_path, {
        "tree": {"k": 1, "l0": 1.0, "r": 0.5, "delta": 0.6, "N": 2, "J": 0}})
    out = tmp_path / "out"
    assert main(["spectrum1d", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "spectrum1d.csv").read_text().splitlines()
    assert lines[0].startswith("# treespec")
    assert lines[1] == "index,lambda,multiplicity,residual"
    lam1 = float(lines[2].split(",")[1])
    assert lam1 == pytest.approx((np.pi / 2) ** 2, rel=1e-3)


def test_decompose_matches_spectrum1d(tmp_path):
    cfg = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert main(["spectrum1d", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["decompose", "--config", str(cfg), "--out", str(out)]) == 0
    s1 = [float(l.split(",")[1])
          for l in (out / "spectrum1d.csv").read_text().splitlines()[2:]]
    s2 = [float(l.split(",")[1])
          for l in (out / "decompose.csv").read_text().splitlines()[2:]]
    assert np.allclose(s1, s2, rtol=1e-8)


def test_check_discreteness_exit_codes(tmp_path):
    cfg = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert main(["check-discreteness", "--config", str(cfg),
                 "--out", str(out)]) == 0
    assert main(["check-discreteness", "--config", str(cfg), "--out", str(out),
                 "--set", "tree.delta=0.4"]) == 1
    report = json.loads((out / "discreteness.json").read_text())
    assert report["holds"] is False


def test_identical_config_and_seed_identical_bytes(tmp_path):
    payload = dict(MINIMAL, seed=11,
                   geometry={"eps_list": [0.2, 0.1]},
                   experiment={"m": 2, "rayleigh_samples": 10})
    cfg = write_cfg(tmp_path, payload)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["spectrum1d", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["check-discreteness", "--config", str(cfg),
                     "--out", str(out)]) == 0
        assert main(["sandwich", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("spectrum1d.csv", "discreteness.json", "sandwich.csv",
                 "sandwich_summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_invalid_json_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["spectrum1d", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_missing_file_exit_code(tmp_path):
    assert main(["spectrum1d", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 2


def test_spectrum2d_mesh_dump(tmp_path):
    cfg = write_cfg(tmp_path, dict(MINIMAL, geometry={"eps_list": [0.2]}))
    out = tmp_path / "out"
    assert main(["spectrum2d", "--config", str(cfg), "--out", str(out),
                 "--dump-mesh"]) == 0
    for name in ("mesh_nodes.csv", "mesh_triangles.csv", "mesh_tags.csv",
                 "field_mode1.csv"):
        assert (out / name).exists()
    tags = (out / "mesh_tags.csv").read_text().splitlines()[2:]
    assert any(line.endswith(",1") for line in tags)  # root Dirichlet tagged


def test_connector_constants_dump(tmp_path):
    cfg = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert main(["connector-constants", "--config", str(cfg),
                 "--out", str(out)]) == 0
    payload = json.loads((out / "connector_constants.json").read_text())
    assert set(payload["matrices"]) == {"Abar", "A", "Bbar", "B",
                                        "E0bar", "E1bar", "E0", "E1"}
    assert payload["constants"]["rho_P_factor"] <= 1.0
    assert payload["constants"]["rho_Q_factor"] >= 1.0
