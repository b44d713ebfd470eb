import json

import pytest

from layerstack.cli import main
from layerstack.errors import SceneError
from layerstack.scenefile import load_scene, scene_from_dict


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.mark.parametrize("suffix", ["json", "yaml", "toml"])
def test_validate_nested_in_every_format(capsys, scene_dir, suffix):
    code, out = run(capsys, "validate", scene_dir / f"nested_balls.{suffix}")
    assert code == 0 and out["pass"]
    assert out["forest"] == {"outer": None, "middle": "outer", "inner": "middle"}
    assert out["seed"] == 0x5EED


def test_validate_partial_overlap(capsys, scene_dir):
    code, out = run(capsys, "validate", scene_dir / "partial_overlap.json")
    assert code == 2 and out["error"] == "TrichotomyViolation"


def test_validate_duplicate_id(capsys, scene_dir):
    code, out = run(capsys, "validate", scene_dir / "duplicate_id.json")
    assert code == 1 and out["error"] == "SceneError"


def test_usage_errors_are_input_errors(capsys, scene_dir):
    with pytest.raises(SystemExit) as info:
        main(["stack", str(scene_dir / "nested_balls.json"), "--bogus"])
    assert info.value.code == 1


def test_stack_auto_radius(capsys, scene_dir, tmp_path):
    code, out = run(capsys, "stack", scene_dir / "nested_balls.json", "--out", "json", "--out", "csv",
                    "--out", "svg", "--out-dir", tmp_path)
    assert code == 0 and out["pass"]
    assert (out["l"], out["m"]) == (1, 0)
    assert out["R"] == out["R_0"]
    assert [e["coefficient"] for e in out["layers"]] == [1.0, 10.0]
    stack = json.loads((tmp_path / "stack.json").read_text())
    assert stack["chain"]["members"] == {"0": "outer", "1": "middle"}
    assert (tmp_path / "stack.svg").exists() and (tmp_path / "phi_1.csv").exists()

    code, out = run(capsys, "verify", scene_dir / "nested_balls.json", "--estimates", tmp_path / "stack.json")
    assert code == 0 and out["pass"]


def test_stack_boundary_flag(capsys, scene_dir, tmp_path):
    code, out = run(capsys, "stack", scene_dir / "unit_circle.json", "--boundary", "--out-dir", tmp_path)
    assert code == 0 and out["m"] == 0
    phi0 = {e["quantity"]: e for e in out["estimates"]}["|phi_0(0')|"]
    assert phi0["value"] <= 1e-10 and phi0["pass"]


def test_stack_radius_too_large(capsys, scene_dir, tmp_path):
    code, out = run(capsys, "stack", scene_dir / "nested_balls.json", "--R", "0.01", "--out-dir", tmp_path)
    assert code == 3 and out["error"] == "RadiusOutOfRegime"


def test_forced_stack_reports_failures(capsys, scene_dir, tmp_path):
    code, out = run(capsys, "stack", scene_dir / "nested_balls.json", "--center", "0.48", "0", "--R", "0.01",
                    "--force", "--out-dir", tmp_path)
    assert code == 4 and not out["pass"]
    failed = [e["quantity"] for e in out["estimates"] if not e["pass"]]
    assert "R <= R_0" in failed


def test_oversized_twin_ball(capsys, scene_dir, tmp_path):
    code, out = run(capsys, "stack", scene_dir / "twin_children.json", "--center", "0", "0", "--R", "0.7",
                    "--force", "--out-dir", tmp_path)
    assert code == 3 and out["error"] == "UnionNotInS"


@pytest.mark.parametrize("delta,expected", [(0.06, 0), (0.04, 4)])
def test_verify_circle_flatness(capsys, scene_dir, delta, expected):
    code, out = run(capsys, "verify", scene_dir / "unit_circle.json", "--reifenberg", delta, 0.1)
    assert code == expected
    assert out["measured_delta"] == pytest.approx(0.0501256, rel=1e-5)


def test_verify_half_plane_is_flat(capsys, scene_dir):
    code, out = run(capsys, "verify", scene_dir / "half_plane.json", "--reifenberg", 0, 0.1)
    assert code == 0 and out["measured_delta"] == 0.0


def test_verify_opposition(capsys, scene_dir):
    code, out = run(capsys, "verify", scene_dir / "kissing_balls.json", "--opposition", "left", "right")
    assert code == 0 and out["check"]["value"] <= 1e-10


def test_output_is_byte_identical(capsys, scene_dir):
    main(["validate", str(scene_dir / "twin_children.json")])
    first = capsys.readouterr().out
    main(["validate", str(scene_dir / "twin_children.json")])
    assert capsys.readouterr().out == first


def test_scene_diagnostics(tmp_path):
    with pytest.raises(SceneError, match="no such scene file"):
        load_scene(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SceneError):
        load_scene(bad)
    with pytest.raises(SceneError, match="shapes\\[1\\]"):
        scene_from_dict({"n": 2, "shapes": [{"id": "a", "kind": "ball", "center": [0, 0], "radius": 1},
                                            {"id": "b", "kind": "cube"}]})
    with pytest.raises(SceneError, match="budget"):
        scene_from_dict({"n": 2, "budget": {"kappa": 1},
                         "shapes": [{"id": "a", "kind": "ball", "center": [0, 0], "radius": 1}]})
    with pytest.raises(SceneError, match="unknown ids"):
        scene_from_dict({"n": 2, "coefficients": {"z": 1},
                         "shapes": [{"id": "a", "kind": "ball", "center": [0, 0], "radius": 1}]})


def test_declared_parent_must_match_forest(tmp_path):
    import json

    from layerstack.cli import main

    scene = {"n": 2, "shapes": [
        {"id": "outer", "kind": "ball", "center": [0, 0], "radius": 1.0},
        {"id": "inner", "kind": "ball", "center": [0, 0], "radius": 0.5, "parent": "outer"},
        {"id": "core", "kind": "ball", "center": [0, 0], "radius": 0.2, "parent": "outer"},
    ]}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scene))
    assert main(["validate", str(path)]) == 1
    scene["shapes"][2]["parent"] = "inner"
    path.write_text(json.dumps(scene))
    assert main(["validate", str(path)]) == 0
