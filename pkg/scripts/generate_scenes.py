"""Regenerate the scene files in ``scenes/``.

Query balls use the ladder radius R_0, which is tiny, so centres and gaps are
placed relative to it to make the interesting interfaces pass through the ball.
"""

from __future__ import annotations

import json
from pathlib import Path

from layerstack.verify import HolderBudget, radius_ladder

OUT = Path(__file__).resolve().parent.parent / "scenes"


def r0(theta: float, n: int = 2) -> float:
    return radius_ladder(HolderBudget(n=n, theta=theta)).r0


def ball(sid, center, radius):
    return {"id": sid, "kind": "ball", "center": center, "radius": radius}


def scenes() -> dict[str, dict]:
    out = {}

    theta = 4.5
    R = r0(theta)
    out["nested_balls"] = {
        "n": 2,
        "budget": {"theta": theta},
        "shapes": [ball("outer", [0.0, 0.0], 1.0), ball("middle", [0.0, 0.0], 0.5),
                   ball("inner", [0.0, 0.0], 0.25)],
        "coefficients": {"outer": 1.0, "middle": 10.0, "inner": 100.0},
        "query": {"center": [0.5 - R / 3, 0.0], "R": "auto-ladder"},
    }

    out["nested_offset"] = {
        "n": 2,
        "budget": {"theta": theta},
        "shapes": [ball("outer", [0.0, 0.0], 1.0), ball("middle", [0.2, 0.1], 0.5),
                   ball("inner", [0.3, 0.1], 0.3)],
        "coefficients": {"outer": [[1.0, 0.0], [0.0, 1.0]], "middle": [[2.0, 0.5], [0.5, 2.0]],
                         "inner": [[5.0, 0.0], [0.0, 3.0]]},
        "query": {"center": [0.2 + 0.6 * (0.5 + R / 4), 0.1 + 0.8 * (0.5 + R / 4)], "R": "auto-ladder"},
    }

    gap = R / 2
    out["twin_children"] = {
        "n": 2,
        "budget": {"theta": theta},
        "shapes": [ball("outer", [0.0, 0.0], 1.0), ball("middle", [0.0, 0.0], 0.6),
                   ball("left", [-0.25 - gap / 2, 0.0], 0.25), ball("right", [0.25 + gap / 2, 0.0], 0.25)],
        "coefficients": {"outer": 1.0, "middle": 2.0, "left": 3.0, "right": 4.0},
        "query": {"center": [R / 5, R / 7], "R": "auto-ladder"},
    }

    theta_blob = 6.0
    Rb = r0(theta_blob)
    out["blob_in_ball"] = {
        "n": 2,
        "budget": {"theta": theta_blob},
        "shapes": [ball("outer", [0.0, 0.0], 1.0),
                   {"id": "blob", "kind": "blob", "center": [0.0, 0.0], "radius": 0.4,
                    "amplitude": 0.05, "lobes": 4}],
        "coefficients": {"outer": 1.0, "blob": 7.0},
        "query": {"center": [0.45 - Rb / 3, 0.0], "R": "auto-ladder"},
    }

    out["boundary_halfspace"] = {
        "n": 2,
        "budget": {"theta": theta},
        "shapes": [{"id": "upper", "kind": "half-space", "normal": [1.0, 0.0], "offset": 0.0},
                   ball("pocket", [0.3 + R / 2, 0.0], 0.3)],
        "coefficients": {"upper": 1.0, "pocket": 5.0},
        "query": {"center": [0.0, 0.0], "R": "auto-ladder", "boundary": True},
    }

    out["unit_circle"] = {
        "n": 2,
        "budget": {"theta": 1.0},
        "shapes": [ball("disk", [0.0, 0.0], 1.0)],
        "query": {"center": [1.0, 0.0], "R": "auto-ladder", "boundary": True},
    }

    out["half_plane"] = {
        "n": 2,
        "budget": {"theta": 1.0},
        "shapes": [{"id": "upper", "kind": "half-space", "normal": [1.0, 0.0], "offset": 0.0}],
    }

    out["kissing_balls"] = {
        "n": 2,
        "budget": {"theta": 2.0},
        "shapes": [ball("outer", [0.0, 0.0], 4.0), ball("left", [-1.005, 0.0], 1.0),
                   ball("right", [1.005, 0.0], 1.0)],
    }

    out["partial_overlap"] = {
        "n": 2,
        "budget": {"theta": 2.0},
        "shapes": [ball("outer", [0.0, 0.0], 3.0), ball("a", [0.0, 0.0], 1.0), ball("b", [1.0, 0.0], 1.0)],
    }

    out["duplicate_id"] = {
        "n": 2,
        "shapes": [ball("outer", [0.0, 0.0], 1.0), ball("outer", [0.0, 0.0], 0.5)],
    }
    return out


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for name, data in scenes().items():
        (OUT / f"{name}.json").write_text(json.dumps(data, indent=2) + "\n")
    # the same nested scene in the other two accepted formats
    import yaml

    data = scenes()["nested_balls"]
    (OUT / "nested_balls.yaml").write_text(yaml.safe_dump(data, sort_keys=False))
    toml_lines = [f"n = {data['n']}", "", "[budget]", f"theta = {data['budget']['theta']}", ""]
    for s in data["shapes"]:
        toml_lines += ["[[shapes]]", f'id = "{s["id"]}"', f'kind = "{s["kind"]}"',
                       f"center = {s['center']}", f"radius = {s['radius']}", ""]
    toml_lines += ["[coefficients]"] + [f"{k} = {v}" for k, v in data["coefficients"].items()] + [""]
    q = data["query"]
    toml_lines += ["[query]", f"center = {q['center']!r}", f'R = "{q["R"]}"', ""]
    (OUT / "nested_balls.toml").write_text("\n".join(toml_lines))


if __name__ == "__main__":
    main()
