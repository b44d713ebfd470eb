"""Scene files: one declarative JSON, YAML or TOML document per composite domain."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .composite import CompositeScene
from .domains import shape_from_dict
from .errors import SceneError
from .verify import HolderBudget, radius_ladder

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

AUTO = "auto-ladder"


@dataclass(frozen=True)
class Query:
    center: list[float] | None
    R: float | str
    boundary: bool = False


@dataclass(frozen=True)
class SceneFile:
    scene: CompositeScene
    coefficients: dict[str, Any]
    query: Query | None
    source: str


def _parse(path: Path) -> dict[str, Any]:
    text = path.read_text()
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            data = json.loads(text)
        elif suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        elif suffix == ".toml":
            data = tomllib.loads(text)
        else:
            raise SceneError(f"{path}: unsupported scene format {suffix!r} (use .json, .yaml or .toml)")
    except (json.JSONDecodeError, yaml.YAMLError, tomllib.TOMLDecodeError) as exc:
        raise SceneError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise SceneError(f"{path}: top level must be a mapping")
    return data


def _shape(entry: Any, where: str):
    if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
        raise SceneError(f"{where}: each shape needs 'id' and 'kind'")
    params = {k: v for k, v in entry.items() if k not in ("id", "parent")}
    try:
        return shape_from_dict(params)
    except SceneError as exc:
        raise SceneError(f"{where} ({entry['id']}): {exc}") from None
    except ValueError as exc:
        raise SceneError(f"{where} ({entry['id']}): {exc}") from None


def scene_from_dict(data: dict[str, Any], source: str = "<scene>") -> SceneFile:
    """Validate a parsed scene document and build its composite scene."""
    if "n" not in data or "shapes" not in data:
        raise SceneError(f"{source}: scene needs 'n' and 'shapes'")
    n = data["n"]
    shapes = data["shapes"]
    if not isinstance(shapes, list) or not shapes:
        raise SceneError(f"{source}: 'shapes' must be a non-empty list")
    ids = [str(s.get("id")) if isinstance(s, dict) else None for s in shapes]
    seen = set()
    for i, sid in enumerate(ids):
        if sid in seen:
            raise SceneError(f"{source}: shapes[{i}]: duplicate id {sid!r}", id=sid)
        seen.add(sid)
    members = [_shape(s, f"{source}: shapes[{i}]") for i, s in enumerate(shapes)]
    for i, m in enumerate(members):
        if m.n != n:
            raise SceneError(f"{source}: shapes[{i}] has dimension {m.n}, scene has n = {n}")
    try:
        budget = HolderBudget(n=n, **dict(data.get("budget", {})))
    except TypeError as exc:
        raise SceneError(f"{source}: budget: {exc}") from None
    scene = CompositeScene.build(members, budget, ids)
    for i, entry in enumerate(shapes):
        if "parent" not in entry:
            continue
        j = scene.parent[i]
        found = None if j is None else ids[j]
        if entry["parent"] != found:
            raise SceneError(f"{source}: shapes[{i}] ({ids[i]}): declared parent {entry['parent']!r}, "
                             f"containment gives {found!r}", id=ids[i])
    coefficients = dict(data.get("coefficients", {}))
    unknown = sorted(set(coefficients) - set(ids))
    if unknown:
        raise SceneError(f"{source}: coefficients for unknown ids {unknown}")
    query = None
    if "query" in data:
        q = data["query"]
        R = q.get("R", AUTO)
        if isinstance(R, str) and R not in (AUTO, "auto"):
            raise SceneError(f"{source}: query R must be a number or {AUTO!r}")
        query = Query(q.get("center"), R, bool(q.get("boundary", False)))
    return SceneFile(scene, coefficients, query, source)


def load_scene(path: str | Path) -> SceneFile:
    p = Path(path)
    if not p.is_file():
        raise SceneError(f"{p}: no such scene file")
    return scene_from_dict(_parse(p), str(p))


def resolve_radius(scene: CompositeScene, R: float | str | None) -> float:
    if R is None or isinstance(R, str):
        return radius_ladder(scene.budget).r0
    return float(R)
