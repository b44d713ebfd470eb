"""Command line front end: ``layerstack validate | stack | verify``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .composite import partition_check
from .domains import SEED
from .errors import LayerStackError, SceneError
from .layers import CoefficientField, recheck_estimates, sandwich_verify, stack_boundary, stack_interior
from .report import dumps
from .scenefile import SceneFile, load_scene, resolve_radius
from .verify import nearest_boundary_pair, normal_opposition_check, radius_ladder, reifenberg_check

EXIT_PASS = 0
EXIT_VERIFICATION = 4


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="layerstack", description="Layer decomposition of composite domains.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="classify all pairs, build the forest, check the partition")
    p.add_argument("scene", type=Path)
    p.add_argument("--samples", type=int, default=10_000)

    p = sub.add_parser("stack", help="build the layer stack of a ball")
    p.add_argument("scene", type=Path)
    p.add_argument("--center", type=float, nargs="+", help="ball centre (defaults to the scene query)")
    p.add_argument("--R", dest="radius", default=None,
                   help="ball radius or 'auto' for the ladder radius R_0 (default: scene query, else auto)")
    p.add_argument("--boundary", action="store_true", help="centre lies on the outer boundary")
    p.add_argument("--grid", type=int, default=None, help="odd number of grid points per axis")
    p.add_argument("--out", action="append", choices=["json", "csv", "svg"], default=None,
                   help="artifact formats to write (repeatable, default json)")
    p.add_argument("--out-dir", type=Path, default=Path("layerstack-out"))
    p.add_argument("--samples", type=int, default=10_000, help="sandwich verification samples")
    p.add_argument("--force", action="store_true", help="run even when R exceeds the ladder radius")

    p = sub.add_parser("verify", help="run one quantitative check")
    p.add_argument("scene", type=Path)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--reifenberg", nargs=2, type=float, metavar=("DELTA", "R"))
    mode.add_argument("--opposition", nargs=2, metavar=("ID_A", "ID_B"))
    mode.add_argument("--estimates", type=Path, metavar="STACK_JSON")
    p.add_argument("--member", default=None, help="shape id for --reifenberg (default: the outer domain)")
    p.add_argument("--radius", type=float, default=0.1, help="ball radius r for --opposition")
    p.add_argument("--delta", type=float, default=None, help="delta for --opposition (default: budget delta)")
    return parser


def _emit(payload: dict[str, Any]) -> None:
    sys.stdout.write(dumps(payload))


def _member(sf: SceneFile, sid: str | None) -> int:
    if sid is None:
        return 0
    if sid not in sf.scene.ids:
        raise SceneError(f"unknown shape id {sid!r}", known=sf.scene.ids)
    return sf.scene.ids.index(sid)


def cmd_validate(args: argparse.Namespace) -> int:
    sf = load_scene(args.scene)
    scene = sf.scene
    report = partition_check(scene, args.samples)
    _emit({
        "command": "validate",
        "scene": sf.source,
        "seed": SEED,
        "n": scene.n,
        "K": scene.K,
        "forest": scene.to_dict()["forest"],
        "relations": {scene.ids[i]: {scene.ids[j]: r.value for j, r in enumerate(row) if r is not None}
                      for i, row in enumerate(scene.relations)},
        "radius_ladder": radius_ladder(scene.budget).to_dict(),
        "partition": report.to_dict(),
        "pass": report.passed,
    })
    return EXIT_PASS if report.passed else 2


def cmd_stack(args: argparse.Namespace) -> int:
    sf = load_scene(args.scene)
    scene = sf.scene
    query = sf.query
    center = args.center if args.center is not None else (query.center if query else None)
    if center is None:
        raise SceneError("no ball centre: pass --center or add a query to the scene")
    if len(center) != scene.n:
        raise SceneError(f"centre has {len(center)} coordinates, scene has n = {scene.n}")
    raw_R = args.radius if args.radius is not None else (query.R if query else "auto")
    try:
        R_value: float | str = float(raw_R)
    except ValueError:
        if raw_R not in ("auto", "auto-ladder"):
            raise SceneError(f"--R must be a number or 'auto', got {raw_R!r}") from None
        R_value = raw_R
    R = resolve_radius(scene, R_value)
    if not R > 0:
        raise SceneError("R must be positive")
    boundary = args.boundary or bool(query and query.boundary)
    build = stack_boundary if boundary else stack_interior
    stack = build(scene, np.asarray(center, dtype=float), R, grid_res=args.grid, enforce_ladder=not args.force)
    sandwich = sandwich_verify(stack, scene, args.samples)

    formats = args.out or ["json"]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    if "json" in formats:
        path = args.out_dir / "stack.json"
        path.write_text(dumps(stack.to_dict(scene.ids)))
        files.append(str(path))
    if "csv" in formats:
        files += [str(p) for p in stack.write_csv(args.out_dir)]
    if "svg" in formats:
        if scene.n != 2:
            raise SceneError("SVG output is only available for n = 2")
        path = args.out_dir / "stack.svg"
        path.write_text(stack.to_svg(scene.ids))
        files.append(str(path))

    layers = []
    coeffs = CoefficientField.from_ids(scene, sf.coefficients) if sf.coefficients else None
    for d in range(stack.lowest, stack.l + 1):
        j = stack.component_of_layer(d)
        entry: dict[str, Any] = {"layer": d, "component": scene.ids[j] if j >= 0 else None}
        if coeffs is not None and j in coeffs.tables:
            entry["coefficient"] = coeffs.value(j)
        layers.append(entry)

    passed = stack.passed and sandwich.passed
    _emit({
        "command": "stack",
        "scene": sf.source,
        "seed": SEED,
        "center": stack.center.tolist(),
        "R": stack.R,
        "R_0": radius_ladder(scene.budget).r0,
        "forced": bool(args.force),
        "boundary": boundary,
        "l": stack.l,
        "m": stack.m,
        "chain": stack.chain.to_dict(scene.ids),
        "layers": layers,
        "estimates": [c.to_dict() for c in stack.checks],
        "sandwich": sandwich.to_dict(),
        "files": files,
        "pass": passed,
    })
    return EXIT_PASS if passed else EXIT_VERIFICATION


def cmd_verify(args: argparse.Namespace) -> int:
    sf = load_scene(args.scene)
    scene = sf.scene
    payload: dict[str, Any] = {"command": "verify", "scene": sf.source, "seed": SEED}
    if args.reifenberg is not None:
        delta, R = args.reifenberg
        i = _member(sf, args.member)
        report = reifenberg_check(scene.members[i], delta, R, box=scene.box)
        payload.update({"check": "reifenberg", "member": scene.ids[i], **report.to_dict()})
        passed = report.passed
    elif args.opposition is not None:
        a, b = (_member(sf, sid) for sid in args.opposition)
        dA, dB = scene.members[a], scene.members[b]
        P, Q = nearest_boundary_pair(dA, dB, scene.box)
        delta = scene.budget.delta if args.delta is None else args.delta
        report = normal_opposition_check(dA, dB, P, Q, args.radius, delta)
        payload.update({"check": "normal_opposition", "members": [scene.ids[a], scene.ids[b]],
                        "P": P.tolist(), "Q": Q.tolist(), **report.to_dict()})
        passed = report.passed
    else:
        try:
            data = json.loads(args.estimates.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SceneError(f"{args.estimates}: {exc}") from None
        checks = recheck_estimates(data, scene.budget)
        passed = all(c.passed for c in checks)
        payload.update({"check": "estimates", "stack": str(args.estimates),
                        "estimates": [c.to_dict() for c in checks]})
    payload["pass"] = passed
    _emit(payload)
    return EXIT_PASS if passed else EXIT_VERIFICATION


COMMANDS = {"validate": cmd_validate, "stack": cmd_stack, "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except LayerStackError as exc:
        _emit({"command": args.command, "error": type(exc).__name__, "message": str(exc),
               "details": exc.details, "exit_code": exc.exit_code, "seed": SEED, "pass": False})
        print(f"layerstack {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
