"""Layer stacks: ordered interface graphs in one frame that sandwich every component."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .composite import CompositeScene, LayerChain, chain_decompose, interface_band
from .domains import SEED, complement, default_grid_res, grid_axis, project_to_boundary, write_graph_csv
from .errors import (
    BallNotInside,
    CenterNotOnBoundary,
    OnInterface,
    OrientationMismatch,
    OutsideComposite,
    RadiusOutOfRegime,
    StackOrderViolation,
)
from .frames import Frame, to_frame
from .graphsolve import (
    GraphProblem,
    Orientation,
    SolvedGraph,
    flatten_graph,
    resolve_orientation,
    sample_ball,
    smallness,
    solve_graph,
)
from .gridfunc import GridFunction
from .norms import holder_seminorm_nodes, sup_norm
from .report import Check
from .verify import radius_ladder

CENTER_TOL = 1e-9
SLOPE_TOL = 1e-8
BOUNDARY_VALUE_TOL = 1e-10
HOLDER_FACTOR = 288


def worker_count() -> int:
    """Thread cap from ``LAYERSTACK_THREADS`` (default: up to 4 cores)."""
    raw = os.environ.get("LAYERSTACK_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class LayerGraph:
    """One graph of the stack; ``member`` is None for the constant caps."""

    index: int
    member: int | None
    phi: GridFunction
    orientation: Orientation | None
    sup_grad: float
    holder: float

    @property
    def is_cap(self) -> bool:
        return self.member is None


@dataclass(frozen=True)
class LayerStack:
    """Graphs ``phi_lo <= ... <= phi_{l+1}`` over ``B_R'`` in ``frame`` about ``center``.

    Layer ``d`` is the strip between ``phi_d`` and ``phi_{d+1}`` and carries the
    component of member ``chain.index(d)``.  In the interior case ``lo = -m``
    and ``phi_lo = -R``; in the boundary case ``lo = 0`` and the region below
    ``phi_0`` is outside the composite domain.
    """

    frame: Frame
    center: NDArray[np.float64]
    R: float
    chain: LayerChain
    graphs: list[LayerGraph]
    boundary: bool
    anchor: int | None
    band: float
    checks: list[Check] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.frame.n

    @property
    def lowest(self) -> int:
        return self.graphs[0].index

    @property
    def l(self) -> int:
        return self.chain.l

    @property
    def m(self) -> int:
        return self.chain.m

    def graph(self, d: int) -> LayerGraph:
        return self.graphs[d - self.lowest]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def chart(self, pts: ArrayLike) -> NDArray[np.float64]:
        return to_frame(np.atleast_2d(np.asarray(pts, dtype=float)) - self.center, self.frame)

    def locate(self, pts: ArrayLike) -> tuple[NDArray[np.int64], NDArray[np.bool_]]:
        """Layer index of each point and whether it lies within the band of a graph.

        Points below the lowest graph get ``lowest - 1``; points that fit no
        strip (possible only for a corrupted stack) get a sentinel far below.
        """
        y = self.chart(pts)
        vals = np.stack([g.phi(y[:, 1:]) for g in self.graphs], axis=-1)
        gap = y[:, :1] - vals
        near = np.any(np.abs(gap) <= self.band, axis=-1)
        above = gap > 0
        count = np.sum(above, axis=-1)
        # consistent stacks are monotone: above the first k graphs and below the rest
        consistent = np.all(above[:, :-1] >= above[:, 1:], axis=-1)
        layer = np.where(consistent, self.lowest - 1 + count, np.iinfo(np.int64).min // 2)
        return layer.astype(np.int64), near

    def component_of_layer(self, d: int) -> int:
        if self.boundary and d < 0:
            return -1
        if -self.m <= d <= self.l:
            return self.chain.index(d)
        return -2

    def to_dict(self, ids: Sequence[str] | None = None) -> dict[str, Any]:
        name = (lambda i: None if i is None else ids[i]) if ids is not None else (lambda i: i)
        first = self.graphs[0].phi
        return {
            "n": self.n,
            "center": self.center.tolist(),
            "R": self.R,
            "frame": self.frame.matrix.tolist(),
            "boundary": self.boundary,
            "chain": self.chain.to_dict(ids),
            "anchor": self.anchor,
            "grid": {"axis_min": float(first.axis[0]), "axis_max": float(first.axis[-1]),
                     "points_per_axis": int(first.axis.size)},
            "graphs": [
                {"index": g.index, "member": name(g.member), "kind": "cap" if g.is_cap else "interface",
                 "orientation": None if g.orientation is None else g.orientation.value,
                 "sup_grad": g.sup_grad, "holder": g.holder,
                 "values": g.phi.values.ravel().tolist(),
                 "grads": g.phi.grads.reshape(-1, g.phi.dim).tolist()}
                for g in self.graphs
            ],
            "estimates": [c.to_dict() for c in self.checks],
            "pass": self.passed,
            "seed": SEED,
        }

    def write_csv(self, directory: str | Path, stem: str = "phi") -> list[Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for g in self.graphs:
            p = out / f"{stem}_{g.index}.csv"
            write_graph_csv(p, g.phi, f"phi_{g.index}")
            paths.append(p)
        return paths

    def to_svg(self, ids: Sequence[str] | None = None, size: int = 480) -> str:
        if self.n != 2:
            raise ValueError("SVG output is only available for n = 2")
        return _svg(self, ids, size)


def _cap(axis: NDArray, dim: int, value: float, index: int) -> LayerGraph:
    shape = (axis.size,) * dim
    phi = GridFunction(axis, np.full(shape, value), np.zeros(shape + (dim,)))
    return LayerGraph(index, None, phi, None, 0.0, 0.0)


def _from_solved(index: int, member: int, g: SolvedGraph) -> LayerGraph:
    return LayerGraph(index, member, g.phi, g.orientation, g.sup_grad, g.holder)


def _regime(scene: CompositeScene, R: float, enforce_ladder: bool) -> None:
    r0 = radius_ladder(scene.budget).r0
    if enforce_ladder and R > r0:
        raise RadiusOutOfRegime(f"R = {R:.6g} exceeds the ladder radius R_0 = {r0:.6g}", R=R, R_0=r0)


def _ball_inside(scene: CompositeScene, c: NDArray, R: float) -> None:
    pts = sample_ball(c, R, 4096)
    lev = scene.members[0].level(pts)
    if np.any(lev > interface_band(R, c)):
        j = int(np.argmax(lev))
        raise BallNotInside("the ball leaves the composite domain", point=pts[j].tolist())


def _expected(d: int) -> Orientation:
    return Orientation.UPPER if d >= 1 else Orientation.LOWER


def _interface_member(chain: LayerChain, d: int) -> int:
    """Member whose boundary is ``phi_d``."""
    return chain.index(d) if d >= 1 else chain.index(d - 1)


def _solve_interfaces(scene: CompositeScene, chain: LayerChain, frame: Frame, c: NDArray, R: float,
                      indices: Sequence[int], grid_res: int) -> dict[int, LayerGraph]:
    def solve(d: int) -> tuple[int, LayerGraph]:
        member = _interface_member(chain, d)
        dom = scene.members[member]
        gp = GraphProblem(dom, frame, R, tau=scene.budget.tau, gamma=scene.budget.gamma, center=c)
        g = solve_graph(gp, grid_res)
        want = _expected(d)
        probed = resolve_orientation(dom, g)
        if g.orientation is not want or probed is not want:
            raise OrientationMismatch(
                f"boundary of {scene.ids[member]} bounds the wrong side of graph {d}",
                graph=d, expected=want.value, solved=g.orientation.value, probed=probed.value)
        return d, _from_solved(d, member, g)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return dict(pool.map(solve, indices))


def _estimate_checks(stack: LayerStack, scene: CompositeScene) -> list[Check]:
    b = scene.budget
    bound = HOLDER_FACTOR * b.n * b.theta
    checks = [Check("R <= R_0", stack.R, radius_ladder(b).r0),
              Check("n*theta*(16R)^gamma", smallness(b.n, b.theta, b.gamma, stack.R), 0.25)]
    for g in stack.graphs:
        if g.is_cap:
            continue
        checks.append(Check(f"sup_grad[phi_{g.index}]", g.sup_grad, b.tau))
        checks.append(Check(f"holder[phi_{g.index}]", g.holder, bound))
    return checks


def _center_checks(g: LayerGraph, R: float, boundary: bool) -> list[Check]:
    mid = (g.phi.axis.size - 1) // 2
    key = (mid,) * g.phi.dim
    v0, d0 = float(g.phi.values[key]), float(np.linalg.norm(g.phi.grads[key]))
    out = [Check(f"|D phi_{g.index}(0')|", d0, SLOPE_TOL)]
    if boundary:
        out.append(Check(f"|phi_{g.index}(0')|", abs(v0), BOUNDARY_VALUE_TOL))
    else:
        out.append(Check(f"|phi_{g.index}(0')|", abs(v0), R, strict=True))
    return out


def check_ordering(stack: LayerStack, tol: float | None = None) -> float:
    """Largest inversion between consecutive graphs inside ``B_R``; raises beyond ``tol``.

    Graph values are clipped to the ball's vertical extent over each node, so
    interfaces that cross only outside ``B_R`` are accepted.
    """
    tol = stack.band if tol is None else tol
    g0 = stack.graphs[0].phi
    nodes = g0.nodes()
    r2 = np.sum(nodes**2, axis=-1)
    disk = r2 <= stack.R**2
    h = np.sqrt(np.maximum(stack.R**2 - r2[disk], 0.0))
    vals = [np.clip(g.phi.values.ravel()[disk], -h, h) for g in stack.graphs]
    worst = 0.0
    for lower, upper, a, b in zip(stack.graphs, stack.graphs[1:], vals, vals[1:]):
        inv = a - b
        j = int(np.argmax(inv))
        worst = max(worst, float(inv[j]))
        if inv[j] > tol:
            raise StackOrderViolation(
                f"phi_{lower.index} rises above phi_{upper.index} by {inv[j]:.3g}",
                node=nodes[disk][j].tolist(), lower=lower.index, upper=upper.index)
    return worst


def _finish(stack: LayerStack, scene: CompositeScene) -> LayerStack:
    inversion = check_ordering(stack)
    checks = _estimate_checks(stack, scene)
    if stack.anchor is not None:
        checks += _center_checks(stack.graph(stack.anchor), stack.R, stack.boundary)
    checks.append(Check("graph_order_inversion", inversion, stack.band))
    return replace(stack, checks=checks)


def _assemble(scene, chain, frame, c, R, boundary, anchor, interfaces, grid_res) -> LayerStack:
    dim = scene.n - 1
    axis = grid_axis(R, grid_res)
    lo = 0 if boundary else -chain.m
    graphs = []
    if not boundary:
        graphs.append(_cap(axis, dim, -R, lo))
    graphs += [interfaces[d] for d in sorted(interfaces)]
    graphs.append(_cap(axis, dim, R, chain.l + 1))
    stack = LayerStack(frame, c, float(R), chain, graphs, boundary, anchor, interface_band(R, c))
    return _finish(stack, scene)


def stack_interior(scene: CompositeScene, center: ArrayLike, R: float, grid_res: int | None = None,
                   enforce_ladder: bool = True) -> LayerStack:
    """Layer stack for a ball contained in the composite domain."""
    c = np.asarray(center, dtype=float).ravel()
    R = float(R)
    res = grid_res or default_grid_res(scene.n)
    _regime(scene, R, enforce_ladder)
    _ball_inside(scene, c, R)
    chain = chain_decompose(scene, c, R)
    comp = int(scene.components(c[None])[0])
    if comp < 0:
        raise OutsideComposite("the centre is not in the composite domain", point=c.tolist())
    if chain.l == 0 and chain.m == 0:
        return _assemble(scene, chain, Frame.identity(scene.n), c, R, False, None, {}, res)
    order = {chain.index(d): d for d in range(-chain.m, chain.l + 1)}
    if comp not in order:
        raise OutsideComposite("the centre's component is not part of the chain", component=comp)
    k = order[comp]
    if k < 0 or (k == 0 and chain.m == 0):
        chain = chain.flipped()
        k = -k
    if k >= 1:
        anchor_domain = scene.members[chain.index(k)]
    else:
        anchor_domain = complement(scene.members[chain.index(-1)])
    frame, _ = flatten_graph(anchor_domain, R, res, center=c, budget=scene.budget, enforce=enforce_ladder)
    indices = [d for d in range(-chain.m + 1, chain.l + 1)]
    interfaces = _solve_interfaces(scene, chain, frame, c, R, indices, res)
    return _assemble(scene, chain, frame, c, R, False, k, interfaces, res)


def stack_boundary(scene: CompositeScene, center: ArrayLike, R: float, grid_res: int | None = None,
                   enforce_ladder: bool = True) -> LayerStack:
    """Layer stack for a ball centred on the outer boundary; ``phi_0`` passes through ``0'``."""
    c = np.asarray(center, dtype=float).ravel()
    R = float(R)
    res = grid_res or default_grid_res(scene.n)
    outer = scene.members[0]
    lev = float(outer.level(c))
    if abs(lev) > CENTER_TOL:
        raise CenterNotOnBoundary(f"centre is {lev:.3g} away from the outer boundary", level=lev)
    c = project_to_boundary(outer, c)
    _regime(scene, R, enforce_ladder)
    chain = chain_decompose(scene, c, R)
    frame, g0 = flatten_graph(outer, R, res, center=c, budget=scene.budget, enforce=enforce_ladder)
    interfaces = {0: _from_solved(0, 0, g0)}
    interfaces.update(_solve_interfaces(scene, chain, frame, c, R, range(1, chain.l + 1), res))
    return _assemble(scene, chain, frame, c, R, True, 0, interfaces, res)


def recheck_estimates(data: Mapping[str, Any], budget) -> list[Check]:
    """Recompute the estimate checks from a serialized stack (the ``to_dict`` layout)."""
    n = int(data["n"])
    R = float(data["R"])
    dim = n - 1
    grid = data["grid"]
    axis = np.linspace(grid["axis_min"], grid["axis_max"], grid["points_per_axis"])
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    disk = np.linalg.norm(nodes, axis=-1) <= R * (1 + 1e-12)
    spacing = float(axis[1] - axis[0])
    bound = HOLDER_FACTOR * n * budget.theta
    checks = []
    values = []
    for g in data["graphs"]:
        values.append(np.asarray(g["values"], dtype=float))
        if g["kind"] == "cap":
            continue
        grads = np.asarray(g["grads"], dtype=float).reshape(-1, dim)[disk]
        checks.append(Check(f"sup_grad[phi_{g['index']}]", sup_norm(grads), budget.tau))
        checks.append(Check(f"holder[phi_{g['index']}]",
                            holder_seminorm_nodes(nodes[disk], grads, budget.gamma, 2 * spacing), bound))
    h = np.sqrt(np.maximum(R**2 - np.sum(nodes[disk] ** 2, axis=-1), 0.0))
    clipped = [np.clip(v[disk], -h, h) for v in values]
    inversion = max([float(np.max(a - b)) for a, b in zip(clipped, clipped[1:])] + [0.0])
    band = interface_band(R, np.asarray(data["center"], dtype=float))
    checks.append(Check("graph_order_inversion", inversion, band))
    return checks


# ---------------------------------------------------------------- verification


@dataclass(frozen=True)
class SandwichReport:
    samples: int
    checked: int
    skipped: int
    mismatches: int
    examples: list[dict[str, Any]]

    @property
    def passed(self) -> bool:
        return self.mismatches == 0

    def to_dict(self) -> dict[str, Any]:
        return {"samples": self.samples, "checked": self.checked, "skipped_in_band": self.skipped,
                "mismatches": self.mismatches, "examples": self.examples, "pass": self.passed, "seed": SEED}


def sandwich_verify(stack: LayerStack, scene: CompositeScene, samples: int = 10_000) -> SandwichReport:
    """Compare the layer each sample falls in against its direct component."""
    pts = sample_ball(stack.center, stack.R, samples)
    layer, near = stack.locate(pts)
    direct = scene.components(pts)
    keep = ~near
    via_stack = np.array([stack.component_of_layer(int(d)) for d in layer])
    bad = np.flatnonzero(keep & (via_stack != direct))
    y = stack.chart(pts)
    examples = [{"point": pts[i].tolist(), "chart": y[i].tolist(), "layer": int(layer[i]),
                 "stack_component": int(via_stack[i]), "component": int(direct[i])} for i in bad[:5]]
    return SandwichReport(samples, int(keep.sum()), int(near.sum()), int(bad.size), examples)


def swap_graphs(stack: LayerStack, a: int, b: int) -> LayerStack:
    """Copy of ``stack`` with the graphs at indices ``a`` and ``b`` exchanged (fault injection)."""
    graphs = list(stack.graphs)
    ia, ib = a - stack.lowest, b - stack.lowest
    ga, gb = graphs[ia], graphs[ib]
    graphs[ia] = LayerGraph(ga.index, gb.member, gb.phi, gb.orientation, gb.sup_grad, gb.holder)
    graphs[ib] = LayerGraph(gb.index, ga.member, ga.phi, ga.orientation, ga.sup_grad, ga.holder)
    return replace(stack, graphs=graphs)


# ---------------------------------------------------------------- coefficients


@dataclass(frozen=True)
class CoefficientField:
    """Constant value table per component, keyed by member index."""

    tables: Mapping[int, Any]

    def value(self, j: int) -> NDArray[np.float64]:
        if j not in self.tables:
            raise KeyError(f"no coefficient for component {j}")
        return np.asarray(self.tables[j], dtype=float)

    def evaluate(self, scene: CompositeScene, p: ArrayLike) -> NDArray[np.float64]:
        """Value by direct component membership."""
        j = int(scene.components(np.asarray(p, dtype=float)[None])[0])
        if j < 0:
            raise OutsideComposite("point is outside the composite domain", point=np.asarray(p).tolist())
        return self.value(j)

    @classmethod
    def from_ids(cls, scene: CompositeScene, tables: Mapping[str, Any]) -> "CoefficientField":
        return cls({scene.ids.index(k): v for k, v in tables.items()})


def coefficient_eval(field: CoefficientField, stack: LayerStack, p: ArrayLike,
                     scene: CompositeScene | None = None) -> NDArray[np.float64]:
    """Coefficient at ``p`` via the stack; cross-checked against membership when ``scene`` is given."""
    p = np.asarray(p, dtype=float)
    layer, near = stack.locate(p[None])
    if near[0]:
        raise OnInterface("point lies within the interface band", point=p.tolist())
    j = stack.component_of_layer(int(layer[0]))
    if j == -1:
        raise OutsideComposite("point is outside the composite domain", point=p.tolist())
    value = field.value(j)
    if scene is not None:
        direct = int(scene.components(p[None])[0])
        if direct != j:
            raise StackOrderViolation("stack and membership disagree on the component",
                                      point=p.tolist(), stack=j, direct=direct)
    return value


# ---------------------------------------------------------------- SVG


_PALETTE = ["#e8d5b7", "#b8d8ba", "#a3c4dc", "#f2b5b5", "#d7bde2", "#f9e79f", "#aed6f1", "#d5dbdb"]


def _svg(stack: LayerStack, ids, size: int) -> str:
    R = stack.R
    axis = stack.graphs[0].phi.axis
    scale = 0.45 * size / R
    mid = size / 2

    def xy(t, s):
        return f"{mid + scale * t:.3f},{mid - scale * s:.3f}"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             '<clipPath id="ball"><circle cx="{0}" cy="{0}" r="{1:.3f}"/></clipPath>'.format(mid, scale * R),
             '<g clip-path="url(#ball)">']
    bottom = [-R] * axis.size
    for lower, upper in zip(stack.graphs, stack.graphs[1:]):
        a, b = lower.phi.values, upper.phi.values
        comp = stack.component_of_layer(lower.index)
        label = ids[comp] if ids is not None and comp >= 0 else str(comp)
        pts = [xy(t, s) for t, s in zip(axis, a)] + [xy(t, s) for t, s in zip(axis[::-1], b[::-1])]
        parts.append(f'<polygon points="{" ".join(pts)}" fill="{_PALETTE[comp % len(_PALETTE)]}">'
                     f"<title>{label}</title></polygon>")
    if stack.boundary:
        a = stack.graphs[0].phi.values
        pts = [xy(t, s) for t, s in zip(axis, bottom)] + [xy(t, s) for t, s in zip(axis[::-1], a[::-1])]
        parts.append(f'<polygon points="{" ".join(pts)}" fill="#ffffff"><title>outside</title></polygon>')
    for g in stack.graphs:
        if not g.is_cap:
            line = " ".join(xy(t, s) for t, s in zip(axis, g.phi.values))
            parts.append(f'<polyline points="{line}" fill="none" stroke="#222" stroke-width="1.5"/>')
    parts.append("</g>")
    parts.append(f'<circle cx="{mid}" cy="{mid}" r="{scale * R:.3f}" fill="none" stroke="#555"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
