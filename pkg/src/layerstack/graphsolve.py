"""Re-expressing a boundary as a graph over the whole disk in a rotated frame."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import qmc

from .columns import solve_columns
from .domains import (
    SEED,
    DomainColumns,
    ImplicitDomain,
    closest_boundary_point,
    default_grid_res,
    grid_axis,
    implicit_slopes,
    sobol,
    write_graph_csv,
)
from .errors import (
    AmbiguousOrientation,
    EscapeFromBall,
    MarginViolation,
    PreconditionViolation,
    SmallnessViolation,
)
from .frames import Frame, frame_from_first_axis, from_frame, to_frame
from .gridfunc import GridFunction
from .norms import holder_seminorm_nodes, sup_norm

PROBE_EPSILONS = (1e-3, 1e-4, 1e-5)
CENTER_SLOPE_TOL = 1e-8


class Orientation(str, enum.Enum):
    UPPER = "UpperSet"
    LOWER = "LowerSet"


@dataclass(frozen=True)
class AnalyticChart:
    """Graph ``x1 = value(x')`` given in closed form, in ``frame`` about ``center``."""

    frame: Frame
    value: Callable[[NDArray], NDArray]
    gradient: Callable[[NDArray], NDArray]
    center: NDArray[np.float64] = field(default=None)

    def __post_init__(self) -> None:
        c = np.zeros(self.frame.n) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)


@dataclass(frozen=True)
class GraphProblem:
    """Re-express the boundary of ``source`` as a graph in ``target``.

    ``source`` is either an implicit domain or a chart (anything with
    ``frame``, ``center``, ``value`` and ``gradient``).  Frame coordinates are
    measured from ``center`` (the chart's own centre when omitted).
    """

    source: Any
    target: Frame
    R: float
    tau: float = 1.0
    gamma: float = 1.0
    theta: float | None = None
    margin_min: float = 0.25
    guard: float = 1.25
    center: NDArray[np.float64] | None = None

    def origin(self) -> NDArray[np.float64]:
        if self.center is not None:
            return np.asarray(self.center, dtype=float)
        if isinstance(self.source, ImplicitDomain):
            return np.zeros(self.target.n)
        return np.asarray(self.source.center, dtype=float)


class ChartColumns:
    """``psi(x') - x1`` of a source chart along the target's first-axis columns."""

    def __init__(self, chart, target: Frame, center: NDArray, xp: NDArray) -> None:
        self.chart = chart
        self.target = target
        self.xp = xp
        # target frame coordinates -> source frame coordinates, plus origin shift
        self.M = chart.frame.matrix @ target.matrix.T
        self.shift = to_frame(center - chart.center, chart.frame)

    def _source(self, t, idx):
        y = np.concatenate([np.asarray(t, dtype=float)[:, None], self.xp[idx]], axis=-1)
        return y @ self.M.T + self.shift

    def _grad_x(self, x):
        g = np.empty_like(x)
        g[:, 0] = -1.0
        g[:, 1:] = np.asarray(self.chart.gradient(x[:, 1:])).reshape(len(x), -1)
        return g

    def __call__(self, t, idx):
        x = self._source(t, idx)
        val = np.asarray(self.chart.value(x[:, 1:])).ravel() - x[:, 0]
        return val, self._grad_x(x) @ self.M[:, 0]

    def frame_gradient(self, t, idx):
        return self._grad_x(self._source(t, idx)) @ self.M


@dataclass(frozen=True)
class SolvedGraph:
    """Graph ``y1 = phi(y')`` on ``B_R'`` in ``frame``, coordinates from ``center``."""

    frame: Frame
    center: NDArray[np.float64]
    R: float
    phi: GridFunction
    orientation: Orientation
    sup_grad: float
    holder: float
    gamma: float
    margin: float
    contained: bool
    max_residual: float
    monotone: bool

    @property
    def n(self) -> int:
        return self.frame.n

    def value(self, yp: ArrayLike) -> NDArray[np.float64]:
        return self.phi(yp)

    def gradient(self, yp: ArrayLike) -> NDArray[np.float64]:
        return self.phi.gradient(yp)

    def nodes(self) -> NDArray[np.float64]:
        return self.phi.nodes()

    def disk_mask(self) -> NDArray[np.bool_]:
        return np.linalg.norm(self.nodes(), axis=-1) <= self.R * (1 + 1e-12)

    def at_origin(self) -> tuple[float, NDArray[np.float64]]:
        """``phi(0')`` and ``D phi(0')`` read from the central grid node."""
        mid = (self.phi.axis.size - 1) // 2
        key = (mid,) * self.phi.dim
        return float(self.phi.values[key]), self.phi.grads[key].copy()

    def to_csv(self, path: str | Path) -> None:
        write_graph_csv(path, self.phi, "phi")

    def summary(self) -> dict[str, Any]:
        v0, g0 = self.at_origin()
        return {
            "orientation": self.orientation.value,
            "sup_grad": self.sup_grad,
            "holder": self.holder,
            "phi_at_origin": v0,
            "grad_at_origin": g0.tolist(),
            "margin": self.margin,
            "contained": self.contained,
            "max_residual": self.max_residual,
            "monotone": self.monotone,
        }


def _column_system(gp: GraphProblem, xp: NDArray):
    origin = gp.origin()
    if isinstance(gp.source, ImplicitDomain):
        return DomainColumns(gp.source, origin, gp.target, xp)
    return ChartColumns(gp.source, gp.target, origin, xp)


def _guard_points(R: float, guard: float, dim: int) -> NDArray[np.float64]:
    radii = R * np.linspace(1.0, guard, 5)[1:]
    if dim == 1:
        return np.concatenate([radii, -radii])[:, None]
    dirs = sobol(dim, 64) * 2 - 1
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return (radii[:, None, None] * dirs[None]).reshape(-1, dim)


def _margins(system, roots, idx):
    g = system.frame_gradient(roots, idx)
    return g[:, 0] / np.linalg.norm(g, axis=-1), g


def solve_graph(gp: GraphProblem, grid_res: int | None = None, extent: float = 1.0) -> SolvedGraph:
    """Solve every grid column of ``B_R'`` (square grid of half width ``extent R``).

    Estimates are measured on nodes inside the closed disk ``B_R'``.
    """
    n = gp.target.n
    res = grid_res or default_grid_res(n)
    if res % 2 == 0:
        raise ValueError("grid resolution must be odd so that 0' is a node")
    R = float(gp.R)
    axis = grid_axis(extent * R, res)
    shape = (res,) * (n - 1)
    blank = GridFunction(axis, np.zeros(shape), np.zeros(shape + (n - 1,)))
    xp = blank.nodes()
    system = _column_system(gp, xp)
    scale = float(np.max(np.abs(gp.origin()))) + 8 * R
    sol = solve_columns(system, shape, -8 * R, 8 * R, scale)
    idx = np.arange(len(xp))
    margin, fgrad = _margins(system, sol.roots, idx)

    gxp = _guard_points(R, gp.guard, n - 1)
    gsys = _column_system(gp, gxp)
    gsol = solve_columns(gsys, (len(gxp),), -8 * R, 8 * R, scale)
    gmargin, _ = _margins(gsys, gsol.roots, np.arange(len(gxp)))

    disk = np.linalg.norm(xp, axis=-1) <= gp.guard * R * (1 + 1e-12)
    checked = np.concatenate([margin[disk], gmargin])
    where = np.concatenate([xp[disk], gxp])
    sign = np.sign(checked[0])
    bad = np.flatnonzero((np.sign(checked) != sign) | (np.abs(checked) < gp.margin_min))
    if bad.size:
        j = bad[np.argmin(np.abs(checked[bad]))]
        raise MarginViolation(
            f"axis-solvability margin {checked[j]:.3g} fails (need one sign, |.| >= {gp.margin_min:g})",
            point=where[j].tolist(),
            margin=float(checked[j]),
        )

    inside = np.linalg.norm(xp, axis=-1) <= R * (1 + 1e-12)
    radius = np.sqrt(sol.roots**2 + np.sum(xp**2, axis=-1))
    if np.any(radius[inside] > 8 * R):
        j = np.flatnonzero(inside & (radius > 8 * R))[0]
        raise EscapeFromBall("graph point leaves B_8R", point=xp[j].tolist(), value=float(sol.roots[j]))

    slopes = implicit_slopes(fgrad)
    phi = GridFunction(axis, sol.roots.reshape(shape), slopes.reshape(shape + (n - 1,)))
    return SolvedGraph(
        frame=gp.target,
        center=gp.origin(),
        R=R,
        phi=phi,
        orientation=Orientation.UPPER if sign < 0 else Orientation.LOWER,
        sup_grad=sup_norm(slopes[inside]),
        holder=holder_seminorm_nodes(xp[inside], slopes[inside], gp.gamma, 2 * phi.spacing),
        gamma=gp.gamma,
        margin=float(np.min(np.abs(checked))),
        contained=True,
        max_residual=float(np.max(np.abs(sol.residuals))),
        monotone=bool(np.all(sol.monotone[inside])),
    )


def smallness(n: int, theta: float, gamma: float, R: float) -> float:
    """Left side of the flattening smallness condition ``n theta (16R)^gamma``."""
    return n * theta * (16 * R) ** gamma


def flatten_graph(
    d: ImplicitDomain,
    R: float,
    grid_res: int | None = None,
    center: ArrayLike | None = None,
    budget=None,
    extent: float = 1.0,
    enforce: bool = True,
) -> tuple[Frame, SolvedGraph]:
    """Frame whose first axis is the inward normal at the nearest boundary point,
    and the boundary as an upper graph over ``B_R'`` in that frame."""
    c = np.zeros(d.n) if center is None else np.asarray(center, dtype=float).ravel()
    gamma = 1.0
    if budget is not None:
        gamma = budget.gamma
        lhs = smallness(d.n, budget.theta, budget.gamma, R)
        if enforce and lhs > 0.25:
            raise SmallnessViolation(f"n*theta*(16R)^gamma = {lhs:.6g} exceeds 1/4", value=lhs, R=R)
    foot = closest_boundary_point(d, R, c)
    frame = frame_from_first_axis(d.inward_normal(foot), d.n)
    gp = GraphProblem(d, frame, R, gamma=gamma, center=c, margin_min=0.25)
    return frame, solve_graph(gp, grid_res, extent)


def opposite_graph(upper: SolvedGraph, tau: float, ambient: Frame | None = None,
                   grid_res: int | None = None) -> SolvedGraph:
    """Re-express an upper graph whose frame nearly reverses the ambient first axis.

    The result is a lower graph in ``ambient`` (identity by default).
    """
    n = upper.n
    amb = ambient or Frame.identity(n)
    small = tau / (8 * n)
    v1 = to_frame(upper.frame.first_axis, amb)
    e1 = np.zeros(n)
    e1[0] = 1.0
    v0, g0 = upper.at_origin()
    checks = [
        ("|V_1 + e_1| <= tau/(8n)", float(np.linalg.norm(v1 + e1)), small, False),
        ("|psi(0')| < R", abs(v0), upper.R, True),
        ("|D psi(0')| <= 1e-8", float(np.linalg.norm(g0)), CENTER_SLOPE_TOL, False),
        ("sup |D psi| <= tau/(8n)", upper.sup_grad, small, False),
    ]
    for name, value, bound, strict in checks:
        if not (value < bound if strict else value <= bound):
            raise PreconditionViolation(f"{name} fails: {value:.6g} vs {bound:.6g}",
                                        inequality=name, value=value, bound=bound)
    if upper.orientation is not Orientation.UPPER:
        raise PreconditionViolation("source graph must bound an upper set", inequality="orientation")
    chart = AnalyticChart(upper.frame, upper.value, upper.gradient, upper.center)
    gp = GraphProblem(chart, amb, upper.R, tau=tau, gamma=upper.gamma, center=upper.center)
    return solve_graph(gp, grid_res or upper.phi.axis.size)


def resolve_orientation(d: ImplicitDomain, g: SolvedGraph, frame: Frame | None = None) -> Orientation:
    """Which side of the graph ``d`` occupies, by probing above and below a graph point."""
    f = frame or g.frame
    v0, _ = g.at_origin()
    zero = np.zeros(f.n - 1)
    base = g.center + from_frame(np.concatenate([[v0], zero]), f)
    if abs(float(d.level(base))) > 1e-9:
        raise AmbiguousOrientation("graph point is not on the boundary", residual=float(d.level(base)))
    votes = []
    for eps in PROBE_EPSILONS:
        step = eps * g.R * f.first_axis
        above = float(d.level(base + step))
        below = float(d.level(base - step))
        if above < 0 < below:
            votes.append(Orientation.UPPER)
        elif below < 0 < above:
            votes.append(Orientation.LOWER)
        else:
            votes.append(None)
    if votes[0] is None or any(v != votes[0] for v in votes):
        raise AmbiguousOrientation("probes disagree", votes=[None if v is None else v.value for v in votes])
    return votes[0]


def sample_ball(center: ArrayLike, R: float, count: int, seed: int = SEED) -> NDArray[np.float64]:
    """``count`` quasi-random points of the open ball ``B_R(center)``."""
    c = np.asarray(center, dtype=float).ravel()
    n = c.size
    sob = qmc.Sobol(d=n, seed=seed)
    out = []
    have = 0
    while have < count:
        u = sob.random(1 << int(np.ceil(np.log2(max(2 * count, 2))))) * 2 - 1
        u = u[np.sum(u * u, axis=-1) < 1]
        out.append(u)
        have += len(u)
    return c + R * np.concatenate(out)[:count]


def reexpression_mismatches(gp: GraphProblem, g: SolvedGraph, samples: int = 10_000,
                            band: float = 1e-8) -> tuple[int, int]:
    """Points of ``B_R`` whose side differs between source and graph; (mismatches, skipped)."""
    origin = gp.origin()
    y = sample_ball(np.zeros(gp.target.n), gp.R, samples)
    p = origin + from_frame(y, gp.target)
    if isinstance(gp.source, ImplicitDomain):
        src = gp.source.level(p)
    else:
        x = to_frame(p - gp.source.center, gp.source.frame)
        src = np.asarray(gp.source.value(x[:, 1:])).ravel() - x[:, 0]
    offset = y[:, 0] - g.value(y[:, 1:])
    skip = (np.abs(offset) <= band) | (np.abs(src) <= band)
    above = offset > 0
    inside = src < 0
    expect = above if g.orientation is Orientation.UPPER else ~above
    bad = (inside != expect) & ~skip
    return int(np.sum(bad)), int(np.sum(skip))
