"""Implicit domains ``{level < 0}`` and their local boundary charts."""

from __future__ import annotations

import csv
import enum
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import qmc

from .columns import solve_columns
from .errors import MarginViolation, NoBoundaryInBall, SceneError
from .frames import Frame, frame_from_first_axis, from_frame, to_frame
from .gridfunc import GridFunction
from .norms import holder_seminorm_nodes, sup_norm

BOUNDARY_BAND = 1e-9
SEED = 0x5EED


class Membership(str, enum.Enum):
    INTERIOR = "Interior"
    EXTERIOR = "Exterior"
    BOUNDARY_BAND = "BoundaryBand"


def sobol(dim: int, count: int, seed: int = SEED) -> NDArray[np.float64]:
    """First ``count`` scrambled Sobol points of the unit cube."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return qmc.Sobol(d=dim, seed=seed).random(count)


def default_grid_res(n: int) -> int:
    return {2: 129, 3: 65}.get(n, 33)


# ---------------------------------------------------------------- shapes


class ImplicitDomain(ABC):
    """Open set ``{x : level(x) < 0}`` with an analytic gradient.

    ``g_min`` is a lower bound for ``|grad|`` on the boundary band.
    """

    kind: str = ""
    n: int
    g_min: float = 1.0

    @abstractmethod
    def level(self, x: ArrayLike) -> NDArray[np.float64]: ...

    @abstractmethod
    def grad(self, x: ArrayLike) -> NDArray[np.float64]: ...

    @abstractmethod
    def params(self) -> dict[str, Any]: ...

    def bounds(self) -> tuple[NDArray[np.float64], NDArray[np.float64]] | None:
        """Axis-aligned box containing the closure, or None if unbounded."""
        return None

    def contains(self, x: ArrayLike) -> NDArray[np.bool_]:
        return self.level(x) < 0

    def inward_normal(self, x: ArrayLike) -> NDArray[np.float64]:
        g = self.grad(x)
        return -g / np.linalg.norm(g, axis=-1, keepdims=True)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params()}

    def key(self) -> str:
        """Canonical text used to detect duplicate shapes."""
        return repr(_canonical(self.to_dict()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params()})"


def _canonical(obj):
    if isinstance(obj, dict):
        return tuple(sorted((k, _canonical(v)) for k, v in obj.items()))
    if isinstance(obj, (list, tuple, np.ndarray)):
        return tuple(_canonical(v) for v in obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _vec(x: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(x, dtype=float)


class HalfSpace(ImplicitDomain):
    """``{x : x . normal > offset}`` with ``normal`` normalized."""

    kind = "half-space"

    def __init__(self, normal: ArrayLike, offset: float = 0.0) -> None:
        nu = _vec(normal).ravel()
        self.normal = nu / np.linalg.norm(nu)
        self.offset = float(offset)
        self.n = nu.size

    def level(self, x):
        return self.offset - _vec(x) @ self.normal

    def grad(self, x):
        x = _vec(x)
        return np.broadcast_to(-self.normal, x.shape).copy()

    def params(self):
        return {"normal": self.normal.tolist(), "offset": self.offset}


class Ball(ImplicitDomain):
    kind = "ball"

    def __init__(self, center: ArrayLike, radius: float) -> None:
        self.center = _vec(center).ravel()
        self.radius = float(radius)
        if self.radius <= 0:
            raise SceneError(f"ball radius must be positive, got {radius}")
        self.n = self.center.size

    def level(self, x):
        return np.linalg.norm(_vec(x) - self.center, axis=-1) - self.radius

    def grad(self, x):
        d = _vec(x) - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        return np.divide(d, r, out=np.zeros_like(d), where=r > 0)

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def params(self):
        return {"center": self.center.tolist(), "radius": self.radius}


class Ellipsoid(ImplicitDomain):
    """Axis-aligned ellipsoid; the level is scaled by the smallest semi-axis."""

    kind = "ellipsoid"

    def __init__(self, center: ArrayLike, semi_axes: ArrayLike) -> None:
        self.center = _vec(center).ravel()
        self.semi_axes = _vec(semi_axes).ravel()
        if self.semi_axes.size != self.center.size or np.any(self.semi_axes <= 0):
            raise SceneError("ellipsoid needs one positive semi-axis per dimension")
        self.n = self.center.size
        self._scale = float(self.semi_axes.min())
        self.g_min = float(self.semi_axes.min() / self.semi_axes.max())

    def level(self, x):
        u = (_vec(x) - self.center) / self.semi_axes
        return self._scale * (np.linalg.norm(u, axis=-1) - 1.0)

    def grad(self, x):
        u = (_vec(x) - self.center) / self.semi_axes
        q = np.linalg.norm(u, axis=-1, keepdims=True)
        g = self._scale * u / self.semi_axes
        return np.divide(g, q, out=np.zeros_like(g), where=q > 0)

    def bounds(self):
        return self.center - self.semi_axes, self.center + self.semi_axes

    def params(self):
        return {"center": self.center.tolist(), "semi_axes": self.semi_axes.tolist()}


class Blob(ImplicitDomain):
    """Ball whose radius is modulated by ``amplitude * cos(lobes * angle)``.

    The angle is measured in the plane of the first two coordinates.  The
    modulation is written as ``Re((d0 + i d1)^k) / |d|^k`` so that it stays
    smooth in three and more dimensions; in the plane it is exactly the cosine.
    """

    kind = "blob"

    def __init__(self, center: ArrayLike, radius: float, amplitude: float = 0.05, lobes: int = 4) -> None:
        self.center = _vec(center).ravel()
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        self.lobes = int(lobes)
        if not (0 <= abs(self.amplitude) < self.radius) or self.lobes < 1:
            raise SceneError("blob needs |amplitude| < radius and lobes >= 1")
        self.n = self.center.size

    def _parts(self, x):
        d = _vec(x) - self.center
        r = np.linalg.norm(d, axis=-1)
        z = d[..., 0] + 1j * d[..., 1]
        zk1 = z ** (self.lobes - 1)
        p = np.real(zk1 * z)
        with np.errstate(divide="ignore", invalid="ignore"):
            mod = np.where(r > 0, p / r**self.lobes, 0.0)
        return d, r, zk1, p, mod

    def level(self, x):
        _, r, _, _, mod = self._parts(x)
        return r - self.radius - self.amplitude * mod

    def grad(self, x):
        d, r, zk1, p, _ = self._parts(x)
        k = self.lobes
        dp = np.zeros_like(d)
        dp[..., 0] = k * np.real(zk1)
        dp[..., 1] = -k * np.imag(zk1)
        rr = r[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            radial = d / rr
            dmod = dp / rr**k - k * p[..., None] * d / rr ** (k + 2)
            g = radial - self.amplitude * dmod
        return np.where(rr > 0, g, 0.0)

    def bounds(self):
        reach = self.radius + abs(self.amplitude)
        return self.center - reach, self.center + reach

    def params(self):
        return {"center": self.center.tolist(), "radius": self.radius,
                "amplitude": self.amplitude, "lobes": self.lobes}


class Complement(ImplicitDomain):
    """Exterior of the closure of ``inner``: level and gradient negated."""

    kind = "complement"

    def __init__(self, inner: ImplicitDomain) -> None:
        self.inner = inner
        self.n = inner.n
        self.g_min = inner.g_min

    def level(self, x):
        return -self.inner.level(x)

    def grad(self, x):
        return -self.inner.grad(x)

    def params(self):
        return {"of": self.inner.to_dict()}


SHAPES = {"half-space": HalfSpace, "ball": Ball, "ellipsoid": Ellipsoid, "blob": Blob}


def shape_from_dict(params: dict[str, Any]) -> ImplicitDomain:
    """Build a shape from ``{"kind": ..., **params}``."""
    params = dict(params)
    kind = params.pop("kind", None)
    if kind == "complement":
        if "of" not in params:
            raise SceneError("complement shape needs an 'of' entry")
        return Complement(shape_from_dict(params["of"]))
    if kind not in SHAPES:
        raise SceneError(f"unknown shape kind {kind!r}; expected one of {sorted(SHAPES) + ['complement']}")
    try:
        return SHAPES[kind](**params)
    except TypeError as exc:
        raise SceneError(f"bad parameters for {kind}: {exc}") from None


# ---------------------------------------------------------------- point tests


def classify_point(d: ImplicitDomain, p: ArrayLike, eps: float = BOUNDARY_BAND) -> Membership:
    if eps < 0:
        raise ValueError("band must be non-negative")
    v = float(d.level(_vec(p)))
    if v < -eps:
        return Membership.INTERIOR
    if v > eps:
        return Membership.EXTERIOR
    return Membership.BOUNDARY_BAND


def complement(d: ImplicitDomain) -> ImplicitDomain:
    return d.inner if isinstance(d, Complement) else Complement(d)


def project_to_boundary(d: ImplicitDomain, x: ArrayLike, iterations: int = 60) -> NDArray[np.float64]:
    """Newton projection along the gradient, vectorized over leading axes."""
    x = _vec(x).copy()
    for _ in range(iterations):
        v = d.level(x)
        g = d.grad(x)
        gg = np.sum(g * g, axis=-1)
        step = np.divide(v, gg, out=np.zeros_like(v), where=gg > 0)
        x -= step[..., None] * g
        if np.all(np.abs(v) <= 1e-15):
            break
    return x


def sample_boundary(d: ImplicitDomain, count: int, box=None, seed: int = SEED) -> NDArray[np.float64]:
    """Quasi-random boundary points obtained by projecting points of ``box``."""
    if box is None:
        box = d.bounds()
        if box is None:
            raise ValueError("an explicit box is required for unbounded domains")
    lo, hi = (_vec(b) for b in box)
    pts = qmc.scale(sobol(d.n, 4 * count, seed), lo, hi)
    proj = project_to_boundary(d, pts)
    ok = (np.abs(d.level(proj)) <= 1e-12) & np.all((proj >= lo) & (proj <= hi), axis=-1)
    return proj[ok][:count]


# ---------------------------------------------------------------- closest boundary point


def _ray_directions(n: int) -> NDArray[np.float64]:
    if n == 2:
        ang = 2 * np.pi * np.arange(1024) / 1024
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if n == 3:
        k = np.arange(4096) + 0.5
        z = 1 - 2 * k / 4096
        phi = np.pi * (1 + 5**0.5) * k
        s = np.sqrt(1 - z * z)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    g = sobol(n, 4096)
    from scipy.special import ndtri
    g = ndtri(np.clip(g, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _polish_foot(d: ImplicitDomain, c: NDArray, x: NDArray, iterations: int = 50) -> NDArray:
    """Move boundary points ``x`` until ``x - c`` is parallel to the normal at ``x``."""
    scale = 8 * np.finfo(float).eps * (1.0 + np.max(np.abs(c)))
    for _ in range(iterations):
        g = d.grad(x)
        nu = g / np.linalg.norm(g, axis=-1, keepdims=True)
        s = np.sum((x - c) * nu, axis=-1, keepdims=True)
        y = c + s * nu
        for _ in range(4):
            v = d.level(y)
            dv = np.sum(d.grad(y) * nu, axis=-1)
            y = y - (v / dv)[..., None] * nu
        moved = np.max(np.linalg.norm(y - x, axis=-1))
        x = y
        if moved <= scale:
            break
    return x


def closest_boundary_point(d: ImplicitDomain, R: float, center: ArrayLike | None = None) -> NDArray[np.float64]:
    """Boundary point of ``d`` nearest to ``center`` (default origin) inside ``B_R``."""
    c = np.zeros(d.n) if center is None else _vec(center).ravel()
    if float(d.level(c)) == 0.0:
        return c.copy()
    dirs = _ray_directions(d.n)
    s = np.linspace(0.0, R, 33)
    pts = c + s[:, None, None] * dirs[None, :, :]
    vals = d.level(pts)
    sign0 = np.sign(vals[0])
    crossed = np.sign(vals) != sign0
    has = np.any(crossed[1:], axis=0)
    if not np.any(has):
        raise NoBoundaryInBall(f"no boundary crossing found within radius {R:g}", center=c.tolist())
    rays = np.flatnonzero(has)
    k = np.argmax(crossed[:, rays], axis=0)
    a = s[k - 1]
    b = s[k]
    u = dirs[rays]
    fa = vals[k - 1, rays]
    for _ in range(60):
        m = 0.5 * (a + b)
        fm = d.level(c + m[:, None] * u)
        same = np.sign(fm) == np.sign(fa)
        a = np.where(same, m, a)
        fa = np.where(same, fm, fa)
        b = np.where(same, b, m)
    coarse = 0.5 * (a + b)
    order = np.argsort(coarse, kind="stable")[:32]
    cand = _polish_foot(d, c, c + coarse[order, None] * u[order])
    dist = np.linalg.norm(cand - c, axis=-1)
    best = dist.min()
    tied = cand[dist <= best + 1e-12 * (1.0 + best)]
    pick = tied[np.lexsort(tied.T[::-1])[0]]
    return pick


# ---------------------------------------------------------------- local charts


class DomainColumns:
    """Level of ``d`` along the first axis of ``frame`` through grid points ``xp``.

    Frame coordinates are measured from ``center``.
    """

    def __init__(self, d: ImplicitDomain, center: NDArray, frame: Frame, xp: NDArray) -> None:
        self.d = d
        self.center = center
        self.frame = frame
        self.xp = xp

    def points(self, t, idx):
        y = np.concatenate([np.asarray(t, dtype=float)[:, None], self.xp[idx]], axis=-1)
        return self.center + from_frame(y, self.frame)

    def __call__(self, t, idx):
        p = self.points(t, idx)
        return self.d.level(p), self.d.grad(p) @ self.frame.first_axis

    def frame_gradient(self, t, idx):
        """Gradient of the level with respect to frame coordinates."""
        return to_frame(self.d.grad(self.points(t, idx)), self.frame)


def implicit_slopes(frame_grad: NDArray) -> NDArray:
    """Graph gradient ``-G' / G_1`` from the level gradient in frame coordinates."""
    return -frame_grad[:, 1:] / frame_grad[:, :1]


def grid_axis(half_width: float, res: int) -> NDArray[np.float64]:
    return np.linspace(-half_width, half_width, res)


@dataclass(frozen=True)
class LocalChart:
    """Boundary of a domain near ``center`` as the graph ``y1 = psi(y')``.

    Frame coordinates are measured from ``center``; the domain lies above the
    graph.  ``psi`` is stored on the square grid of half width ``extent * R``.
    """

    frame: Frame
    center: NDArray[np.float64]
    R: float
    psi: GridFunction
    gamma: float
    theta_measured: float
    anchor: NDArray[np.float64]
    extent: float = 8.0

    def value(self, xp: ArrayLike) -> NDArray[np.float64]:
        return self.psi(xp)

    def gradient(self, xp: ArrayLike) -> NDArray[np.float64]:
        return self.psi.gradient(xp)

    def disk_mask(self, radius: float | None = None) -> NDArray[np.bool_]:
        r = self.R if radius is None else radius
        return np.linalg.norm(self.psi.nodes(), axis=-1) <= r * (1 + 1e-12)

    def to_csv(self, path: str | Path) -> None:
        write_graph_csv(path, self.psi, "psi")


def write_graph_csv(path: str | Path, g: GridFunction, name: str) -> None:
    nodes = g.nodes()
    dim = nodes.shape[1]
    header = [f"y{k + 2}" for k in range(dim)] + [name] + [f"d{name}_{k + 2}" for k in range(dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        vals = g.values.ravel()
        grads = g.grads.reshape(-1, dim)
        for p, v, dv in zip(nodes, vals, grads):
            w.writerow([format(x, ".17g") for x in (*p, v, *dv)])


def chart_norm(g: GridFunction, radius: float, gamma: float) -> float:
    """``sup|psi| + sup|D psi| + [D psi]_gamma`` over grid nodes in the disk."""
    nodes = g.nodes()
    mask = np.linalg.norm(nodes, axis=-1) <= radius * (1 + 1e-12)
    vals = g.values.ravel()[mask]
    grads = g.grads.reshape(-1, g.dim)[mask]
    semi = holder_seminorm_nodes(nodes[mask], grads, gamma, 2 * g.spacing)
    return float(np.max(np.abs(vals))) + sup_norm(grads) + semi


def local_chart(
    d: ImplicitDomain,
    center: ArrayLike,
    R: float,
    frame_hint: Frame | None = None,
    grid_res: int | None = None,
    gamma: float = 1.0,
    extent: float = 8.0,
) -> LocalChart:
    """Chart of ``d`` on ``B_{extent R}'`` around ``center``.

    Without a hint the first axis is the inward normal at the boundary point
    closest to ``center``.
    """
    c = _vec(center).ravel()
    res = grid_res or default_grid_res(d.n)
    if frame_hint is None:
        anchor = closest_boundary_point(d, R, c)
        frame = frame_from_first_axis(d.inward_normal(anchor), d.n)
    else:
        frame = frame_hint
        anchor = c.copy()
    half = extent * R
    axis = grid_axis(half, res)
    shape = (res,) * (d.n - 1)
    probe = GridFunction(axis, np.zeros(shape), np.zeros(shape + (d.n - 1,)))
    xp = probe.nodes()
    system = DomainColumns(d, c, frame, xp)
    sol = solve_columns(system, shape, -half, half, float(np.max(np.abs(c))) + half)
    if np.any(sol.slopes >= 0):
        raise MarginViolation("the domain does not lie above the graph in this frame",
                              column=int(np.argmax(sol.slopes >= 0)))
    idx = np.arange(xp.shape[0])
    slopes = implicit_slopes(system.frame_gradient(sol.roots, idx))
    psi = GridFunction(axis, sol.roots.reshape(shape), slopes.reshape(shape + (d.n - 1,)))
    theta = chart_norm(psi, R, gamma)
    if frame_hint is not None:
        anchor = c + from_frame(np.concatenate([[float(psi(np.zeros((1, d.n - 1)))[0])], np.zeros(d.n - 1)]), frame)
    return LocalChart(frame, c, float(R), psi, float(gamma), theta, anchor, extent)


def certify_theta(
    d: ImplicitDomain,
    R: float,
    gamma: float = 1.0,
    samples: int = 32,
    grid_res: int = 33,
    box=None,
) -> float:
    """Largest chart norm over sampled boundary points, each chart in its normal frame."""
    worst = 0.0
    for y in sample_boundary(d, samples, box):
        frame = frame_from_first_axis(d.inward_normal(y), d.n)
        chart = local_chart(d, y, R, frame_hint=frame, grid_res=grid_res, gamma=gamma, extent=1.0)
        worst = max(worst, chart.theta_measured)
    return worst
