"""Quantitative checkers: radius ladder, gradient norms, flatness, normal opposition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import least_squares
from numpy.typing import ArrayLike, NDArray

from .domains import SEED, ImplicitDomain, project_to_boundary, sample_boundary
from .errors import NotOnBoundary, SceneError
from .frames import frame_from_first_axis, from_frame
from .graphsolve import SolvedGraph
from .gridfunc import GridFunction
from .norms import holder_seminorm_nodes, sup_norm
from .report import Check

DEFAULT_DELTA_1 = 1.0 / 32.0


@dataclass(frozen=True)
class HolderBudget:
    """Dimension and regularity constants that drive every radius threshold."""

    n: int
    gamma: float = 1.0
    theta: float = 1.0
    tau: float = 1.0
    delta: float = 1.0 / 8.0
    delta_1: float = DEFAULT_DELTA_1

    def __post_init__(self) -> None:
        problems = []
        if self.n < 2:
            problems.append("n >= 2")
        if not 0 < self.gamma <= 1:
            problems.append("gamma in (0, 1]")
        if not self.theta > 0:
            problems.append("theta > 0")
        if not 0 < self.tau <= 1:
            problems.append("tau in (0, 1]")
        if not 0 < self.delta <= 0.125:
            problems.append("delta in (0, 1/8]")
        if not 0 < self.delta_1 < 1.0 / 16.0:
            problems.append("delta_1 in (0, 1/16)")
        if problems:
            raise SceneError("budget violates " + ", ".join(problems), budget=self.to_dict())

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "gamma": self.gamma, "theta": self.theta, "tau": self.tau,
                "delta": self.delta, "delta_1": self.delta_1}


@dataclass(frozen=True)
class RadiusLadder:
    r_star: float
    r1: float
    r2: float
    r3: float
    r4: float
    r0: float
    notes: dict[str, str]

    @property
    def ordered(self) -> bool:
        return self.r0 <= self.r4 <= self.r3 <= self.r2 <= self.r1 <= self.r_star

    def to_dict(self) -> dict[str, Any]:
        return {"R_star": self.r_star, "R_1": self.r1, "R_2": self.r2, "R_3": self.r3,
                "R_4": self.r4, "R_0": self.r0, "notes": dict(self.notes)}


def _invert(coefficient: float, scale: float, bound: float, gamma: float) -> float:
    """Largest R with ``coefficient * (scale R)^gamma <= bound``."""
    return (bound / coefficient) ** (1.0 / gamma) / scale


def r_star(n: int, gamma: float, theta: float) -> float:
    return min(1.0, _invert(n * theta, 16.0, 0.25, gamma))


def r_one(n: int, gamma: float, theta: float, tau: float) -> float:
    # flattened graphs have D phi(0') = 0 and [D phi]_gamma <= 18 n theta,
    # hence sup |D phi| <= 18 n theta R^gamma on B_R'
    return min(r_star(n, gamma, theta), _invert(18.0 * n * theta, 1.0, tau, gamma))


def r_two(n: int, gamma: float, theta: float, delta: float) -> float:
    return min(_invert(36.0 * n * theta, 4.0, delta, gamma), r_one(n, gamma, theta, 2.0))


def radius_ladder(b: HolderBudget) -> RadiusLadder:
    n, g, th, tau = b.n, b.gamma, b.theta, b.tau
    rs = r_star(n, g, th)
    r1 = r_one(n, g, th, tau)
    r2 = r_two(n, g, th, b.delta)
    r3 = r_two(n, g, th, b.delta_1) / 10.0
    flat = min(b.delta_1, (tau / (8.0 * n)) ** 4)
    r_flat = r_two(n, g, th, flat) / 10.0
    r_slope = _invert(18.0 * n * th, 8.0, tau / (8.0 * n), g)
    r4 = min(r1, r3, r_flat, r_slope)
    r0 = min(rs, r1, r2, r3, r4)
    notes = {
        "R_star": "n theta (16 R)^gamma = 1/4, capped at 1",
        "R_1": "min(R_star, R with 18 n theta R^gamma = tau)",
        "R_2": "36 n theta (4 R)^gamma = delta, capped at R_1(tau = 2)",
        "R_3": "R_2(delta_1) / 10",
        "R_4": "min(R_1, R_3, R_2(min(delta_1, (tau/8n)^4))/10, R with 18 n theta (8R)^gamma = tau/(8n))",
        "R_0": "min of all rungs",
    }
    return RadiusLadder(rs, r1, r2, r3, r4, r0, notes)


# ---------------------------------------------------------------- grid norms


def _nodes_and_grads(g: SolvedGraph | GridFunction):
    if isinstance(g, SolvedGraph):
        mask = g.disk_mask()
        return g.nodes()[mask], g.phi.grads.reshape(-1, g.phi.dim)[mask], g.phi.spacing
    return g.nodes(), g.grads.reshape(-1, g.dim), g.spacing


def sup_grad(g: SolvedGraph | GridFunction) -> float:
    """Largest gradient length over the nodes (disk nodes for a solved graph)."""
    return sup_norm(_nodes_and_grads(g)[1])


def holder_seminorm(g: SolvedGraph | GridFunction, gamma: float) -> float:
    """Hölder quotient of the gradient over node pairs at least two cells apart."""
    nodes, grads, h = _nodes_and_grads(g)
    return holder_seminorm_nodes(nodes, grads, gamma, 2 * h)


# ---------------------------------------------------------------- flatness


@dataclass(frozen=True)
class FlatnessReport:
    delta: float
    R: float
    measured: float
    per_scale: list[tuple[float, float]]
    boundary_samples: int
    check: Check

    @property
    def passed(self) -> bool:
        return self.check.passed

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.check.to_dict(), "delta": self.delta, "R": self.R,
                "measured_delta": self.measured,
                "per_scale": [{"r": r, "measured_delta": m} for r, m in self.per_scale],
                "boundary_samples": self.boundary_samples, "seed": SEED}


def _column_delta(d: ImplicitDomain, y, frame, r, columns: int, depth: int) -> float:
    """Worst slab violation ratio over the cylinder ``Q_r(y)`` in the normal frame."""
    dim = d.n - 1
    ax = np.linspace(-r, r, columns)
    xp = np.stack([m.ravel() for m in np.meshgrid(*([ax] * dim), indexing="ij")], axis=-1)
    xp = xp[np.linalg.norm(xp, axis=-1) <= r * (1 + 1e-12)]
    s = np.linspace(-r, r, depth)[1:-1]
    local = np.concatenate([np.broadcast_to(s[:, None, None], (s.size, len(xp), 1)),
                            np.broadcast_to(xp[None], (s.size, len(xp), dim))], axis=-1)
    vals = d.level(y + from_frame(local, frame))
    inside = vals < 0
    # sampled violations: interior below the slab or exterior above it
    viol = np.where(inside, -s[:, None], s[:, None]) / r
    worst = float(max(0.0, np.max(viol)))
    # refine single crossings to the exact boundary height
    sign = np.sign(vals)
    flips = np.sum(sign[1:] != sign[:-1], axis=0)
    one = np.flatnonzero(flips == 1)
    if one.size:
        k = np.argmax(sign[1:, one] != sign[:-1, one], axis=0)
        a, b = s[k], s[k + 1]
        fa = vals[k, one]
        for _ in range(80):
            m = 0.5 * (a + b)
            pts = np.concatenate([m[:, None], xp[one]], axis=-1)
            fm = d.level(y + from_frame(pts, frame))
            same = np.sign(fm) == np.sign(fa)
            a, fa, b = np.where(same, m, a), np.where(same, fm, fa), np.where(same, b, m)
        worst = max(worst, float(np.max(np.abs(0.5 * (a + b)))) / r)
    return worst


def reifenberg_check(
    d: ImplicitDomain,
    delta: float,
    R: float,
    boundary_samples: int = 64,
    scales: int = 4,
    box=None,
    columns: int | None = None,
    depth: int = 257,
) -> FlatnessReport:
    """Measured flatness at sampled boundary points and scales ``R, R/2, ...``.

    The slab direction at each point is the analytic inward normal.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    cols = columns or (65 if d.n == 2 else 17)
    pts = sample_boundary(d, boundary_samples, box)
    per_scale = []
    for k in range(scales):
        r = R / 2**k
        worst = 0.0
        for y in pts:
            frame = frame_from_first_axis(d.inward_normal(y), d.n)
            worst = max(worst, _column_delta(d, y, frame, r, cols, depth))
        per_scale.append((r, worst))
    measured = max(m for _, m in per_scale)
    check = Check("reifenberg_delta", measured, float(delta))
    return FlatnessReport(float(delta), float(R), measured, per_scale, len(pts), check)


# ---------------------------------------------------------------- normal opposition


@dataclass(frozen=True)
class OppositionReport:
    normal_p: list[float]
    normal_q: list[float]
    distance: float
    check: Check

    @property
    def passed(self) -> bool:
        return self.check.passed

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.check.to_dict(), "normal_P": self.normal_p,
                "normal_Q": self.normal_q, "distance_PQ": self.distance}


def nearest_boundary_pair(dA: ImplicitDomain, dB: ImplicitDomain, box=None,
                          iterations: int = 50) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Closest pair ``P`` on the boundary of ``dA`` and ``Q`` on that of ``dB``.

    Alternating projections give a starting pair; a least-squares solve of the
    optimality conditions (both points on their boundaries, ``Q - P`` along the
    normal, normals opposite) then polishes it to rounding level.
    """
    seeds = sample_boundary(dA, 256, box)
    if not len(seeds):
        raise NotOnBoundary("no boundary samples of the first domain in the box")
    P = seeds[np.argmin(np.abs(dB.level(seeds)))]
    for _ in range(iterations):
        P = project_to_boundary(dA, project_to_boundary(dB, P))
    Q = project_to_boundary(dB, P)
    n = dA.n

    def unit(g):
        return g / np.linalg.norm(g)

    def residual(z):
        p, q = z[:n], z[n:]
        na, nb = unit(dA.grad(p)), unit(dB.grad(q))
        gap = q - p
        return np.concatenate([[dA.level(p), dB.level(q)], gap - np.dot(gap, na) * na, na + nb])

    sol = least_squares(residual, np.concatenate([P, Q]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return sol.x[:n], sol.x[n:]


def normal_opposition_check(
    dA: ImplicitDomain,
    dB: ImplicitDomain,
    P: ArrayLike,
    Q: ArrayLike,
    r: float,
    delta: float,
    band: float = 1e-9,
) -> OppositionReport:
    """``|n_P + n_Q|`` against ``delta^(1/4) / 2`` with outward unit normals."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    for name, dom, pt in (("P", dA, P), ("Q", dB, Q)):
        v = float(dom.level(pt))
        if abs(v) > band:
            raise NotOnBoundary(f"{name} is not on its boundary (level {v:.3g})", point=pt.tolist())
    dist = float(np.linalg.norm(P - Q))
    if not dist < r:
        raise ValueError(f"|P - Q| = {dist:g} must be below r = {r:g}")
    gp = dA.grad(P)
    gq = dB.grad(Q)
    n_p = gp / np.linalg.norm(gp)
    n_q = gq / np.linalg.norm(gq)
    check = Check("normal_opposition", float(np.linalg.norm(n_p + n_q)), float(delta) ** 0.25 / 2)
    return OppositionReport(n_p.tolist(), n_q.tolist(), dist, check)
