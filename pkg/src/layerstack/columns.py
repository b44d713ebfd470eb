"""Safeguarded root finding along the first-axis columns of a tensor grid.

A column system is a callable ``F(t, idx) -> (value, dvalue_dt)`` where ``t``
holds one trial abscissa per column and ``idx`` the flat column indices.  Each
column must change sign exactly once inside ``[lo, hi]``.

Columns are processed ring by ring outward from the central node.  Each ring
is seeded from the already solved neighbour one step closer to the centre and
solved in one vectorized sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import MultipleCrossings, NewtonStall

ColumnSystem = Callable[[NDArray[np.float64], NDArray[np.intp]], tuple[NDArray[np.float64], NDArray[np.float64]]]

MONOTONE_SAMPLES = 32
MAX_ITER = 200
RESIDUAL_TOL = 1e-12
STALL_LIMIT = 3


@dataclass(frozen=True)
class ColumnSolution:
    roots: NDArray[np.float64]
    slopes: NDArray[np.float64]
    residuals: NDArray[np.float64]
    iterations: NDArray[np.int64]
    monotone: NDArray[np.bool_]


def ring_index(shape: tuple[int, ...]) -> NDArray[np.int64]:
    """Chebyshev distance of every node from the central node, flattened."""
    grids = np.meshgrid(*[np.abs(np.arange(m) - (m - 1) // 2) for m in shape], indexing="ij")
    return np.max(np.stack([g.ravel() for g in grids]), axis=0)


def inward_neighbour(shape: tuple[int, ...]) -> NDArray[np.intp]:
    """Flat index of the neighbour one step closer to the centre."""
    idx = np.indices(shape).reshape(len(shape), -1)
    mid = np.array([(m - 1) // 2 for m in shape])[:, None]
    step = np.sign(mid - idx)
    return np.ravel_multi_index(tuple(idx + step), shape)


def solve_columns(
    system: ColumnSystem,
    shape: tuple[int, ...],
    lo: float,
    hi: float,
    t_scale: float,
) -> ColumnSolution:
    """Root of every column of a grid of the given ``shape``.

    ``t_scale`` is the magnitude of the ambient coordinates the system works
    in; iteration stops once steps shrink to a few ulps of that scale.
    """
    count = int(np.prod(shape)) if shape else 1
    all_idx = np.arange(count)
    samples = np.linspace(lo, hi, MONOTONE_SAMPLES)

    values = np.empty((MONOTONE_SAMPLES, count))
    for s, t in enumerate(samples):
        values[s], _ = system(np.full(count, t), all_idx)
    signs = np.sign(values)
    changes = np.sum(signs[1:] * signs[:-1] < 0, axis=0) + np.sum(signs[1:-1] == 0, axis=0)
    bad = np.flatnonzero(changes != 1)
    if bad.size:
        raise MultipleCrossings(
            f"{bad.size} column(s) do not cross the boundary exactly once in [{lo:.6g}, {hi:.6g}]",
            columns=bad[:10].tolist(),
            crossings=changes[bad[:10]].tolist(),
        )
    diffs = np.diff(values, axis=0)
    monotone = np.all(diffs > 0, axis=0) | np.all(diffs < 0, axis=0)

    # tight bracket from the sampled sign change
    k = np.argmax(signs[1:] * signs[:-1] <= 0, axis=0)
    a = samples[k].copy()
    b = samples[k + 1].copy()
    fa = values[k, all_idx]

    rings = ring_index(shape) if shape else np.zeros(1, dtype=np.int64)
    parent = inward_neighbour(shape) if shape else np.zeros(1, dtype=np.intp)
    roots = np.full(count, np.nan)
    slopes = np.full(count, np.nan)
    residuals = np.full(count, np.nan)
    iterations = np.zeros(count, dtype=np.int64)
    step_tol = 8.0 * np.finfo(float).eps * max(t_scale, abs(lo), abs(hi))

    for ring in range(int(rings.max()) + 1):
        idx = np.flatnonzero(rings == ring)
        if ring == 0:
            seed = 0.5 * (a[idx] + b[idx])
        else:
            seed = roots[parent[idx]]
        seed = np.where((seed > a[idx]) & (seed < b[idx]), seed, 0.5 * (a[idx] + b[idx]))
        r, d, res, it = _newton_bracketed(system, idx, seed, a[idx], b[idx], fa[idx], step_tol)
        roots[idx], slopes[idx], residuals[idx], iterations[idx] = r, d, res, it

    stalled = np.flatnonzero(~(np.abs(residuals) <= RESIDUAL_TOL))
    if stalled.size:
        j = stalled[0]
        raise NewtonStall(
            f"{stalled.size} column(s) did not reach residual {RESIDUAL_TOL:g}",
            column=int(j),
            bracket=[float(a[j]), float(b[j])],
            residual=float(residuals[j]),
        )
    return ColumnSolution(roots, slopes, residuals, iterations, monotone)


def _newton_bracketed(system, idx, t, a, b, fa, step_tol):
    """Newton with a sign-maintained bracket; bisection after repeated stalls."""
    t = t.copy()
    a = a.copy()
    b = b.copy()
    sa = np.sign(fa)
    stalls = np.zeros(t.size, dtype=np.int64)
    best_f = np.full(t.size, np.inf)
    done = np.zeros(t.size, dtype=bool)
    f = np.zeros(t.size)
    df = np.zeros(t.size)
    it = np.zeros(t.size, dtype=np.int64)
    for _ in range(MAX_ITER):
        live = np.flatnonzero(~done)
        if live.size == 0:
            break
        fl, dfl = system(t[live], idx[live])
        f[live], df[live] = fl, dfl
        it[live] += 1

        # shrink the bracket around the current iterate
        same = np.sign(fl) == sa[live]
        a[live] = np.where(same, t[live], a[live])
        b[live] = np.where(same, b[live], t[live])

        contracting = np.abs(fl) < 0.5 * best_f[live]
        stalls[live] = np.where(contracting, 0, stalls[live] + 1)
        best_f[live] = np.minimum(best_f[live], np.abs(fl))

        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t[live] - fl / dfl
        lo = np.minimum(a[live], b[live])
        hi = np.maximum(a[live], b[live])
        use_newton = (stalls[live] < STALL_LIMIT) & np.isfinite(newton) & (newton > lo) & (newton < hi)
        nxt = np.where(use_newton, newton, 0.5 * (a[live] + b[live]))
        step = np.abs(nxt - t[live])

        converged = (fl == 0) | (step <= step_tol) | (hi - lo <= step_tol)
        t[live] = np.where(fl == 0, t[live], nxt)
        done[live] = converged

    # final evaluation at the returned abscissae
    f, df = system(t, idx)
    return t, df, f, it
