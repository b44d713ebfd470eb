"""Cubic interpolation of a function sampled on a square tensor grid.

Node values and node gradients are both known exactly (from implicit
differentiation), so in one variable a cubic Hermite spline is used.  In
several variables the values and each gradient component are interpolated by
separate tensor cubic splines.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicHermiteSpline, RectBivariateSpline, RegularGridInterpolator


class GridFunction:
    """Function of ``dim`` variables on the grid ``axis x ... x axis``."""

    def __init__(self, axis: ArrayLike, values: ArrayLike, grads: ArrayLike) -> None:
        self.axis = np.asarray(axis, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.grads = np.asarray(grads, dtype=float)
        self.dim = self.values.ndim
        m = self.axis.size
        if self.values.shape != (m,) * self.dim or self.grads.shape != (m,) * self.dim + (self.dim,):
            raise ValueError("values/grads do not match the grid")

    @property
    def spacing(self) -> float:
        return float(self.axis[1] - self.axis[0])

    def nodes(self) -> NDArray[np.float64]:
        """All grid nodes as a (count, dim) array in C order."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    @cached_property
    def _interpolants(self):
        if self.dim == 1:
            return CubicHermiteSpline(self.axis, self.values, self.grads[:, 0], extrapolate=True)
        if self.dim == 2:
            make = lambda v: RectBivariateSpline(self.axis, self.axis, v, kx=3, ky=3, s=0)
        else:
            make = lambda v: RegularGridInterpolator(
                [self.axis] * self.dim, v, method="cubic", bounds_error=False, fill_value=None
            )
        return make(self.values), [make(self.grads[..., k]) for k in range(self.dim)]

    def __call__(self, xp: ArrayLike) -> NDArray[np.float64]:
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        interp = self._interpolants
        if self.dim == 1:
            return interp(xp[:, 0])
        if self.dim == 2:
            return interp[0].ev(xp[:, 0], xp[:, 1])
        return interp[0](xp)

    def gradient(self, xp: ArrayLike) -> NDArray[np.float64]:
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        interp = self._interpolants
        if self.dim == 1:
            return interp.derivative()(xp[:, 0])[:, None]
        if self.dim == 2:
            return np.stack([g.ev(xp[:, 0], xp[:, 1]) for g in interp[1]], axis=-1)
        return np.stack([g(xp) for g in interp[1]], axis=-1)
