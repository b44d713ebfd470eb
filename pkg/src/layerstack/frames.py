"""Orthonormal coordinate frames with positive determinant.

A frame stores its basis vectors as the rows of ``matrix``.  The frame
coordinates of an ambient point ``p`` are ``y_j = p . row_j`` and the ambient
point is recovered as ``p = sum_j y_j row_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NotUnitVector

ORTHONORMAL_TOL = 1e-12
UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Frame:
    """Immutable rotation; row 0 is the distinguished first axis."""

    matrix: NDArray[np.float64]
    n: int = field(init=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"frame matrix must be square with n >= 2, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "n", m.shape[0])

    @classmethod
    def identity(cls, n: int) -> "Frame":
        return cls(np.eye(n))

    @property
    def first_axis(self) -> NDArray[np.float64]:
        return self.matrix[0]

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix.T - np.eye(self.n))))

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def is_valid(self) -> bool:
        return self.orthonormality_error() <= ORTHONORMAL_TOL and self.det() >= 1.0 - 1e-10

    def to_list(self) -> list[list[float]]:
        return self.matrix.tolist()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Frame) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())


def frame_from_first_axis(v: ArrayLike, n: int | None = None) -> Frame:
    """Complete the unit vector ``v`` to a proper rotation whose first row is ``v``.

    A Householder reflection built from ``e1 + v`` or ``e1 - v`` (whichever is
    longer, for stability) sends e1 to -v or v.  One row is then negated: the
    first row in the ``e1 + v`` branch to turn -v into v, the last row in the
    other branch.  Either way the determinant becomes +1.
    """
    v = np.asarray(v, dtype=float).ravel()
    if n is None:
        n = v.size
    if v.size != n or n < 2:
        raise ValueError(f"axis has {v.size} components, expected n = {n} >= 2")
    if not np.all(np.isfinite(v)) or abs(float(np.linalg.norm(v)) - 1.0) > UNIT_TOL:
        raise NotUnitVector(f"axis must have unit length, got |v| = {np.linalg.norm(v)!r}",
                            vector=v.tolist())
    e1 = np.zeros(n)
    e1[0] = 1.0
    if v[0] > 0:
        u = e1 + v
        h = np.eye(n) - 2.0 * np.outer(u, u) / (u @ u)
        h[0] = -h[0]
    else:
        u = e1 - v
        h = np.eye(n) - 2.0 * np.outer(u, u) / (u @ u)
        h[-1] = -h[-1]
    # the first row is v up to rounding; pin it exactly
    h[0] = v
    return Frame(h)


def to_frame(p: ArrayLike, f: Frame) -> NDArray[np.float64]:
    """Frame coordinates of ambient point(s) ``p`` (last axis is the dimension)."""
    return np.asarray(p, dtype=float) @ f.matrix.T


def from_frame(q: ArrayLike, f: Frame) -> NDArray[np.float64]:
    """Ambient point(s) with frame coordinates ``q``."""
    return np.asarray(q, dtype=float) @ f.matrix


def relative_frame(w: Frame, v: Frame) -> Frame:
    """The product ``w^T v`` of two frames of equal dimension."""
    if w.n != v.n:
        raise ValueError(f"dimension mismatch: {w.n} vs {v.n}")
    return Frame(w.matrix.T @ v.matrix)


def random_frame(rng: np.random.Generator, n: int) -> Frame:
    """Proper rotation whose first axis is uniform on the sphere."""
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    return frame_from_first_axis(v, n)
