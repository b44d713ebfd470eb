"""Sup norms and Hölder seminorms of gradients sampled at grid nodes."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike

CHUNK = 512


def sup_norm(grads: ArrayLike) -> float:
    g = np.asarray(grads, dtype=float)
    if g.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(g.reshape(-1, g.shape[-1]), axis=-1)))


def holder_seminorm_nodes(points: ArrayLike, grads: ArrayLike, gamma: float, min_separation: float) -> float:
    """max |g(w) - g(z)| / |w - z|^gamma over node pairs at least ``min_separation`` apart."""
    p = np.asarray(points, dtype=float)
    g = np.asarray(grads, dtype=float)
    p = p.reshape(-1, p.shape[-1])
    g = g.reshape(-1, g.shape[-1])
    best = 0.0
    for start in range(0, len(p), CHUNK):
        pa = p[start:start + CHUNK]
        ga = g[start:start + CHUNK]
        dist = np.linalg.norm(pa[:, None, :] - p[None, :, :], axis=-1)
        jump = np.linalg.norm(ga[:, None, :] - g[None, :, :], axis=-1)
        ok = dist >= min_separation
        if np.any(ok):
            best = max(best, float(np.max(jump[ok] / dist[ok] ** gamma)))
    return best
