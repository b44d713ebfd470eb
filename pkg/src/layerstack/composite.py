"""Composite domains: nested-or-disjoint families of subdomains and their layers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import qmc

from .domains import SEED, ImplicitDomain, project_to_boundary, sample_boundary, sobol
from .errors import (
    DuplicateShape,
    Inconclusive,
    MoreThanTwoClusters,
    OutsideComposite,
    SamplingInconclusive,
    SceneError,
    TrichotomyViolation,
    UnionNotInS,
)
from .graphsolve import sample_ball
from .verify import HolderBudget

PAIR_SAMPLES = 4096
BOUNDARY_SAMPLES = 256
PROBE_OFFSETS = (1e-6, 1e-9, 1e-12)
PARTITION_BAND = 1e-8


class Relation(str, enum.Enum):
    I_SUBSET_J = "ISubsetJ"
    J_SUBSET_I = "JSubsetI"
    DISJOINT = "Disjoint"
    VIOLATION = "Violation"


def interface_band(R: float, center: ArrayLike) -> float:
    """Abstention band for ball-scale classification.

    It is ``1e-8`` for unit-size balls, shrinks with ``R`` so that tiny balls
    are not swallowed, and never drops below the rounding level of the
    ambient coordinates.
    """
    c = np.asarray(center, dtype=float)
    floor = 64 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(c))))
    return max(PARTITION_BAND * min(1.0, R), floor)


def _union_box(domains: Sequence[ImplicitDomain], pad: float = 0.05):
    boxes = [d.bounds() for d in domains]
    boxes = [b for b in boxes if b is not None]
    if not boxes:
        return None
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    span = np.maximum(hi - lo, 1e-12)
    return lo - pad * span, hi + pad * span


def _probe_points(domains: Sequence[ImplicitDomain], box, samples: int) -> NDArray[np.float64]:
    lo, hi = box
    n = len(lo)
    pts = [qmc.scale(sobol(n, samples), lo, hi)]
    scale = float(np.max(hi - lo))
    # offsets at several scales so that thin shells between close boundaries get witnesses
    for d in domains:
        b = sample_boundary(d, BOUNDARY_SAMPLES, box)
        if len(b):
            nu = d.inward_normal(b)
            for off in PROBE_OFFSETS:
                pts.append(b + off * scale * nu)
                pts.append(b - off * scale * nu)
    return np.concatenate(pts)


def rounding_band(box) -> float:
    """Level magnitude below which the sign is not trusted inside ``box``."""
    extent = max(float(np.max(np.abs(box[0]))), float(np.max(np.abs(box[1]))))
    return 64 * np.finfo(float).eps * (1.0 + extent)


def classify_pair(Ui: ImplicitDomain, Uj: ImplicitDomain, samples: int = PAIR_SAMPLES,
                  box=None, band: float | None = None) -> Relation:
    """Set relation between two domains decided from sampled witnesses.

    Samples whose level is within ``band`` of zero for either domain abstain;
    the default band is the rounding level of the sampling box.
    """
    box = box or _union_box([Ui, Uj])
    if box is None:
        raise Inconclusive("both domains are unbounded; an explicit sampling box is required")
    band = rounding_band(box) if band is None else band
    pts = _probe_points([Ui, Uj], box, samples)
    li, lj = Ui.level(pts), Uj.level(pts)
    ok = (np.abs(li) > band) & (np.abs(lj) > band)
    ii, jj = (li < 0) & ok, (lj < 0) & ok
    only_i = int(np.sum(ii & ~jj))
    only_j = int(np.sum(jj & ~ii))
    both = int(np.sum(ii & jj))
    if only_i == 0 and only_j == 0 and both == 0:
        raise Inconclusive("no sample hit either domain; widen the sampling box")
    if both == 0:
        if only_i == 0 or only_j == 0:
            raise Inconclusive("one domain was never sampled", only_i=only_i, only_j=only_j)
        return Relation.DISJOINT
    if only_i == 0 and only_j > 0:
        return Relation.I_SUBSET_J
    if only_j == 0 and only_i > 0:
        return Relation.J_SUBSET_I
    # partial overlap, or two samplings of the same set
    return Relation.VIOLATION


_FLIP = {Relation.I_SUBSET_J: Relation.J_SUBSET_I, Relation.J_SUBSET_I: Relation.I_SUBSET_J,
         Relation.DISJOINT: Relation.DISJOINT, Relation.VIOLATION: Relation.VIOLATION}


@dataclass
class CompositeScene:
    """``members[0]`` is the composite domain, the rest its subdomains.

    Construct with :meth:`build`, which classifies every pair and builds the
    containment forest; :meth:`unchecked` skips the validity checks.
    """

    members: list[ImplicitDomain]
    budget: HolderBudget
    ids: list[str]
    box: tuple[NDArray[np.float64], NDArray[np.float64]]
    relations: list[list[Relation | None]]
    parent: list[int | None] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.members[0].n

    @property
    def K(self) -> int:
        return len(self.members) - 1

    def children(self, j: int) -> list[int]:
        return [i for i, p in enumerate(self.parent) if p == j]

    def strictly_inside(self, i: int, j: int) -> bool:
        return i != j and self.relations[i][j] is Relation.I_SUBSET_J

    @classmethod
    def build(cls, members: Sequence[ImplicitDomain], budget: HolderBudget,
              ids: Sequence[str] | None = None, box=None, samples: int = PAIR_SAMPLES) -> "CompositeScene":
        scene = cls._assemble(members, budget, ids, box, samples)
        scene.parent = containment_forest(scene)
        return scene

    @classmethod
    def unchecked(cls, members: Sequence[ImplicitDomain], budget: HolderBudget,
                  ids: Sequence[str] | None = None, box=None, samples: int = PAIR_SAMPLES) -> "CompositeScene":
        scene = cls._assemble(members, budget, ids, box, samples, strict=False)
        scene.parent = [None] + [0] * scene.K
        return scene

    @classmethod
    def _assemble(cls, members, budget, ids, box, samples, strict=True):
        members = list(members)
        ids = list(ids) if ids is not None else [f"U{i}" for i in range(len(members))]
        if len(ids) != len(members) or len(set(ids)) != len(ids):
            raise SceneError("member ids must be unique and match the members", ids=ids)
        if any(d.n != members[0].n for d in members):
            raise TrichotomyViolation("members have different dimensions")
        keys = [d.key() for d in members]
        if strict and len(set(keys)) != len(keys):
            dup = [ids[i] for i, k in enumerate(keys) if keys.count(k) > 1]
            raise DuplicateShape("duplicate shapes are not allowed", ids=dup)
        if box is None:
            sub = _union_box(members[1:], pad=0.25) if len(members) > 1 else None
            box = _union_box(members) if members[0].bounds() is not None else sub
            if box is None:
                n = members[0].n
                box = (-np.ones(n), np.ones(n))
        box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
        count = len(members)
        rel: list[list[Relation | None]] = [[None] * count for _ in range(count)]
        for i in range(count):
            for j in range(i + 1, count):
                r = classify_pair(members[i], members[j], samples, box)
                rel[i][j] = r
                rel[j][i] = _FLIP[r]
        return cls(members, budget, ids, box, rel)

    # -------------------------------------------------------------- membership

    def inside(self, pts: ArrayLike) -> NDArray[np.bool_]:
        """Boolean matrix (points x members) of strict membership."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([d.level(p) < 0 for d in self.members], axis=-1)

    def levels(self, pts: ArrayLike) -> NDArray[np.float64]:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([d.level(p) for d in self.members], axis=-1)

    def components(self, pts: ArrayLike) -> NDArray[np.int64]:
        """Component index of each point by descending the forest; -1 outside."""
        inside = self.inside(pts)
        comp = np.where(inside[:, 0], 0, -1)
        for j in self._topological():
            for c in self.children(j):
                comp = np.where((comp == j) & inside[:, c], c, comp)
        return comp

    def direct_components(self, pts: ArrayLike) -> NDArray[np.bool_]:
        """Matrix of ``p in W_j``, computed from ``U_j`` minus its proper sub-members."""
        inside = self.inside(pts)
        out = np.zeros_like(inside)
        for j in range(self.K + 1):
            sub = [i for i in range(self.K + 1) if self.strictly_inside(i, j)]
            covered = np.any(inside[:, sub], axis=1) if sub else np.zeros(len(inside), dtype=bool)
            out[:, j] = inside[:, j] & ~covered
        return out

    def _topological(self) -> list[int]:
        order, frontier = [], [0]
        while frontier:
            j = frontier.pop(0)
            order.append(j)
            frontier.extend(self.children(j))
        return order

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "budget": self.budget.to_dict(),
            "shapes": [{"id": i, **d.to_dict()} for i, d in zip(self.ids, self.members)],
            "forest": {self.ids[i]: (None if p is None else self.ids[p]) for i, p in enumerate(self.parent)},
        }


def containment_forest(scene: CompositeScene) -> list[int | None]:
    """Parent of each member: the smallest member strictly containing it."""
    rel = scene.relations
    count = scene.K + 1
    for i in range(count):
        for j in range(i + 1, count):
            if rel[i][j] is Relation.VIOLATION:
                raise TrichotomyViolation(
                    f"{scene.ids[i]} and {scene.ids[j]} are neither nested nor disjoint",
                    pair=[scene.ids[i], scene.ids[j]])
    parent: list[int | None] = [None]
    for i in range(1, count):
        if rel[i][0] is not Relation.I_SUBSET_J:
            raise TrichotomyViolation(f"{scene.ids[i]} is not a proper subdomain of {scene.ids[0]}",
                                      pair=[scene.ids[i], scene.ids[0]])
        sup = [j for j in range(count) if rel[i][j] is Relation.I_SUBSET_J]
        smallest = [j for j in sup if all(k == j or rel[j][k] is Relation.I_SUBSET_J for k in sup)]
        if len(smallest) != 1:
            raise TrichotomyViolation(f"supersets of {scene.ids[i]} are not nested",
                                      pair=[scene.ids[i]] + [scene.ids[j] for j in sup])
        parent.append(smallest[0])
    return parent


def component_membership(scene: CompositeScene, p: ArrayLike) -> int:
    """Index ``j`` with ``p`` in ``W_j``."""
    j = int(scene.components(np.asarray(p, dtype=float)[None])[0])
    if j < 0:
        raise OutsideComposite("point is not in the composite domain", point=np.asarray(p).tolist())
    return j


@dataclass(frozen=True)
class PartitionReport:
    samples: int
    checked: int
    skipped: int
    gaps: int
    double_counts: int
    forest_mismatches: int

    @property
    def passed(self) -> bool:
        return self.gaps == 0 and self.double_counts == 0 and self.forest_mismatches == 0

    def to_dict(self) -> dict[str, Any]:
        return {"samples": self.samples, "checked": self.checked, "skipped": self.skipped,
                "gaps": self.gaps, "double_counts": self.double_counts,
                "forest_mismatches": self.forest_mismatches, "pass": self.passed, "seed": SEED}


def partition_check(scene: CompositeScene, samples: int = 10_000, band: float = PARTITION_BAND,
                    region: tuple[ArrayLike, float] | None = None) -> PartitionReport:
    """Every sampled point of ``U_0`` lies in exactly one ``W_j``.

    Samples fill the scene box, or the ball ``region = (center, R)`` if given.
    """
    if region is None:
        lo, hi = scene.box
        pts = qmc.scale(sobol(scene.n, samples), lo, hi)
    else:
        pts = sample_ball(region[0], region[1], samples)
    lev = scene.levels(pts)
    in_u = lev[:, 0] < 0
    clear = np.all(np.abs(lev) > band, axis=1)
    keep = in_u & clear
    direct = scene.direct_components(pts[keep])
    count = direct.sum(axis=1)
    via_forest = scene.components(pts[keep])
    ok = count == 1
    mismatch = int(np.sum(ok & (np.argmax(direct, axis=1) != via_forest)))
    return PartitionReport(samples, int(keep.sum()), int((in_u & ~clear).sum()),
                           int(np.sum(count == 0)), int(np.sum(count > 1)), mismatch)


# ---------------------------------------------------------------- ball decomposition


@dataclass(frozen=True)
class BallView:
    """Membership of sampled ball points, with per-member abstention."""

    points: NDArray[np.float64]
    inside: NDArray[np.bool_]
    reliable: NDArray[np.bool_]


def _ball_view(scene: CompositeScene, center: NDArray, R: float, samples: int = PAIR_SAMPLES) -> BallView:
    pts = [sample_ball(center, R, samples)]
    # witnesses near every boundary that passes through the ball
    for d in scene.members:
        foot = project_to_boundary(d, center[None])[0]
        gap = float(np.linalg.norm(foot - center))
        if np.isfinite(gap) and gap < R and abs(float(d.level(foot))) < 1e-12:
            nu = d.inward_normal(foot)
            off = 0.5 * (R - gap)
            pts.append(np.stack([foot + off * nu, foot - off * nu]))
    p = np.concatenate(pts)
    lev = scene.levels(p)
    band = interface_band(R, center)
    return BallView(p, lev < 0, np.abs(lev) > band)


def _meets(view: BallView, i: int) -> bool:
    return bool(np.any(view.inside[:, i] & view.reliable[:, i]))


def minimal_cover(scene: CompositeScene, center: ArrayLike, R: float, view: BallView | None = None) -> int:
    """Smallest member whose trace on the ball contains ``U cap B_R``."""
    c = np.asarray(center, dtype=float)
    view = view or _ball_view(scene, c, R)
    in_u = view.inside[:, 0] & view.reliable[:, 0]
    if not np.any(in_u):
        raise SamplingInconclusive("no sample of the ball lies in the composite domain")
    cands = []
    for i in range(scene.K + 1):
        pts = in_u & view.reliable[:, i]
        if np.all(view.inside[pts, i]):
            cands.append(i)
    deepest = [i for i in cands if all(k == i or scene.strictly_inside(i, k) for k in cands)]
    if len(deepest) != 1:
        raise SamplingInconclusive("covering members are not nested", candidates=cands)
    return deepest[0]


def _maximal_meeting(scene: CompositeScene, j: int, view: BallView) -> list[int]:
    meeting = [i for i in range(scene.K + 1) if scene.strictly_inside(i, j) and _meets(view, i)]
    return sorted(i for i in meeting if not any(scene.strictly_inside(i, k) for k in meeting))


def inner_union(scene: CompositeScene, j: int, center: ArrayLike, R: float,
                view: BallView | None = None) -> int | None:
    """The single member equal to the union of ball-meeting proper sub-members of ``U_j``.

    Returns None (the empty sentinel) when no sub-member meets the ball.
    """
    c = np.asarray(center, dtype=float)
    view = view or _ball_view(scene, c, R)
    top = _maximal_meeting(scene, j, view)
    if not top:
        return None
    if len(top) > 1:
        witnesses = {scene.ids[i]: view.points[np.argmax(view.inside[:, i] & view.reliable[:, i])].tolist()
                     for i in top}
        raise UnionNotInS(f"sub-members of {scene.ids[j]} meeting the ball do not form a single member",
                          member=scene.ids[j], pieces=[scene.ids[i] for i in top], witnesses=witnesses)
    return top[0]


def split_cover(scene: CompositeScene, center: ArrayLike, R: float,
                view: BallView | None = None) -> tuple[int, int | None, int | None]:
    """``(j, k, l)``: minimal cover and its at most two ball-meeting clusters."""
    c = np.asarray(center, dtype=float)
    view = view or _ball_view(scene, c, R)
    j = minimal_cover(scene, c, R, view)
    top = _maximal_meeting(scene, j, view)
    if len(top) > 2:
        raise MoreThanTwoClusters(f"{len(top)} disjoint sub-members of {scene.ids[j]} meet the ball",
                                  member=scene.ids[j], clusters=[scene.ids[i] for i in top])
    k = top[0] if top else None
    l = top[1] if len(top) > 1 else None
    return j, k, l


@dataclass(frozen=True)
class LayerChain:
    """Members ``i_{-m} .. i_0 .. i_l``; ``plus = (i_0, ..., i_l)``, ``minus = (i_{-1}, ..., i_{-m})``."""

    plus: tuple[int, ...]
    minus: tuple[int, ...]
    center: tuple[float, ...]
    R: float
    swapped: bool = False

    @property
    def l(self) -> int:
        return len(self.plus) - 1

    @property
    def m(self) -> int:
        return len(self.minus)

    def index(self, d: int) -> int:
        return self.plus[d] if d >= 0 else self.minus[-d - 1]

    def ordered(self) -> list[int]:
        """Members from ``i_{-m}`` up to ``i_l``."""
        return list(reversed(self.minus)) + list(self.plus)

    def flipped(self) -> "LayerChain":
        """Exchange the two sides of ``i_0``."""
        return LayerChain((self.plus[0],) + self.minus, self.plus[1:], self.center, self.R,
                          not self.swapped)

    def to_dict(self, ids: Sequence[str] | None = None) -> dict[str, Any]:
        name = (lambda i: ids[i]) if ids is not None else (lambda i: i)
        return {"l": self.l, "m": self.m,
                "members": {str(d): name(self.index(d)) for d in range(-self.m, self.l + 1)},
                "center": list(self.center), "R": self.R, "sides_swapped": self.swapped}


def chain_decompose(scene: CompositeScene, center: ArrayLike, R: float) -> LayerChain:
    """Strictly nested chain whose components tile ``U cap B_R``."""
    c = np.asarray(center, dtype=float)
    view = _ball_view(scene, c, R)
    j, k, l = split_cover(scene, c, R, view)
    outside = np.any(~view.inside[:, 0] & view.reliable[:, 0])
    if outside and l is not None:
            raise MoreThanTwoClusters("the ball meets the outer boundary and two disjoint sub-members",
                                  clusters=[scene.ids[k], scene.ids[l]])
    plus = [j]
    cur = k
    while cur is not None:
        plus.append(cur)
        cur = inner_union(scene, cur, c, R, view)
    minus = []
    cur = l
    while cur is not None:
        minus.append(cur)
        cur = inner_union(scene, cur, c, R, view)
    return LayerChain(tuple(plus), tuple(minus), tuple(c.tolist()), float(R))
