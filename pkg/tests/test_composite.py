import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerstack.composite import (
    CompositeScene,
    Relation,
    chain_decompose,
    classify_pair,
    component_membership,
    inner_union,
    interface_band,
    minimal_cover,
    partition_check,
    split_cover,
)
from layerstack.domains import Ball, HalfSpace
from layerstack.errors import (
    DuplicateShape,
    Inconclusive,
    MoreThanTwoClusters,
    OutsideComposite,
    SceneError,
    TrichotomyViolation,
    UnionNotInS,
)
from layerstack.graphsolve import sample_ball
from layerstack.verify import HolderBudget, radius_ladder

BUDGET = HolderBudget(2, theta=4.5)


@pytest.fixture(scope="module")
def nested():
    return CompositeScene.build([Ball([0, 0], 1.0), Ball([0, 0], 0.5), Ball([0, 0], 0.25)], BUDGET)


@pytest.fixture(scope="module")
def twins():
    gap = radius_ladder(BUDGET).r0 / 2
    members = [Ball([0, 0], 1.0), Ball([0, 0], 0.6), Ball([-0.25 - gap / 2, 0], 0.25),
               Ball([0.25 + gap / 2, 0], 0.25)]
    return CompositeScene.build(members, BUDGET)


def test_pair_relations():
    assert classify_pair(Ball([0, 0], 0.5), Ball([0, 0], 1.0)) is Relation.I_SUBSET_J
    assert classify_pair(Ball([0, 0], 1.0), Ball([0, 0], 0.5)) is Relation.J_SUBSET_I
    assert classify_pair(Ball([-0.5, 0], 0.3), Ball([0.5, 0], 0.3)) is Relation.DISJOINT
    assert classify_pair(Ball([0, 0], 1.0), Ball([1, 0], 1.0)) is Relation.VIOLATION


def test_far_domains_are_inconclusive():
    with pytest.raises(Inconclusive):
        classify_pair(Ball([10, 10], 0.1), Ball([20, 20], 0.1), box=(np.array([-1.0, -1.0]), np.array([1.0, 1.0])))


def test_nested_forest_is_a_path(nested):
    assert nested.parent == [None, 0, 1]


def test_twin_forest_has_two_children(twins):
    assert twins.parent == [None, 0, 1, 1]
    assert twins.children(1) == [2, 3]


def test_partial_overlap_is_rejected():
    with pytest.raises(TrichotomyViolation) as info:
        CompositeScene.build([Ball([0, 0], 3.0), Ball([0, 0], 1.0), Ball([1, 0], 1.0)], BUDGET)
    assert info.value.details["pair"] == ["U1", "U2"]


def test_duplicates_are_rejected():
    with pytest.raises(DuplicateShape):
        CompositeScene.build([Ball([0, 0], 1.0), Ball([0, 0], 0.5), Ball([0, 0], 0.5)], BUDGET)
    with pytest.raises(SceneError):
        CompositeScene.build([Ball([0, 0], 1.0), Ball([0, 0], 0.5)], BUDGET, ids=["a", "a"])


def random_tree(seed, max_members=7):
    """Nested-or-disjoint balls with their true parent list."""
    rng = np.random.default_rng(seed)
    balls, parent = [(np.zeros(2), 1.0)], [None]
    frontier = [0]
    while frontier and len(balls) < max_members:
        i = frontier.pop(0)
        c, r = balls[i]
        kind = rng.integers(0, 3)
        if kind == 1:
            rc = r * rng.uniform(0.3, 0.7)
            direction = rng.normal(size=2)
            direction /= np.linalg.norm(direction)
            balls.append((c + 0.5 * (r - rc) * direction, rc))
            parent.append(i)
            frontier.append(len(balls) - 1)
        elif kind == 2 and len(balls) + 2 <= max_members:
            angle = rng.uniform(0, np.pi)
            direction = np.array([np.cos(angle), np.sin(angle)])
            for s in (1, -1):
                balls.append((c + s * 0.5 * r * direction, 0.35 * r))
                parent.append(i)
                frontier.append(len(balls) - 1)
    return [Ball(c, r) for c, r in balls], parent


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_forests_match_generator(seed):
    members, truth = random_tree(seed)
    scene = CompositeScene.build(members, BUDGET)
    assert scene.parent == truth
    assert partition_check(scene, samples=2048).passed


def test_membership_examples(nested):
    assert component_membership(nested, [0.7, 0.0]) == 0
    assert component_membership(nested, [0.35, 0.0]) == 1
    assert component_membership(nested, [0.1, 0.0]) == 2
    with pytest.raises(OutsideComposite):
        component_membership(nested, [1.5, 0.0])


def test_forest_membership_equals_direct_definition(twins):
    pts = np.random.default_rng(11).uniform(-1.2, 1.2, size=(10_000, 2))
    via_forest = twins.components(pts)
    direct = twins.direct_components(pts)
    inside = via_forest >= 0
    assert np.all(direct[inside].sum(axis=1) == 1)
    assert np.array_equal(np.argmax(direct[inside], axis=1), via_forest[inside])
    assert not np.any(direct[~inside])


def test_partition_passes_and_catches_overlap(nested, twins):
    assert partition_check(nested).passed
    assert partition_check(twins).passed
    corrupt = CompositeScene.unchecked([Ball([0, 0], 3.0), Ball([0, 0], 1.0), Ball([1, 0], 1.0)], BUDGET)
    rep = partition_check(corrupt)
    assert rep.double_counts > 0 and not rep.passed


def test_minimal_cover_examples(nested):
    assert minimal_cover(nested, [0.0, 0.0], 0.1) == 2
    assert minimal_cover(nested, [1.0, 0.0], 0.05) == 0
    assert minimal_cover(nested, [0.5, 0.0], 0.05) == 0


def test_inner_union_examples(nested, twins):
    assert inner_union(nested, 0, [0.5, 0.0], 0.05) == 1
    assert inner_union(nested, 0, [0.75, 0.0], 0.05) is None
    with pytest.raises(UnionNotInS) as info:
        inner_union(twins, 1, [0.0, 0.0], 0.7)
    assert sorted(info.value.details["pieces"]) == ["U2", "U3"]


def test_split_cover_cases(nested, twins):
    assert split_cover(nested, [0.75, 0.0], 0.05) == (0, None, None)
    assert split_cover(nested, [0.0, 0.0], 0.3) == (1, 2, None)
    R = radius_ladder(BUDGET).r0
    assert split_cover(twins, [0.0, 0.0], R) == (1, 2, 3)


def test_three_clusters_are_rejected():
    # three disjoint discs of radius 0.02 whose centres sit 0.024 from the origin
    kids = [Ball([0.024 * np.cos(a), 0.024 * np.sin(a)], 0.02) for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    scene = CompositeScene.build([Ball([0, 0], 1.0)] + kids, BUDGET)
    with pytest.raises(MoreThanTwoClusters):
        split_cover(scene, [0.0, 0.0], 0.01)


def chain_covers_ball(scene, chain, samples=10_000):
    """Each off-band sample of U cap B_R lies in exactly one chain component."""
    pts = sample_ball(chain.center, chain.R, samples)
    lev = scene.levels(pts)
    keep = (lev[:, 0] < 0) & np.all(np.abs(lev) > interface_band(chain.R, chain.center), axis=1)
    direct = scene.direct_components(pts[keep])
    members = chain.ordered()
    in_chain = direct[:, members].sum(axis=1)
    return bool(np.all(in_chain == 1)) and bool(np.all(direct.sum(axis=1) == 1))


def strictly_nested(scene, chain):
    plus_ok = all(scene.strictly_inside(b, a) for a, b in zip(chain.plus, chain.plus[1:]))
    minus = (chain.plus[0],) + chain.minus
    return plus_ok and all(scene.strictly_inside(b, a) for a, b in zip(minus, minus[1:]))


def test_chain_straddling_one_interface(nested):
    chain = chain_decompose(nested, [0.48, 0.0], 0.05)
    assert (chain.plus, chain.minus) == ((0, 1), ())
    assert chain_covers_ball(nested, chain) and strictly_nested(nested, chain)


def test_internally_tangent_ball_stays_in_one_member(nested):
    # B_0.05((0.45, 0)) touches the circle of radius 0.5 at a single point only
    chain = chain_decompose(nested, [0.45, 0.0], 0.05)
    assert (chain.plus, chain.minus) == ((1,), ())


def test_chain_inside_one_component(nested):
    chain = chain_decompose(nested, [0.7, 0.0], 0.01)
    assert chain.l == 0 and chain.m == 0


def test_twin_chain_has_both_sides(twins):
    R = radius_ladder(BUDGET).r0
    chain = chain_decompose(twins, [0.0, 0.0], R)
    assert chain.m >= 1 and chain.l >= 1
    assert chain_covers_ball(twins, chain) and strictly_nested(twins, chain)
    flipped = chain.flipped()
    assert flipped.swapped and flipped.plus == (1, 3) and flipped.minus == (2,)


def test_boundary_centre_forces_empty_minus_side():
    R = radius_ladder(BUDGET).r0
    scene = CompositeScene.build([HalfSpace([1.0, 0.0], 0.0), Ball([0.3 + R / 2, 0.0], 0.3)], BUDGET)
    chain = chain_decompose(scene, [0.0, 0.0], R)
    assert chain.m == 0 and chain.plus == (0, 1)
    assert chain_covers_ball(scene, chain)
