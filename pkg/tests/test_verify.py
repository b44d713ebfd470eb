import numpy as np
import pytest

from layerstack.domains import Ball, HalfSpace
from layerstack.errors import NotOnBoundary, SceneError
from layerstack.gridfunc import GridFunction
from layerstack.verify import (
    HolderBudget,
    holder_seminorm,
    nearest_boundary_pair,
    normal_opposition_check,
    r_star,
    r_two,
    radius_ladder,
    reifenberg_check,
    sup_grad,
)


def sagitta_delta(r, rho=1.0):
    return (1 - np.sqrt(1 - r**2 / rho**2)) * rho / r


def test_r_star_closed_form():
    # 2 (16 R)^(1/2) = 1/4  =>  R = 1/1024
    assert r_star(2, 0.5, 1.0) == pytest.approx(1 / 1024, rel=1e-15)


def test_r_two_closed_form():
    # 36 * 2 * 4R = 1/8  =>  R = 1/2304, below the cap R_1(tau = 2) = 1/128
    assert r_two(2, 1.0, 1.0, 1 / 8) == pytest.approx(1 / 2304, rel=1e-15)


def test_ladder_is_positive_and_bounded_by_every_rung():
    lad = radius_ladder(HolderBudget(2))
    assert 0 < lad.r0 == min(lad.r_star, lad.r1, lad.r2, lad.r3, lad.r4)
    assert set(lad.to_dict()) == {"R_star", "R_1", "R_2", "R_3", "R_4", "R_0", "notes"}


@pytest.mark.parametrize("bad", [dict(gamma=0.0), dict(theta=-1.0), dict(tau=2.0), dict(delta=0.2),
                                 dict(delta_1=0.1)])
def test_budget_validation(bad):
    with pytest.raises(SceneError):
        HolderBudget(2, **bad)


def test_norms_of_a_parabola():
    axis = np.linspace(-0.1, 0.1, 41)
    kappa = 3.0
    g = GridFunction(axis, 0.5 * kappa * axis**2, (kappa * axis)[:, None])
    assert sup_grad(g) == pytest.approx(0.3)
    assert holder_seminorm(g, 1.0) == pytest.approx(kappa)


@pytest.mark.parametrize("r", [0.1, 0.05])
def test_circle_flatness_matches_sagitta(r):
    rep = reifenberg_check(Ball([0.0, 0.0], 1.0), 0.06, r, scales=1)
    assert rep.measured == pytest.approx(sagitta_delta(r), rel=0.05)


def test_flatness_threshold_and_half_plane():
    assert reifenberg_check(Ball([0.0, 0.0], 1.0), 0.06, 0.1).passed
    assert not reifenberg_check(Ball([0.0, 0.0], 1.0), 0.04, 0.1).passed
    assert reifenberg_check(HalfSpace([0.0, 1.0], 0.0), 0.0, 0.1, box=([-1, -1], [1, 1])).measured == 0.0


def kissing(gap):
    return Ball([-1 - gap / 2, 0.0], 1.0), Ball([1 + gap / 2, 0.0], 1.0)


def test_nearest_points_have_opposite_normals():
    a, b = kissing(0.01)
    P, Q = nearest_boundary_pair(a, b, box=([-3, -2], [3, 2]))
    assert np.allclose(P, [-0.005, 0.0], atol=1e-12) and np.allclose(Q, [0.005, 0.0], atol=1e-12)
    rep = normal_opposition_check(a, b, P, Q, 0.1, 1 / 8)
    assert rep.check.value <= 1e-10


@pytest.mark.parametrize("alpha", [1e-3, 1e-2, 5e-2])
def test_perturbed_point_follows_arc_formula(alpha):
    a, b = kissing(0.01)
    center = np.array([-1.005, 0.0])
    P = center + np.array([np.cos(alpha), np.sin(alpha)])
    Q = np.array([0.005, 0.0])
    rep = normal_opposition_check(a, b, P, Q, 0.2, 1 / 8)
    assert rep.check.value == pytest.approx(2 * np.sin(alpha / 2), abs=1e-6)


def test_opposition_requires_boundary_points():
    a, b = kissing(0.01)
    with pytest.raises(NotOnBoundary):
        normal_opposition_check(a, b, [0.0, 0.0], [0.005, 0.0], 0.1, 1 / 8)
    with pytest.raises(ValueError):
        normal_opposition_check(a, b, [-0.005, 0.0], [0.005, 0.0], 0.005, 1 / 8)
