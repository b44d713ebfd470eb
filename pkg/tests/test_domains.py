import numpy as np
import pytest

from layerstack.domains import (
    Ball,
    Blob,
    Complement,
    Ellipsoid,
    HalfSpace,
    Membership,
    certify_theta,
    classify_point,
    closest_boundary_point,
    complement,
    local_chart,
    project_to_boundary,
    sample_boundary,
    shape_from_dict,
)
from layerstack.errors import NoBoundaryInBall, SceneError


def test_ball_level_is_signed_distance():
    b = Ball([0.0, 0.0], 1.0)
    assert b.level(np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert b.level(np.array([0.0, 0.5])) == pytest.approx(-0.5)
    assert b.contains(np.array([[0.1, 0.1], [1.1, 0.0]])).tolist() == [True, False]


def test_ellipsoid_and_half_space_signs():
    e = Ellipsoid([0.0, 0.0], [2.0, 1.0])
    assert e.level(np.array([0.0, 0.5])) == pytest.approx(-0.5)
    assert e.level(np.array([2.0, 0.0])) == pytest.approx(0.0, abs=1e-15)
    h = HalfSpace([1.0, 0.0], 0.5)
    assert h.level(np.array([1.0, 0.0])) == pytest.approx(-0.5)
    assert np.allclose(h.inward_normal(np.array([0.5, 3.0])), [1.0, 0.0])


def test_complement_flips_sides_and_unwraps():
    b = Ball([0.0, 0.0], 1.0)
    c = complement(b)
    assert isinstance(c, Complement)
    assert c.level(np.array([2.0, 0.0])) == pytest.approx(-1.0)
    assert complement(c) is b


def test_classify_point_band():
    b = Ball([0.0, 0.0], 1.0)
    assert classify_point(b, [0.0, 0.0]) is Membership.INTERIOR
    assert classify_point(b, [1.0 + 1e-12, 0.0]) is Membership.BOUNDARY_BAND
    assert classify_point(b, [1.5, 0.0]) is Membership.EXTERIOR


def test_blob_gradient_matches_finite_differences():
    blob = Blob([0.1, -0.2, 0.05], 0.4, 0.05, 4)
    rng = np.random.default_rng(3)
    x = rng.uniform(-0.6, 0.6, size=(20, 3))
    h = 1e-6
    fd = np.stack([(blob.level(x + h * e) - blob.level(x - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
    assert np.max(np.abs(fd - blob.grad(x))) < 1e-8


def test_shape_dict_round_trip_and_errors():
    for shape in (Ball([0.0, 1.0], 0.5), Ellipsoid([0.0, 0.0], [1.0, 2.0]), HalfSpace([0.0, 1.0], 0.2),
                  Blob([0.0, 0.0], 0.4, 0.05, 3), Complement(Ball([0.0, 0.0], 1.0))):
        again = shape_from_dict(shape.to_dict())
        assert again.key() == shape.key()
    with pytest.raises(SceneError):
        shape_from_dict({"kind": "torus"})
    with pytest.raises(SceneError):
        shape_from_dict({"kind": "ball", "centre": [0, 0], "radius": 1})


def test_closest_boundary_point_inside_ball():
    d = Ball([2.0, 0.0], 1.5)
    p = closest_boundary_point(d, 1.0, [0.0, 0.0])
    assert np.allclose(p, [0.5, 0.0], atol=1e-12)


def test_no_boundary_in_ball():
    with pytest.raises(NoBoundaryInBall):
        closest_boundary_point(Ball([5.0, 0.0], 1.0), 1.0, [0.0, 0.0])


def test_projection_lands_on_boundary():
    e = Ellipsoid([0.0, 0.0], [2.0, 1.0])
    p = project_to_boundary(e, np.array([[3.0, 1.0], [0.1, 0.2]]))
    assert np.max(np.abs(e.level(p))) < 1e-13
    pts = sample_boundary(e, 64)
    assert len(pts) > 0 and np.max(np.abs(e.level(pts))) < 1e-12


def test_sphere_cap_chart_matches_closed_form():
    # at (1, 0) the inward normal is -e1; in that frame the circle is y1 = 1 - sqrt(1 - y2^2)
    chart = local_chart(Ball([0.0, 0.0], 1.0), [1.0, 0.0], 0.1, extent=1.0)
    y = chart.psi.axis
    assert np.allclose(chart.frame.first_axis, [-1.0, 0.0])
    exact = 1.0 - np.sqrt(1.0 - y**2)
    assert np.max(np.abs(chart.psi.values - exact)) < 1e-10
    assert np.max(np.abs(chart.psi.grads[:, 0] - y / np.sqrt(1.0 - y**2))) < 1e-10


def test_certified_theta_tracks_curvature():
    # small charts of a circle of radius rho have norm close to the curvature 1/rho
    theta = certify_theta(Ball([0.0, 0.0], 0.25), 1e-6, samples=8)
    assert 4.0 <= theta < 4.0 + 1e-4
