import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerstack.errors import NotUnitVector
from layerstack.frames import Frame, frame_from_first_axis, from_frame, random_frame, relative_frame, to_frame


def unit_vectors(n):
    comps = st.lists(st.floats(-1, 1, allow_nan=False), min_size=n, max_size=n)
    return comps.filter(lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: np.asarray(v) / np.linalg.norm(v))


def test_first_axis_e1_gives_identity():
    assert np.array_equal(frame_from_first_axis([1.0, 0.0, 0.0]).matrix, np.eye(3))


def test_quarter_turn_in_the_plane():
    f = frame_from_first_axis([0.0, 1.0])
    assert np.allclose(f.matrix, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)
    assert f.det() == pytest.approx(1.0)


def test_reversed_axis_in_three_dimensions():
    f = frame_from_first_axis([-1.0, 0.0, 0.0])
    assert np.allclose(f.matrix, np.diag([-1.0, 1.0, -1.0]))


def test_non_unit_vector_is_rejected():
    with pytest.raises(NotUnitVector):
        frame_from_first_axis([1.0, 1e-5])


def test_frame_is_read_only_and_hashable():
    f = frame_from_first_axis([0.6, 0.8])
    with pytest.raises(ValueError):
        f.matrix[0, 0] = 2.0
    assert f == Frame(f.matrix.copy())
    assert hash(f) == hash(Frame(f.matrix.copy()))


def test_to_frame_sends_first_axis_to_e1():
    v = np.array([0.36, 0.48, 0.8])
    f = frame_from_first_axis(v)
    assert np.allclose(to_frame(v, f), [1.0, 0.0, 0.0], atol=1e-15)


def test_relative_frame_composes():
    rng = np.random.default_rng(7)
    w, v = random_frame(rng, 3), random_frame(rng, 3)
    rel = relative_frame(w, v)
    assert np.allclose(rel.matrix, w.matrix.T @ v.matrix)
    assert rel.is_valid()


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 3).flatmap(unit_vectors))
def test_constructed_frames_are_rotations(v):
    f = frame_from_first_axis(v)
    assert f.orthonormality_error() <= 1e-12
    assert f.det() >= 1 - 1e-10
    assert np.allclose(f.first_axis, v, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4).flatmap(unit_vectors), st.integers(0, 2**32 - 1))
def test_round_trip(v, seed):
    f = frame_from_first_axis(v)
    p = np.random.default_rng(seed).uniform(-2, 2, size=(5, f.n))
    assert np.max(np.abs(from_frame(to_frame(p, f), f) - p)) <= 1e-12
