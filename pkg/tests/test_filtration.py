import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdaharq.filtration import (
    DEFAULT_CENTERS,
    DEFAULT_DIRECTIONS,
    default_filtrations,
    grayscale_filtration,
    height_filtration,
    radial_filtration,
    scale_center,
)


def test_height_axis_direction():
    mask = np.zeros((4, 4), bool)
    mask[2, 3] = True
    fm = height_filtration(mask, (1, 0))
    assert fm.values[2, 3] == 2.0
    assert fm.values[0, 0] == 3.0 and fm.ceiling == 3.0


def test_height_diagonal_direction():
    mask = np.zeros((4, 4), bool)
    mask[1, 1] = True
    assert height_filtration(mask, (1, 1)).values[1, 1] == pytest.approx(math.sqrt(2))


def test_height_negative_directions_are_shifted_to_zero():
    mask = np.ones((5, 5), bool)
    for d in DEFAULT_DIRECTIONS:
        fm = height_filtration(mask, d)
        assert fm.values.min() == pytest.approx(0.0, abs=1e-12)


def test_height_zero_direction_rejected():
    with pytest.raises(ValueError):
        height_filtration(np.ones((2, 2), bool), (0, 0))


@given(st.floats(0.01, 100))
def test_height_scale_invariance(scale):
    mask = np.random.default_rng(0).random((6, 6)) > 0.5
    a = height_filtration(mask, (1, -1)).values
    b = height_filtration(mask, (scale, -scale)).values
    assert np.allclose(a, b, atol=1e-9)


def test_radial_examples():
    mask = np.ones((5, 5), bool)
    fm = radial_filtration(mask, (0, 0))
    assert fm.values[0, 0] == 0.0 and fm.values[3, 4] == 5.0
    empty = radial_filtration(np.zeros((32, 32), bool), (15, 15))
    assert empty.values[0, 0] == pytest.approx(math.hypot(16, 16))
    assert empty.ceiling == pytest.approx(22.627, abs=1e-3)


def test_radial_center_out_of_bounds():
    with pytest.raises(ValueError):
        radial_filtration(np.ones((4, 4), bool), (4, 0))


def test_radial_reflection_symmetry():
    mask = np.zeros((7, 7), bool)
    mask[1:6, 2] = mask[1:6, 4] = True
    fm = radial_filtration(mask, (3, 3))
    assert np.array_equal(fm.values, fm.values[:, ::-1])
    assert np.array_equal(fm.values, fm.values[::-1, :])


def test_grayscale_examples():
    fm = grayscale_filtration(np.full((3, 3), 7.0))
    assert np.all(fm.values == 7.0) and fm.ceiling == 7.0
    fm = grayscale_filtration(np.array([[10.0, 20.0]]))
    assert fm.values.tolist() == [[10.0, 20.0]] and fm.ceiling == 20.0


def test_background_enters_last_and_values_bounded():
    rng = np.random.default_rng(1)
    mask = rng.random((32, 32)) > 0.5
    for fm in default_filtrations(mask):
        assert np.all((fm.values >= 0) & (fm.values <= fm.ceiling + 1e-12))
        assert np.all(fm.values[~mask] == fm.ceiling)
        assert fm.values[mask].max() <= fm.ceiling


def test_default_filtration_count_and_names():
    maps = default_filtrations(np.ones((32, 32), bool))
    assert len(maps) == 17
    assert maps[0].name == "height(1,0)" and maps[8].name == "radial(23,7)"


def test_scale_center():
    assert scale_center((23, 7), (32, 32)) == (23, 7)
    assert scale_center((23, 7), (64, 64)) == (46, 14)
    assert scale_center((23, 7), (8, 8)) == (6, 2)
    for c in DEFAULT_CENTERS:
        u, v = scale_center(c, (3, 5))
        assert 0 <= u < 3 and 0 <= v < 5
