import numpy as np
import pytest

from microshear.errors import DimensionError
from microshear.wavefront import WavefrontSet, circular_bin_distance, quantize_angle


def test_quantize_nearest():
    assert quantize_angle(0.0, 180) == 0
    assert quantize_angle(1.2, 180) == 1
    assert quantize_angle(179.6, 180) == 0  # wraps


def test_quantize_tie_goes_to_smaller_bin():
    # 0.5 deg is exactly between bins 0 and 1 at 1-degree width
    assert quantize_angle(0.5, 180) == 0
    assert quantize_angle(1.5, 180) == 1


def test_quantize_modulo_180():
    assert quantize_angle(185.0, 180) == quantize_angle(5.0, 180)


def test_circular_bin_distance():
    assert circular_bin_distance(0, 179, 180) == 1
    assert circular_bin_distance(10, 90, 180) == 80


def test_dedup_and_sort():
    wf = WavefrontSet([[5, 5, 1], [2, 3, 0], [5, 5, 1]], 10, 4)
    assert len(wf) == 2
    assert wf.points[0].tolist() == [2, 3, 0]


def test_range_checks():
    with pytest.raises(DimensionError):
        WavefrontSet([[10, 0, 0]], 10, 4)
    with pytest.raises(DimensionError):
        WavefrontSet([[0, 0, 4]], 10, 4)


def test_restrict_bins():
    wf = WavefrontSet([[1, 1, 0], [2, 2, 1], [3, 3, 2]], 10, 4)
    sub = wf.restrict_bins({0, 2})
    assert sub.as_set() == {(1, 1, 0), (3, 3, 2)}
