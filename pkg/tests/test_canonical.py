import numpy as np
import pytest

from microshear.canonical import (
    SinoWavefrontSet,
    image_wf_to_sino_wf,
    sino_image_points_to_wf,
    sino_wf_to_image_wf,
    sinogram_as_image,
    visible_subset,
)
from microshear.errors import ConfigurationError
from microshear.phantom import analytic_wavefront, rasterize
from microshear.radon import SinoGeometry, Sinogram, radon, subsample_angles
from microshear.wavefront import WavefrontSet, quantize_angle


@pytest.fixture(scope="module")
def geom():
    return SinoGeometry(180, 128, 128)


def test_center_pixel_maps_to_pure_dp(geom):
    # x = (0, 0): p = 0, covector along dp, dir bin = bin of 90 degrees
    M = 128
    row = col = 63  # pixel center (-1/128, 1/128), essentially the origin
    wf = WavefrontSet([[row, col, 37]], M, 180)
    swf = image_wf_to_sino_wf(wf, geom)
    (i, l, d) = swf.points[0]
    assert i == 37
    p = geom.offsets()[l]
    assert abs(p) <= geom.offset_step  # p ~ 0 up to the half-pixel center offset
    assert abs(int(d) - 90) <= 1


def test_unit_x_point_bin_zero(geom):
    # x = (1, 0), theta_0 = 0: omega = (1,0) -> p = 1, covector pure dp
    M = 128
    col = 127  # x = 0.9921875
    row = 63
    wf = WavefrontSet([[row, col, 0]], M, 180)
    swf = image_wf_to_sino_wf(wf, geom)
    (i, l, d) = swf.points[0]
    assert i == 0
    assert geom.offsets()[l] == pytest.approx(0.9921875, abs=geom.offset_step)
    assert abs(int(d) - 90) <= 1


def test_round_trip_1000_points():
    M, N = 128, 180
    geom = SinoGeometry(180, 256, M)  # finer offsets tighten the p quantization
    rng = np.random.default_rng(7)
    pts = np.column_stack([
        rng.integers(0, M, 1200), rng.integers(0, M, 1200),
        rng.integers(0, N, 1200),
    ])
    pts = np.unique(pts, axis=0)[:1000]
    worst_px = worst_bin = 0.0
    for (r, c, b) in pts:
        wf = WavefrontSet([[r, c, b]], M, N)
        back = sino_wf_to_image_wf(image_wf_to_sino_wf(wf, geom, dir_bins=720),
                                   geom, image_bins=N)
        assert len(back) == 1
        r2, c2, b2 = back.points[0]
        worst_px = max(worst_px, float(np.hypot(r2 - r, c2 - c)))
        d = abs(int(b2) - int(b))
        worst_bin = max(worst_bin, min(d, N - d))
    assert worst_px <= 1.0
    assert worst_bin <= 1


def test_inverse_drops_outside_grid(geom):
    # a covector pointing far along dtheta reconstructs far outside the square
    swf = SinoWavefrontSet([[0, 64, quantize_angle(2.0, 180)]], geom, 180)
    wf = sino_wf_to_image_wf(swf, geom)
    assert len(wf) == 0


def test_inverse_skips_near_pure_dtheta(geom):
    swf = SinoWavefrontSet([[10, 64, 0]], geom, 180)  # gamma = 0: pure dtheta
    assert len(sino_wf_to_image_wf(swf, geom)) == 0


def test_visible_subset_identity(geom):
    wf = WavefrontSet([[10, 20, 5], [30, 40, 90]], 128, 180)
    out = visible_subset(wf, np.arange(180), geom)
    assert out == wf


def test_visible_subset_every_six(geom):
    # uniform orientations: retained fraction ~ 30/180
    rng = np.random.default_rng(3)
    pts = np.column_stack([rng.integers(0, 128, 1800), rng.integers(0, 128, 1800),
                           np.arange(1800) % 180])
    wf = WavefrontSet(pts, 128, 180)
    out = visible_subset(wf, np.arange(0, 180, 6), geom)
    frac = len(out) / len(wf)
    assert abs(frac - 30.0 / 180.0) <= 0.02


def test_visible_subset_empty_measured(geom):
    wf = WavefrontSet([[1, 1, 0]], 128, 180)
    with pytest.raises(ConfigurationError):
        visible_subset(wf, np.array([], dtype=int), geom)


def test_masking_commutes(geom):
    rng = np.random.default_rng(5)
    pts = np.column_stack([rng.integers(0, 128, 400), rng.integers(0, 128, 400),
                           rng.integers(0, 180, 400)])
    wf = WavefrontSet(pts, 128, 180)
    measured = np.arange(0, 180, 6)
    a = image_wf_to_sino_wf(visible_subset(wf, measured, geom), geom)
    b_all = image_wf_to_sino_wf(wf, geom)
    keep = np.isin(b_all.points[:, 0], measured)
    b = SinoWavefrontSet(b_all.points[keep], geom, b_all.orientation_bins)
    # with aligned angle grid and bins, the visible normals are exactly the
    # measured rows
    assert {tuple(p) for p in a.points.tolist()} == {tuple(p) for p in b.points.tolist()}


def test_forward_maps_to_disk_support_edge(disk128, geom):
    spec, img, x, y = disk128
    truth = analytic_wavefront(spec)
    swf = image_wf_to_sino_wf(truth, geom)
    sino = radon(img, geom)
    # support boundary of the sinogram at |p| = r: nearest offset indices
    p = geom.offsets()
    edge_cols = [int(np.argmin(np.abs(p - v))) for v in (-0.5, 0.5)]
    d = np.minimum(*[np.abs(swf.points[:, 1] - e) for e in edge_cols])
    assert np.mean(d <= 2) >= 0.99


def test_sinogram_as_image_roundtrip_geometry(geom, disk128):
    _, img, _, _ = disk128
    sino = radon(img, geom)
    square, chart = sinogram_as_image(sino)
    assert square.shape == (256, 256)
    sub = subsample_angles(sino, 6)
    square6, chart6 = sinogram_as_image(sub)
    assert square6.shape == (128, 128)
    assert len(chart6.measured) == 30


def test_sino_image_direction_conversion(geom):
    # an image-normal along +x (bin 0) is a pure-p covector
    _, chart = sinogram_as_image(Sinogram(geom, np.zeros((180, 128))))
    wf = WavefrontSet([[100, 100, 0]], chart.size, 180)
    swf = sino_image_points_to_wf(wf, chart, dir_bins=180)
    assert abs(int(swf.points[0, 2]) - 90) <= 1
    # an image-normal along +y (bin 90) is a pure-theta covector
    wf = WavefrontSet([[100, 100, 90]], chart.size, 180)
    swf = sino_image_points_to_wf(wf, chart, dir_bins=180)
    assert min(int(swf.points[0, 2]), 180 - int(swf.points[0, 2])) <= 1
