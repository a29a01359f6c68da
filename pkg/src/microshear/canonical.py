"""Digital microlocal canonical relation of the Radon transform.

An image wavefront point (x, theta) maps to the sinogram point
(theta, p = x . omega(theta)) carrying the covector direction
(-x . omega(theta)^perp) dtheta + dp; the reverse map reconstructs
x = p omega + q omega^perp with q = -a / b from a covector a dtheta + b dp.
Chart units are fixed once: theta in radians over [0, pi), p in normalized
offset units; without that choice the direction quantization would not close
under the round trip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from .radon import OFFSET_SPAN, SinoGeometry, Sinogram
from .wavefront import WavefrontSet, quantize_angle

__all__ = [
    "SinoWavefrontSet",
    "image_wf_to_sino_wf",
    "sino_wf_to_image_wf",
    "visible_subset",
    "sinogram_as_image",
    "sino_image_points_to_wf",
]

# covectors closer than this to pure d-theta correspond to s -> 0 in the
# theorem's parametrization and are skipped on the way back
_PURE_DTHETA_GUARD_DEG = 0.5


def _round_half_down(v):
    return np.ceil(np.asarray(v) - 0.5).astype(np.int64)


@dataclass
class SinoWavefrontSet:
    """Set of (angle_idx, offset_idx, dir_bin) points over a sinogram grid."""

    points: np.ndarray
    geometry: SinoGeometry
    orientation_bins: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 3)
        if pts.size:
            if pts[:, 0].min() < 0 or pts[:, 0].max() >= self.geometry.num_angles:
                raise DimensionError("angle index out of range")
            if pts[:, 1].min() < 0 or pts[:, 1].max() >= self.geometry.num_offsets:
                raise DimensionError("offset index out of range")
            if pts[:, 2].min() < 0 or pts[:, 2].max() >= self.orientation_bins:
                raise DimensionError("direction bin out of range")
            pts = np.unique(pts, axis=0)
        else:
            pts = pts.reshape(0, 3)
        self.points = pts

    def __len__(self):
        return len(self.points)


def image_wf_to_sino_wf(wf: WavefrontSet, geom: SinoGeometry,
                        dir_bins: int = 180) -> SinoWavefrontSet:
    """Forward canonical relation, quantized to the sinogram grid."""
    if wf.grid_size != geom.grid_size:
        raise DimensionError("wavefront grid does not match geometry grid")
    if len(wf) == 0:
        return SinoWavefrontSet(np.zeros((0, 3), np.int64), geom, dir_bins)
    M = geom.grid_size
    rows = wf.points[:, 0].astype(float)
    cols = wf.points[:, 1].astype(float)
    x = -1.0 + (2.0 * cols + 1.0) / M
    y = 1.0 - (2.0 * rows + 1.0) / M
    theta0 = wf.points[:, 2] * (np.pi / wf.orientation_bins)
    ct, st = np.cos(theta0), np.sin(theta0)
    p = x * ct + y * st
    a = -(-x * st + y * ct)  # -x . omega_perp
    b = np.ones_like(a)

    dth = np.pi / geom.num_angles
    i = _round_half_down(theta0 / dth)
    wrap = i >= geom.num_angles  # theta ~ pi is the same line as theta=0, p -> -p
    i = np.where(wrap, 0, i)
    p = np.where(wrap, -p, p)
    b = np.where(wrap, -b, b)

    u = (p + OFFSET_SPAN) / geom.offset_step
    l = np.clip(_round_half_down(u), 0, geom.num_offsets - 1)

    gamma = np.degrees(np.arctan2(b, a))
    dbin = quantize_angle(gamma, dir_bins)
    return SinoWavefrontSet(np.column_stack([i, l, dbin]), geom, dir_bins)


def sino_wf_to_image_wf(swf: SinoWavefrontSet, geom: SinoGeometry,
                        image_bins: int = 180) -> WavefrontSet:
    """Reverse canonical relation; drops near-pure-dtheta covectors and
    points landing outside the grid."""
    if swf.geometry.to_dict() != geom.to_dict():
        raise DimensionError("sinogram wavefront geometry mismatch")
    M = geom.grid_size
    if len(swf) == 0:
        return WavefrontSet.empty(M, image_bins)
    theta0 = swf.points[:, 0] * (np.pi / geom.num_angles)
    p0 = geom.offsets()[swf.points[:, 1]]
    gamma = swf.points[:, 2] * (np.pi / swf.orientation_bins)
    a, b = np.cos(gamma), np.sin(gamma)
    guard = np.tan(np.radians(_PURE_DTHETA_GUARD_DEG))
    ok = np.abs(b) >= guard * np.abs(a)
    if not ok.any():
        return WavefrontSet.empty(M, image_bins)
    theta0, p0, a, b = theta0[ok], p0[ok], a[ok], b[ok]
    q = -a / b
    ct, st = np.cos(theta0), np.sin(theta0)
    x = p0 * ct - q * st
    y = p0 * st + q * ct
    col = _round_half_down((x + 1.0) * M / 2.0 - 0.5)
    row = _round_half_down((1.0 - y) * M / 2.0 - 0.5)
    inside = (row >= 0) & (row < M) & (col >= 0) & (col < M)
    if not inside.any():
        return WavefrontSet.empty(M, image_bins)
    bins = quantize_angle(np.degrees(theta0[inside]), image_bins)
    return WavefrontSet(np.column_stack([row[inside], col[inside], bins]),
                        M, image_bins)


def visible_subset(wf: WavefrontSet, measured_angles: np.ndarray,
                   geom: SinoGeometry) -> WavefrontSet:
    """Keep points whose normal lies within half an angle step of a
    measured angle."""
    measured = np.asarray(measured_angles, dtype=int)
    if measured.size == 0:
        raise ConfigurationError("measured angle set must be nonempty")
    if len(wf) == 0:
        return wf
    bin_deg = wf.points[:, 2] * (180.0 / wf.orientation_bins)
    meas_deg = measured * (180.0 / geom.num_angles)
    d = np.abs(bin_deg[:, None] - meas_deg[None, :])
    d = np.minimum(d, 180.0 - d)
    half_step = 0.5 * 180.0 / geom.num_angles
    keep = (d.min(axis=1) <= half_step)
    return WavefrontSet(wf.points[keep], wf.grid_size, wf.orientation_bins)


# -- sinogram-as-image helpers ----------------------------------------------


@dataclass(frozen=True)
class _SquareChart:
    """Bookkeeping between a square resampling of the measured sinogram rows
    and the (theta, p) chart."""

    geometry: SinoGeometry
    measured: tuple
    size: int

    @property
    def dtheta_per_row(self) -> float:
        gaps = np.diff(np.asarray(self.measured))
        step = gaps[0] if len(gaps) else 1
        return step * (np.pi / self.geometry.num_angles) * \
            (len(self.measured) - 1) / (self.size - 1)

    @property
    def dp_per_col(self) -> float:
        return self.geometry.offset_step * (self.geometry.num_offsets - 1) / (self.size - 1)


def sinogram_as_image(sino: Sinogram, size: int = None):
    """Bilinearly resample the measured rows to a square power-of-two image.

    Returns (image, chart); the chart converts detections back to sinogram
    indices and chart covector bins.  Assumes the measured angles are
    uniformly spaced (true for subsample_angles masks).
    """
    measured = sino.measured_indices
    rows = sino.values[measured]
    n_rows, n_cols = rows.shape
    if n_rows < 2:
        raise ConfigurationError("need at least two measured angles")
    if size is None:
        size = 1 << int(np.ceil(np.log2(max(n_rows, n_cols))))
    S = size
    r_src = np.linspace(0.0, n_rows - 1.0, S)
    c_src = np.linspace(0.0, n_cols - 1.0, S)
    r0 = np.floor(r_src).astype(int)
    c0 = np.floor(c_src).astype(int)
    r1 = np.minimum(r0 + 1, n_rows - 1)
    c1 = np.minimum(c0 + 1, n_cols - 1)
    fr = (r_src - r0)[:, None]
    fc = (c_src - c0)[None, :]
    img = (rows[np.ix_(r0, c0)] * (1 - fr) * (1 - fc)
           + rows[np.ix_(r1, c0)] * fr * (1 - fc)
           + rows[np.ix_(r0, c1)] * (1 - fr) * fc
           + rows[np.ix_(r1, c1)] * fr * fc)
    return img, _SquareChart(sino.geometry, tuple(int(m) for m in measured), S)


def sino_image_points_to_wf(wf: WavefrontSet, chart: _SquareChart,
                            dir_bins: int = 180) -> SinoWavefrontSet:
    """Convert detections on the square sinogram image to sinogram indices
    plus chart covector direction bins."""
    geom = chart.geometry
    measured = np.asarray(chart.measured)
    if len(wf) == 0:
        return SinoWavefrontSet(np.zeros((0, 3), np.int64), geom, dir_bins)
    S = chart.size
    r_scale = (len(measured) - 1.0) / (S - 1.0)
    c_scale = (geom.num_offsets - 1.0) / (S - 1.0)
    mrow = _round_half_down(wf.points[:, 0] * r_scale)
    angle_idx = measured[np.clip(mrow, 0, len(measured) - 1)]
    offset_idx = np.clip(_round_half_down(wf.points[:, 1] * c_scale), 0,
                         geom.num_offsets - 1)
    # image normal phi -> chart covector (a, b):
    # d/d(row) = -d/d(y_img), theta grows with rows, p with cols
    phi = np.radians(wf.points[:, 2] * (180.0 / wf.orientation_bins))
    a = -np.sin(phi) / chart.dtheta_per_row
    b = np.cos(phi) / chart.dp_per_col
    gamma = np.degrees(np.arctan2(b, a))
    dbin = quantize_angle(gamma, dir_bins)
    return SinoWavefrontSet(np.column_stack([angle_idx, offset_idx, dbin]),
                            geom, dir_bins)
