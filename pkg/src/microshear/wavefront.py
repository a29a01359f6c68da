"""Wavefront sets on the pixel grid.

A wavefront set is a set of (row, col, bin) triples: a pixel location plus a
quantized normal direction.  Bin b stands for the angle b * (180 / N) degrees
with the directions theta and theta + 180 identified, so everything is done
modulo 180 degrees.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

__all__ = ["WavefrontSet", "quantize_angle", "bin_angle_deg", "circular_bin_distance"]


def quantize_angle(theta_deg, n_bins: int):
    """Map angles in degrees (mod 180) to the nearest bin index.

    Ties exactly halfway between two bins go to the smaller bin.
    """
    theta = np.asarray(theta_deg, dtype=float) % 180.0
    width = 180.0 / n_bins
    # ceil(x - 1/2) rounds half-down
    b = np.ceil(theta / width - 0.5).astype(int)
    return np.mod(b, n_bins)


def bin_angle_deg(b, n_bins: int):
    """Center angle in degrees of bin ``b``."""
    return np.asarray(b, dtype=float) * (180.0 / n_bins)


def circular_bin_distance(b1, b2, n_bins: int):
    """Distance between bins modulo the 180-degree identification."""
    d = np.abs(np.asarray(b1, dtype=int) - np.asarray(b2, dtype=int))
    return np.minimum(d, n_bins - d)


class WavefrontSet:
    """Deduplicated set of (row, col, bin) points on an M x M grid.

    Points are kept as a sorted (n, 3) int64 array, which makes serialized
    output reproducible byte for byte.
    """

    def __init__(self, points, grid_size: int, orientation_bins: int):
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 3)
        if pts.size:
            if pts[:, :2].min() < 0 or pts[:, :2].max() >= grid_size:
                raise DimensionError("wavefront point outside the pixel grid")
            if pts[:, 2].min() < 0 or pts[:, 2].max() >= orientation_bins:
                raise DimensionError("orientation bin out of range")
            pts = np.unique(pts, axis=0)
        else:
            pts = pts.reshape(0, 3)
        self.points = pts
        self.grid_size = int(grid_size)
        self.orientation_bins = int(orientation_bins)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WavefrontSet)
            and self.grid_size == other.grid_size
            and self.orientation_bins == other.orientation_bins
            and self.points.shape == other.points.shape
            and bool(np.all(self.points == other.points))
        )

    def __repr__(self) -> str:
        return (
            f"WavefrontSet({len(self.points)} points, grid={self.grid_size}, "
            f"bins={self.orientation_bins})"
        )

    def as_set(self):
        return {tuple(p) for p in self.points.tolist()}

    def restrict_bins(self, bins) -> "WavefrontSet":
        """Keep only points whose bin is in ``bins``."""
        keep = np.isin(self.points[:, 2], np.asarray(list(bins), dtype=np.int64))
        return WavefrontSet(self.points[keep], self.grid_size, self.orientation_bins)

    @staticmethod
    def empty(grid_size: int, orientation_bins: int) -> "WavefrontSet":
        return WavefrontSet(np.zeros((0, 3), np.int64), grid_size, orientation_bins)
