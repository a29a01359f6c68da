"""Random head-like ellipse phantoms with analytically known wavefront sets.

The convention tying pixels to the plane is fixed here once and shared by
every other module: pixel (r, c) on an M x M grid has center

    x = -1 + (2 c + 1) / M,      y = 1 - (2 r + 1) / M,

so row 0 is the top of the image and y increases upward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .wavefront import WavefrontSet, quantize_angle

__all__ = [
    "EllipseSpec",
    "PhantomSpec",
    "GenerationConfig",
    "pixel_grid",
    "rasterize",
    "analytic_wavefront",
    "generate_phantom",
]


def pixel_grid(grid_size: int):
    """Physical (x, y) coordinates of all pixel centers, shape (M, M) each."""
    idx = np.arange(grid_size)
    xs = -1.0 + (2.0 * idx + 1.0) / grid_size  # along columns
    ys = 1.0 - (2.0 * idx + 1.0) / grid_size  # along rows, decreasing
    x = np.tile(xs, (grid_size, 1))
    y = np.tile(ys[:, None], (1, grid_size))
    return x, y


@dataclass(frozen=True)
class EllipseSpec:
    """One ellipse: center, semi-axes, rotation (radians), intensity, edge width."""

    center: tuple
    semi_axes: tuple
    rotation: float
    intensity: float
    edge_sigma: float = 0.0

    def validate(self):
        a, b = self.semi_axes
        if not (a > 0 and b > 0):
            raise ConfigurationError("ellipse semi-axes must be positive")
        if not np.isfinite(self.intensity):
            raise ConfigurationError("ellipse intensity must be finite")
        if self.edge_sigma < 0:
            raise ConfigurationError("edge_sigma must be nonnegative")
        # bounding half-widths of the rotated ellipse
        ca, sa = np.cos(self.rotation), np.sin(self.rotation)
        wx = np.hypot(a * ca, b * sa)
        wy = np.hypot(a * sa, b * ca)
        cx, cy = self.center
        if abs(cx) + wx > 1.0 or abs(cy) + wy > 1.0:
            raise ConfigurationError("ellipse extends outside [-1, 1]^2")

    def implicit(self, x, y):
        """q(x, y) with q = 1 on the boundary, < 1 inside."""
        cx, cy = self.center
        ca, sa = np.cos(self.rotation), np.sin(self.rotation)
        a, b = self.semi_axes
        u = ca * (x - cx) + sa * (y - cy)
        v = -sa * (x - cx) + ca * (y - cy)
        return (u / a) ** 2 + (v / b) ** 2

    def implicit_gradient(self, x, y):
        """Gradient of the implicit function in world coordinates."""
        cx, cy = self.center
        ca, sa = np.cos(self.rotation), np.sin(self.rotation)
        a, b = self.semi_axes
        u = ca * (x - cx) + sa * (y - cy)
        v = -sa * (x - cx) + ca * (y - cy)
        gu = 2.0 * u / a**2
        gv = 2.0 * v / b**2
        return ca * gu - sa * gv, sa * gu + ca * gv

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "semi_axes": list(self.semi_axes),
            "rotation": self.rotation,
            "intensity": self.intensity,
            "edge_sigma": self.edge_sigma,
        }

    @staticmethod
    def from_dict(d: dict) -> "EllipseSpec":
        return EllipseSpec(
            center=tuple(d["center"]),
            semi_axes=tuple(d["semi_axes"]),
            rotation=float(d["rotation"]),
            intensity=float(d["intensity"]),
            edge_sigma=float(d.get("edge_sigma", 0.0)),
        )


@dataclass(frozen=True)
class PhantomSpec:
    """An ordered list of ellipses plus the raster and bin resolution."""

    ellipses: tuple
    grid_size: int
    orientation_bins: int = 180

    def validate(self):
        if self.grid_size < 32:
            raise ConfigurationError("grid_size must be at least 32")
        if self.orientation_bins < 2:
            raise ConfigurationError("orientation_bins must be at least 2")
        for e in self.ellipses:
            e.validate()

    def to_dict(self) -> dict:
        return {
            "ellipses": [e.to_dict() for e in self.ellipses],
            "grid_size": self.grid_size,
            "orientation_bins": self.orientation_bins,
        }

    @staticmethod
    def from_dict(d: dict) -> "PhantomSpec":
        return PhantomSpec(
            ellipses=tuple(EllipseSpec.from_dict(e) for e in d["ellipses"]),
            grid_size=int(d["grid_size"]),
            orientation_bins=int(d["orientation_bins"]),
        )


def rasterize(spec: PhantomSpec) -> np.ndarray:
    """Sum of ellipse indicators, optionally with a linear boundary ramp.

    With edge_sigma > 0 the indicator is replaced by a ramp of that width (in
    pixels) over the signed distance to the boundary, estimated to first
    order as (q - 1) / |grad q|.
    """
    spec.validate()
    M = spec.grid_size
    x, y = pixel_grid(M)
    img = np.zeros((M, M))
    for e in spec.ellipses:
        q = e.implicit(x, y)
        if e.edge_sigma == 0.0:
            img += e.intensity * (q <= 1.0)
        else:
            gx, gy = e.implicit_gradient(x, y)
            gn = np.hypot(gx, gy)
            gn[gn == 0] = 1.0
            d_px = (q - 1.0) / gn * (M / 2.0)  # signed, positive outside
            img += e.intensity * np.clip(0.5 - d_px / e.edge_sigma, 0.0, 1.0)
    return img


def analytic_wavefront(spec: PhantomSpec) -> WavefrontSet:
    """Boundary pixels of every ellipse with the quantized outward-normal bin.

    A pixel belongs to the boundary when its center lies within half a pixel
    of the boundary curve; the distance is the first-order estimate
    |q - 1| / |grad q|.
    """
    spec.validate()
    M = spec.grid_size
    N = spec.orientation_bins
    x, y = pixel_grid(M)
    half_px = 1.0 / M  # half a pixel width in physical units
    pts = []
    for e in spec.ellipses:
        q = e.implicit(x, y)
        gx, gy = e.implicit_gradient(x, y)
        gn = np.hypot(gx, gy)
        gn_safe = np.where(gn == 0, 1.0, gn)
        on_boundary = np.abs(q - 1.0) / gn_safe <= half_px
        if not on_boundary.any():
            continue
        theta = np.degrees(np.arctan2(gy[on_boundary], gx[on_boundary]))
        bins = quantize_angle(theta, N)
        rc = np.argwhere(on_boundary)
        pts.append(np.column_stack([rc, bins]))
    if not pts:
        return WavefrontSet.empty(M, N)
    return WavefrontSet(np.vstack(pts), M, N)


@dataclass(frozen=True)
class GenerationConfig:
    """Distribution parameters for random head phantoms.

    The first two ellipses are always the skull pair: a large outer ellipse
    and a slightly shrunk copy with negative intensity, which leaves a bright
    ring.  The remaining ellipses are placed strictly inside the inner skull
    by rejection sampling.
    """

    grid_size: int = 128
    orientation_bins: int = 180
    num_inner_ellipses: int = 2
    outer_axis_range: tuple = (0.75, 0.88)
    outer_aspect_range: tuple = (0.82, 0.97)
    skull_ratio_range: tuple = (0.78, 0.86)
    skull_intensity_range: tuple = (-0.60, -0.45)
    center_jitter: float = 0.04
    inner_axis_range: tuple = (0.22, 0.38)
    inner_intensity_range: tuple = (0.35, 0.80)
    edge_sigma: float = 0.0
    max_attempts: int = 1000

    def validate(self):
        if self.grid_size < 32:
            raise ConfigurationError("grid_size must be at least 32")
        if self.orientation_bins < 2:
            raise ConfigurationError("orientation_bins must be at least 2")
        if self.num_inner_ellipses < 0:
            raise ConfigurationError("num_inner_ellipses must be nonnegative")
        for name in ("outer_axis_range", "outer_aspect_range", "skull_ratio_range",
                     "inner_axis_range", "inner_intensity_range"):
            lo, hi = getattr(self, name)
            if not (lo <= hi):
                raise ConfigurationError(f"{name}: min must not exceed max")
        lo, hi = self.inner_axis_range
        if lo <= 0:
            raise ConfigurationError("inner_axis_range must be positive")
        if self.edge_sigma < 0:
            raise ConfigurationError("edge_sigma must be nonnegative")


def _inside_ellipse(e: EllipseSpec, candidate: EllipseSpec, margin: float = 0.92) -> bool:
    # sample the candidate boundary and require q_e below `margin` everywhere
    t = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    a, b = candidate.semi_axes
    ca, sa = np.cos(candidate.rotation), np.sin(candidate.rotation)
    bx = candidate.center[0] + a * np.cos(t) * ca - b * np.sin(t) * sa
    by = candidate.center[1] + a * np.cos(t) * sa + b * np.sin(t) * ca
    return bool(np.all(e.implicit(bx, by) <= margin))


def generate_phantom(seed: int, cfg: GenerationConfig):
    """Deterministically draw a phantom; returns (spec, image, wavefront set)."""
    cfg.validate()
    rng = np.random.default_rng(seed)

    a_out = rng.uniform(*cfg.outer_axis_range)
    b_out = a_out * rng.uniform(*cfg.outer_aspect_range)
    rot = rng.uniform(0.0, np.pi)
    jitter = min(cfg.center_jitter, max(0.0, 1.0 - max(a_out, b_out) - 0.01))
    cx = rng.uniform(-jitter, jitter)
    cy = rng.uniform(-jitter, jitter)
    outer = EllipseSpec((cx, cy), (a_out, b_out), rot, 1.0, cfg.edge_sigma)

    ratio = rng.uniform(*cfg.skull_ratio_range)
    inner_int = rng.uniform(*cfg.skull_intensity_range)
    inner = EllipseSpec((cx, cy), (a_out * ratio, b_out * ratio), rot, inner_int,
                        cfg.edge_sigma)

    ellipses = [outer, inner]
    for _ in range(cfg.num_inner_ellipses):
        placed = False
        for _attempt in range(cfg.max_attempts):
            a = rng.uniform(*cfg.inner_axis_range)
            b = rng.uniform(*cfg.inner_axis_range)
            alpha = rng.uniform(0.0, np.pi)
            px = rng.uniform(-1.0, 1.0)
            py = rng.uniform(-1.0, 1.0)
            mag = rng.uniform(*cfg.inner_intensity_range)
            sign = 1.0 if rng.uniform() < 0.5 else -1.0
            cand = EllipseSpec((px, py), (a, b), alpha, sign * mag, cfg.edge_sigma)
            if _inside_ellipse(inner, cand):
                ellipses.append(cand)
                placed = True
                break
        if not placed:
            raise ConfigurationError(
                f"could not place an inner ellipse after {cfg.max_attempts} attempts"
            )

    spec = PhantomSpec(tuple(ellipses), cfg.grid_size, cfg.orientation_bins)
    return spec, rasterize(spec), analytic_wavefront(spec)
