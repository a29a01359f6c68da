"""Parallel-beam Radon transform, backprojection, FBP and Tikhonov inversion.

Geometry: angles theta_i = i * pi / num_angles covering [0, pi) once, offsets
uniform over [-sqrt(2), sqrt(2)] (circumscribing the unit square), images on
the shared pixel-center grid (side length 2).  Line integrals sample at one
pixel-width steps with bilinear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DimensionError, DivergenceError

__all__ = [
    "SinoGeometry",
    "Sinogram",
    "radon",
    "backproject",
    "fbp",
    "tikhonov",
    "subsample_angles",
    "RAM_LAK",
    "HANN",
]

OFFSET_SPAN = np.sqrt(2.0)
RAM_LAK = "ram-lak"
HANN = "hann"


@dataclass(frozen=True)
class SinoGeometry:
    num_angles: int
    num_offsets: int
    grid_size: int

    def __post_init__(self):
        if self.num_angles < 2 or self.num_offsets < 2:
            raise ConfigurationError("need at least 2 angles and 2 offsets")
        if self.grid_size < 2:
            raise ConfigurationError("grid_size too small")

    def angles(self) -> np.ndarray:
        return np.arange(self.num_angles) * (np.pi / self.num_angles)

    def offsets(self) -> np.ndarray:
        return np.linspace(-OFFSET_SPAN, OFFSET_SPAN, self.num_offsets)

    @property
    def offset_step(self) -> float:
        return 2.0 * OFFSET_SPAN / (self.num_offsets - 1)

    def to_dict(self) -> dict:
        return {
            "num_angles": self.num_angles,
            "num_offsets": self.num_offsets,
            "grid_size": self.grid_size,
        }

    @staticmethod
    def from_dict(d: dict) -> "SinoGeometry":
        return SinoGeometry(int(d["num_angles"]), int(d["num_offsets"]),
                            int(d["grid_size"]))


@dataclass
class Sinogram:
    geometry: SinoGeometry
    values: np.ndarray  # (num_angles, num_offsets)
    angle_mask: np.ndarray = field(default=None)  # bool per angle

    def __post_init__(self):
        expected = (self.geometry.num_angles, self.geometry.num_offsets)
        if self.values.shape != expected:
            raise DimensionError(f"sinogram shape {self.values.shape} != {expected}")
        if self.angle_mask is None:
            self.angle_mask = np.ones(self.geometry.num_angles, dtype=bool)
        self.angle_mask = np.asarray(self.angle_mask, dtype=bool)
        if self.angle_mask.shape != (self.geometry.num_angles,):
            raise DimensionError("angle_mask length must equal num_angles")
        if not self.angle_mask.any():
            raise ConfigurationError("angle_mask must keep at least one angle")

    @property
    def measured_indices(self) -> np.ndarray:
        return np.flatnonzero(self.angle_mask)


def _sample_points(grid_size: int):
    # s covers the circumscribed span at one-pixel steps
    step = 2.0 / grid_size
    n = int(np.floor(2.0 * OFFSET_SPAN / step)) + 1
    return -OFFSET_SPAN + step * np.arange(n), step


def radon(img: np.ndarray, geom: SinoGeometry) -> Sinogram:
    """Sampled line integrals of the image over the full angle grid."""
    img = np.asarray(img, dtype=float)
    if img.shape != (geom.grid_size, geom.grid_size):
        raise DimensionError(
            f"image shape {img.shape} does not match geometry grid {geom.grid_size}"
        )
    angles = geom.angles()
    s, step = _sample_points(geom.grid_size)
    values = _kernels.forward_project(img, np.cos(angles), np.sin(angles),
                                      geom.offsets(), s, step)
    return Sinogram(geom, values)


def _masked_forward(img, geom, mask):
    angles = geom.angles()[mask]
    s, step = _sample_points(geom.grid_size)
    rows = _kernels.forward_project(img, np.cos(angles), np.sin(angles),
                                    geom.offsets(), s, step)
    values = np.zeros((geom.num_angles, geom.num_offsets))
    values[mask] = rows
    return values


def backproject(sino: Sinogram) -> np.ndarray:
    """Average of interpolated sinogram rows over measured angles, times pi."""
    geom = sino.geometry
    mask = sino.angle_mask
    angles = geom.angles()[mask]
    rows = sino.values[mask]
    acc = _kernels.back_project(rows, np.cos(angles), np.sin(angles),
                                -OFFSET_SPAN, geom.offset_step, geom.grid_size)
    return acc * (np.pi / mask.sum())


def _ramp_filter_rows(rows: np.ndarray, dp: float, window: str) -> np.ndarray:
    n = rows.shape[1]
    # zero-pad so the circular convolution behaves like a linear one
    padded = 1 << int(np.ceil(np.log2(2 * n)))
    freqs = np.fft.fftfreq(padded, d=dp)
    ramp = np.abs(freqs)
    ramp[0] = 0.0  # zero the DC component
    if window == HANN:
        nyquist = np.abs(freqs).max()
        ramp = ramp * (0.5 + 0.5 * np.cos(np.pi * freqs / nyquist))
    elif window != RAM_LAK:
        raise ConfigurationError(f"unknown FBP filter {window!r}")
    spec = np.fft.fft(rows, n=padded, axis=1)
    return np.fft.ifft(ramp[None, :] * spec, axis=1).real[:, :n]


def fbp(sino: Sinogram, filter_name: str = RAM_LAK) -> np.ndarray:
    """Filtered backprojection with a ramp (optionally Hann-windowed) filter."""
    filtered = sino.values.copy()
    mask = sino.angle_mask
    filtered[mask] = _ramp_filter_rows(sino.values[mask], sino.geometry.offset_step,
                                       filter_name)
    return backproject(Sinogram(sino.geometry, filtered, mask))


def _operator_norm_sq(geom: SinoGeometry, mask: np.ndarray, iters: int = 20) -> float:
    # power iteration on backproject(radon(.)) in image space
    f = np.ones((geom.grid_size, geom.grid_size))
    f /= np.linalg.norm(f)
    lam = 1.0
    for _ in range(iters):
        g = _masked_forward(f, geom, mask)
        f = backproject(Sinogram(geom, g, mask))
        lam = np.linalg.norm(f)
        if lam == 0:
            return 1.0
        f /= lam
    return float(lam)


def tikhonov(sino: Sinogram, lam: float, iters: int) -> np.ndarray:
    """Landweber iteration on the regularized normal equations.

    Minimizes |R f - g|^2 + lam |f|^2 (angle-mask aware, weighted norms) from
    a zero start; the objective is checked for monotone decrease every 10
    iterations and non-finite intermediates raise DivergenceError.
    """
    if lam <= 0:
        raise ConfigurationError("lam must be positive")
    if iters < 0:
        raise ConfigurationError("iters must be nonnegative")
    geom = sino.geometry
    mask = sino.angle_mask
    g = sino.values
    f = np.zeros((geom.grid_size, geom.grid_size))
    if iters == 0:
        return f
    # inner-product weights making backproject the (approximate) adjoint
    w_sino = (np.pi / mask.sum()) * geom.offset_step
    w_img = (2.0 / geom.grid_size) ** 2
    step = 1.0 / (_operator_norm_sq(geom, mask) + lam)

    def objective(fk, residual):
        return w_sino * np.sum(residual[mask] ** 2) + lam * w_img * np.sum(fk**2)

    last_checked = None
    for it in range(1, iters + 1):
        residual = _masked_forward(f, geom, mask) - np.where(mask[:, None], g, 0.0)
        grad = backproject(Sinogram(geom, residual, mask)) + lam * f
        f = f - step * grad
        if not np.isfinite(f).all():
            raise DivergenceError(f"non-finite reconstruction at iteration {it}")
        if it % 10 == 0 or it == iters:
            obj = objective(f, _masked_forward(f, geom, mask) - np.where(mask[:, None], g, 0.0))
            if last_checked is not None and obj > last_checked * (1.0 + 1e-9):
                raise DivergenceError(
                    f"objective increased at iteration {it}: {last_checked} -> {obj}"
                )
            last_checked = obj
    return f


def subsample_angles(sino: Sinogram, step: int) -> Sinogram:
    """Keep angle indices divisible by step; zero and exclude the rest."""
    if step < 1:
        raise ConfigurationError("step must be at least 1")
    keep = np.zeros(sino.geometry.num_angles, dtype=bool)
    keep[::step] = True
    keep &= sino.angle_mask
    values = np.where(keep[:, None], sino.values, 0.0)
    return Sinogram(sino.geometry, values, keep)
