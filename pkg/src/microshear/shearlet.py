"""Cone-adapted digital shearlet filter bank and transform.

Filters are built directly in the frequency domain as Meyer-type windows: a
dyadic band window in the max-norm radius times a bump window in the slope
variable xi2/xi1 (xi1/xi2 on the vertical cone), sheared by integers.  The
squared filters tile the grid exactly, so the bank is a Parseval frame and
``frame_weights`` is identically one up to floating-point error.

Slices at the largest shear |k| = 2^ceil(j/2) of the horizontal cone are
"seam" filters: they carry the part of the direction partition that straddles
the diagonal, glued from both cones.  The vertical cone therefore runs one
shear short on each side, which is what makes the slice count come out as
2 * sum(K_j - 1) + 1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DimensionError, FrameDegeneracyError
from .wavefront import quantize_angle

__all__ = [
    "SliceKey",
    "ShearletSystem",
    "CoeffVolume",
    "build_system",
    "dsh_transform",
    "dsh_inverse",
    "slice_index",
    "key_of",
    "orientation_of_slice",
    "slice_orientation_deg",
    "shear_count",
    "max_threads",
]

LOWPASS = 0
CONE_H = 1  # normals near the horizontal axis
CONE_V = -1


def max_threads() -> int:
    """Thread cap for slice-parallel work, from MICROSHEAR_THREADS."""
    raw = os.environ.get("MICROSHEAR_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(4, os.cpu_count() or 1)
    return max(1, n)


@dataclass(frozen=True)
class SliceKey:
    """(scale, shear, cone); cone 0 is the single low-pass slice."""

    scale: int
    shear: int
    cone: int

    def is_lowpass(self) -> bool:
        return self.cone == LOWPASS


def shear_count(scale: int) -> int:
    """Shears per scale: K_j = 2^ceil(j/2 + 1) + 1."""
    return 2 ** int(np.ceil(scale / 2.0 + 1.0)) + 1


def _max_shear(scale: int) -> int:
    # K_j = 2 k_j + 1
    return (shear_count(scale) - 1) // 2


def _meyer_aux(x):
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


def _band_window_sq(t, scale: int, num_scales: int):
    """Squared dyadic band window on the max-norm radius t in [0, 1]."""
    u = 2.0 ** (num_scales - scale) * np.asarray(t, dtype=float)
    out = np.zeros_like(u)
    rise = (u >= 0.5) & (u < 1.0)
    fall = (u >= 1.0) & (u < 2.0)
    out[rise] = np.sin(0.5 * np.pi * _meyer_aux(2.0 * u[rise] - 1.0)) ** 2
    out[fall] = np.cos(0.5 * np.pi * _meyer_aux(u[fall] - 1.0)) ** 2
    if scale == num_scales:
        # finest scale keeps full energy out to the grid boundary
        out[u >= 1.0] = 1.0
    return out


def _bump_sq(u):
    """Squared direction bump; tiles under integer shifts, vanishes at |u| >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1.0
    out[m] = _meyer_aux(1.0 - np.abs(u[m]))
    return out


def _slice_keys(num_scales: int):
    keys = [SliceKey(0, 0, LOWPASS)]
    for j in range(1, num_scales + 1):
        kj = _max_shear(j)
        for k in range(-kj, kj + 1):
            keys.append(SliceKey(j, k, CONE_H))
        for k in range(-(kj - 1), kj):
            keys.append(SliceKey(j, k, CONE_V))
    return tuple(keys)


class ShearletSystem:
    """Immutable frequency-domain filter bank for an M x M grid."""

    def __init__(self, grid_size: int, num_scales: int):
        if grid_size < 32:
            raise ConstructionError("grid_size must be at least 32")
        if not (1 <= num_scales <= 6):
            raise ConstructionError("num_scales must be between 1 and 6")
        if grid_size < 2 ** (num_scales + 2):
            raise ConstructionError(
                f"grid {grid_size} too small for {num_scales} scales: the "
                f"coarsest band falls below the grid resolution"
            )
        self.grid_size = int(grid_size)
        self.num_scales = int(num_scales)
        self.keys = _slice_keys(num_scales)
        self._index = {key: i for i, key in enumerate(self.keys)}

        M = self.grid_size
        f = np.fft.fftfreq(M) * M
        fr, fc = np.meshgrid(f, f, indexing="ij")
        # image orientation conventions: xi1 along +x (columns), xi2 along +y
        self.xi1 = fc
        self.xi2 = -fr
        self._t = np.maximum(np.abs(self.xi1), np.abs(self.xi2)) / (M / 2.0)
        self._cone_h = np.abs(self.xi2) <= np.abs(self.xi1)

        with np.errstate(divide="ignore", invalid="ignore"):
            d_h = np.where(self.xi1 != 0, self.xi2 / np.where(self.xi1 == 0, 1.0, self.xi1), np.inf)
            d_v = np.where(self.xi2 != 0, self.xi1 / np.where(self.xi2 == 0, 1.0, self.xi2), np.inf)
        self._slope_h = d_h
        self._slope_v = d_v

        self.filters = np.stack([self._build_filter(key) for key in self.keys])
        self.frame_weights = np.sum(self.filters**2, axis=0)
        if self.frame_weights.min() <= 0.0:
            raise ConstructionError("frame weights vanish somewhere on the grid")

    # -- filter construction -------------------------------------------------

    def _build_filter(self, key: SliceKey) -> np.ndarray:
        if key.is_lowpass():
            low_sq = np.ones_like(self._t)
            for j in range(1, self.num_scales + 1):
                low_sq = low_sq - _band_window_sq(self._t, j, self.num_scales)
            # the subtraction cancels to rounding noise outside the analytic
            # support; sqrt would blow that up to ~1e-8
            low_sq[self._t > 2.0 ** (1 - self.num_scales)] = 0.0
            return np.sqrt(np.clip(low_sq, 0.0, None))

        kj = _max_shear(key.scale)
        band = np.sqrt(_band_window_sq(self._t, key.scale, self.num_scales))
        slope_h = np.where(np.isfinite(self._slope_h), self._slope_h, 2.0)
        slope_v = np.where(np.isfinite(self._slope_v), self._slope_v, 2.0)
        if key.cone == CONE_H:
            dir_sq = np.where(self._cone_h, _bump_sq(kj * slope_h - key.shear), 0.0)
            if abs(key.shear) == kj:
                # seam filter: glue the matching bump from the vertical cone
                dir_sq = dir_sq + np.where(
                    ~self._cone_h, _bump_sq(kj * slope_v - key.shear), 0.0
                )
        else:
            dir_sq = np.where(~self._cone_h, _bump_sq(kj * slope_v - key.shear), 0.0)
        return band * np.sqrt(dir_sq)

    # -- bookkeeping ---------------------------------------------------------

    @property
    def num_slices(self) -> int:
        return len(self.keys)

    def index_of(self, key: SliceKey) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise DimensionError(f"slice key {key} not in this system") from None

    def key_at(self, index: int) -> SliceKey:
        if not (0 <= index < len(self.keys)):
            raise DimensionError(f"slice index {index} out of range 0..{len(self.keys) - 1}")
        return self.keys[index]

    def support_mask(self, key: SliceKey) -> np.ndarray:
        """Declared support region of a filter: scale band times cone sector."""
        j, n = key.scale, self.num_scales
        if key.is_lowpass():
            return self._t <= 2.0 ** (1 - n)
        lo = 2.0 ** (j - n - 1)
        hi = 2.0 if j == n else 2.0 ** (j - n + 1)
        annulus = (self._t >= lo) & (self._t <= hi)
        kj = _max_shear(j)
        if key.cone == CONE_H and abs(key.shear) == kj:
            s = np.sign(key.shear)
            sector = (self._cone_h & (s * self._slope_h >= 1.0 - 1.0 / kj)) | (
                ~self._cone_h & (s * self._slope_v >= 1.0 - 1.0 / kj)
            )
        elif key.cone == CONE_H:
            slope = self._slope_h
            sector = self._cone_h & (slope >= (key.shear - 1.0) / kj) & (
                slope <= (key.shear + 1.0) / kj
            )
        else:
            slope = self._slope_v
            sector = ~self._cone_h & (slope >= (key.shear - 1.0) / kj) & (
                slope <= (key.shear + 1.0) / kj
            )
        return annulus & sector


@dataclass
class CoeffVolume:
    """Stack of complex coefficient slices aligned with a system's key order."""

    slices: np.ndarray  # (L, M, M) complex
    keys: tuple
    grid_size: int
    num_scales: int

    def __post_init__(self):
        if self.slices.ndim != 3 or self.slices.shape[0] != len(self.keys):
            raise DimensionError("slice stack does not match the key enumeration")
        if self.slices.shape[1:] != (self.grid_size, self.grid_size):
            raise DimensionError("slice shape does not match grid_size")


def build_system(grid_size: int, num_scales: int) -> ShearletSystem:
    """Construct the filter bank; see ShearletSystem for the layout."""
    return ShearletSystem(grid_size, num_scales)


def _parallel_slices(fn, count: int):
    threads = max_threads()
    if threads == 1 or count == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def dsh_transform(img: np.ndarray, system: ShearletSystem) -> CoeffVolume:
    """Digital shearlet transform: circular cross-correlation with every filter."""
    img = np.asarray(img, dtype=float)
    if img.shape != (system.grid_size, system.grid_size):
        raise DimensionError(
            f"image shape {img.shape} does not match system grid {system.grid_size}"
        )
    spectrum = np.fft.fft2(img)
    # filters are real in frequency so the conjugate in ifft2(F * conj(psi))
    # is a no-op; kept as written for the correlation convention
    out = np.empty((system.num_slices, system.grid_size, system.grid_size),
                   dtype=complex)

    def work(i):
        out[i] = np.fft.ifft2(spectrum * np.conj(system.filters[i]))

    _parallel_slices(work, system.num_slices)
    return CoeffVolume(out, system.keys, system.grid_size, system.num_scales)


def dsh_inverse(vol: CoeffVolume, system: ShearletSystem) -> np.ndarray:
    """Dual-frame reconstruction: accumulate in the DFT domain, divide by weights."""
    if vol.grid_size != system.grid_size or vol.keys != system.keys:
        raise DimensionError("volume was generated by a different system")
    if system.frame_weights.min() < 1e-12:
        raise FrameDegeneracyError("frame weights contain entries below 1e-12")
    acc = np.zeros((system.grid_size, system.grid_size), dtype=complex)
    for i in range(system.num_slices):
        acc += np.fft.fft2(vol.slices[i]) * system.filters[i]
    return np.fft.ifft2(acc / system.frame_weights).real


def slice_index(key: SliceKey, system: ShearletSystem) -> int:
    return system.index_of(key)


def key_of(index: int, system: ShearletSystem) -> SliceKey:
    return system.key_at(index)


def slice_orientation_deg(key: SliceKey) -> float:
    """Normal direction represented by a cone slice, in degrees mod 180."""
    if key.is_lowpass():
        raise DimensionError("the low-pass slice has no orientation")
    kj = 2 ** int(np.ceil(key.scale / 2.0))
    base = np.degrees(np.arctan(key.shear / kj))
    theta = base if key.cone == CONE_H else 90.0 - base
    return float(theta % 180.0)


def orientation_of_slice(key: SliceKey, n_bins: int) -> int:
    """Quantized orientation bin of a cone slice."""
    return int(quantize_angle(slice_orientation_deg(key), n_bins))
