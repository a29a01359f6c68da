"""Model-based wavefront-set extraction from shearlet coefficient decay.

Orientation-resolved singular points are found in three steps:

1. per-slice analytic envelopes: each cone slice's spectrum is restricted to
   the frequency half-plane of its orientation and the magnitude of the
   result is taken, which gives a single-peaked response centered on edges
   (plain magnitudes of the symmetric filters dip to zero exactly on a step);
2. per-pixel orientation estimate by a weighted circular mean over the
   neighboring finest-scale orientations, plus two gates: the finest-scale
   envelope must clear a per-slice quantile, and the least-squares slope of
   log2-envelope across the finest scales must not fall below a threshold
   (fast decay means the pixel is microlocally regular there);
3. one-pixel thinning by non-maximum suppression along the estimated normal.

Each surviving pixel emits a single quantized orientation bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from .shearlet import CoeffVolume, ShearletSystem, slice_orientation_deg
from .wavefront import WavefrontSet, quantize_angle

__all__ = ["DecayParams", "extract_wavefront_decay", "slice_envelopes"]

# offsets (in pixels along the estimated normal) checked during thinning;
# span 1 thins the ridge, spans 2..3 remove filter side-lobe ridges
_NMS_SPANS = (1, 2, 3)
_LOG_FLOOR = 1e-12
# quantiles of nearly-empty slices sit at numerical-noise level; anything this
# far below the strongest response is never a singularity
_REL_FLOOR = 1e-4
# tangential averaging of the orientation over detected neighbors
_CHAIN_RADIUS = 6
_CHAIN_ALIGN = 0.3  # cos(2 * angle difference) gate against corners


@dataclass(frozen=True)
class DecayParams:
    """Extraction thresholds; defaults tuned on the analytic disk oracle."""

    edge_quantile: float = 0.95
    slope_threshold: float = -1.5
    min_scales: int = 3

    def validate(self, num_scales: int):
        if not (0.0 < self.edge_quantile < 1.0):
            raise ConfigurationError("edge_quantile must be in (0, 1)")
        if self.min_scales < 2:
            raise ConfigurationError("min_scales must be at least 2")
        if self.min_scales > num_scales:
            raise ConfigurationError(
                f"min_scales={self.min_scales} exceeds the system's {num_scales} scales"
            )


def slice_envelopes(vol: CoeffVolume, system: ShearletSystem):
    """Analytic envelopes of all cone slices, grouped and sorted per scale.

    Returns {scale: (orientations_deg, envelopes)} with envelopes of shape
    (num_orientations, M, M).  Orientations are unique within a scale.
    """
    out = {}
    for j in range(1, system.num_scales + 1):
        items = []
        for idx, key in enumerate(system.keys):
            if key.is_lowpass() or key.scale != j:
                continue
            theta = slice_orientation_deg(key)
            nx, ny = np.cos(np.radians(theta)), np.sin(np.radians(theta))
            half = (system.xi1 * nx + system.xi2 * ny) > 0
            spec = np.fft.fft2(vol.slices[idx])
            env = np.abs(np.fft.ifft2(spec * (2.0 * half)))
            items.append((theta, env))
        items.sort(key=lambda t: t[0])
        out[j] = (np.array([t for t, _ in items]),
                  np.stack([e for _, e in items]))
    return out


def _bilinear(surface: np.ndarray, rows, cols):
    M = surface.shape[0]
    rows = np.clip(rows, 0.0, M - 1.0)
    cols = np.clip(cols, 0.0, M - 1.0)
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    r1 = np.minimum(r0 + 1, M - 1)
    c1 = np.minimum(c0 + 1, M - 1)
    fr = rows - r0
    fc = cols - c0
    return (surface[r0, c0] * (1 - fr) * (1 - fc)
            + surface[r1, c0] * fr * (1 - fc)
            + surface[r0, c1] * (1 - fr) * fc
            + surface[r1, c1] * fr * fc)


def extract_wavefront_decay(vol: CoeffVolume, system: ShearletSystem,
                            params: DecayParams = DecayParams(),
                            n_bins: int = 180) -> WavefrontSet:
    if vol.grid_size != system.grid_size or vol.keys != system.keys:
        raise DimensionError("volume was generated by a different system")
    params.validate(system.num_scales)
    if n_bins < 2:
        raise ConfigurationError("n_bins must be at least 2")

    M = system.grid_size
    n = system.num_scales
    env = slice_envelopes(vol, system)
    orients, fin = env[n]
    S = len(orients)

    # ridge energy: finest scale plus the next one folded onto the finest
    # orientation grid (their orientation sets coincide when ceil(j/2)
    # matches and nest otherwise)
    coarse = np.zeros_like(fin)
    if n >= 2:
        prev_orients, prev = env[n - 1]
        for i, theta in enumerate(prev_orients):
            d = np.abs(orients - theta)
            d = np.minimum(d, 180.0 - d)
            coarse[int(np.argmin(d))] += prev[i]
    agg = fin + coarse

    # orientation estimate from the second-finest scale alone: the finest
    # band mostly sees the pixel staircase of sharp edges, which is noise
    # for the direction (its sigma is an order worse when included)
    est_src = coarse if n >= 2 else fin
    s_star = np.argmax(est_src, axis=0)
    neighbor = np.stack([(s_star + d) % S for d in (-2, -1, 0, 1, 2)])
    vals = np.take_along_axis(est_src, neighbor, axis=0)
    peak = vals.max(axis=0)
    weights = (vals / np.maximum(peak, 1e-300)) ** 2  # scale-invariant weights
    phases = np.exp(1j * np.radians(2.0 * orients[neighbor]))
    mean = np.sum(weights * phases, axis=0)
    est_deg = (np.degrees(np.angle(mean)) / 2.0) % 180.0
    # balanced responses on opposing doubled angles leave no usable mean
    # direction; fall back to the peak slice there
    degenerate = np.abs(mean) < 1e-6 * np.sum(weights, axis=0)
    est_deg = np.where(degenerate, orients[s_star], est_deg)

    # gate (i): finest-scale envelope above its per-slice quantile
    thresholds = np.quantile(fin.reshape(S, -1), params.edge_quantile, axis=1)
    s_fin = np.argmax(fin, axis=0)
    fin_peak = np.take_along_axis(fin, s_fin[None], axis=0)[0]
    floor = _REL_FLOOR * fin.max()
    gate_magnitude = (fin_peak > thresholds[s_fin]) & (fin_peak > floor)

    # gate (ii): decay slope across the finest min_scales scales
    scales = list(range(n - params.min_scales + 1, n + 1))
    xc = np.array(scales, dtype=float)
    xc -= xc.mean()
    beta = np.zeros((M, M))
    for w, j in zip(xc, scales):
        os_j, env_j = env[j]
        d = np.abs(os_j[:, None, None] - est_deg[None])
        d = np.minimum(d, 180.0 - d)
        nearest = np.argmin(d, axis=0)
        picked = np.take_along_axis(env_j, nearest[None], axis=0)[0]
        beta += w * np.log2(np.maximum(picked, _LOG_FLOOR))
    beta /= np.sum(xc**2)
    gate_decay = beta >= params.slope_threshold

    # thinning along the estimated normal
    surface = np.take_along_axis(agg, np.argmax(agg, axis=0)[None], axis=0)[0]
    ct = np.cos(np.radians(est_deg))
    st = np.sin(np.radians(est_deg))
    rows, cols = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    thin = np.ones((M, M), dtype=bool)
    for span in _NMS_SPANS:
        # normal (cos t, sin t) in xy is (-sin t, cos t) in (row, col)
        thin &= surface >= _bilinear(surface, rows - span * st, cols + span * ct)
        thin &= surface >= _bilinear(surface, rows + span * st, cols - span * ct)

    keep = gate_magnitude & gate_decay & thin
    if not keep.any():
        return WavefrontSet.empty(M, n_bins)

    # average the orientation along the detected curve: per-pixel estimates
    # carry correlated staircase noise that cancels over a few ridge pixels
    resultant = np.where(keep, surface * np.exp(1j * np.radians(2.0 * est_deg)),
                         0.0 + 0.0j)
    base = np.exp(1j * np.radians(2.0 * est_deg))
    acc = np.zeros_like(resultant)
    for dr in range(-_CHAIN_RADIUS, _CHAIN_RADIUS + 1):
        for dc in range(-_CHAIN_RADIUS, _CHAIN_RADIUS + 1):
            if dr * dr + dc * dc > _CHAIN_RADIUS * _CHAIN_RADIUS:
                continue
            shifted = np.roll(np.roll(resultant, dr, axis=0), dc, axis=1)
            # ignore neighbors with clearly different orientation (corners,
            # crossings) so averaging does not drag estimates across them
            align = np.real(shifted * np.conj(base))
            acc += np.where(align > _CHAIN_ALIGN * np.abs(shifted), shifted, 0.0)
    smoothed = (np.degrees(np.angle(acc, deg=False)) / 2.0) % 180.0
    est_deg = np.where(keep & (np.abs(acc) > 0), smoothed, est_deg)

    bins = quantize_angle(est_deg[keep], n_bins)
    return WavefrontSet(np.column_stack([np.argwhere(keep), bins]), M, n_bins)
