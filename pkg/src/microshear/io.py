"""File formats: 16-bit PGM, SHRV binary volumes, wavefront CSVs, JSON docs.

All text output uses LF line endings and UTF-8; binary formats are
little-endian except PGM samples, which are big-endian per the PGM spec.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .canonical import SinoWavefrontSet
from .errors import ConfigurationError, DimensionError
from .radon import SinoGeometry, Sinogram
from .wavefront import WavefrontSet

__all__ = [
    "write_pgm16",
    "read_pgm16",
    "write_raw_image",
    "read_raw_image",
    "write_shrv",
    "read_shrv",
    "write_wavefront_csv",
    "read_wavefront_csv",
    "write_sino_wavefront_csv",
    "read_sino_wavefront_csv",
    "write_json",
    "read_json",
    "write_sinogram",
    "read_sinogram",
    "orientation_png",
    "grayscale_png",
]

SHRV_MAGIC = b"SHRV"


def write_pgm16(path, img: np.ndarray):
    """Min-max scaled 16-bit binary PGM; scale factors go in a JSON sidecar."""
    img = np.asarray(img, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    span = hi - lo if hi > lo else 1.0
    scaled = np.round((img - lo) / span * 65535.0).astype(">u2")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes())
    write_json(path.with_suffix(path.suffix + ".json"),
               {"min": lo, "max": hi, "maxval": 65535})


def read_pgm16(path):
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ConfigurationError(f"{path}: not a binary PGM file")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 65535:
            raise ConfigurationError(f"{path}: expected 16-bit PGM")
        data = np.frombuffer(fh.read(width * height * 2), dtype=">u2")
    raw = data.reshape(height, width).astype(float)
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        meta = read_json(sidecar)
        return raw / 65535.0 * (meta["max"] - meta["min"]) + meta["min"]
    return raw


def write_raw_image(path, img: np.ndarray):
    """Exact float64 image: u32-LE side lengths then row-major f64-LE."""
    img = np.asarray(img, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", img.shape[0], img.shape[1]))
        fh.write(img.tobytes())


def read_raw_image(path):
    with open(path, "rb") as fh:
        rows, cols = struct.unpack("<II", fh.read(8))
        return np.frombuffer(fh.read(rows * cols * 8), dtype="<f8").reshape(rows, cols).copy()


def write_shrv(path, slices: np.ndarray):
    """SHRV: magic, u32-LE {version, L, rows, cols}, then L*rows*cols
    complex entries as (re, im) f64-LE pairs, slice-major, row-major."""
    arr = np.asarray(slices)
    if arr.ndim != 3:
        raise DimensionError("SHRV expects a (L, rows, cols) stack")
    L, rows, cols = arr.shape
    inter = np.empty((L, rows, cols, 2), dtype="<f8")
    inter[..., 0] = arr.real
    inter[..., 1] = arr.imag
    with open(path, "wb") as fh:
        fh.write(SHRV_MAGIC)
        fh.write(struct.pack("<IIII", 1, L, rows, cols))
        fh.write(inter.tobytes())


def read_shrv(path):
    with open(path, "rb") as fh:
        if fh.read(4) != SHRV_MAGIC:
            raise ConfigurationError(f"{path}: bad SHRV magic")
        version, L, rows, cols = struct.unpack("<IIII", fh.read(16))
        if version != 1:
            raise ConfigurationError(f"{path}: unsupported SHRV version {version}")
        flat = np.frombuffer(fh.read(L * rows * cols * 16), dtype="<f8")
    pairs = flat.reshape(L, rows, cols, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).copy()


def write_wavefront_csv(path, wf: WavefrontSet):
    lines = ["row,col,bin"]
    lines += [f"{r},{c},{b}" for r, c, b in wf.points.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_wavefront_csv(path, grid_size: int, orientation_bins: int) -> WavefrontSet:
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0].strip() != "row,col,bin":
        raise ConfigurationError(f"{path}: expected header 'row,col,bin'")
    pts = [tuple(int(v) for v in line.split(",")) for line in text[1:] if line.strip()]
    return WavefrontSet(np.array(pts, dtype=np.int64).reshape(-1, 3),
                        grid_size, orientation_bins)


def write_sino_wavefront_csv(path, swf: SinoWavefrontSet):
    lines = ["angle_idx,offset_idx,dir_bin"]
    lines += [f"{a},{o},{d}" for a, o, d in swf.points.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_sino_wavefront_csv(path, geometry: SinoGeometry,
                            orientation_bins: int) -> SinoWavefrontSet:
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0].strip() != "angle_idx,offset_idx,dir_bin":
        raise ConfigurationError(f"{path}: expected header 'angle_idx,offset_idx,dir_bin'")
    pts = [tuple(int(v) for v in line.split(",")) for line in text[1:] if line.strip()]
    return SinoWavefrontSet(np.array(pts, dtype=np.int64).reshape(-1, 3),
                            geometry, orientation_bins)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8", newline="\n")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_sinogram(path, sino: Sinogram):
    """SHRV with a single slice plus a geometry/mask JSON sidecar."""
    write_shrv(path, sino.values[None].astype(complex))
    meta = {"geometry": sino.geometry.to_dict(),
            "angle_mask": sino.angle_mask.astype(int).tolist()}
    write_json(Path(str(path) + ".json"), meta)


def read_sinogram(path) -> Sinogram:
    slices = read_shrv(path)
    meta = read_json(Path(str(path) + ".json"))
    geom = SinoGeometry.from_dict(meta["geometry"])
    mask = np.array(meta["angle_mask"], dtype=bool)
    return Sinogram(geom, slices[0].real.copy(), mask)


def _hsv_to_rgb(h, s, v):
    # h, s, v arrays in [0, 1]
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1 - s)
    q = v * (1 - f * s)
    t = v * (1 - (1 - f) * s)
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return r, g, b


def orientation_png(path, wf: WavefrontSet):
    """Orientation map: HSV hue wheel over the bins on a black background;
    bin 0 renders red."""
    from PIL import Image

    M = wf.grid_size
    rgb = np.zeros((M, M, 3), dtype=np.uint8)
    if len(wf):
        h = wf.points[:, 2] / wf.orientation_bins
        s = np.ones_like(h)
        v = np.ones_like(h)
        r, g, b = _hsv_to_rgb(h, s, v)
        rows, cols = wf.points[:, 0], wf.points[:, 1]
        rgb[rows, cols, 0] = np.round(r * 255).astype(np.uint8)
        rgb[rows, cols, 1] = np.round(g * 255).astype(np.uint8)
        rgb[rows, cols, 2] = np.round(b * 255).astype(np.uint8)
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


def grayscale_png(path, img: np.ndarray):
    from PIL import Image

    img = np.asarray(img, dtype=float)
    lo, hi = float(img.min()), float(img.max())
    span = hi - lo if hi > lo else 1.0
    scaled = np.round((img - lo) / span * 255.0).astype(np.uint8)
    Image.fromarray(scaled, mode="L").save(path, format="PNG")
