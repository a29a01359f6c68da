"""Pure-numpy projection kernels; the fallback when the extension is absent.

Both backends implement the same two functions with identical signatures and
the same sampling rules: line integrals sample the image at ``step`` spacing
with bilinear interpolation (zero outside the grid), backprojection gathers
with linear interpolation along the offset axis.
"""

import numpy as np


def forward_project(img, cos_t, sin_t, offsets, s_samples, step):
    """Line integrals for the given angles.

    img: (M, M); cos_t/sin_t: (A,); offsets: (P,); s_samples: (T,)
    returns (A, P).
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    M = img.shape[0]
    half = M / 2.0
    out = np.empty((len(cos_t), len(offsets)))
    for i in range(len(cos_t)):
        c, s = cos_t[i], sin_t[i]
        # x = p*omega + t*omega_perp, omega=(c,s), perp=(-s,c)
        px = offsets[:, None] * c - s_samples[None, :] * s
        py = offsets[:, None] * s + s_samples[None, :] * c
        col = (px + 1.0) * half - 0.5
        row = (1.0 - py) * half - 0.5
        r0 = np.floor(row).astype(np.int64)
        c0 = np.floor(col).astype(np.int64)
        fr = row - r0
        fc = col - c0
        acc = np.zeros(px.shape)
        for dr, dc, w in ((0, 0, (1 - fr) * (1 - fc)), (1, 0, fr * (1 - fc)),
                          (0, 1, (1 - fr) * fc), (1, 1, fr * fc)):
            rr = r0 + dr
            cc = c0 + dc
            ok = (rr >= 0) & (rr < M) & (cc >= 0) & (cc < M)
            acc[ok] += w[ok] * img[rr[ok], cc[ok]]
        out[i] = acc.sum(axis=1) * step
    return out


def back_project(values, cos_t, sin_t, p0, dp, grid_size):
    """Gather-backprojection over the given (measured) angles.

    values: (A, P) filtered or raw rows; returns the unscaled sum over
    angles; the caller applies pi / A.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    M = grid_size
    P = values.shape[1]
    idx = np.arange(M)
    x = -1.0 + (2.0 * idx + 1.0) / M
    y = 1.0 - (2.0 * idx + 1.0) / M
    X = np.tile(x, (M, 1))
    Y = np.tile(y[:, None], (1, M))
    out = np.zeros((M, M))
    for i in range(len(cos_t)):
        p = X * cos_t[i] + Y * sin_t[i]
        u = (p - p0) / dp
        k0 = np.floor(u).astype(np.int64)
        f = u - k0
        k0c = np.clip(k0, 0, P - 1)
        k1c = np.clip(k0 + 1, 0, P - 1)
        valid0 = (k0 >= 0) & (k0 <= P - 1)
        valid1 = (k0 + 1 >= 0) & (k0 + 1 <= P - 1)
        row = values[i]
        out += np.where(valid0, row[k0c] * (1 - f), 0.0)
        out += np.where(valid1, row[k1c] * f, 0.0)
    return out
