"""Benchmark the compiled projection kernels against the numpy fallback.

Runs the forward projector and the backprojector at a few grid sizes with
both backends and prints a timing table plus the speedup.  The two backends
are also cross-checked for agreement on every case.

Usage: python benchmarks/bench_radon.py [--repeats 5]
"""

import argparse
import time

import numpy as np

import microshear._kernels as kernels
import microshear._kernels._radon_py as py_backend
from microshear.phantom import GenerationConfig, generate_phantom
from microshear.radon import OFFSET_SPAN, SinoGeometry, _sample_points


def time_fn(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if kernels.BACKEND != "compiled":
        print("compiled backend not available; build the extension to compare")
        return

    import microshear._kernels._radon_cy as cy_backend

    print(f"{'case':<28} {'python':>10} {'compiled':>10} {'speedup':>9}")
    for M, n_angles in ((64, 90), (128, 180), (256, 180)):
        cfg = GenerationConfig(grid_size=M)
        _, img, _ = generate_phantom(1, cfg)
        geom = SinoGeometry(n_angles, M, M)
        angles = geom.angles()
        cos_t, sin_t = np.cos(angles), np.sin(angles)
        offsets = geom.offsets()
        s, step = _sample_points(M)

        t_py, rows_py = time_fn(
            lambda: py_backend.forward_project(img, cos_t, sin_t, offsets, s, step),
            args.repeats)
        t_cy, rows_cy = time_fn(
            lambda: cy_backend.forward_project(img, cos_t, sin_t, offsets, s, step),
            args.repeats)
        assert np.allclose(rows_py, rows_cy, atol=1e-10)
        print(f"{f'radon {M}x{M} A={n_angles}':<28} {t_py:>9.4f}s {t_cy:>9.4f}s "
              f"{t_py / t_cy:>8.1f}x")

        t_py, bp_py = time_fn(
            lambda: py_backend.back_project(rows_py, cos_t, sin_t, -OFFSET_SPAN,
                                            geom.offset_step, M),
            args.repeats)
        t_cy, bp_cy = time_fn(
            lambda: cy_backend.back_project(rows_cy, cos_t, sin_t, -OFFSET_SPAN,
                                            geom.offset_step, M),
            args.repeats)
        assert np.allclose(bp_py, bp_cy, atol=1e-10)
        print(f"{f'backproject {M}x{M} A={n_angles}':<28} {t_py:>9.4f}s {t_cy:>9.4f}s "
              f"{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
