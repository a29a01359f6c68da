"""Command-line driver for reproducible desk-scale experiments.

Every command resolves its full configuration into a manifest JSON next to
its outputs, and is deterministic given its flags.  Exit codes: 0 success,
1 numerical failure, 2 I/O or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .canonical import image_wf_to_sino_wf, sino_wf_to_image_wf
from .classifier import EDGE, ClassifierModel, TrainConfig, classify_image, train_all_targets
from .errors import ConfigurationError, DivergenceError, FrameDegeneracyError, MicroshearError
from .extract import DecayParams, extract_wavefront_decay
from .phantom import GenerationConfig, generate_phantom
from .pipeline import extract_sinogram_wavefront, lowdose_experiment
from .radon import HANN, RAM_LAK, SinoGeometry, fbp, radon, subsample_angles, tikhonov
from .shearlet import CoeffVolume, build_system, dsh_inverse, dsh_transform
from .wavefront import WavefrontSet


def _manifest(out_dir: Path, command: str, config: dict):
    io.write_json(out_dir / "manifest.json",
                  {"command": command, "version": __version__, "config": config})


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- phantom ------------------------------------------------------------------


def cmd_phantom(args) -> int:
    out = _outdir(args)
    cfg = GenerationConfig(grid_size=args.size, orientation_bins=args.bins,
                           num_inner_ellipses=args.ellipses,
                           edge_sigma=args.edge_sigma)
    spec, img, wf = generate_phantom(args.seed, cfg)
    io.write_pgm16(out / "phantom.pgm", img)
    io.write_raw_image(out / "phantom.raw", img)
    io.write_wavefront_csv(out / "phantom_wf.csv", wf)
    io.write_json(out / "phantom_spec.json", spec.to_dict())
    _manifest(out, "phantom", {"seed": args.seed, "size": args.size,
                               "bins": args.bins, "ellipses": args.ellipses,
                               "edge_sigma": args.edge_sigma})
    print(f"phantom: {len(spec.ellipses)} ellipses, {len(wf)} wavefront points")
    return 0


# -- shearlet -----------------------------------------------------------------


def _load_image(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"input image not found: {path}")
    if path.suffix == ".raw":
        return io.read_raw_image(path)
    if path.suffix == ".pgm":
        return io.read_pgm16(path)
    raise ConfigurationError(f"unsupported image format: {path}")


def cmd_shearlet(args) -> int:
    out = _outdir(args)
    img = _load_image(args.input)
    system = build_system(img.shape[0], args.scales)
    vol = dsh_transform(img, system)
    if args.action == "transform":
        io.write_shrv(out / "volume.shrv", vol.slices)
        io.write_json(out / "volume.shrv.meta.json", {
            "grid_size": system.grid_size, "num_scales": system.num_scales,
            "num_slices": system.num_slices,
        })
        print(f"volume: L={system.num_slices} slices of {system.grid_size}^2")
    else:  # roundtrip
        rec = dsh_inverse(vol, system)
        denom = np.linalg.norm(img)
        err = float(np.linalg.norm(rec - img) / denom) if denom > 0 else float(
            np.linalg.norm(rec - img))
        io.write_json(out / "roundtrip.json",
                      {"relative_l2_error": err, "num_slices": system.num_slices})
        print(f"roundtrip relative L2 error: {err:.3e}")
    _manifest(out, f"shearlet-{args.action}",
              {"input": str(args.input), "scales": args.scales})
    return 0


# -- extract ------------------------------------------------------------------


def _decay_params(args) -> DecayParams:
    min_scales = args.min_scales if args.min_scales else min(3, args.scales)
    return DecayParams(edge_quantile=args.quantile,
                       slope_threshold=args.slope_threshold,
                       min_scales=min_scales)


def cmd_extract(args) -> int:
    out = _outdir(args)
    img = _load_image(args.input)
    if args.method == "decay":
        system = build_system(img.shape[0], args.scales)
        vol = dsh_transform(img, system)
        wf = extract_wavefront_decay(vol, system, _decay_params(args), args.bins)
        config = {"method": "decay", "input": str(args.input),
                  "scales": args.scales, "bins": args.bins,
                  "quantile": args.quantile,
                  "slope_threshold": args.slope_threshold,
                  "min_scales": args.min_scales}
    else:
        models_dir = Path(args.models)
        if not models_dir.is_dir():
            raise ConfigurationError(f"model directory not found: {models_dir}")
        models = {}
        for f in sorted(models_dir.glob("model_*.json")):
            m = ClassifierModel.from_json_dict(io.read_json(f))
            models[m.target] = m
        if not models:
            raise ConfigurationError(f"no model_*.json files in {models_dir}")
        n_bins = len([k for k in models if k != EDGE])
        system = build_system(img.shape[0], args.scales)
        wf = classify_image(img, system, models, threshold=args.threshold,
                            n_bins=n_bins)
        config = {"method": "learned", "input": str(args.input),
                  "models": str(models_dir), "threshold": args.threshold,
                  "scales": args.scales}
    io.write_wavefront_csv(out / "wavefront.csv", wf)
    if args.png:
        io.orientation_png(out / "wavefront.png", wf)
    if args.truth:
        from .metrics import evaluate

        truth = io.read_wavefront_csv(args.truth, img.shape[0], args.bins)
        rep = evaluate(wf, truth, tol_px=args.tol_px, tol_bin=args.tol_bin)
        io.write_json(out / "report.json", rep.to_dict())
        config["truth"] = str(args.truth)
        print(f"{'bin':>5} {'precision':>10} {'recall':>10} {'f_score':>10} "
              f"{'tp':>6} {'fp':>6} {'fn':>6}")
        for (b, p, r, f, tp, fp, fn) in rep.per_bin:
            print(f"{b:>5} {p:>10.4f} {r:>10.4f} {f:>10.4f} {tp:>6} {fp:>6} {fn:>6}")
        print(f"MF-score: {rep.mf_score:.4f} "
              f"(tol_px={args.tol_px}, tol_bin={args.tol_bin})")
    _manifest(out, f"extract-{args.method}", config)
    print(f"extracted {len(wf)} wavefront points")
    return 0


# -- train --------------------------------------------------------------------


def cmd_train(args) -> int:
    out = _outdir(args)
    data_dir = Path(args.data)
    raws = sorted(data_dir.glob("*.raw"))
    if args.num_images:
        raws = raws[:args.num_images]
    if not raws:
        raise ConfigurationError(f"no .raw images found in {data_dir}")
    data = []
    for raw in raws:
        wf_path = raw.with_name(raw.stem + "_wf.csv")
        if not wf_path.exists():
            raise ConfigurationError(f"missing ground-truth CSV: {wf_path}")
        img = io.read_raw_image(raw)
        wf = io.read_wavefront_csv(wf_path, img.shape[0], args.bins)
        data.append((img, wf))
    system = build_system(data[0][0].shape[0], args.scales)
    cfg = TrainConfig(learning_rate=args.learning_rate,
                      batch_size=args.batch_size, epochs=args.epochs,
                      l2_penalty=args.l2, seed=args.seed)
    models = train_all_targets(data, system, args.bins, args.per_image, cfg,
                               kind=args.kind, hidden=args.hidden,
                               patch_size=args.patch)
    log_lines = ["target,epoch,loss"]
    for target in [EDGE] + list(range(args.bins)):
        m = models[target]
        name = "edge" if target == EDGE else f"bin_{target:03d}"
        io.write_json(out / f"model_{name}.json", m.to_json_dict())
        for ep, loss in enumerate(m.loss_history):
            log_lines.append(f"{name},{ep},{loss!r}")
    (out / "training_log.csv").write_text("\n".join(log_lines) + "\n",
                                          encoding="utf-8", newline="\n")
    _manifest(out, "train", {
        "data": str(data_dir), "num_images": len(data), "bins": args.bins,
        "per_image": args.per_image, "kind": args.kind, "hidden": args.hidden,
        "patch": args.patch, "scales": args.scales, "epochs": args.epochs,
        "learning_rate": args.learning_rate, "batch_size": args.batch_size,
        "l2": args.l2, "seed": args.seed,
    })
    losses = {("edge" if t == EDGE else t): round(models[t].final_loss, 4)
              for t in models}
    print(f"trained {len(models)} classifiers; final losses: {losses}")
    return 0


# -- tomo ---------------------------------------------------------------------


def _geometry(args, grid_size: int) -> SinoGeometry:
    return SinoGeometry(args.angles, args.offsets, grid_size)


def cmd_tomo(args) -> int:
    out = _outdir(args)
    action = args.action

    if action == "forward":
        img = _load_image(args.input)
        sino = radon(img, _geometry(args, img.shape[0]))
        if args.angle_step > 1:
            sino = subsample_angles(sino, args.angle_step)
        if args.noise > 0:
            rng = np.random.default_rng(args.seed)
            noisy = sino.values + args.noise * rng.standard_normal(sino.values.shape)
            sino.values = np.where(sino.angle_mask[:, None], noisy, 0.0)
        io.write_sinogram(out / "sinogram.shrv", sino)
        _manifest(out, "tomo-forward", {
            "input": str(args.input), "angles": args.angles,
            "offsets": args.offsets, "angle_step": args.angle_step,
            "noise": args.noise, "seed": args.seed})
        print(f"sinogram: {sino.values.shape}, measured angles "
              f"{int(sino.angle_mask.sum())}")
        return 0

    if action in ("fbp", "tikhonov"):
        sino = io.read_sinogram(args.sinogram)
        if action == "fbp":
            rec = fbp(sino, HANN if args.filter == "hann" else RAM_LAK)
            config = {"sinogram": str(args.sinogram), "filter": args.filter}
        else:
            rec = tikhonov(sino, args.lam, args.iters)
            config = {"sinogram": str(args.sinogram), "lam": args.lam,
                      "iters": args.iters}
        io.write_raw_image(out / "reconstruction.raw", rec)
        io.write_pgm16(out / "reconstruction.pgm", rec)
        if args.png:
            io.grayscale_png(out / "reconstruction.png", rec)
        _manifest(out, f"tomo-{action}", config)
        print(f"reconstruction written; range [{rec.min():.4f}, {rec.max():.4f}]")
        return 0

    if action == "canonical-fwd":
        geom = SinoGeometry(args.angles, args.offsets, args.size)
        wf = io.read_wavefront_csv(args.wavefront, args.size, args.bins)
        swf = image_wf_to_sino_wf(wf, geom, dir_bins=args.dir_bins)
        io.write_sino_wavefront_csv(out / "sino_wavefront.csv", swf)
        _manifest(out, "tomo-canonical-fwd", {
            "wavefront": str(args.wavefront), "size": args.size,
            "bins": args.bins, "angles": args.angles,
            "offsets": args.offsets, "dir_bins": args.dir_bins})
        print(f"mapped {len(wf)} image points to {len(swf)} sinogram points")
        return 0

    if action == "canonical-inv":
        geom = SinoGeometry(args.angles, args.offsets, args.size)
        swf = io.read_sino_wavefront_csv(args.sino_wavefront, geom, args.dir_bins)
        wf = sino_wf_to_image_wf(swf, geom, image_bins=args.bins)
        io.write_wavefront_csv(out / "wavefront.csv", wf)
        _manifest(out, "tomo-canonical-inv", {
            "sino_wavefront": str(args.sino_wavefront), "size": args.size,
            "bins": args.bins, "angles": args.angles,
            "offsets": args.offsets, "dir_bins": args.dir_bins})
        print(f"mapped {len(swf)} sinogram points to {len(wf)} image points")
        return 0

    # lowdose-experiment
    cfg = GenerationConfig(grid_size=args.size, num_inner_ellipses=args.ellipses)
    res = lowdose_experiment(args.seed, cfg, num_angles=args.angles,
                             num_offsets=args.offsets,
                             angle_step=args.angle_step,
                             tikhonov_lam=args.lam, tikhonov_iters=args.iters)
    io.write_raw_image(out / "phantom.raw", res.image)
    io.write_sinogram(out / "sinogram.shrv", res.subsampled)
    io.write_wavefront_csv(out / "wf_truth.csv", res.truth_wf)
    io.write_wavefront_csv(out / "wf_canonical.csv", res.canonical_wf)
    io.write_wavefront_csv(out / "wf_fbp.csv", res.fbp_wf)
    io.write_wavefront_csv(out / "wf_tikhonov.csv", res.tikhonov_wf)
    rows = [("canonical", res.errors["canonical"]),
            ("fbp", res.errors["fbp"]),
            ("tikhonov", res.errors["tikhonov"])]
    io.write_json(out / "comparison.json", {name: err for name, err in rows})
    table = ["method        wf_mse", "-" * 26]
    table += [f"{name:<12}  {err:>10.3f}" for name, err in rows]
    text = "\n".join(table) + "\n"
    (out / "comparison.txt").write_text(text, encoding="utf-8", newline="\n")
    _manifest(out, "tomo-lowdose-experiment", {
        "seed": args.seed, "size": args.size, "ellipses": args.ellipses,
        "angles": args.angles, "offsets": args.offsets,
        "angle_step": args.angle_step, "lam": args.lam, "iters": args.iters})
    print(text, end="")
    return 0


# -- argument parsing -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="microshear", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("phantom", help="generate a random head phantom")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--size", type=int, default=128)
    q.add_argument("--bins", type=int, default=180)
    q.add_argument("--ellipses", type=int, default=2,
                   help="number of inner ellipses (besides the skull pair)")
    q.add_argument("--edge-sigma", type=float, default=0.0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_phantom)

    q = sub.add_parser("shearlet", help="shearlet transform utilities")
    q.add_argument("action", choices=["transform", "roundtrip"])
    q.add_argument("--input", required=True)
    q.add_argument("--scales", type=int, default=4)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_shearlet)

    q = sub.add_parser("extract", help="wavefront-set extraction")
    q.add_argument("method", choices=["decay", "learned"])
    q.add_argument("--input", required=True)
    q.add_argument("--scales", type=int, default=4)
    q.add_argument("--bins", type=int, default=180)
    q.add_argument("--quantile", type=float, default=0.95)
    q.add_argument("--slope-threshold", type=float, default=-1.5)
    q.add_argument("--min-scales", type=int, default=0,
                   help="scales in the decay fit (0 = min(3, --scales))")
    q.add_argument("--models", default=None, help="model directory (learned)")
    q.add_argument("--threshold", type=float, default=0.5)
    q.add_argument("--png", action="store_true",
                   help="also render the orientation color map")
    q.add_argument("--truth", default=None,
                   help="ground-truth CSV; prints the per-bin score table")
    q.add_argument("--tol-px", type=float, default=1.0)
    q.add_argument("--tol-bin", type=int, default=1)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_extract)

    q = sub.add_parser("train", help="train the N+1 patch classifiers")
    q.add_argument("--data", required=True,
                   help="directory of <name>.raw images with <name>_wf.csv truths")
    q.add_argument("--num-images", type=int, default=0,
                   help="cap on the number of images (0 = all)")
    q.add_argument("--bins", type=int, default=8)
    q.add_argument("--per-image", type=int, default=10)
    q.add_argument("--kind", choices=["linear", "mlp1"], default="linear")
    q.add_argument("--hidden", type=int, default=64)
    q.add_argument("--patch", type=int, default=21)
    q.add_argument("--scales", type=int, default=2)
    q.add_argument("--epochs", type=int, default=30)
    q.add_argument("--learning-rate", type=float, default=0.05)
    q.add_argument("--batch-size", type=int, default=32)
    q.add_argument("--l2", type=float, default=1e-4)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_train)

    q = sub.add_parser("tomo", help="Radon-domain experiments")
    q.add_argument("action", choices=["forward", "fbp", "tikhonov",
                                      "canonical-fwd", "canonical-inv",
                                      "lowdose-experiment"])
    q.add_argument("--input", help="image for the forward transform")
    q.add_argument("--sinogram", help="sinogram .shrv path")
    q.add_argument("--wavefront", help="image wavefront CSV (canonical-fwd)")
    q.add_argument("--sino-wavefront", help="sinogram wavefront CSV (canonical-inv)")
    q.add_argument("--size", type=int, default=128)
    q.add_argument("--bins", type=int, default=180)
    q.add_argument("--dir-bins", type=int, default=180)
    q.add_argument("--angles", type=int, default=180)
    q.add_argument("--offsets", type=int, default=128)
    q.add_argument("--angle-step", type=int, default=1)
    q.add_argument("--noise", type=float, default=0.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--filter", choices=["ram-lak", "hann"], default="ram-lak")
    q.add_argument("--lam", type=float, default=0.01)
    q.add_argument("--iters", type=int, default=60)
    q.add_argument("--ellipses", type=int, default=2)
    q.add_argument("--png", action="store_true")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_tomo)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, FrameDegeneracyError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except MicroshearError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
