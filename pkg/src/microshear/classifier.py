"""Patch-based learned wavefront extraction: N+1 separate binary classifiers.

Each orientation bin gets its own binary classifier over flattened patches of
shearlet-coefficient magnitudes centered at the pixel to classify, plus one
extra classifier for the class "this pixel is an edge at all".  Splitting the
multi-label problem this way keeps every training task a plain binary one.

Models are deliberately small (linear or one-hidden-layer tanh networks) so
training stays in CPU-minutes and gradients can be verified against finite
differences.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, InsufficientDataError, TrainingError
from .shearlet import ShearletSystem, dsh_transform, max_threads
from .wavefront import WavefrontSet

__all__ = [
    "EDGE",
    "PatchSample",
    "TrainConfig",
    "ClassifierModel",
    "build_dataset",
    "train_binary",
    "predict",
    "gradient_check",
    "classify_image",
    "train_all_targets",
]

EDGE = -1  # target marker for the edge/no-edge gate classifier
DEFAULT_PATCH = 21

LINEAR = "linear"
MLP1 = "mlp1"


@dataclass
class PatchSample:
    features: np.ndarray  # (P, P, L) magnitudes
    label: int
    center: tuple
    bin: int  # orientation bin, or EDGE


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    batch_size: int = 32
    epochs: int = 30
    l2_penalty: float = 1e-4
    seed: int = 0

    def validate(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.l2_penalty < 0:
            raise ConfigurationError("learning_rate/batch_size must be positive")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be nonnegative")


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce(p, y):
    eps = 1e-12
    return -(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))


@dataclass
class ClassifierModel:
    kind: str
    target: int
    patch_size: int
    num_slices: int
    slice_mean: np.ndarray  # (L,)
    slice_std: np.ndarray  # (L,)
    params: dict
    final_loss: float = float("nan")
    initial_loss: float = float("nan")
    loss_history: list = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.patch_size * self.patch_size * self.num_slices

    def standardize(self, feats: np.ndarray) -> np.ndarray:
        """(.., P, P, L) raw magnitudes -> flattened standardized rows."""
        f = (feats - self.slice_mean) / self.slice_std
        return f.reshape(*f.shape[:-3], self.input_dim)

    def scores(self, flat: np.ndarray) -> np.ndarray:
        if flat.shape[-1] != self.input_dim:
            raise DimensionError(
                f"feature dim {flat.shape[-1]} != model dim {self.input_dim}"
            )
        if self.kind == LINEAR:
            return flat @ self.params["w"] + self.params["b"]
        h = np.tanh(flat @ self.params["W1"].T + self.params["b1"])
        return h @ self.params["w2"] + self.params["b2"]

    def to_json_dict(self) -> dict:
        import base64

        def enc(a):
            a = np.asarray(a, dtype="<f8")  # keeps 0-d shapes intact
            return {"shape": list(a.shape),
                    "data": base64.b64encode(a.tobytes()).decode("ascii")}

        return {
            "format": "microshear-classifier",
            "version": 1,
            "kind": self.kind,
            "target": self.target,
            "patch_size": self.patch_size,
            "num_slices": self.num_slices,
            "slice_mean": enc(self.slice_mean),
            "slice_std": enc(self.slice_std),
            "params": {k: enc(v) for k, v in self.params.items()},
            "final_loss": self.final_loss,
            "initial_loss": self.initial_loss,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "ClassifierModel":
        import base64

        if d.get("format") != "microshear-classifier" or d.get("version") != 1:
            raise ConfigurationError("unrecognized classifier file format")

        def dec(e):
            buf = base64.b64decode(e["data"])
            return np.frombuffer(buf, dtype="<f8").reshape(e["shape"]).copy()

        return ClassifierModel(
            kind=d["kind"],
            target=int(d["target"]),
            patch_size=int(d["patch_size"]),
            num_slices=int(d["num_slices"]),
            slice_mean=dec(d["slice_mean"]),
            slice_std=dec(d["slice_std"]),
            params={k: dec(v) for k, v in d["params"].items()},
            final_loss=float(d.get("final_loss", float("nan"))),
            initial_loss=float(d.get("initial_loss", float("nan"))),
        )


def _magnitude_volume(img: np.ndarray, system: ShearletSystem) -> np.ndarray:
    return np.abs(dsh_transform(img, system).slices)


def build_dataset(data, system: ShearletSystem, target: int, per_image: int,
                  seed: int, patch_size: int = DEFAULT_PATCH,
                  volumes=None):
    """Balanced patch samples for one binary target over a list of images.

    data: list of (image, WavefrontSet) pairs; target: orientation bin or
    EDGE.  Per image, ceil(n/2) positive centers (pixels carrying the target
    bin; any bin for EDGE) and floor(n/2) negative centers are drawn
    uniformly without replacement.  ``volumes`` may carry precomputed
    magnitude volumes aligned with ``data`` to avoid repeated transforms.
    """
    if per_image < 1:
        raise ConfigurationError("per_image must be at least 1")
    rng = np.random.default_rng(seed)
    half = patch_size // 2
    M = system.grid_size
    lo, hi = half, M - half - 1  # inclusive center range
    samples = []
    for idx, (img, wf) in enumerate(data):
        if volumes is not None:
            mags = volumes[idx]
        else:
            mags = _magnitude_volume(np.asarray(img, dtype=float), system)
        pts = wf.points
        if target == EDGE:
            pos_pixels = np.unique(pts[:, :2], axis=0) if len(pts) else np.zeros((0, 2), int)
        else:
            sel = pts[pts[:, 2] == target]
            pos_pixels = np.unique(sel[:, :2], axis=0) if len(sel) else np.zeros((0, 2), int)
        if len(pos_pixels):
            ok = ((pos_pixels[:, 0] >= lo) & (pos_pixels[:, 0] <= hi)
                  & (pos_pixels[:, 1] >= lo) & (pos_pixels[:, 1] <= hi))
            pos_pixels = pos_pixels[ok]
        if len(pos_pixels) == 0:
            name = "EDGE" if target == EDGE else f"bin {target}"
            raise InsufficientDataError(
                f"image {idx}: no positive centers available for {name}"
            )
        n_pos_want = (per_image + 1) // 2
        n_neg_want = per_image // 2
        take_pos = min(n_pos_want, len(pos_pixels))
        pos_idx = rng.choice(len(pos_pixels), size=take_pos, replace=False)

        # negatives: valid centers that are not positive for this target
        pos_set = {(int(r), int(c)) for r, c in pos_pixels}
        negs = []
        guard = 0
        while len(negs) < n_neg_want and guard < 100 * max(1, n_neg_want):
            r = int(rng.integers(lo, hi + 1))
            c = int(rng.integers(lo, hi + 1))
            guard += 1
            if (r, c) in pos_set or (r, c) in negs:
                continue
            negs.append((r, c))

        for i in pos_idx:
            r, c = int(pos_pixels[i, 0]), int(pos_pixels[i, 1])
            feats = mags[:, r - half:r + half + 1, c - half:c + half + 1]
            samples.append(PatchSample(np.transpose(feats, (1, 2, 0)).copy(),
                                       1, (r, c), target))
        for (r, c) in negs:
            feats = mags[:, r - half:r + half + 1, c - half:c + half + 1]
            samples.append(PatchSample(np.transpose(feats, (1, 2, 0)).copy(),
                                       0, (r, c), target))
    return samples


def _init_model(kind, target, patch_size, num_slices, slice_mean, slice_std,
                seed, hidden):
    rng = np.random.default_rng(seed)
    dim = patch_size * patch_size * num_slices
    if kind == LINEAR:
        params = {"w": rng.normal(0.0, 0.01 / np.sqrt(dim), size=dim),
                  "b": np.zeros(())}
    elif kind == MLP1:
        params = {
            "W1": rng.normal(0.0, 1.0 / np.sqrt(dim), size=(hidden, dim)),
            "b1": np.zeros(hidden),
            "w2": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden),
            "b2": np.zeros(()),
        }
    else:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    return ClassifierModel(kind, target, patch_size, num_slices,
                           slice_mean, slice_std, params)


def _forward_backward(model: ClassifierModel, flat: np.ndarray, y: np.ndarray,
                      l2: float):
    """Mean BCE + l2 * |weights|^2 and its parameter gradients on a batch."""
    n = len(flat)
    if model.kind == LINEAR:
        w, b = model.params["w"], model.params["b"]
        z = flat @ w + b
        p = _sigmoid(z)
        loss = _bce(p, y).mean() + l2 * np.sum(w * w)
        dz = (p - y) / n
        grads = {"w": flat.T @ dz + 2 * l2 * w, "b": np.sum(dz)}
    else:
        W1, b1 = model.params["W1"], model.params["b1"]
        w2, b2 = model.params["w2"], model.params["b2"]
        h = np.tanh(flat @ W1.T + b1)
        z = h @ w2 + b2
        p = _sigmoid(z)
        loss = _bce(p, y).mean() + l2 * (np.sum(W1 * W1) + np.sum(w2 * w2))
        dz = (p - y) / n
        dh = np.outer(dz, w2)
        dpre = dh * (1.0 - h * h)
        grads = {
            "W1": dpre.T @ flat + 2 * l2 * W1,
            "b1": dpre.sum(axis=0),
            "w2": h.T @ dz + 2 * l2 * w2,
            "b2": np.sum(dz),
        }
    return loss, grads


def train_binary(data, cfg: TrainConfig, kind: str = LINEAR,
                 hidden: int = 64) -> ClassifierModel:
    """Mini-batch SGD on cross-entropy with an l2 penalty on the weights."""
    cfg.validate()
    if not data:
        raise TrainingError("empty training set")
    labels = np.array([s.label for s in data])
    if labels.min() == labels.max():
        raise TrainingError("training set must contain both labels")
    p_, _, L = data[0].features.shape
    raw = np.stack([s.features for s in data])  # (n, P, P, L)
    slice_mean = raw.mean(axis=(0, 1, 2))
    slice_std = np.maximum(raw.std(axis=(0, 1, 2)), 1e-6)
    model = _init_model(kind, data[0].bin, p_, L, slice_mean, slice_std,
                        cfg.seed, hidden)
    flat = model.standardize(raw)
    y = labels.astype(float)

    init_loss, _ = _forward_backward(model, flat, y, cfg.l2_penalty)
    model.initial_loss = float(init_loss)
    model.loss_history = []
    rng = np.random.default_rng(cfg.seed + 1)
    n = len(flat)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = _forward_backward(model, flat[batch], y[batch],
                                            cfg.l2_penalty)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            for k, g in grads.items():
                model.params[k] = model.params[k] - cfg.learning_rate * g
            epoch_losses.append(float(loss))
        model.loss_history.append(float(np.mean(epoch_losses)))
    final_loss, _ = _forward_backward(model, flat, y, cfg.l2_penalty)
    if not np.isfinite(final_loss):
        raise TrainingError(f"loss diverged at epoch {cfg.epochs}")
    model.final_loss = float(final_loss)
    return model


def predict(model: ClassifierModel, features: np.ndarray) -> float:
    """Probability that a raw (P, P, L) patch is a positive for the target."""
    feats = np.asarray(features, dtype=float)
    if feats.shape != (model.patch_size, model.patch_size, model.num_slices):
        raise DimensionError(
            f"patch shape {feats.shape} does not match model "
            f"({model.patch_size}, {model.patch_size}, {model.num_slices})"
        )
    flat = model.standardize(feats[None])
    return float(_sigmoid(model.scores(flat))[0])


def gradient_check(model: ClassifierModel, sample: PatchSample,
                   seed: int = 0, n_coords: int = 64,
                   step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients
    over a random coordinate subset of the parameters."""
    flat = model.standardize(np.asarray(sample.features, dtype=float)[None])
    y = np.array([float(sample.label)])
    _, grads = _forward_backward(model, flat, y, 0.0)
    rng = np.random.default_rng(seed)
    names = sorted(model.params)
    sizes = [model.params[k].size for k in names]
    total = int(np.sum(sizes))
    coords = rng.choice(total, size=min(n_coords, total), replace=False)
    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for c in coords:
        slot = int(np.searchsorted(offsets, c, side="right") - 1)
        k = names[slot]
        local = int(c - offsets[slot])
        p = model.params[k]
        orig = p.flat[local] if p.ndim else float(p)

        def loss_at(v):
            if p.ndim:
                p.flat[local] = v
            else:
                model.params[k] = np.asarray(v)
            out, _ = _forward_backward(model, flat, y, 0.0)
            if p.ndim:
                p.flat[local] = orig
            else:
                model.params[k] = np.asarray(orig)
            return out

        fd = (loss_at(orig + step) - loss_at(orig - step)) / (2 * step)
        g = grads[k].flat[local] if grads[k].ndim else float(grads[k])
        err = abs(g - fd) / max(1e-8, abs(g) + abs(fd))
        worst = max(worst, err)
    return worst


def classify_image(img: np.ndarray, system: ShearletSystem, models: dict,
                   threshold: float = 0.5, n_bins: int = None) -> WavefrontSet:
    """Emit (pixel, bin) for centers whose EDGE gate and bin classifier both
    clear the threshold; border pixels are never emitted."""
    if EDGE not in models:
        raise ConfigurationError("missing EDGE gate model")
    bin_targets = sorted(k for k in models if k != EDGE)
    if n_bins is None:
        n_bins = len(bin_targets)
    if bin_targets != list(range(n_bins)):
        missing = sorted(set(range(n_bins)) - set(bin_targets))
        raise ConfigurationError(f"missing models for bins {missing}")
    gate = models[EDGE]
    M = system.grid_size
    half = gate.patch_size // 2
    mags = _magnitude_volume(np.asarray(img, dtype=float), system)
    # sliding windows over (row, col), shape (L, M-2h, M-2h, P, P)
    from numpy.lib.stride_tricks import sliding_window_view

    windows = sliding_window_view(mags, (gate.patch_size, gate.patch_size),
                                  axis=(1, 2))
    n_side = M - 2 * half
    ordered = [gate] + [models[b] for b in range(n_bins)]

    def prob_map(model):
        out = np.empty((n_side, n_side))
        for r in range(n_side):
            # (n_side, P, P, L) raw patches for this row of centers
            row = np.transpose(windows[:, r], (1, 2, 3, 0))
            flat = model.standardize(row)
            out[r] = _sigmoid(model.scores(flat))
        return out

    threads = max_threads()
    if threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            maps = list(pool.map(prob_map, ordered))
    else:
        maps = [prob_map(m) for m in ordered]
    edge_ok = maps[0] >= threshold
    pts = []
    for b in range(n_bins):
        keep = edge_ok & (maps[1 + b] >= threshold)
        if keep.any():
            rc = np.argwhere(keep) + half
            pts.append(np.column_stack([rc, np.full(len(rc), b)]))
    if not pts:
        return WavefrontSet.empty(M, n_bins)
    return WavefrontSet(np.vstack(pts), M, n_bins)


def train_all_targets(data, system: ShearletSystem, n_bins: int,
                      per_image: int, cfg: TrainConfig, kind: str = LINEAR,
                      hidden: int = 64, patch_size: int = DEFAULT_PATCH):
    """Train the EDGE gate plus one classifier per bin; shares the transform
    work across targets and trains the independent classifiers concurrently."""
    volumes = [
        _magnitude_volume(np.asarray(img, dtype=float), system)
        for img, _ in data
    ]
    targets = [EDGE] + list(range(n_bins))

    def run(target):
        ds = build_dataset(data, system, target, per_image,
                           seed=cfg.seed + (target + 2) * 7919,
                           patch_size=patch_size, volumes=volumes)
        sub_cfg = TrainConfig(cfg.learning_rate, cfg.batch_size, cfg.epochs,
                              cfg.l2_penalty, cfg.seed + (target + 2))
        return target, train_binary(ds, sub_cfg, kind=kind, hidden=hidden)

    threads = max_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(run, targets))
    else:
        pairs = [run(t) for t in targets]
    return dict(pairs)
