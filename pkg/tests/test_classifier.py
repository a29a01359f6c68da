import numpy as np
import pytest

from microshear.classifier import (
    EDGE,
    ClassifierModel,
    PatchSample,
    TrainConfig,
    build_dataset,
    classify_image,
    gradient_check,
    predict,
    train_all_targets,
    train_binary,
)
from microshear.errors import ConfigurationError, InsufficientDataError, TrainingError
from microshear.phantom import GenerationConfig, generate_phantom
from microshear.shearlet import build_system
from microshear.wavefront import WavefrontSet


@pytest.fixture(scope="module")
def small_setup():
    cfg = GenerationConfig(grid_size=64, orientation_bins=8, num_inner_ellipses=1)
    data = [generate_phantom(100 + i, cfg)[1:] for i in range(3)]
    system = build_system(64, 2)
    return data, system


def _toy_samples(n=40, dim_slices=2, patch=5, seed=0, separable=True):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        label = i % 2
        feats = rng.uniform(0.0, 1.0, size=(patch, patch, dim_slices))
        if separable:
            feats[0, 0, 0] = float(label)  # feature[0] carries the label
        out.append(PatchSample(feats, label, (10, 10), 3))
    return out


def test_build_dataset_balanced(small_setup):
    data, system = small_setup
    samples = build_dataset(data, system, EDGE, per_image=10, seed=1)
    assert len(samples) == 30
    for img_block in range(3):
        block = samples[img_block * 10:(img_block + 1) * 10]
        labels = [s.label for s in block]
        assert sum(labels) == 5
    half = samples[0].features.shape[0] // 2
    for s in samples:
        assert half <= s.center[0] < 64 - half
        assert np.all(s.features >= 0.0)


def test_build_dataset_empty_wavefront_error(small_setup):
    _, system = small_setup
    img = np.zeros((64, 64))
    wf = WavefrontSet.empty(64, 8)
    with pytest.raises(InsufficientDataError):
        build_dataset([(img, wf)], system, EDGE, per_image=10, seed=0)


def test_build_dataset_deterministic(small_setup):
    data, system = small_setup
    a = build_dataset(data, system, 0, per_image=10, seed=42)
    b = build_dataset(data, system, 0, per_image=10, seed=42)
    assert len(a) == len(b)
    for s, t in zip(a, b):
        assert s.center == t.center and s.label == t.label
        assert np.array_equal(s.features, t.features)


def test_train_separable_reaches_full_accuracy():
    samples = _toy_samples(n=60)
    cfg = TrainConfig(learning_rate=0.5, batch_size=8, epochs=50, l2_penalty=0.0,
                      seed=0)
    model = train_binary(samples, cfg, kind="linear")
    correct = sum((predict(model, s.features) >= 0.5) == bool(s.label)
                  for s in samples)
    assert correct == len(samples)
    assert model.final_loss <= model.initial_loss


def test_train_identical_features_learns_base_rate():
    feats = np.full((5, 5, 2), 0.7)
    samples = [PatchSample(feats.copy(), 1 if i < 7 else 0, (9, 9), EDGE)
               for i in range(10)]
    cfg = TrainConfig(learning_rate=0.2, batch_size=10, epochs=300,
                      l2_penalty=0.0, seed=1)
    model = train_binary(samples, cfg, kind="linear")
    p = predict(model, feats)
    assert abs(p - 0.7) <= 0.05


def test_train_zero_epochs_keeps_initialization():
    samples = _toy_samples(n=20)
    cfg = TrainConfig(epochs=0, seed=5)
    model = train_binary(samples, cfg, kind="linear")
    ref = train_binary(samples, cfg, kind="linear")
    assert np.array_equal(model.params["w"], ref.params["w"])
    assert model.final_loss == pytest.approx(model.initial_loss)


def test_train_requires_both_labels():
    samples = [s for s in _toy_samples(20) if s.label == 1]
    with pytest.raises(TrainingError):
        train_binary(samples, TrainConfig(), kind="linear")


def test_train_deterministic():
    samples = _toy_samples(n=40, seed=3)
    cfg = TrainConfig(epochs=10, seed=9)
    m1 = train_binary(samples, cfg, kind="mlp1", hidden=8)
    m2 = train_binary(samples, cfg, kind="mlp1", hidden=8)
    for k in m1.params:
        assert np.array_equal(m1.params[k], m2.params[k])


def test_predict_zero_weights_gives_half():
    model = ClassifierModel("linear", 0, 5, 2, np.zeros(2), np.ones(2),
                            {"w": np.zeros(50), "b": np.zeros(())})
    assert predict(model, np.zeros((5, 5, 2))) == pytest.approx(0.5)


def test_predict_saturated_bias():
    model = ClassifierModel("linear", 0, 5, 2, np.zeros(2), np.ones(2),
                            {"w": np.zeros(50), "b": np.asarray(30.0)})
    assert predict(model, np.zeros((5, 5, 2))) >= 1.0 - 1e-9


def test_predict_hand_computed_sigmoid():
    # w = (1, -1, 0...), b = 0, x = (2, 1, 0...), unit normalization: sigma(1)
    w = np.zeros(50)
    w[0], w[1] = 1.0, -1.0
    model = ClassifierModel("linear", 0, 5, 2, np.zeros(2), np.ones(2),
                            {"w": w, "b": np.zeros(())})
    x = np.zeros((5, 5, 2))
    x[0, 0, 0], x[0, 0, 1] = 2.0, 1.0
    assert predict(model, x) == pytest.approx(1.0 / (1.0 + np.exp(-1.0)), abs=1e-9)


def test_predict_dimension_mismatch():
    model = ClassifierModel("linear", 0, 5, 2, np.zeros(2), np.ones(2),
                            {"w": np.zeros(50), "b": np.zeros(())})
    with pytest.raises(Exception):
        predict(model, np.zeros((7, 7, 2)))


@pytest.mark.parametrize("kind,tol", [("linear", 1e-6), ("mlp1", 1e-4)])
def test_gradient_check(kind, tol):
    rng = np.random.default_rng(0)
    for seed in range(5):
        samples = _toy_samples(n=4, seed=seed, separable=False)
        model = train_binary(samples, TrainConfig(epochs=1, seed=seed), kind=kind,
                             hidden=6)
        err = gradient_check(model, samples[0], seed=seed)
        assert err <= tol


def test_gradient_zero_input_linear():
    samples = _toy_samples(n=10, seed=2)
    model = train_binary(samples, TrainConfig(epochs=0, seed=2), kind="linear")
    # a patch equal to the feature means standardizes to zero; the weight
    # gradient then vanishes (only the bias moves)
    feats = np.broadcast_to(model.slice_mean, (5, 5, 2)).copy()
    sample = PatchSample(feats, 1, (9, 9), 3)
    from microshear.classifier import _forward_backward

    flat = model.standardize(feats[None])
    _, grads = _forward_backward(model, flat, np.array([1.0]), 0.0)
    assert np.abs(grads["w"]).max() == 0.0


def test_classify_blank_image(small_setup):
    data, system = small_setup
    models = train_all_targets(data, system, 8, 10,
                               TrainConfig(epochs=10, seed=0), kind="linear",
                               patch_size=9)
    wf = classify_image(np.zeros((64, 64)), system, models, threshold=0.5,
                        n_bins=8)
    # EDGE gate rejects nearly every center on a constant image
    valid = (64 - 8) ** 2
    assert len(np.unique(wf.points[:, :2], axis=0)) <= 0.01 * valid


def test_classify_threshold_above_one_empty(small_setup):
    data, system = small_setup
    models = train_all_targets(data, system, 8, 10,
                               TrainConfig(epochs=5, seed=0), kind="linear",
                               patch_size=9)
    wf = classify_image(data[0][0], system, models, threshold=1.0 + 1e-9,
                        n_bins=8)
    assert len(wf) == 0


def test_classify_missing_model(small_setup):
    data, system = small_setup
    models = train_all_targets(data, system, 8, 10,
                               TrainConfig(epochs=2, seed=0), kind="linear",
                               patch_size=9)
    del models[3]
    with pytest.raises(ConfigurationError):
        classify_image(data[0][0], system, models, n_bins=8)
    del models[EDGE]
    with pytest.raises(ConfigurationError):
        classify_image(data[0][0], system, models, n_bins=8)


def test_model_json_roundtrip():
    samples = _toy_samples(n=20)
    model = train_binary(samples, TrainConfig(epochs=3, seed=0), kind="mlp1",
                         hidden=4)
    clone = ClassifierModel.from_json_dict(model.to_json_dict())
    assert clone.kind == model.kind and clone.target == model.target
    for k in model.params:
        assert np.array_equal(clone.params[k], model.params[k])
    x = samples[0].features
    assert predict(clone, x) == predict(model, x)


def test_no_cross_bin_label_leakage(small_setup):
    data, system = small_setup
    for target in (0, 3):
        for img, wf in data:
            samples = build_dataset([(img, wf)], system, target, per_image=10,
                                    seed=0)
            assert all(s.bin == target for s in samples)
            truth_pixels = {(int(r), int(c))
                            for r, c, b in wf.points.tolist() if b == target}
            for s in samples:
                if s.label == 1:
                    assert s.center in truth_pixels
                else:
                    assert s.center not in truth_pixels
