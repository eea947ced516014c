import numpy as np
import pytest

from chromagrip import gesturenet
from chromagrip.errors import CalibrationError, ValidationError
from chromagrip.gesturenet import (GestureLabel, MlpModel, PROTOTYPES, calibrate,
                                   classify, evaluate, forward, gradients,
                                   sample_loss, synthetic_dataset, train)


# --- calibration ---------------------------------------------------------------

def test_calibration_anchors_and_midpoint():
    cal = calibrate([200] * 5, [800] * 5)
    assert np.allclose(cal.apply([200] * 5), 0.0)
    assert np.allclose(cal.apply([800] * 5), 180.0)
    assert np.allclose(cal.apply([500] * 5), 90.0)


def test_calibration_linear_between_random_anchors(rng):
    for _ in range(50):
        lo = rng.uniform(0, 500, size=5)
        hi = lo + rng.uniform(1, 500, size=5)
        cal = calibrate(lo, hi)
        frac = rng.uniform(0, 1, size=5)
        raw = lo + frac * (hi - lo)
        assert np.allclose(cal.apply(raw), frac * 180.0)


def test_calibration_clamps_outside_anchors():
    cal = calibrate([100] * 5, [900] * 5)
    assert np.all(cal.apply([0] * 5) == 0.0)
    assert np.all(cal.apply([2000] * 5) == 180.0)


def test_calibration_error_names_finger():
    with pytest.raises(CalibrationError, match="middle"):
        calibrate([200, 200, 700, 200, 200], [800, 800, 600, 800, 800])


# --- forward pass ----------------------------------------------------------------

def zero_model() -> MlpModel:
    return MlpModel(w1=np.zeros((5, 20)), b1=np.zeros(20),
                    w2=np.zeros((20, 8)), b2=np.zeros(8))


def test_all_zero_model_ties_to_class_zero():
    assert classify(zero_model(), [10, 20, 30, 40, 50]) == GestureLabel.PALM
    scores = forward(zero_model(), [10, 20, 30, 40, 50])
    assert np.allclose(scores, scores[0])


def test_dominant_output_bias_wins():
    for k in range(8):
        model = zero_model()
        model.b2[k] = 10.0
        assert classify(model, [90] * 5) == GestureLabel(k)


def test_forward_deterministic(rng):
    model = MlpModel.initialize(3)
    x = rng.uniform(0, 180, size=5)
    assert np.array_equal(forward(model, x), forward(model, x))


def test_forward_rejects_non_finite():
    with pytest.raises(ValidationError):
        forward(zero_model(), [0.0, 1.0, float("nan"), 3.0, 4.0])


def test_argmax_invariant_under_positive_scaling(rng):
    model = MlpModel.initialize(11)
    for _ in range(20):
        x = rng.uniform(0, 180, size=5)
        scores = forward(model, x)
        assert int(np.argmax(scores)) == int(np.argmax(scores * 37.5))


# --- gradient check ---------------------------------------------------------------

def numerical_gradients(model: MlpModel, x, target, eps=1e-6):
    """Oracle: central finite differences of the sample loss."""
    grads = []
    for name in ("w1", "b1", "w2", "b2"):
        arr = getattr(model, name)
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            up = sample_loss(model, x, target)
            arr[idx] = orig - eps
            down = sample_loss(model, x, target)
            arr[idx] = orig
            g[idx] = (up - down) / (2 * eps)
        grads.append(g)
    return tuple(grads)


def test_gradients_match_central_differences(rng):
    for trial in range(5):
        model = MlpModel.initialize(trial)
        x = rng.uniform(0, 180, size=5)
        target = np.eye(8)[rng.integers(0, 8)]
        analytic = gradients(model, x, target)
        numeric = numerical_gradients(model, x, target)
        for a, n in zip(analytic, numeric):
            # Mixed tolerance: near-zero components are cancellation-bound.
            assert np.all(np.abs(a - n)
                          <= 1e-4 * np.maximum(np.abs(a), np.abs(n)) + 1e-7)


def test_numba_kernel_matches_reference_updates(rng):
    # One epoch of jitted per-sample SGD must equal the numpy update rule.
    x = rng.uniform(0, 180, size=(12, 5))
    y = rng.integers(0, 8, size=12)
    targets = np.eye(8)[y]
    lr = 0.05

    ref = MlpModel.initialize(2)
    for xi, ti in zip(x, targets):
        dw1, db1, dw2, db2 = gradients(ref, xi, ti)
        ref.w1 -= lr * dw1
        ref.b1 -= lr * db1
        ref.w2 -= lr * dw2
        ref.b2 -= lr * db2

    jit = MlpModel.initialize(2)
    gesturenet._sgd_updates(jit.w1, jit.b1, jit.w2, jit.b2,
                            np.ascontiguousarray(x / 180.0),
                            np.ascontiguousarray(targets), len(x), lr)
    for a, b in zip((ref.w1, ref.b1, ref.w2, ref.b2),
                    (jit.w1, jit.b1, jit.w2, jit.b2)):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


# --- training ---------------------------------------------------------------------

def small_dataset(spread=5.0, seed=0):
    return synthetic_dataset(users=4, repetitions=3, spread_deg=spread, seed=seed)


def test_zero_learning_rate_leaves_model_at_init():
    angles, labels = small_dataset()
    model, _ = train(angles, labels, loops=1, learning_rate=0.0, seed=9)
    init = MlpModel.initialize(9)
    assert np.array_equal(model.w1, init.w1)
    assert np.array_equal(model.b1, init.b1)
    assert np.array_equal(model.w2, init.w2)
    assert np.array_equal(model.b2, init.b2)


def test_training_deterministic():
    angles, labels = small_dataset()
    m1, c1 = train(angles, labels, loops=50, learning_rate=0.02, seed=4)
    m2, c2 = train(angles, labels, loops=50, learning_rate=0.02, seed=4)
    assert np.array_equal(m1.w1, m2.w1) and np.array_equal(m1.w2, m2.w2)
    assert np.array_equal(m1.b1, m2.b1) and np.array_equal(m1.b2, m2.b2)
    assert c1 == c2


def test_training_curve_shape_and_loss_decrease():
    angles, labels = small_dataset()
    _, curve = train(angles, labels, loops=400, learning_rate=0.05, seed=1)
    assert len(curve) == 10
    assert curve[-1].holdout_accuracy >= curve[0].holdout_accuracy
    assert curve[-1].train_loss < curve[0].train_loss


def test_training_validation_errors():
    angles, labels = small_dataset()
    with pytest.raises(ValidationError):
        train(angles, labels, loops=0, learning_rate=0.01, seed=0)
    with pytest.raises(ValidationError):
        train(angles, labels, loops=10, learning_rate=-1.0, seed=0)
    with pytest.raises(ValidationError):
        train(np.zeros((0, 5)), np.zeros(0, dtype=int), loops=1,
              learning_rate=0.1, seed=0)
    with pytest.raises(ValidationError):
        train(angles, np.full_like(labels, 9), loops=1, learning_rate=0.1, seed=0)


def test_sample_loop_unit():
    angles, labels = small_dataset()
    m_epoch, _ = train(angles, labels, loops=10, learning_rate=0.02, seed=3,
                       loop_unit="epoch")
    m_sample, _ = train(angles, labels, loops=10, learning_rate=0.02, seed=3,
                        loop_unit="sample")
    # Ten single-sample updates move far less than ten epochs.
    assert not np.allclose(m_epoch.w1, m_sample.w1)


def test_single_class_dataset_trains_but_flags_trivial():
    angles = np.tile(np.asarray(PROTOTYPES[GestureLabel.FIST]), (12, 1))
    labels = np.full(12, int(GestureLabel.FIST))
    model, _ = train(angles, labels, loops=20, learning_rate=0.05, seed=0)
    report = evaluate(model, angles, labels)
    assert report.trivial


# --- evaluation --------------------------------------------------------------------

def trained_model():
    angles, labels = synthetic_dataset(users=8, repetitions=3, spread_deg=5.0,
                                       seed=11)
    model, _ = train(angles, labels, loops=800, learning_rate=0.05, seed=11)
    return model


def test_model_perfect_on_noiseless_prototypes():
    model = trained_model()
    protos = np.asarray([PROTOTYPES[g] for g in GestureLabel], dtype=float)
    labels = np.arange(8)
    report = evaluate(model, protos, labels)
    assert report.average == 1.0
    assert all(row.rate == 1.0 for row in report.rows)


def test_empty_class_reported_na_and_excluded():
    model = trained_model()
    keep = [g for g in GestureLabel if g != GestureLabel.ROCK]
    protos = np.asarray([PROTOTYPES[g] for g in keep], dtype=float)
    labels = np.asarray([int(g) for g in keep])
    report = evaluate(model, protos, labels)
    rock_row = next(r for r in report.rows if r.gesture == "rock")
    assert rock_row.rate is None and rock_row.samples == 0
    assert "rock,0,n/a" in report.to_csv()
    assert report.average == pytest.approx(
        np.mean([r.rate for r in report.rows if r.rate is not None]))


def test_noisy_dataset_scores_below_noiseless():
    model = trained_model()
    clean_x, clean_y = synthetic_dataset(users=10, repetitions=3,
                                         spread_deg=5.0, seed=21)
    noisy_x, noisy_y = synthetic_dataset(users=10, repetitions=3,
                                         spread_deg=20.0, seed=21)
    clean = evaluate(model, clean_x, clean_y)
    noisy = evaluate(model, noisy_x, noisy_y)
    assert noisy.average < clean.average


def test_table_csv_format():
    model = trained_model()
    angles, labels = small_dataset(seed=5)
    text = evaluate(model, angles, labels).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "gesture,samples,recognition_rate"
    assert len(lines) == 10  # 8 gestures + header + average
    assert lines[-1].startswith("average,")


def test_dataset_csv_round_trip(tmp_path):
    angles, labels = small_dataset(seed=6)
    path = tmp_path / "glove.csv"
    gesturenet.save_dataset_csv(path, angles, labels)
    x2, y2 = gesturenet.load_dataset_csv(path)
    assert np.array_equal(angles, x2)
    assert np.array_equal(labels, y2)


def test_model_json_round_trip(tmp_path):
    model = MlpModel.initialize(17)
    model.hyperparams = {"loops": 5, "learning_rate": 0.1}
    path = tmp_path / "model.json"
    model.save(path)
    loaded = MlpModel.load(path)
    assert np.array_equal(model.w1, loaded.w1)
    assert np.array_equal(model.b2, loaded.b2)
    assert loaded.seed == 17
    assert loaded.hyperparams["loops"] == 5
