"""Flex-glove gesture recognition.

A 5-20-8 multilayer perceptron (sigmoid hidden and output layers, squared
error loss) maps five finger bend angles onto eight static gestures.
Training is classical per-sample gradient descent in fixed dataset order;
one "loop" is a full pass over the dataset by default, switchable to a
single-sample update.  The inner loop is numba-compiled: the configured
regime of 100 000 loops over a few hundred samples is hundreds of millions
of updates, far beyond interpreted numpy.

Per-user calibration maps raw sensor readings onto [0, 180] degrees from
two anchor poses (open palm and fist).  A synthetic dataset generator
provides per-gesture angle clusters for training and evaluation; the
prototype table below doubles as the preset poses on the operator UI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from numba import njit

from .errors import CalibrationError, ValidationError

INPUT_DIM = 5
OUTPUT_DIM = 8
HIDDEN_UNITS = 20
ANGLE_MAX = 180.0

FINGERS = ("thumb", "index", "middle", "ring", "little")


class GestureLabel(IntEnum):
    PALM = 0
    GUN = 1
    OK = 2
    CALL_ME = 3
    ROCK = 4
    FIST = 5
    THUMB_UP = 6
    INDEX_UP = 7

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "GestureLabel":
        try:
            return cls[key.strip().upper()]
        except KeyError:
            raise ValidationError(f"unknown gesture label: {key}") from None


# Canonical bend angles (degrees) per gesture: thumb, index, middle, ring,
# little.  0 is straight, 180 fully bent.  Gun and index-up differ mostly in
# the thumb, which is also where a flex glove genuinely struggles.
PROTOTYPES: dict[GestureLabel, tuple[float, float, float, float, float]] = {
    GestureLabel.PALM: (5, 5, 5, 5, 5),
    GestureLabel.GUN: (15, 10, 160, 160, 160),
    GestureLabel.OK: (100, 110, 25, 20, 20),
    GestureLabel.CALL_ME: (10, 165, 165, 165, 15),
    GestureLabel.ROCK: (80, 10, 165, 165, 10),
    GestureLabel.FIST: (170, 170, 170, 170, 170),
    GestureLabel.THUMB_UP: (10, 170, 170, 170, 170),
    GestureLabel.INDEX_UP: (75, 10, 165, 165, 165),
}


@dataclass(frozen=True)
class GloveSample:
    raw: tuple[float, float, float, float, float]
    angles: tuple[float, float, float, float, float]

    def __post_init__(self):
        if any(not 0.0 <= a <= ANGLE_MAX for a in self.angles):
            raise ValidationError("bend angles must lie in [0, 180] degrees")


@dataclass(frozen=True)
class CalibrationMap:
    raw_min: tuple[float, float, float, float, float]
    raw_max: tuple[float, float, float, float, float]

    def apply(self, raw) -> np.ndarray:
        raw = np.asarray(raw, dtype=np.float64)
        lo = np.asarray(self.raw_min)
        hi = np.asarray(self.raw_max)
        angles = (raw - lo) * ANGLE_MAX / (hi - lo)
        return np.clip(angles, 0.0, ANGLE_MAX)


def calibrate(open_palm_raw, fist_raw) -> CalibrationMap:
    """Build the per-finger raw -> degrees map from the two anchor poses."""
    lo = np.asarray(open_palm_raw, dtype=np.float64)
    hi = np.asarray(fist_raw, dtype=np.float64)
    if lo.shape != (INPUT_DIM,) or hi.shape != (INPUT_DIM,):
        raise CalibrationError("calibration needs five readings per pose")
    for i, name in enumerate(FINGERS):
        if not lo[i] < hi[i]:
            raise CalibrationError(
                f"{name}: fist reading ({hi[i]}) must exceed open reading ({lo[i]})")
    return CalibrationMap(tuple(lo), tuple(hi))


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    activation: str = "sigmoid"
    seed: int | None = None
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        hidden = self.w1.shape[1]
        if (self.w1.shape[0] != INPUT_DIM or self.b1.shape != (hidden,)
                or self.w2.shape != (hidden, OUTPUT_DIM)
                or self.b2.shape != (OUTPUT_DIM,)):
            raise ValidationError("inconsistent model dimensions")
        if self.activation != "sigmoid":
            raise ValidationError(f"unsupported activation: {self.activation}")

    @classmethod
    def initialize(cls, seed: int, hidden_units: int = HIDDEN_UNITS) -> "MlpModel":
        rng = np.random.default_rng(seed)
        return cls(
            w1=rng.uniform(-0.5, 0.5, size=(INPUT_DIM, hidden_units)),
            b1=rng.uniform(-0.5, 0.5, size=hidden_units),
            w2=rng.uniform(-0.5, 0.5, size=(hidden_units, OUTPUT_DIM)),
            b2=rng.uniform(-0.5, 0.5, size=OUTPUT_DIM),
            seed=seed,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({
            "input_dim": INPUT_DIM,
            "hidden_units": int(self.w1.shape[1]),
            "output_dim": OUTPUT_DIM,
            "activation": self.activation,
            "seed": self.seed,
            "hyperparams": self.hyperparams,
            "labels": [g.key for g in GestureLabel],
            "weights": {
                "w1": self.w1.tolist(), "b1": self.b1.tolist(),
                "w2": self.w2.tolist(), "b2": self.b2.tolist(),
            },
        }, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        data = json.loads(Path(path).read_text())
        w = data["weights"]
        return cls(
            w1=np.asarray(w["w1"], dtype=np.float64),
            b1=np.asarray(w["b1"], dtype=np.float64),
            w2=np.asarray(w["w2"], dtype=np.float64),
            b2=np.asarray(w["b2"], dtype=np.float64),
            activation=data.get("activation", "sigmoid"),
            seed=data.get("seed"),
            hyperparams=data.get("hyperparams", {}),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def forward(model: MlpModel, angles) -> np.ndarray:
    """Class scores for one sample of five bend angles."""
    x = np.asarray(angles, dtype=np.float64)
    if x.shape != (INPUT_DIM,):
        raise ValidationError("expected five bend angles")
    if not np.all(np.isfinite(x)):
        raise ValidationError("bend angles must be finite")
    a1 = _sigmoid(x / ANGLE_MAX @ model.w1 + model.b1)
    return _sigmoid(a1 @ model.w2 + model.b2)


def classify(model: MlpModel, angles) -> GestureLabel:
    """Argmax class; ties go to the lowest class index."""
    return GestureLabel(int(np.argmax(forward(model, angles))))


def sample_loss(model: MlpModel, angles, target: np.ndarray) -> float:
    out = forward(model, angles)
    return 0.5 * float(np.sum((out - target) ** 2))


def gradients(model: MlpModel, angles, target: np.ndarray):
    """Analytic loss gradients for one sample: (dw1, db1, dw2, db2)."""
    x = np.asarray(angles, dtype=np.float64) / ANGLE_MAX
    a1 = _sigmoid(x @ model.w1 + model.b1)
    out = _sigmoid(a1 @ model.w2 + model.b2)
    delta2 = (out - target) * out * (1.0 - out)
    dw2 = np.outer(a1, delta2)
    db2 = delta2
    delta1 = (model.w2 @ delta2) * a1 * (1.0 - a1)
    dw1 = np.outer(x, delta1)
    db1 = delta1
    return dw1, db1, dw2, db2


@njit(cache=True)
def _sgd_updates(w1, b1, w2, b2, x, targets, n_updates, lr):  # pragma: no cover
    n = x.shape[0]
    d_in = w1.shape[0]
    hidden = w1.shape[1]
    d_out = w2.shape[1]
    a1 = np.empty(hidden)
    out = np.empty(d_out)
    delta2 = np.empty(d_out)
    for u in range(n_updates):
        i = u % n
        for j in range(hidden):
            z = b1[j]
            for k in range(d_in):
                z += x[i, k] * w1[k, j]
            a1[j] = 1.0 / (1.0 + math.exp(-z))
        for j in range(d_out):
            z = b2[j]
            for k in range(hidden):
                z += a1[k] * w2[k, j]
            out[j] = 1.0 / (1.0 + math.exp(-z))
        for j in range(d_out):
            delta2[j] = (out[j] - targets[i, j]) * out[j] * (1.0 - out[j])
        for k in range(hidden):
            d1 = 0.0
            for j in range(d_out):
                d1 += w2[k, j] * delta2[j]
                w2[k, j] -= lr * a1[k] * delta2[j]
            d1 *= a1[k] * (1.0 - a1[k])
            for m in range(d_in):
                w1[m, k] -= lr * x[i, m] * d1
            b1[k] -= lr * d1
        for j in range(d_out):
            b2[j] -= lr * delta2[j]


def _as_dataset(angles, labels):
    x = np.asarray(angles, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != INPUT_DIM or x.shape[0] != y.shape[0]:
        raise ValidationError("dataset must be (n, 5) angles with n labels")
    if x.shape[0] == 0:
        raise ValidationError("dataset is empty")
    if np.any((y < 0) | (y >= OUTPUT_DIM)):
        raise ValidationError("labels must lie in [0, 8)")
    return x, y


def _stratified_split(y: np.ndarray, holdout_fraction: float,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    train_idx, hold_idx = [], []
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        n_hold = int(round(len(idx) * holdout_fraction))
        if len(idx) > 1:
            n_hold = min(max(n_hold, 1), len(idx) - 1)
        else:
            n_hold = 0
        hold_idx.extend(idx[:n_hold])
        train_idx.extend(idx[n_hold:])
    return np.sort(np.asarray(train_idx)), np.sort(np.asarray(hold_idx))


def accuracy(model: MlpModel, angles, labels) -> float:
    x, y = _as_dataset(angles, labels)
    a1 = _sigmoid(x / ANGLE_MAX @ model.w1 + model.b1)
    scores = _sigmoid(a1 @ model.w2 + model.b2)
    return float(np.mean(np.argmax(scores, axis=1) == y))


def mean_loss(model: MlpModel, angles, labels) -> float:
    x, y = _as_dataset(angles, labels)
    a1 = _sigmoid(x / ANGLE_MAX @ model.w1 + model.b1)
    scores = _sigmoid(a1 @ model.w2 + model.b2)
    targets = np.eye(OUTPUT_DIM)[y]
    return 0.5 * float(np.mean(np.sum((scores - targets) ** 2, axis=1)))


@dataclass
class CurvePoint:
    loop: int
    holdout_accuracy: float
    train_loss: float


def train(angles, labels, loops: int, learning_rate: float, seed: int,
          holdout_fraction: float = 0.25, loop_unit: str = "epoch",
          hidden_units: int = HIDDEN_UNITS) -> tuple[MlpModel, list[CurvePoint]]:
    """Per-sample gradient descent; returns the model and a 10-point
    held-out accuracy curve sampled every ``loops / 10``.

    ``loop_unit`` selects what one loop means: a full pass over the
    training set ("epoch", the default) or a single sample update
    ("sample").
    """
    x, y = _as_dataset(angles, labels)
    if loops <= 0:
        raise ValidationError("loops must be positive")
    if learning_rate < 0:
        # lr = 0 is allowed: it makes training a deliberate no-op.
        raise ValidationError("learning_rate must be non-negative")
    if loop_unit not in ("epoch", "sample"):
        raise ValidationError("loop_unit must be 'epoch' or 'sample'")

    rng = np.random.default_rng(seed)
    model = MlpModel.initialize(seed, hidden_units=hidden_units)
    model.hyperparams = {"loops": loops, "learning_rate": learning_rate,
                         "loop_unit": loop_unit,
                         "holdout_fraction": holdout_fraction}

    train_idx, hold_idx = _stratified_split(y, holdout_fraction, rng)
    if len(hold_idx) == 0:
        hold_idx = train_idx  # tiny dataset: report training accuracy
    x_train, y_train = x[train_idx], y[train_idx]
    x_hold, y_hold = x[hold_idx], y[hold_idx]

    x_scaled = np.ascontiguousarray(x_train / ANGLE_MAX)
    targets = np.ascontiguousarray(np.eye(OUTPUT_DIM)[y_train])
    per_loop = len(x_train) if loop_unit == "epoch" else 1

    checkpoints = sorted({max(1, (loops * k) // 10) for k in range(1, 11)})
    curve: list[CurvePoint] = []
    done = 0
    for cp in checkpoints:
        _sgd_updates(model.w1, model.b1, model.w2, model.b2,
                     x_scaled, targets, (cp - done) * per_loop, learning_rate)
        done = cp
        curve.append(CurvePoint(
            loop=cp,
            holdout_accuracy=accuracy(model, x_hold, y_hold),
            train_loss=mean_loss(model, x_train, y_train)))
    return model, curve


def synthetic_dataset(users: int = 20, repetitions: int = 3,
                      spread_deg: float = 5.0, seed: int = 0):
    """Per-gesture angle clusters: a per-user anatomical offset plus
    per-sample jitter around each gesture prototype, clipped to [0, 180]."""
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for _ in range(users):
        user_bias = rng.normal(0.0, spread_deg, size=INPUT_DIM)
        for gesture in GestureLabel:
            proto = np.asarray(PROTOTYPES[gesture], dtype=np.float64)
            for _ in range(repetitions):
                sample = proto + user_bias + rng.normal(0.0, spread_deg, INPUT_DIM)
                rows.append(np.clip(sample, 0.0, ANGLE_MAX))
                labels.append(int(gesture))
    return np.asarray(rows), np.asarray(labels, dtype=np.int64)


def save_dataset_csv(path: str | Path, angles, labels) -> None:
    x, y = _as_dataset(angles, labels)
    lines = [",".join(FINGERS) + ",label"]
    for row, label in zip(x, y):
        lines.append(",".join(repr(float(a)) for a in row)
                     + f",{GestureLabel(int(label)).key}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset_csv(path: str | Path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split(",")[-1] != "label":
        raise ValidationError("dataset CSV needs a 5-angle header plus 'label'")
    rows, labels = [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != INPUT_DIM + 1:
            raise ValidationError(f"bad dataset row: {line!r}")
        rows.append([float(p) for p in parts[:INPUT_DIM]])
        labels.append(int(GestureLabel.from_key(parts[INPUT_DIM])))
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.int64)


@dataclass
class ClassRate:
    gesture: str
    samples: int
    rate: float | None  # None for an empty class ("n/a")


@dataclass
class EvaluationReport:
    rows: list[ClassRate]
    average: float
    trivial: bool  # single-class dataset: accuracy is uninformative

    def to_csv(self) -> str:
        lines = ["gesture,samples,recognition_rate"]
        for row in self.rows:
            rate = "n/a" if row.rate is None else f"{100.0 * row.rate:.2f}%"
            lines.append(f"{row.gesture},{row.samples},{rate}")
        lines.append(f"average,{sum(r.samples for r in self.rows)},"
                     f"{100.0 * self.average:.2f}%")
        return "\n".join(lines) + "\n"


def evaluate(model: MlpModel, angles, labels) -> EvaluationReport:
    """Per-gesture recognition rates; empty classes are n/a and excluded
    from the average."""
    x, y = _as_dataset(angles, labels)
    a1 = _sigmoid(x / ANGLE_MAX @ model.w1 + model.b1)
    predicted = np.argmax(_sigmoid(a1 @ model.w2 + model.b2), axis=1)

    rows: list[ClassRate] = []
    rates = []
    for gesture in GestureLabel:
        idx = np.nonzero(y == int(gesture))[0]
        if len(idx) == 0:
            rows.append(ClassRate(gesture.key, 0, None))
            continue
        rate = float(np.mean(predicted[idx] == int(gesture)))
        rows.append(ClassRate(gesture.key, len(idx), rate))
        rates.append(rate)
    return EvaluationReport(rows=rows,
                            average=float(np.mean(rates)) if rates else 0.0,
                            trivial=len(np.unique(y)) < 2)
