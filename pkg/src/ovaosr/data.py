"""Synthetic datasets, deterministic splitting and CSV persistence.

CSV layout: header ``f0,...,f{d-1},label``, one sample per row, features
printed with 17 significant digits, integer labels; ``-1`` marks OOD rows.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError
from .rng import Xoshiro256

OOD_LABEL = -1


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_known_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ParameterError("features must be a 2-D matrix")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ParameterError(f"dataset must have n >= 1 and d >= 1, got {n}x{d}")
        if self.labels.shape != (n,):
            raise ParameterError("labels must have one entry per row")
        if int(self.num_known_classes) < 1:
            raise ParameterError("num_known_classes must be >= 1")
        self.num_known_classes = int(self.num_known_classes)
        if not np.all(np.isfinite(self.features)):
            raise ParameterError("features must be finite")
        bad = (self.labels < OOD_LABEL) | (self.labels >= self.num_known_classes)
        if np.any(bad):
            raise ParameterError(f"label {int(self.labels[bad][0])} outside {{-1..K-1}}")

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def has_ood(self):
        return bool(np.any(self.labels == OOD_LABEL))

    def subset(self, index):
        return Dataset(self.features[index], self.labels[index], self.num_known_classes)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int = 0


def class_means(num_classes, dim, radius):
    """Class centres at equal angles on a circle in the first two coordinates."""
    means = np.zeros((num_classes, dim))
    for k in range(num_classes):
        angle = 2.0 * math.pi * k / num_classes
        means[k, 0] = radius * math.cos(angle)
        means[k, 1] = radius * math.sin(angle)
    return means


def gen_gaussian_mixture(num_classes, per_class, dim, spread, radius, seed):
    """Isotropic Gaussian clusters, rows grouped by class in label order."""
    if num_classes < 1 or per_class < 1:
        raise ParameterError("num_classes and per_class must be >= 1")
    if dim < 2:
        raise ParameterError(f"dim must be >= 2, got {dim}")
    if not spread > 0 or not radius > 0:
        raise ParameterError("spread and radius must be > 0")
    rng = Xoshiro256(seed)
    noise = rng.normals((num_classes * per_class, dim))
    means = class_means(num_classes, dim, radius)
    labels = np.repeat(np.arange(num_classes), per_class)
    features = means[labels] + spread * noise
    return Dataset(features, labels, num_classes)


def gen_ood_ring(count, dim, inner_radius, outer_radius, seed, num_known_classes=1):
    """Annulus samples labelled OOD; each row draws its angle then its radius."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    if dim < 2:
        raise ParameterError(f"dim must be >= 2, got {dim}")
    if not 0 < inner_radius < outer_radius:
        raise ParameterError(
            f"need 0 < inner_radius < outer_radius, got {inner_radius}, {outer_radius}")
    rng = Xoshiro256(seed)
    features = np.zeros((count, dim))
    for i in range(count):
        angle = 2.0 * math.pi * rng.uniform()
        r = inner_radius + (outer_radius - inner_radius) * rng.uniform()
        features[i, 0] = r * math.cos(angle)
        features[i, 1] = r * math.sin(angle)
    return Dataset(features, np.full(count, OOD_LABEL), num_known_classes)


def split(ds, spec):
    """Seeded shuffle, then the first ``floor(fraction * n)`` rows go to train."""
    n = len(ds)
    if not 0 < spec.train_fraction < 1:
        raise ParameterError(f"train_fraction must lie in (0, 1), got {spec.train_fraction}")
    n_train = math.floor(spec.train_fraction * n)
    if not 1 <= n_train <= n - 1:
        raise ParameterError(
            f"train_fraction={spec.train_fraction} leaves an empty side for n={n}")
    perm = Xoshiro256(spec.seed).permutation(n)
    return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))


def save_csv(ds, path):
    d = ds.dim
    lines = [",".join([f"f{j}" for j in range(d)] + ["label"])]
    for row, label in zip(ds.features, ds.labels):
        lines.append(",".join(format(float(v), ".17g") for v in row) + f",{int(label)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path, num_known_classes=None):
    """Read a dataset; K defaults to ``max(label) + 1`` (at least 1)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("missing header", line=1)
    header = lines[0].split(",")
    d = len(header) - 1
    expected = [f"f{j}" for j in range(d)] + ["label"]
    if d < 1 or header != expected:
        raise FormatError(f"malformed header {lines[0]!r}", line=1)
    feats, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise FormatError(f"expected {d + 1} cells, found {len(cells)}", line=lineno)
        try:
            row = [float(c) for c in cells[:d]]
        except ValueError:
            raise FormatError(f"non-numeric feature in {line!r}", line=lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise FormatError("non-finite feature", line=lineno)
        try:
            label = int(cells[d])
        except ValueError:
            raise FormatError(f"non-integer label {cells[d]!r}", line=lineno) from None
        feats.append(row)
        labels.append(label)
    if not feats:
        raise FormatError("no samples")
    labels = np.array(labels, dtype=np.int64)
    if num_known_classes is None:
        num_known_classes = max(int(labels.max()) + 1, 1)
    try:
        return Dataset(np.array(feats), labels, num_known_classes)
    except ParameterError as exc:
        raise FormatError(str(exc)) from None
