"""Labelled scene patches: container, synthetic textures, splits and I/O.

Pixels are stored as float32 so that the nine-significant-digit text
rendering of the ``scenes v1`` format round-trips bit-exactly.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import Xoshiro256pp
from ._validation import check_positive_int
from .exceptions import ConfigError, FormatError, UsageError

FORMAT_HEADER = "scenes v1"

TEXTURE_FAMILIES = (
    "horizontal_stripes",
    "vertical_stripes",
    "checkerboard",
    "radial_gradient",
    "diagonal_stripes",
    "gaussian_blob",
    "uniform_ramp",
    "salt_noise",
)

_HIGH = 0.85
_LOW = 0.15


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    n_classes: int
    height: int
    width: int
    n_images: int
    train_ratios: tuple


# Aerial Image Dataset geometry.  Documentation and config validation only;
# the images themselves are not shipped.
AID = DatasetPreset("AID", n_classes=30, height=600, width=600, n_images=10000,
                    train_ratios=(0.2, 0.5))


@dataclass(frozen=True)
class Sample:
    label: int
    pixels: np.ndarray


@dataclass(eq=False)
class Dataset:
    """An ordered collection of equally-sized labelled patches.

    Parameters
    ----------
    images : array of shape (n_samples, height, width)
        Intensities in [0, 1]; stored as float32.
    labels : array of shape (n_samples,)
        Class indices in ``[0, n_classes)``.
    n_classes : int
    """

    images: np.ndarray
    labels: np.ndarray
    n_classes: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float32)
        if images.ndim != 3:
            raise UsageError(f"images must be (n, height, width), got {images.shape}")
        labels = np.asarray(self.labels).astype(np.intp).reshape(-1)
        if labels.shape[0] != images.shape[0]:
            raise UsageError("images and labels disagree in length")
        check_positive_int(self.n_classes, "n_classes")
        if images.size and (not np.all(np.isfinite(images))
                            or images.min() < 0.0 or images.max() > 1.0):
            raise UsageError("pixel values must be finite and within [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise UsageError("labels must lie in [0, n_classes)")
        self.images = images
        self.labels = labels

    @property
    def height(self):
        return self.images.shape[1]

    @property
    def width(self):
        return self.images.shape[2]

    def __len__(self):
        return self.images.shape[0]

    def __getitem__(self, i):
        return Sample(int(self.labels[i]), self.images[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.n_classes == other.n_classes
                and self.images.shape == other.images.shape
                and np.array_equal(self.images, other.images)
                and np.array_equal(self.labels, other.labels))

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.images[indices], self.labels[indices], self.n_classes)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    @classmethod
    def concatenate(cls, a, b):
        if (a.n_classes, a.height, a.width) != (b.n_classes, b.height, b.width):
            raise UsageError("datasets differ in geometry or class count")
        return cls(np.concatenate([a.images, b.images]),
                   np.concatenate([a.labels, b.labels]), a.n_classes)


@dataclass(frozen=True)
class SplitSpec:
    train_ratio: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise UsageError(f"train_ratio must lie in (0, 1), got {self.train_ratio}")


def _texture(family, height, width, rng):
    r = np.arange(height, dtype=np.float64)[:, None]
    c = np.arange(width, dtype=np.float64)[None, :]
    if family == 0:
        return np.where(r % 2 == 0, _HIGH, _LOW) + 0 * c
    if family == 1:
        return np.where(c % 2 == 0, _HIGH, _LOW) + 0 * r
    if family == 2:
        return np.where((r + c) % 2 == 0, _HIGH, _LOW)
    if family == 3:
        cy = (height - 1) / 2 + rng.uniform(-0.15, 0.15) * height
        cx = (width - 1) / 2 + rng.uniform(-0.15, 0.15) * width
        d = np.hypot(r - cy, c - cx)
        return 1.0 - d / d.max()
    if family == 4:
        return np.where((r + c) % 4 < 2, _HIGH, _LOW)
    if family == 5:
        cy = rng.uniform(0.25, 0.75) * (height - 1)
        cx = rng.uniform(0.25, 0.75) * (width - 1)
        sigma = min(height, width) / 4.0
        return np.exp(-((r - cy) ** 2 + (c - cx) ** 2) / (2.0 * sigma ** 2))
    if family == 6:
        return np.broadcast_to(c / (width - 1), (height, width)).copy()
    # salt-noise field
    salt = rng.random_array((height, width)) < 0.1
    return np.where(salt, 1.0, 0.2)


def generate_synthetic(n_classes, per_class, height, width, noise_sigma=0.0, seed=0):
    """Synthetic scene patches, one texture family per class.

    Samples are ordered class by class.  Each patch is its class texture plus
    Gaussian noise of standard deviation ``noise_sigma``, clamped to [0, 1].
    """
    check_positive_int(n_classes, "n_classes")
    if not 2 <= n_classes <= len(TEXTURE_FAMILIES):
        raise UsageError(f"n_classes must lie in [2, {len(TEXTURE_FAMILIES)}]")
    check_positive_int(per_class, "per_class")
    check_positive_int(height, "height", minimum=4)
    check_positive_int(width, "width", minimum=4)
    if not (noise_sigma >= 0 and math.isfinite(noise_sigma)):
        raise UsageError("noise_sigma must be a finite non-negative real")

    rng = Xoshiro256pp.for_stream(seed, "synthetic")
    images = np.empty((n_classes * per_class, height, width), dtype=np.float64)
    labels = np.repeat(np.arange(n_classes), per_class)
    for i, k in enumerate(labels):
        base = _texture(int(k), height, width, rng)
        if noise_sigma > 0:
            base = base + noise_sigma * rng.normal_array((height, width))
        images[i] = np.clip(base, 0.0, 1.0)
    return Dataset(images, labels, n_classes)


def split(ds, spec):
    """Partition ``ds`` into (train, test) according to ``spec``.

    Membership depends only on ``spec.seed``; each part keeps the original
    sample order.
    """
    rng = Xoshiro256pp.for_stream(spec.seed, "split")
    n = len(ds)
    if spec.stratified:
        train_idx = []
        for k in range(ds.n_classes):
            members = np.flatnonzero(ds.labels == k)
            if members.size == 0:
                continue
            n_train = math.floor(spec.train_ratio * members.size)
            if n_train == 0:
                raise ConfigError(
                    f"class {k} gets no training samples at ratio {spec.train_ratio}")
            order = rng.permutation(members.size)
            train_idx.extend(members[order[:n_train]].tolist())
    else:
        n_train = math.floor(spec.train_ratio * n)
        train_idx = rng.permutation(n)[:n_train].tolist()
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(train_idx, dtype=np.intp)] = True
    if mask.all() or not mask.any():
        raise ConfigError("split leaves one side empty")
    return ds.subset(np.flatnonzero(mask)), ds.subset(np.flatnonzero(~mask))


def format_scenes(ds, comments=()):
    lines = [FORMAT_HEADER]
    lines.extend(f"# {c}" for c in comments)
    lines.append(f"samples={len(ds)} height={ds.height} width={ds.width} classes={ds.n_classes}")
    for sample in ds:
        lines.append(f"label={sample.label}")
        for row in sample.pixels:
            lines.append(" ".join(f"{float(v):.9g}" for v in row))
    return "\n".join(lines) + "\n"


def save_scenes(ds, path, comments=()):
    Path(path).write_text(format_scenes(ds, comments))


def _parse_header(text, lineno):
    fields = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"malformed header token {token!r}", lineno)
        try:
            fields[key] = int(value)
        except ValueError:
            raise FormatError(f"header value {token!r} is not an integer", lineno) from None
    expected = {"samples", "height", "width", "classes"}
    if set(fields) != expected:
        raise FormatError(f"header must define exactly {sorted(expected)}", lineno)
    if fields["samples"] < 0 or min(fields["height"], fields["width"], fields["classes"]) < 1:
        raise FormatError("header values out of range", lineno)
    return fields


def parse_scenes(text):
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0][1] != FORMAT_HEADER:
        raise FormatError(f"first line must be {FORMAT_HEADER!r}", lines[0][0] if lines else 1)
    if len(lines) < 2:
        raise FormatError("missing size header", lines[0][0] + 1)
    hdr = _parse_header(lines[1][1], lines[1][0])
    n, h, w, c = hdr["samples"], hdr["height"], hdr["width"], hdr["classes"]
    images = np.empty((n, h, w), dtype=np.float32)
    labels = np.empty(n, dtype=np.intp)
    pos = 2
    last_line = lines[-1][0]
    for s in range(n):
        if pos >= len(lines):
            raise FormatError(f"expected sample {s + 1} of {n}, found end of file", last_line + 1)
        lineno, text_ = lines[pos]
        key, sep, value = text_.partition("=")
        if key != "label" or not sep:
            raise FormatError(f"expected 'label=<k>', got {text_!r}", lineno)
        try:
            label = int(value)
        except ValueError:
            raise FormatError(f"label {value!r} is not an integer", lineno) from None
        if not 0 <= label < c:
            raise FormatError(f"label {label} outside [0, {c})", lineno)
        labels[s] = label
        pos += 1
        for r in range(h):
            if pos >= len(lines):
                raise FormatError(f"sample {s + 1} truncated at row {r + 1} of {h}", last_line + 1)
            lineno, row = lines[pos]
            parts = row.split()
            if len(parts) != w:
                raise FormatError(f"expected {w} values, got {len(parts)}", lineno)
            try:
                values = np.array([float(p) for p in parts], dtype=np.float32)
            except ValueError:
                raise FormatError("non-numeric pixel value", lineno) from None
            if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
                raise FormatError("pixel value outside range [0,1]", lineno)
            images[s, r] = values
            pos += 1
    if pos != len(lines):
        raise FormatError(f"trailing content after {n} samples", lines[pos][0])
    return Dataset(images, labels, c)


def load_scenes(path):
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as exc:
        raise FormatError(f"not a text file: {exc}") from None
    return parse_scenes(text)
