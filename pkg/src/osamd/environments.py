"""Non-stationary labelled streams.

Rounds are indexed ``t = 1..T``. Binary labels are ``+1``/``-1``; multiclass
labels are class indices.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

__all__ = [
    "RotatingGaussianConfig",
    "MulticlassRotatingConfig",
    "LabelFlipConfig",
    "CsvStreamConfig",
    "StreamConfig",
    "CsvLoadError",
    "rotation_angle",
    "rotated_centers",
    "gaussian_sample",
    "gaussian_batch",
    "multiclass_centers",
    "multiclass_sample",
    "label_flip_sample",
    "label_flip_label",
    "csv_stream",
    "iter_stream",
    "pretrain_samples",
    "horizon_of",
]


@dataclass(frozen=True)
class RotatingGaussianConfig:
    """Two isotropic Gaussian classes whose centres rotate about the origin.

    Class ``+1`` is drawn around ``center_inner`` and class ``-1`` around
    ``center_outer``.
    """

    center_inner: tuple[float, float] = (5.0, 0.0)
    center_outer: tuple[float, float] = (15.0, 0.0)
    covariance_scale: float = 3.0
    total_rotation: float = math.pi
    horizon: int = 2000
    class_balance: float = 0.5
    augment_bias: bool = True
    n_pretrain: int = 2000

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.covariance_scale < 0:
            raise ValueError("covariance_scale must be nonnegative")
        if not 0.0 <= self.class_balance <= 1.0:
            raise ValueError("class_balance must be a probability")
        if self.n_pretrain < 0:
            raise ValueError("n_pretrain must be nonnegative")

    @property
    def dim(self) -> int:
        return 3 if self.augment_bias else 2


@dataclass(frozen=True)
class MulticlassRotatingConfig:
    """``n_classes`` Gaussian blobs evenly spaced on a circle, rotating together.

    A synthetic multiclass test bed, separate from the two-class drift setting.
    """

    n_classes: int = 3
    radius: float = 10.0
    covariance_scale: float = 1.0
    total_rotation: float = math.pi / 2
    horizon: int = 2000
    augment_bias: bool = True
    n_pretrain: int = 2000

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.covariance_scale < 0:
            raise ValueError("covariance_scale must be nonnegative")

    @property
    def dim(self) -> int:
        return 3 if self.augment_bias else 2


@dataclass(frozen=True)
class LabelFlipConfig:
    """Two points whose labels swap halfway through the stream.

    For ``t <= T/2`` ``point_a`` is class ``+1`` and ``point_b`` class ``-1``;
    afterwards the labels are reversed. No bias coordinate is appended.
    """

    horizon: int = 2000
    point_a: tuple[float, float] = (-1.0, 0.0)
    point_b: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.horizon < 2 or self.horizon % 2:
            raise ValueError(f"horizon must be a positive even integer, got {self.horizon}")

    @property
    def dim(self) -> int:
        return len(self.point_a)


@dataclass(frozen=True)
class CsvStreamConfig:
    """Rows of a headed CSV file, in file order.

    ``label_column`` and ``feature_columns`` accept header names or 0-based
    indices; by default every non-label column is a feature.
    """

    path: str
    label_column: Union[str, int] = "label"
    feature_columns: Sequence[Union[str, int]] | None = None
    augment_bias: bool = False
    multiclass: bool = False
    n_pretrain: int = 0


StreamConfig = Union[RotatingGaussianConfig, MulticlassRotatingConfig, LabelFlipConfig,
                     CsvStreamConfig]


class CsvLoadError(ValueError):
    pass


def _check_round(t: int, horizon: int):
    if not 1 <= t <= horizon:
        raise ValueError(f"round index {t} outside [1, {horizon}]")


def rotation_angle(total_rotation: float, horizon: int, t: int) -> float:
    """``total_rotation * (t - 1) / (T - 1)``; zero throughout when ``T == 1``."""
    if horizon == 1:
        return 0.0
    return total_rotation * (t - 1) / (horizon - 1)


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def rotated_centers(config: RotatingGaussianConfig, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Class ``+1`` and class ``-1`` centres at round ``t``."""
    _check_round(t, config.horizon)
    rot = _rotation(rotation_angle(config.total_rotation, config.horizon, t))
    return rot @ np.asarray(config.center_inner, float), rot @ np.asarray(config.center_outer, float)


def _augment(x: np.ndarray, augment: bool) -> np.ndarray:
    return np.append(x, 1.0) if augment else x


def gaussian_sample(config: RotatingGaussianConfig, t: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, int]:
    inner, outer = rotated_centers(config, t)
    y = 1 if rng.random() < config.class_balance else -1
    center = inner if y == 1 else outer
    x = center + math.sqrt(config.covariance_scale) * rng.standard_normal(2)
    return _augment(x, config.augment_bias), y


def gaussian_batch(config: RotatingGaussianConfig, t: int, rng: np.random.Generator,
                   n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` independent draws from round ``t``'s distribution, as arrays."""
    inner, outer = rotated_centers(config, t)
    y = np.where(rng.random(n) < config.class_balance, 1, -1)
    centers = np.where((y == 1)[:, None], inner, outer)
    X = centers + math.sqrt(config.covariance_scale) * rng.standard_normal((n, 2))
    if config.augment_bias:
        X = np.column_stack([X, np.ones(n)])
    return X, y


def multiclass_centers(config: MulticlassRotatingConfig, t: int) -> np.ndarray:
    _check_round(t, config.horizon)
    base = 2 * math.pi * np.arange(config.n_classes) / config.n_classes
    ang = base + rotation_angle(config.total_rotation, config.horizon, t)
    return config.radius * np.column_stack([np.cos(ang), np.sin(ang)])


def multiclass_sample(config: MulticlassRotatingConfig, t: int,
                      rng: np.random.Generator) -> tuple[np.ndarray, int]:
    centers = multiclass_centers(config, t)
    y = int(rng.integers(config.n_classes))
    x = centers[y] + math.sqrt(config.covariance_scale) * rng.standard_normal(2)
    return _augment(x, config.augment_bias), y


def label_flip_label(config: LabelFlipConfig, t: int, is_point_a: bool) -> int:
    _check_round(t, config.horizon)
    first_half = t <= config.horizon // 2
    return 1 if is_point_a == first_half else -1


def label_flip_sample(config: LabelFlipConfig, t: int,
                      rng: np.random.Generator) -> tuple[np.ndarray, int]:
    is_a = bool(rng.random() < 0.5)
    point = config.point_a if is_a else config.point_b
    return np.asarray(point, dtype=np.float64), label_flip_label(config, t, is_a)


def _resolve_column(spec, header: list[str], path) -> int:
    if isinstance(spec, int):
        if not 0 <= spec < len(header):
            raise CsvLoadError(f"{path}: column index {spec} out of range")
        return spec
    try:
        return header.index(spec)
    except ValueError:
        raise CsvLoadError(f"{path}: no column named {spec!r}") from None


def _parse_label(raw: str, multiclass: bool, row: int, path) -> int:
    text = raw.strip().replace("−", "-")
    try:
        value = int(text)
    except ValueError:
        raise CsvLoadError(f"{path}: row {row}: label {raw!r} is not an integer") from None
    if multiclass:
        if value < 0:
            raise CsvLoadError(f"{path}: row {row}: class index {value} is negative")
    elif value not in (1, -1):
        raise CsvLoadError(f"{path}: row {row}: binary label must be -1 or 1, got {raw!r}")
    return value


def csv_stream(config: CsvStreamConfig) -> Iterator[tuple[np.ndarray, int]]:
    """Yield ``(x, y)`` for each data row; row numbers in errors count the header as row 1."""
    path = Path(config.path)
    if not path.is_file():
        raise CsvLoadError(f"CSV stream file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvLoadError(f"{path}: empty file") from None
        label_idx = _resolve_column(config.label_column, header, path)
        if config.feature_columns is None:
            feat_idx = [i for i in range(len(header)) if i != label_idx]
        else:
            feat_idx = [_resolve_column(c, header, path) for c in config.feature_columns]
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise CsvLoadError(f"{path}: row {row_no}: expected {len(header)} fields, "
                                   f"got {len(row)}")
            x = np.empty(len(feat_idx))
            for k, i in enumerate(feat_idx):
                try:
                    x[k] = float(row[i])
                except ValueError:
                    raise CsvLoadError(f"{path}: row {row_no}, column {header[i]!r}: "
                                       f"malformed number {row[i]!r}") from None
                if not math.isfinite(x[k]):
                    raise CsvLoadError(f"{path}: row {row_no}, column {header[i]!r}: "
                                       f"non-finite value")
            y = _parse_label(row[label_idx], config.multiclass, row_no, path)
            yield _augment(x, config.augment_bias), y


def horizon_of(config: StreamConfig) -> int:
    if isinstance(config, CsvStreamConfig):
        return sum(1 for _ in csv_stream(config)) - config.n_pretrain
    return config.horizon


def pretrain_samples(config: StreamConfig, rng: np.random.Generator) -> list:
    """Labelled source-domain draws made before round 1.

    Gaussian streams draw ``n_pretrain`` samples from round 1's distribution.
    CSV streams use their first ``n_pretrain`` rows. The label-flip stream
    has no pretraining set.
    """
    if isinstance(config, RotatingGaussianConfig):
        return [gaussian_sample(config, 1, rng) for _ in range(config.n_pretrain)]
    if isinstance(config, MulticlassRotatingConfig):
        return [multiclass_sample(config, 1, rng) for _ in range(config.n_pretrain)]
    if isinstance(config, CsvStreamConfig):
        out = []
        for i, item in enumerate(csv_stream(config)):
            if i >= config.n_pretrain:
                break
            out.append(item)
        return out
    return []


def iter_stream(config: StreamConfig, rng: np.random.Generator) -> Iterator[tuple[int, np.ndarray, int]]:
    """Yield ``(t, x_t, y_t)`` for ``t = 1..T``."""
    if isinstance(config, RotatingGaussianConfig):
        for t in range(1, config.horizon + 1):
            yield (t, *gaussian_sample(config, t, rng))
    elif isinstance(config, MulticlassRotatingConfig):
        for t in range(1, config.horizon + 1):
            yield (t, *multiclass_sample(config, t, rng))
    elif isinstance(config, LabelFlipConfig):
        for t in range(1, config.horizon + 1):
            yield (t, *label_flip_sample(config, t, rng))
    elif isinstance(config, CsvStreamConfig):
        rows = csv_stream(config)
        for t, (x, y) in enumerate(rows, start=1 - config.n_pretrain):
            if t >= 1:
                yield t, x, y
    else:
        raise TypeError(f"unknown stream config {type(config).__name__}")
