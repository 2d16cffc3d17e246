"""Hinge losses, linear scores and multiclass margins.

Binary labels are ``+1``/``-1``. Multiclass weights are ``(n_classes, dim)``
arrays whose rows score one class each; classes are integer indices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_vector

__all__ = [
    "HingeSpec",
    "linear_score",
    "hinge_value",
    "hinge_gradient",
    "hinge_value_and_gradient",
    "multiclass_scores",
    "multiclass_margin",
    "confidence_score",
    "top_competitor",
    "multiclass_hinge_value",
    "multiclass_hinge_gradient",
    "multiclass_hinge_value_and_gradient",
]


@dataclass(frozen=True)
class HingeSpec:
    """``max{0, margin_target - y w.x} + penalty_C * ||w||^2``.

    With ``penalize_bias=False`` the last coordinate (the bias weight of an
    augmented feature vector) is left out of the penalty.
    """

    margin_target: float = 1.0
    penalty_C: float = 0.0
    penalize_bias: bool = True

    def __post_init__(self):
        if not self.margin_target > 0:
            raise ValueError(f"margin_target must be positive, got {self.margin_target}")
        if not self.penalty_C >= 0:
            raise ValueError(f"penalty_C must be nonnegative, got {self.penalty_C}")

    def penalty(self, w: np.ndarray) -> float:
        if self.penalty_C == 0.0:
            return 0.0
        v = w if self.penalize_bias else w[..., :-1]
        return self.penalty_C * float(np.sum(v * v))

    def penalty_gradient(self, w: np.ndarray) -> np.ndarray:
        g = (2.0 * self.penalty_C) * w
        if not self.penalize_bias:
            g[..., -1] = 0.0
        return g


def _check_label(y) -> int:
    if y not in (1, -1):
        raise ValueError(f"binary label must be +1 or -1, got {y!r}")
    return int(y)


def _check_pair(w, x) -> tuple[np.ndarray, np.ndarray]:
    w = as_vector(w)
    x = as_vector(x, "x")
    if w.shape[-1] != x.shape[-1] or x.ndim != 1:
        raise ValueError(f"dimension mismatch: w {w.shape} vs x {x.shape}")
    return w, x


def linear_score(w, x) -> float:
    """Soft prediction ``w.x``."""
    w, x = _check_pair(w, x)
    if w.ndim != 1:
        raise ValueError("linear_score expects a weight vector")
    return float(w @ x)


def hinge_value_and_gradient(spec: HingeSpec, w: np.ndarray, x: np.ndarray,
                             y: int) -> tuple[float, np.ndarray]:
    # unchecked; callers validate
    z = y * float(w @ x)
    grad = spec.penalty_gradient(w)
    if z < spec.margin_target:
        grad -= y * x
        return spec.margin_target - z + spec.penalty(w), grad
    return spec.penalty(w), grad


def hinge_value(spec: HingeSpec, w, x, y) -> float:
    w, x = _check_pair(w, x)
    return hinge_value_and_gradient(spec, w, x, _check_label(y))[0]


def hinge_gradient(spec: HingeSpec, w, x, y) -> np.ndarray:
    """Subgradient of :func:`hinge_value`; the flat branch is taken at the kink."""
    w, x = _check_pair(w, x)
    return hinge_value_and_gradient(spec, w, x, _check_label(y))[1]


def multiclass_scores(W, x) -> np.ndarray:
    W, x = _check_pair(W, x)
    if W.ndim != 2 or W.shape[0] < 2:
        raise ValueError("multiclass weights must have shape (n_classes >= 2, dim)")
    return W @ x


def _check_scores(scores) -> np.ndarray:
    s = as_vector(scores, "scores")
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need a 1-D score vector with at least two classes")
    return s


def top_competitor(scores: np.ndarray, cls: int) -> int:
    """Highest-scoring class other than ``cls``; ties go to the lowest index."""
    masked = np.array(scores, dtype=np.float64, copy=True)
    masked[cls] = -np.inf
    return int(np.argmax(masked))


def multiclass_margin(scores, true_class: int) -> float:
    """Score of ``true_class`` minus the best competing score."""
    s = _check_scores(scores)
    if not 0 <= true_class < s.size:
        raise ValueError(f"class index {true_class} out of range for {s.size} classes")
    return float(s[true_class] - s[top_competitor(s, true_class)])


def confidence_score(scores) -> float:
    """Gap between the two largest scores (``>= 0``)."""
    s = _check_scores(scores)
    return multiclass_margin(s, int(np.argmax(s)))


def multiclass_hinge_value_and_gradient(spec: HingeSpec, W: np.ndarray, x: np.ndarray,
                                        cls: int) -> tuple[float, np.ndarray]:
    # unchecked; callers validate
    scores = W @ x
    rival = top_competitor(scores, cls)
    psi = scores[cls] - scores[rival]
    grad = spec.penalty_gradient(W)
    if psi < spec.margin_target:
        grad[cls] -= x
        grad[rival] += x
        return spec.margin_target - psi + spec.penalty(W), grad
    return spec.penalty(W), grad


def _check_multiclass(W, x, cls):
    W, x = _check_pair(W, x)
    if W.ndim != 2 or W.shape[0] < 2:
        raise ValueError("multiclass weights must have shape (n_classes >= 2, dim)")
    if not 0 <= cls < W.shape[0]:
        raise ValueError(f"class index {cls} out of range for {W.shape[0]} classes")
    return W, x, int(cls)


def multiclass_hinge_value(spec: HingeSpec, W, x, true_class: int) -> float:
    """``max{0, margin_target - margin} + penalty_C * sum_s ||w_s||^2``."""
    return multiclass_hinge_value_and_gradient(spec, *_check_multiclass(W, x, true_class))[0]


def multiclass_hinge_gradient(spec: HingeSpec, W, x, true_class: int) -> np.ndarray:
    return multiclass_hinge_value_and_gradient(spec, *_check_multiclass(W, x, true_class))[1]
