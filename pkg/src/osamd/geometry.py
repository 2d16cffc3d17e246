"""Bregman geometry and mirror-descent updates.

Model vectors are plain float64 numpy arrays. Multiclass weight matrices are
handled the same way; norms are then Frobenius norms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

__all__ = [
    "Regularizer",
    "BregmanGeometry",
    "as_vector",
    "bregman_divergence",
    "project",
    "mirror_step",
    "proximal_step",
    "proximal_objective",
]

#: ``loss(w) -> (value, gradient)``
LossFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class Regularizer(enum.Enum):
    SQUARED_EUCLIDEAN = "squared-euclidean"


@dataclass(frozen=True)
class BregmanGeometry:
    """Regularizer plus the radius of the decision ball ``K``.

    ``radius=None`` means ``K`` is the whole space.
    """

    regularizer: Regularizer = Regularizer.SQUARED_EUCLIDEAN
    radius: float | None = None

    def __post_init__(self):
        if not isinstance(self.regularizer, Regularizer):
            object.__setattr__(self, "regularizer", Regularizer(self.regularizer))
        if self.radius is not None and math.isinf(self.radius):
            object.__setattr__(self, "radius", None)
        if self.radius is not None and not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def bounded(self) -> bool:
        return self.radius is not None

    def regularizer_value(self, w: np.ndarray) -> float:
        return 0.5 * float(np.sum(w * w))

    def regularizer_gradient(self, w: np.ndarray) -> np.ndarray:
        return w

    def _divergence(self, a: np.ndarray, b: np.ndarray) -> float:
        # unchecked fast path for inner loops
        d = a - b
        return 0.5 * float(np.sum(d * d))


EUCLIDEAN = BregmanGeometry()


def as_vector(w, name: str = "w") -> np.ndarray:
    """Convert to a finite float64 array, raising ``ValueError`` otherwise."""
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim == 0:
        raise ValueError(f"{name} must be at least one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands"):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch between {what}: {a.shape} vs {b.shape}")


def bregman_divergence(geometry: BregmanGeometry, a, b) -> float:
    """``R(a) - R(b) - <grad R(b), a - b>``."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    _same_shape(a, b)
    val = (geometry.regularizer_value(a) - geometry.regularizer_value(b)
           - float(np.sum(geometry.regularizer_gradient(b) * (a - b))))
    # cancellation can leave a tiny negative residue
    return max(val, 0.0)


def project(geometry: BregmanGeometry, w) -> np.ndarray:
    """Euclidean projection onto the ball of radius ``geometry.radius``."""
    w = as_vector(w)
    if geometry.radius is None:
        return w
    norm = float(np.linalg.norm(w))
    if norm <= geometry.radius:
        return w
    out = w * (geometry.radius / norm)
    # rounding can leave the rescaled point a hair outside the ball
    while np.linalg.norm(out) > geometry.radius:
        out = np.nextafter(out, 0.0)
    return out


def mirror_step(geometry: BregmanGeometry, w, gradient, step: float) -> np.ndarray:
    """Explicit mirror-descent step.

    Solves ``argmin_{w' in K} step * <gradient, w'> + D_R(w', w)``, which for
    the squared-euclidean regularizer is ``project(w - step * gradient)``.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    w = as_vector(w)
    gradient = as_vector(gradient, "gradient")
    _same_shape(w, gradient, "w and gradient")
    return project(geometry, w - step * gradient)


def proximal_objective(geometry: BregmanGeometry, anchor, loss: LossFn,
                       step: float, w) -> float:
    """``step * loss(w) + D_R(w, anchor)``."""
    return step * loss(w)[0] + bregman_divergence(geometry, w, anchor)


def proximal_step(geometry: BregmanGeometry, anchor, loss: LossFn, step: float,
                  inner_iterations: int = 20,
                  inner_rate: float | None = None,
                  method: str = "gradient") -> np.ndarray:
    """Approximate implicit (proximal) mirror step.

    Runs ``inner_iterations`` of gradient descent on
    ``step * loss(w) + D_R(w, anchor)`` starting from ``anchor`` and projects
    the result onto ``K``.

    Parameters
    ----------
    geometry : BregmanGeometry
    anchor : array_like
        Centre of the divergence term; also the starting point.
    loss : callable
        ``loss(w)`` returns ``(value, gradient)``.
    step : float
        Weight of the loss against the divergence.
    inner_iterations : int
        Number of gradient iterations.
    inner_rate : float, optional
        Gradient-descent rate; defaults to ``step``. Unused by ``"kink_search"``.
    method : {"gradient", "kink_search"}
        ``"gradient"`` is fixed-rate gradient descent, the cheap approximation
        the learners use. ``"kink_search"`` replaces the fixed rate with an
        exact line search and, once a kink has been seen, descends along the
        minimum-norm combination of the gradients on its two sides. It
        reaches the exact minimiser to near machine precision on hinge-type
        losses in a few dozen iterations, at roughly 60 loss evaluations each.

    Notes
    -----
    A trial iterate that does not decrease the objective is rejected and the
    rate halved. With the default small rate this never triggers on smooth
    pieces, so the iteration is plain gradient descent there; the safeguard
    lets large rates settle onto a hinge kink instead of oscillating across it.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if inner_iterations < 0:
        raise ValueError("inner_iterations must be nonnegative")
    rate = step if inner_rate is None else float(inner_rate)
    if not rate > 0:
        raise ValueError(f"inner_rate must be positive, got {rate}")
    anchor = as_vector(anchor, "anchor")
    if method == "kink_search":
        return project(geometry, _kink_search(geometry, anchor, loss, step, inner_iterations))
    if method != "gradient":
        raise ValueError(f"unknown method {method!r}")
    w = anchor
    value, grad = loss(w)
    obj = step * value
    for _ in range(inner_iterations):
        direction = step * grad + geometry.regularizer_gradient(w) \
            - geometry.regularizer_gradient(anchor)
        if not np.any(direction):
            break
        trial = w - rate * direction
        trial_value, trial_grad = loss(trial)
        trial_obj = step * trial_value + geometry._divergence(trial, anchor)
        if trial_obj <= obj:
            w, value, grad, obj = trial, trial_value, trial_grad, trial_obj
        else:
            rate *= 0.5
    return project(geometry, w)


def _kink_search(geometry: BregmanGeometry, anchor: np.ndarray, loss: LossFn, step: float,
                 iterations: int, bisections: int = 60) -> np.ndarray:
    anchor_grad = geometry.regularizer_gradient(anchor)

    def grad(w):
        return step * loss(w)[1] + geometry.regularizer_gradient(w) - anchor_grad

    def objective(w):
        return step * loss(w)[0] + geometry._divergence(w, anchor)

    w, g, other = anchor, grad(anchor), None
    obj = objective(w)
    for _ in range(iterations):
        d = g
        if other is not None:
            # minimum-norm point of the segment [g, other]
            diff = g - other
            nn = float(diff @ diff)
            if nn > 0:
                d = g - min(1.0, max(0.0, float(g @ diff) / nn)) * diff
        if not float(d @ d) > 1e-300:
            break
        # the directional derivative along -d is nondecreasing; bracket its sign change
        lo, hi = 0.0, 1.0
        while float(grad(w - hi * d) @ d) > 0 and hi < 1e12:
            lo, hi = hi, 2.0 * hi
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            if float(grad(w - mid * d) @ d) > 0:
                lo = mid
            else:
                hi = mid
        w_lo, w_hi = w - lo * d, w - hi * d
        o_lo, o_hi = objective(w_lo), objective(w_hi)
        g_lo, g_hi = grad(w_lo), grad(w_hi)
        if o_lo <= o_hi:
            w_new, o_new, g_new, g_far = w_lo, o_lo, g_lo, g_hi
        else:
            w_new, o_new, g_new, g_far = w_hi, o_hi, g_hi, g_lo
        kink = None if np.allclose(g_far, g_new) else g_far
        if o_new > obj + 1e-15 * (1.0 + abs(obj)):
            break
        if o_new > obj:
            # stuck on a kink up to rounding: stay put but remember the far side
            if kink is None or other is not None and np.array_equal(kink, other):
                break
            other = kink
            continue
        if kink is not None:
            other = kink
        elif np.linalg.norm(w_new - w) > 1e-12 * (1.0 + np.linalg.norm(w)):
            other = None
        w, g, obj = w_new, g_new, o_new
    return w
