"""Expected losses, the per-round comparator, dynamic regret and run summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .environments import (
    LabelFlipConfig,
    RotatingGaussianConfig,
    gaussian_batch,
    label_flip_label,
    rotated_centers,
    rotation_angle,
)
from .geometry import EUCLIDEAN, BregmanGeometry, as_vector
from .losses import HingeSpec

__all__ = [
    "normal_cdf",
    "normal_pdf",
    "expected_hinge_gaussian",
    "expected_hinge_gaussian_grad",
    "expected_hinge_label_flip",
    "mc_expected_loss",
    "gaussian_sampler",
    "ComparatorResult",
    "ComparatorSeries",
    "ComparatorCache",
    "comparator_oracle",
    "comparator_series",
    "label_flip_comparator",
    "dynamic_regret",
    "RunRecord",
    "aggregate_runs",
    "confidence_half_width",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_cdf(u: float) -> float:
    return 0.5 * math.erfc(-u / _SQRT2)


def normal_pdf(u: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * u * u)


def _gaussian_hinge(M: float, m: float, s: float) -> tuple[float, float, float, float, float, float]:
    """``E max{0, M - z}`` for ``z ~ N(m, s^2)`` plus derivatives in (m, s).

    Returns value, d/dm, d/ds, d2/dm2, d2/dmds, d2/ds2.
    """
    if s <= 0.0:
        v = max(0.0, M - m)
        return v, (-1.0 if m < M else 0.0), 0.0, 0.0, 0.0, 0.0
    u = (M - m) / s
    Phi, phi = normal_cdf(u), normal_pdf(u)
    value = (M - m) * Phi + s * phi
    return value, -Phi, phi, phi / s, u * phi / s, u * u * phi / s


def _class_terms(config: RotatingGaussianConfig, t: int):
    inner, outer = rotated_centers(config, t)
    return ((1, config.class_balance, inner), (-1, 1.0 - config.class_balance, outer))


def _split(w: np.ndarray, config: RotatingGaussianConfig):
    if w.shape != (config.dim,):
        raise ValueError(f"model has shape {w.shape}, stream needs ({config.dim},)")
    wf = w[:2]
    b = float(w[2]) if config.augment_bias else 0.0
    return wf, b


def expected_hinge_gaussian(spec: HingeSpec, w, config: RotatingGaussianConfig, t: int) -> float:
    """Closed-form expected hinge loss at round ``t`` of the rotating Gaussian stream.

    Given the class, ``z = y w.x`` is normal with mean ``y (w_f.c + b)`` and
    standard deviation ``sqrt(covariance_scale) * ||w_f||`` (the bias weight
    does not contribute to the spread).
    """
    w = as_vector(w)
    wf, b = _split(w, config)
    k = math.sqrt(config.covariance_scale)
    s = k * float(np.linalg.norm(wf))
    total = 0.0
    for y, prob, center in _class_terms(config, t):
        if prob == 0.0:
            continue
        m = y * (float(wf @ center) + b)
        total += prob * _gaussian_hinge(spec.margin_target, m, s)[0]
    return total + spec.penalty(w)


def expected_hinge_gaussian_grad(spec: HingeSpec, w, config: RotatingGaussianConfig, t: int,
                                 hessian: bool = False):
    """Value and gradient (and Hessian if asked) of :func:`expected_hinge_gaussian`."""
    w = as_vector(w)
    wf, b = _split(w, config)
    d = w.size
    k = math.sqrt(config.covariance_scale)
    nf = float(np.linalg.norm(wf))
    s = k * nf
    # ds/dw and d2s/dw2
    ds = np.zeros(d)
    d2s = np.zeros((d, d))
    if nf > 0:
        ds[:2] = k * wf / nf
        d2s[:2, :2] = k * (np.eye(2) / nf - np.outer(wf, wf) / nf ** 3)
    value = spec.penalty(w)
    grad = spec.penalty_gradient(w)
    hess = np.zeros((d, d))
    if hessian:
        diag = np.full(d, 2.0 * spec.penalty_C)
        if not spec.penalize_bias:
            diag[-1] = 0.0
        hess += np.diag(diag)
    for y, prob, center in _class_terms(config, t):
        if prob == 0.0:
            continue
        dm = np.zeros(d)
        dm[:2] = y * center
        if config.augment_bias:
            dm[2] = y
        m = float(dm @ w)
        v, gm, gs, hmm, hms, hss = _gaussian_hinge(spec.margin_target, m, s)
        value += prob * v
        grad = grad + prob * (gm * dm + gs * ds)
        if hessian:
            hess += prob * (hmm * np.outer(dm, dm) + hms * (np.outer(dm, ds) + np.outer(ds, dm))
                            + hss * np.outer(ds, ds) + gs * d2s)
    if hessian:
        return value, grad, hess
    return value, grad


def expected_hinge_label_flip(spec: HingeSpec, w, config: LabelFlipConfig, t: int) -> float:
    """Exact expected loss at round ``t`` of the two-point label-flip stream."""
    w = as_vector(w)
    total = 0.0
    for is_a, point in ((True, config.point_a), (False, config.point_b)):
        y = label_flip_label(config, t, is_a)
        total += 0.5 * max(0.0, spec.margin_target - y * float(w @ np.asarray(point)))
    return total + spec.penalty(w)


def mc_expected_loss(spec: HingeSpec, w, sampler: Callable, n: int,
                     rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo estimate of the expected binary hinge loss.

    ``sampler(rng, n)`` must return ``(X, y)`` with ``X`` of shape ``(n, dim)``.
    Returns the sample mean and its standard error.
    """
    if n < 2:
        raise ValueError("need n >= 2 draws for a standard error")
    w = as_vector(w)
    X, y = sampler(rng, n)
    losses = np.maximum(0.0, spec.margin_target - y * (X @ w)) + spec.penalty(w)
    return float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(n))


def gaussian_sampler(config: RotatingGaussianConfig, t: int) -> Callable:
    """Batch sampler for round ``t`` in the form :func:`mc_expected_loss` expects."""
    return lambda rng, n: gaussian_batch(config, t, rng, n)


@dataclass(frozen=True)
class ComparatorResult:
    w: np.ndarray
    value: float
    grad_norm: float
    converged: bool


@dataclass
class ComparatorSeries:
    per_step_optimal: list
    per_step_optimal_value: list

    def __len__(self):
        return len(self.per_step_optimal_value)


@dataclass
class ComparatorCache:
    """Comparator results keyed by rotation angle on a 1e-6 rad grid."""

    quantum: float = 1e-6
    entries: dict = field(default_factory=dict)

    def key(self, config: RotatingGaussianConfig, t: int, spec: HingeSpec):
        angle = rotation_angle(config.total_rotation, config.horizon, t)
        shape = (config.center_inner, config.center_outer, config.covariance_scale,
                 config.class_balance, config.augment_bias, spec)
        return shape, round(angle / self.quantum)

    def get(self, key):
        return self.entries.get(key)

    def put(self, key, value: ComparatorResult):
        self.entries.setdefault(key, value)


def _starts(config: RotatingGaussianConfig, t: int, n_starts: int, rng: np.random.Generator):
    inner, outer = rotated_centers(config, t)
    direction = inner - outer
    mid = 0.5 * (inner + outer)
    scale = 1.0 / max(float(np.linalg.norm(direction)), 1e-12)
    base = np.zeros(config.dim)
    base[:2] = scale * direction
    if config.augment_bias:
        base[2] = -float(base[:2] @ mid)
    starts = [base, np.zeros(config.dim)]
    while len(starts) < n_starts:
        starts.append(base * rng.uniform(0.2, 5.0) + rng.normal(scale=0.2, size=config.dim))
    return starts


def _newton_polish(spec, config, t, w, tol, max_iter=50):
    for _ in range(max_iter):
        value, grad, hess = expected_hinge_gaussian_grad(spec, w, config, t, hessian=True)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            break
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = grad
        if not np.all(np.isfinite(step)) or step @ grad <= 0:
            step = grad
        lam = 1.0
        while lam > 1e-12:
            trial = w - lam * step
            if expected_hinge_gaussian(spec, trial, config, t) <= value:
                w = trial
                break
            lam *= 0.5
        else:
            break
    grad = expected_hinge_gaussian_grad(spec, w, config, t)[1]
    # report the value exactly as runs evaluate it, so the comparator's own regret is 0
    return w, expected_hinge_gaussian(spec, w, config, t), float(np.linalg.norm(grad))


def comparator_oracle(spec: HingeSpec, config: RotatingGaussianConfig, t: int,
                      max_iter: int = 500, n_starts: int = 3, tol: float = 1e-8,
                      geometry: BregmanGeometry = EUCLIDEAN,
                      cache: ComparatorCache | None = None,
                      warm_start=None, seed: int = 0) -> ComparatorResult:
    """Minimize the closed-form expected loss at round ``t`` over ``w``.

    BFGS from several starting points followed by damped Newton polishing on
    the analytic Hessian, stopping once the gradient norm is at most ``tol``.
    ``converged`` is ``False`` when the budget ran out first; the best point
    found is still returned. Only the unbounded decision space is supported.
    """
    if geometry.bounded:
        raise NotImplementedError("comparator for a bounded decision space")
    key = None
    if cache is not None:
        key = cache.key(config, t, spec)
        hit = cache.get(key)
        if hit is not None:
            return hit
    rng = np.random.default_rng(seed)
    starts = _starts(config, t, n_starts, rng)
    if warm_start is not None:
        starts.insert(0, as_vector(warm_start, "warm_start"))
    best = None
    for w0 in starts:
        res = optimize.minimize(lambda v: expected_hinge_gaussian_grad(spec, v, config, t),
                                w0, jac=True, method="BFGS",
                                options={"gtol": tol, "maxiter": max_iter})
        w, value, gnorm = _newton_polish(spec, config, t, res.x, tol)
        if best is None or value < best[1] - 1e-15 or (value <= best[1] + 1e-15 and gnorm < best[2]):
            best = (w, value, gnorm)
        if gnorm <= tol and warm_start is not None:
            break
    result = ComparatorResult(w=best[0], value=best[1], grad_norm=best[2],
                              converged=best[2] <= tol)
    if cache is not None:
        cache.put(key, result)
    return result


def comparator_series(spec: HingeSpec, config: RotatingGaussianConfig,
                      cache: ComparatorCache | None = None, **kwargs) -> ComparatorSeries:
    """Per-round optima ``w_t*`` and ``l_t(w_t*)`` for ``t = 1..T``.

    Each round is warm-started from the previous optimum rotated by the
    angle increment.
    """
    cache = ComparatorCache() if cache is None else cache
    ws, vals = [], []
    prev = None
    prev_angle = 0.0
    for t in range(1, config.horizon + 1):
        angle = rotation_angle(config.total_rotation, config.horizon, t)
        warm = None
        if prev is not None:
            warm = prev.copy()
            c, s = math.cos(angle - prev_angle), math.sin(angle - prev_angle)
            warm[:2] = [c * prev[0] - s * prev[1], s * prev[0] + c * prev[1]]
        res = comparator_oracle(spec, config, t, cache=cache, warm_start=warm, **kwargs)
        ws.append(res.w)
        vals.append(res.value)
        prev, prev_angle = res.w, angle
    return ComparatorSeries(ws, vals)


def label_flip_comparator(spec: HingeSpec, config: LabelFlipConfig, t: int,
                          geometry: BregmanGeometry = EUCLIDEAN) -> ComparatorResult:
    """Exact optimum for the label-flip stream when the two points are antipodal.

    Both points then share the margin ``a`` of ``w = a * u`` with ``u`` the
    unit vector pointing at the currently positive point, so the problem is
    one-dimensional: minimize ``max{0, M - a} + C a^2`` over ``0 <= a <= D``.
    """
    pa, pb = np.asarray(config.point_a, float), np.asarray(config.point_b, float)
    if not np.allclose(pa, -pb):
        raise NotImplementedError("closed form requires antipodal points")
    r = float(np.linalg.norm(pa))
    positive = pa if label_flip_label(config, t, True) == 1 else pb
    u = positive / r
    M, C = spec.margin_target, spec.penalty_C
    # margin on both points is a * r
    a = M / r if C == 0 else min(M / r, r / (2.0 * C))
    if geometry.radius is not None:
        a = min(a, geometry.radius)
    w = a * u
    return ComparatorResult(w=w, value=expected_hinge_label_flip(spec, w, config, t),
                            grad_norm=0.0, converged=True)


def dynamic_regret(expected_losses: Sequence[float], optimal_values: Sequence[float]) -> np.ndarray:
    """Running sum of ``l_t(w_t) - l_t(w_t*)``."""
    a = np.asarray(expected_losses, dtype=np.float64)
    b = np.asarray(getattr(optimal_values, "per_step_optimal_value", optimal_values),
                   dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return np.cumsum(a - b)


@dataclass
class RunRecord:
    """Per-round series of one seeded run plus its summary statistics.

    ``expected_loss`` holds NaN where the stream has no expected-loss oracle.
    """

    instantaneous_loss: np.ndarray
    expected_loss: np.ndarray
    queried: np.ndarray
    mistake: np.ndarray
    correct: np.ndarray
    seed: int
    optimal_value: np.ndarray | None = None
    learner: str = ""
    repeat: int = 0

    @property
    def horizon(self) -> int:
        return len(self.instantaneous_loss)

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.correct))

    @property
    def query_fraction(self) -> float:
        return float(np.mean(self.queried))

    @property
    def mistakes(self) -> int:
        return int(np.sum(self.mistake))

    @property
    def accumulated_loss(self) -> np.ndarray:
        return np.cumsum(self.instantaneous_loss)

    @property
    def regret(self) -> np.ndarray | None:
        if self.optimal_value is None or np.isnan(self.expected_loss).any():
            return None
        return dynamic_regret(self.expected_loss, self.optimal_value)

    @property
    def final_accumulated_loss(self) -> float:
        return float(np.sum(self.instantaneous_loss))

    @property
    def final_dynamic_regret(self) -> float | None:
        r = self.regret
        return None if r is None else float(r[-1])

    def summary(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "query_fraction": self.query_fraction,
            "final_accumulated_loss": self.final_accumulated_loss,
            "final_dynamic_regret": self.final_dynamic_regret,
            "mistakes": self.mistakes,
        }


def confidence_half_width(values: Sequence[float], confidence: float = 0.90) -> float:
    """Half-width of the Student-t interval for the mean."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n < 2:
        raise ValueError("need at least two values for a confidence interval")
    sd = float(v.std(ddof=1))
    return float(stats.t.ppf(0.5 + confidence / 2.0, n - 1)) * sd / math.sqrt(n)


def aggregate_runs(records: Sequence[RunRecord], confidence: float = 0.90) -> dict:
    """Mean and symmetric t-interval half-width for each summary metric."""
    if len(records) < 2:
        raise ValueError("aggregate_runs needs at least two runs")
    out = {}
    for name in ("accuracy", "query_fraction", "final_accumulated_loss",
                 "final_dynamic_regret", "mistakes"):
        values = [r.summary()[name] for r in records]
        if any(v is None for v in values):
            out[name] = {"mean": None, "ci": None}
            continue
        out[name] = {"mean": float(np.mean(values)),
                     "ci": confidence_half_width(values, confidence)}
    out["n_runs"] = len(records)
    out["confidence"] = confidence
    return out
