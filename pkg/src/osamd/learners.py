"""Round-based online learners.

Every learner is a frozen state object plus a ``*_round`` function::

    new_state, decision, outcome = osamd_round(state, x, oracle, rng)

Rounds consume exactly one uniform draw from ``rng`` for the query decision,
whether or not it can fire, so learners with aligned generators see aligned
coin flips.

The true label is reached in two ways. ``oracle()`` is the query channel and is
the only one used by updates. ``oracle.reveal()`` is used once per round, after
all updates, to fill in the mistake and loss of the returned
:class:`RoundOutcome`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .geometry import EUCLIDEAN, BregmanGeometry, as_vector, mirror_step, project, proximal_step
from .losses import (
    HingeSpec,
    hinge_value_and_gradient,
    multiclass_hinge_value_and_gradient,
    top_competitor,
)

__all__ = [
    "LabelOracle",
    "OsamdParams",
    "OsamdState",
    "MosamdState",
    "OmdState",
    "PaaState",
    "RoundOutcome",
    "query_probability",
    "aggressive_stepsize",
    "osamd_round",
    "mosamd_round",
    "omd_round",
    "paa_round",
    "ablation_no_selfadapt_round",
    "ablation_no_active_round",
    "pretrain",
]

QueryRule = Callable[[float], float]


class LabelOracle:
    """Holds one round's true label and counts how it is accessed."""

    __slots__ = ("_label", "queries", "reveals")

    def __init__(self, label):
        self._label = label
        self.queries = 0
        self.reveals = 0

    def __call__(self):
        self.queries += 1
        return self._label

    def reveal(self):
        self.reveals += 1
        return self._label


def _reveal(oracle):
    reveal = getattr(oracle, "reveal", None)
    return reveal() if reveal is not None else oracle()


@dataclass(frozen=True)
class OsamdParams:
    """Hyperparameters of the teacher-student learners.

    ``tau_margin`` is the margin inside the aggressive stepsize
    ``max{0, tau_margin - y H} / ||grad H||^2``; ``None`` uses ``sigma``.
    ``separable_mode`` drops the ``tau_cap`` cap.
    """

    sigma: float = 0.35
    eta: float = 0.01
    tau_cap: float = 1.0
    tau_margin: float | None = None
    inner_iterations: int = 20
    inner_rate: float | None = None
    separable_mode: bool = False
    margin_R: float | None = None

    def __post_init__(self):
        for name in ("sigma", "eta", "tau_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.tau_margin is not None and not self.tau_margin > 0:
            raise ValueError("tau_margin must be positive")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be a positive integer")
        if self.margin_R is not None and self.sigma > self.margin_R:
            warnings.warn(f"sigma={self.sigma} exceeds the assumed margin R={self.margin_R}; "
                          "the pseudolabel-error guarantee does not apply", stacklevel=3)

    @property
    def stepsize_margin(self) -> float:
        return self.sigma if self.tau_margin is None else self.tau_margin


@dataclass(frozen=True)
class OsamdState:
    theta: np.ndarray
    w_hat: np.ndarray
    params: OsamdParams = OsamdParams()
    loss: HingeSpec = HingeSpec()
    geometry: BregmanGeometry = EUCLIDEAN

    def __post_init__(self):
        theta = as_vector(self.theta, "theta")
        w_hat = as_vector(self.w_hat, "w_hat")
        if theta.shape != w_hat.shape:
            raise ValueError("theta and w_hat must have the same shape")
        object.__setattr__(self, "theta", project(self.geometry, theta))
        object.__setattr__(self, "w_hat", project(self.geometry, w_hat))


@dataclass(frozen=True)
class MosamdState(OsamdState):
    """Multiclass teacher/student; ``theta`` and ``w_hat`` are ``(n_classes, dim)``."""

    def __post_init__(self):
        super().__post_init__()
        if self.theta.ndim != 2 or self.theta.shape[0] < 2:
            raise ValueError("multiclass weights must have shape (n_classes >= 2, dim)")


@dataclass(frozen=True)
class OmdState:
    w: np.ndarray
    eta: float = 0.01
    loss: HingeSpec = HingeSpec()
    geometry: BregmanGeometry = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "w", project(self.geometry, as_vector(self.w)))
        if not self.eta > 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class PaaState:
    """Passive-aggressive active learner.

    Queries with probability ``delta / (delta + |w.x|)`` and, on a query,
    applies ``w += min{c_pa, hinge / ||x||^2} y x`` with the unpenalized hinge
    at ``loss.margin_target``. ``loss`` is also what outcomes report.
    """

    w: np.ndarray
    delta: float = 0.35
    c_pa: float = 1.0
    loss: HingeSpec = HingeSpec()
    geometry: BregmanGeometry = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "w", project(self.geometry, as_vector(self.w)))
        if not self.delta > 0 or not self.c_pa > 0:
            raise ValueError("delta and c_pa must be positive")


@dataclass(frozen=True)
class RoundOutcome:
    decision_score: float
    predicted_label: int
    pseudolabel: int
    queried: bool
    mistake: bool
    instantaneous_loss: float
    query_probability: float
    true_label: int

    @property
    def correct(self) -> bool:
        return self.predicted_label == self.true_label


def query_probability(sigma: float, confidence: float) -> float:
    """``sigma / (sigma + confidence)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if confidence < 0 or math.isnan(confidence):
        raise ValueError(f"confidence must be nonnegative, got {confidence}")
    return sigma / (sigma + confidence)


def aggressive_stepsize(params: OsamdParams, y: int, score: float,
                        grad_norm_sq: float) -> float:
    """Teacher stepsize ``min{tau_cap, max{0, m - y*score} / grad_norm_sq}``.

    ``m`` is ``params.stepsize_margin``; the cap is skipped in separable mode.
    For multiclass teachers pass ``y=1`` and the margin as ``score``.
    """
    if not grad_norm_sq > 0:
        raise ValueError("grad_norm_sq must be positive")
    violation = params.stepsize_margin - y * score
    if violation <= 0:
        return 0.0
    tau = violation / grad_norm_sq
    return tau if params.separable_mode else min(params.tau_cap, tau)


def _sign(score: float) -> int:
    return 1 if score >= 0 else -1


def _binary_loss(spec: HingeSpec, x: np.ndarray, y: int):
    return lambda w: hinge_value_and_gradient(spec, w, x, y)


def _draw(rng: np.random.Generator, p: float) -> bool:
    return bool(rng.random() < p)


def _teacher_round(state: OsamdState, x, oracle, rng, query_rule: QueryRule | None,
                   self_adapt: bool, pseudolabel_updates: bool):
    p = state.params
    x = as_vector(x, "x")
    if x.shape != state.theta.shape:
        raise ValueError(f"feature dimension {x.shape} does not match model {state.theta.shape}")
    h = float(state.theta @ x)
    pseudo = _sign(h)

    if self_adapt:
        w = proximal_step(state.geometry, state.w_hat, _binary_loss(state.loss, x, pseudo),
                          p.eta, p.inner_iterations, p.inner_rate)
    else:
        w = state.w_hat

    confidence = abs(h)
    q = query_probability(p.sigma, confidence) if query_rule is None else float(query_rule(confidence))
    queried = _draw(rng, q)

    theta = state.theta
    if queried:
        y = oracle()
        target = y
        tau = aggressive_stepsize(p, y, h, float(x @ x))
        if tau > 0:
            theta = mirror_step(state.geometry, theta, -y * x, tau)
    else:
        target = pseudo

    if queried or pseudolabel_updates:
        grad = hinge_value_and_gradient(state.loss, w, x, target)[1]
        w_hat = mirror_step(state.geometry, state.w_hat, grad, p.eta)
    else:
        w_hat = state.w_hat

    truth = _reveal(oracle)
    score = float(w @ x)
    outcome = RoundOutcome(
        decision_score=score,
        predicted_label=_sign(score),
        pseudolabel=pseudo,
        queried=queried,
        mistake=pseudo != truth,
        instantaneous_loss=hinge_value_and_gradient(state.loss, w, x, truth)[0],
        query_probability=q,
        true_label=truth,
    )
    return replace(state, theta=theta, w_hat=w_hat), w, outcome


def osamd_round(state: OsamdState, x, label_oracle, rng: np.random.Generator,
                query_rule: QueryRule | None = None):
    """One round of online self-adaptive mirror descent.

    1. pseudolabel ``sign(theta.x)`` (``+1`` on ties);
    2. decision ``w`` = proximal step from ``w_hat`` on the hinge at the pseudolabel;
    3. query with probability ``sigma / (sigma + |theta.x|)``;
    4. on a query, mirror step of the teacher along ``y x`` with the aggressive stepsize;
    5. mirror step of ``w_hat`` with the hinge gradient at ``w`` using the
       queried label, or the pseudolabel otherwise.

    ``query_rule`` replaces the margin-based probability of step 3; it maps the
    teacher's confidence ``|theta.x|`` to a probability.

    Returns
    -------
    (OsamdState, numpy.ndarray, RoundOutcome)
        Next state, the decision ``w`` used this round, and the round record.
    """
    return _teacher_round(state, x, label_oracle, rng, query_rule,
                          self_adapt=True, pseudolabel_updates=True)


def ablation_no_selfadapt_round(state: OsamdState, x, label_oracle, rng: np.random.Generator,
                                query_rule: QueryRule | None = None,
                                pseudolabel_updates: bool = False):
    """OSAMD without self-adaptation: the decision is ``w_hat`` itself.

    Queries are drawn exactly as in :func:`osamd_round`. By default the
    student is then plain mirror descent on the queried labels only; with
    ``pseudolabel_updates=True`` it also takes pseudolabel steps on unqueried
    rounds.
    """
    return _teacher_round(state, x, label_oracle, rng, query_rule,
                          self_adapt=False, pseudolabel_updates=pseudolabel_updates)


def ablation_no_active_round(state: OsamdState, x, label_oracle, rng: np.random.Generator,
                             uniform_rate: float):
    """OSAMD whose queries are Bernoulli(``uniform_rate``), blind to the margin."""
    if not 0.0 <= uniform_rate <= 1.0:
        raise ValueError(f"uniform_rate must lie in [0, 1], got {uniform_rate}")
    return _teacher_round(state, x, label_oracle, rng, lambda _c: uniform_rate,
                          self_adapt=True, pseudolabel_updates=True)


def mosamd_round(state: MosamdState, x, label_oracle, rng: np.random.Generator,
                 query_rule: QueryRule | None = None):
    """Multiclass OSAMD round; labels are class indices.

    The pseudolabel is the teacher's arg-max class, the query probability
    uses the gap between its two best scores, and the teacher moves along
    the gradient of the true-class margin.
    """
    p = state.params
    x = as_vector(x, "x")
    if x.shape[0] != state.theta.shape[1]:
        raise ValueError(f"feature dimension {x.shape} does not match model {state.theta.shape}")
    scores = state.theta @ x
    pseudo = int(np.argmax(scores))
    confidence = float(scores[pseudo] - scores[top_competitor(scores, pseudo)])

    loss = state.loss
    w = proximal_step(state.geometry, state.w_hat,
                      lambda W: multiclass_hinge_value_and_gradient(loss, W, x, pseudo),
                      p.eta, p.inner_iterations, p.inner_rate)

    q = query_probability(p.sigma, confidence) if query_rule is None else float(query_rule(confidence))
    queried = _draw(rng, q)

    theta = state.theta
    if queried:
        y = int(label_oracle())
        target = y
        rival = top_competitor(scores, y)
        psi = float(scores[y] - scores[rival])
        tau = aggressive_stepsize(p, 1, psi, 2.0 * float(x @ x))
        if tau > 0:
            neg_grad_psi = np.zeros_like(theta)
            neg_grad_psi[y] = -x
            neg_grad_psi[rival] = x
            theta = mirror_step(state.geometry, theta, neg_grad_psi, tau)
    else:
        target = pseudo

    grad = multiclass_hinge_value_and_gradient(loss, w, x, target)[1]
    w_hat = mirror_step(state.geometry, state.w_hat, grad, p.eta)

    truth = int(_reveal(label_oracle))
    dscores = w @ x
    predicted = int(np.argmax(dscores))
    outcome = RoundOutcome(
        decision_score=float(dscores[predicted] - dscores[top_competitor(dscores, predicted)]),
        predicted_label=predicted,
        pseudolabel=pseudo,
        queried=queried,
        mistake=pseudo != truth,
        instantaneous_loss=multiclass_hinge_value_and_gradient(loss, w, x, truth)[0],
        query_probability=q,
        true_label=truth,
    )
    return replace(state, theta=theta, w_hat=w_hat), w, outcome


def omd_round(state: OmdState, x, label_oracle, rng: np.random.Generator,
              query_policy: str | float = "always"):
    """Online mirror descent that learns only from labels it asks for.

    ``query_policy`` is ``"always"`` or a Bernoulli rate in ``[0, 1]``.
    """
    x = as_vector(x, "x")
    if x.shape != state.w.shape:
        raise ValueError(f"feature dimension {x.shape} does not match model {state.w.shape}")
    if query_policy == "always":
        q = 1.0
    else:
        q = float(query_policy)
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"query rate must lie in [0, 1], got {query_policy!r}")
    queried = _draw(rng, q)
    w = state.w
    new = state
    if queried:
        y = label_oracle()
        grad = hinge_value_and_gradient(state.loss, w, x, y)[1]
        new = replace(state, w=mirror_step(state.geometry, w, grad, state.eta))

    truth = _reveal(label_oracle)
    score = float(w @ x)
    outcome = RoundOutcome(
        decision_score=score,
        predicted_label=_sign(score),
        pseudolabel=_sign(score),
        queried=queried,
        mistake=_sign(score) != truth,
        instantaneous_loss=hinge_value_and_gradient(state.loss, w, x, truth)[0],
        query_probability=q,
        true_label=truth,
    )
    return new, w, outcome


def paa_round(state: PaaState, x, label_oracle, rng: np.random.Generator):
    """Passive-aggressive active round (see :class:`PaaState`)."""
    x = as_vector(x, "x")
    if x.shape != state.w.shape:
        raise ValueError(f"feature dimension {x.shape} does not match model {state.w.shape}")
    w = state.w
    score = float(w @ x)
    q = query_probability(state.delta, abs(score))
    queried = _draw(rng, q)
    new = state
    if queried:
        y = label_oracle()
        violation = state.loss.margin_target - y * score
        if violation > 0:
            tau = min(state.c_pa, violation / float(x @ x))
            new = replace(state, w=project(state.geometry, w + tau * y * x))

    truth = _reveal(label_oracle)
    outcome = RoundOutcome(
        decision_score=score,
        predicted_label=_sign(score),
        pseudolabel=_sign(score),
        queried=queried,
        mistake=_sign(score) != truth,
        instantaneous_loss=hinge_value_and_gradient(state.loss, w, x, truth)[0],
        query_probability=q,
        true_label=truth,
    )
    return new, w, outcome


def _batch_gradient(spec: HingeSpec, w: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if w.ndim == 1:
        active = y * (X @ w) < spec.margin_target
        grad = -(y[active] @ X[active])
    else:
        scores = X @ w.T
        rows = np.arange(len(y))
        rival_scores = scores.copy()
        rival_scores[rows, y] = -np.inf
        rival = np.argmax(rival_scores, axis=1)
        active = scores[rows, y] - scores[rows, rival] < spec.margin_target
        grad = np.zeros_like(w)
        np.add.at(grad, y[active], -X[active])
        np.add.at(grad, rival[active], X[active])
    return grad / len(y) + spec.penalty_gradient(w)


def pretrain(samples: Sequence, spec: HingeSpec, geometry: BregmanGeometry = EUCLIDEAN,
             epochs: int = 200, rate: float = 0.05, rng: np.random.Generator | None = None,
             *, batch_size: int = 50, n_classes: int | None = None,
             init=None, fixed_init=None) -> np.ndarray:
    """Fit a starting model on labelled source-domain samples.

    Mini-batch subgradient descent on the average hinge objective, with the
    sample order reshuffled from ``rng`` every epoch and the iterate
    projected onto ``K`` after each step.

    Parameters
    ----------
    samples : sequence of (x, y)
        Binary labels in ``{-1, +1}``, or class indices when ``n_classes`` is set.
    fixed_init : array_like, optional
        Returned as-is (projected) without looking at the data.
    init : array_like, optional
        Starting point; zeros by default.
    """
    if fixed_init is not None:
        return project(geometry, as_vector(fixed_init, "fixed_init"))
    if len(samples) == 0:
        raise ValueError("pretrain needs at least one sample")
    X = np.array([as_vector(s[0], "x") for s in samples])
    if n_classes is None:
        y = np.array([int(s[1]) for s in samples], dtype=np.float64)
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("binary pretraining labels must be +1 or -1")
        shape = (X.shape[1],)
    else:
        y = np.array([int(s[1]) for s in samples], dtype=np.int64)
        if y.min() < 0 or y.max() >= n_classes:
            raise ValueError("class index out of range")
        shape = (n_classes, X.shape[1])
    w = np.zeros(shape) if init is None else as_vector(init, "init").copy()
    if w.shape != shape:
        raise ValueError(f"init has shape {w.shape}, expected {shape}")
    rng = np.random.default_rng() if rng is None else rng
    n = len(y)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            w = project(geometry, w - rate * _batch_gradient(spec, w, X[idx], y[idx]))
    return w
