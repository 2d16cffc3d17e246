import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osamd.geometry import EUCLIDEAN
from osamd.learners import (
    LabelOracle,
    OmdState,
    OsamdParams,
    OsamdState,
    PaaState,
    ablation_no_active_round,
    ablation_no_selfadapt_round,
    aggressive_stepsize,
    omd_round,
    osamd_round,
    paa_round,
    pretrain,
    query_probability,
)
from osamd.losses import HingeSpec, hinge_value

GAUSS_LOSS = HingeSpec(1.0, 0.2, penalize_bias=False)
GAUSS_PARAMS = OsamdParams(sigma=0.35, eta=0.01, tau_cap=1.0, tau_margin=1.0)
REFERENCE_INIT = np.array([0.4, 0.0, -4.0])


class FixedDraw:
    """Stand-in generator whose uniform draw is always ``u``."""

    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


class SpyOracle(LabelOracle):
    pass


def _stream(rng, n, dim=3):
    xs = rng.normal(size=(n, dim)) * 3
    xs[:, -1] = 1.0
    ys = np.where(xs[:, 0] + 0.3 * rng.normal(size=n) > 0, 1, -1)
    return xs, ys


# query probability and stepsize ---------------------------------------------------------

@pytest.mark.parametrize("sigma, c, expected", [(0.35, 0.0, 1.0), (0.35, 0.35, 0.5), (0.35, 1.05, 0.25)])
def test_query_probability_values(sigma, c, expected):
    assert query_probability(sigma, c) == pytest.approx(expected)


def test_query_probability_errors():
    with pytest.raises(ValueError):
        query_probability(0.35, -0.1)
    with pytest.raises(ValueError):
        query_probability(0.0, 1.0)


@given(st.floats(1e-3, 10), st.floats(0, 100), st.floats(1e-6, 100))
def test_query_probability_decreases_with_confidence(sigma, c, dc):
    p1, p2 = query_probability(sigma, c), query_probability(sigma, c + dc)
    assert 0 < p2 < p1 <= 1


def test_aggressive_stepsize_examples():
    sep = OsamdParams(sigma=1.0, separable_mode=True)
    assert aggressive_stepsize(sep, 1, 0.0, 4.0) == pytest.approx(0.25)
    assert aggressive_stepsize(OsamdParams(sigma=1.0, tau_cap=0.1), 1, 0.0, 4.0) == pytest.approx(0.1)
    assert aggressive_stepsize(sep, -1, -1.5, 4.0) == 0.0
    assert aggressive_stepsize(GAUSS_PARAMS, 1, 0.5, 2.0) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        aggressive_stepsize(sep, 1, 0.0, 0.0)


def test_params_validation_and_margin_warning():
    with pytest.raises(ValueError):
        OsamdParams(sigma=0.0)
    with pytest.raises(ValueError):
        OsamdParams(inner_iterations=0)
    with pytest.warns(UserWarning):
        OsamdParams(sigma=2.0, margin_R=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        OsamdParams(sigma=0.5, margin_R=1.0)


# OSAMD rounds -----------------------------------------------------------------------------

def test_osamd_hand_computed_round():
    # one round from the reference init on x = (12, 0.5, 1), true label -1, query forced
    state = OsamdState(REFERENCE_INIT, REFERENCE_INIT, GAUSS_PARAMS, GAUSS_LOSS)
    x = np.array([12.0, 0.5, 1.0])
    oracle = LabelOracle(-1)
    new, w, out = osamd_round(state, x, oracle, FixedDraw(0.1))
    assert out.pseudolabel == 1 and out.queried and out.mistake
    assert out.query_probability == pytest.approx(0.35 / 1.15)
    # 20 inner iterations at rate 0.01; four trial steps overshoot the kink and are halved
    np.testing.assert_allclose(w, [0.4165189539647179, 0.0006977598802667992, -3.9986040820875473],
                               rtol=1e-12)
    np.testing.assert_allclose(new.theta, [0.25129087779690185, -0.00619621342512909,
                                           -4.012392426850258], rtol=1e-12)
    np.testing.assert_allclose(new.w_hat, [0.27833392418414116, -0.005002791039521067, -4.01],
                               rtol=1e-12)
    assert out.instantaneous_loss == pytest.approx(2.0346699506053434, rel=1e-12)
    assert out.predicted_label == 1 and not out.correct
    assert oracle.queries == 1


def test_huge_sigma_queries_every_round(rng):
    state = OsamdState(REFERENCE_INIT, REFERENCE_INIT, OsamdParams(sigma=1e9, tau_margin=1.0), GAUSS_LOSS)
    xs, ys = _stream(rng, 200)
    for x, y in zip(xs, ys):
        state, _, out = osamd_round(state, x, LabelOracle(y), rng)
        assert out.queried


def test_confident_correct_round_leaves_teacher_alone():
    params = OsamdParams(sigma=0.35, tau_margin=1.0)
    theta = np.array([2.0, 0.0, 0.0])
    state = OsamdState(theta, theta, params, HingeSpec())
    x = np.array([3.0, 0.0, 1.0])
    oracle = LabelOracle(1)
    new, w, out = osamd_round(state, x, oracle, FixedDraw(0.99))
    assert not out.queried and not out.mistake and out.pseudolabel == 1
    np.testing.assert_array_equal(new.theta, theta)
    np.testing.assert_array_equal(new.w_hat, theta)  # hinge inactive, no penalty
    assert oracle.queries == 0 and oracle.reveals == 1


def test_tie_predicts_positive():
    state = OsamdState(np.zeros(2), np.zeros(2), GAUSS_PARAMS, HingeSpec())
    _, _, out = osamd_round(state, np.array([1.0, 1.0]), LabelOracle(-1), FixedDraw(0.5))
    assert out.pseudolabel == 1 and out.query_probability == 1.0


def test_teacher_moves_only_on_violating_queries(rng):
    state = OsamdState(REFERENCE_INIT, REFERENCE_INIT, GAUSS_PARAMS, GAUSS_LOSS)
    xs, ys = _stream(rng, 500)
    for x, y in zip(xs, ys):
        before = state.theta
        h = float(before @ x)
        state, _, out = osamd_round(state, x, LabelOracle(y), rng)
        if not out.queried or y * h >= GAUSS_PARAMS.stepsize_margin:
            np.testing.assert_array_equal(state.theta, before)


def test_update_path_sees_labels_only_when_querying(rng):
    state = OsamdState(REFERENCE_INIT, REFERENCE_INIT, GAUSS_PARAMS, GAUSS_LOSS)
    xs, ys = _stream(rng, 300)
    n_queried = 0
    for x, y in zip(xs, ys):
        oracle = SpyOracle(y)
        state, _, out = osamd_round(state, x, oracle, rng)
        assert oracle.queries == int(out.queried)
        assert oracle.reveals == 1
        n_queried += out.queried
    assert 0 < n_queried < 300


def test_queried_rounds_use_the_true_label():
    # pseudolabel is wrong; the student must step towards the true label
    state = OsamdState(np.array([1.0, 0.0]), np.zeros(2), OsamdParams(eta=0.5), HingeSpec())
    x = np.array([1.0, 0.0])
    new, _, out = osamd_round(state, x, LabelOracle(-1), FixedDraw(0.0))
    assert out.queried and out.pseudolabel == 1
    assert new.w_hat[0] < 0


def test_rounds_are_deterministic_given_seed():
    xs, ys = _stream(np.random.default_rng(0), 200)

    def run(seed):
        rng = np.random.default_rng(seed)
        state = OsamdState(REFERENCE_INIT, REFERENCE_INIT, GAUSS_PARAMS, GAUSS_LOSS)
        outs = []
        for x, y in zip(xs, ys):
            state, _, out = osamd_round(state, x, LabelOracle(y), rng)
            outs.append(out)
        return outs

    assert run(5) == run(5)
    assert run(5) != run(6)


def test_dimension_mismatch_is_rejected():
    state = OsamdState(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        osamd_round(state, np.ones(2), LabelOracle(1), FixedDraw(0.5))
    with pytest.raises(ValueError):
        OsamdState(np.zeros(3), np.zeros(2))


# baselines --------------------------------------------------------------------------------

def test_omd_always_updates_and_hand_round():
    state = OmdState(np.array([0.0, 1.0]), eta=0.1)
    new, w, out = omd_round(state, np.array([2.0, 0.0]), LabelOracle(1), FixedDraw(0.999))
    # hinge at w.x = 0: gradient -x, step 0.1
    np.testing.assert_allclose(new.w, [0.2, 1.0])
    np.testing.assert_array_equal(w, [0.0, 1.0])
    assert out.queried and out.instantaneous_loss == pytest.approx(1.0)


def test_omd_rate_zero_never_updates(rng):
    state = OmdState(np.array([0.1, -0.2, 0.3]))
    xs, ys = _stream(rng, 200)
    for x, y in zip(xs, ys):
        state, _, out = omd_round(state, x, LabelOracle(y), rng, query_policy=0.0)
        assert not out.queried and out.query_probability == 0.0
    np.testing.assert_array_equal(state.w, [0.1, -0.2, 0.3])
    with pytest.raises(ValueError):
        omd_round(state, xs[0], LabelOracle(1), rng, query_policy=1.5)


def test_paa_examples():
    state = PaaState(np.zeros(2), delta=0.35, c_pa=math.inf)
    new, _, out = paa_round(state, np.array([1.0, 0.0]), LabelOracle(1), FixedDraw(0.0))
    np.testing.assert_allclose(new.w, [1.0, 0.0])
    assert out.query_probability == 1.0

    state = PaaState(np.array([3.0, 0.0]), delta=0.35)
    new, _, out = paa_round(state, np.array([1.0, 0.0]), LabelOracle(1), FixedDraw(0.0))
    assert out.queried
    np.testing.assert_array_equal(new.w, [3.0, 0.0])

    state = PaaState(np.array([0.35, 0.0]), delta=0.35)
    _, _, out = paa_round(state, np.array([1.0, 0.0]), LabelOracle(1), FixedDraw(0.9))
    assert out.query_probability == pytest.approx(0.5) and not out.queried


def test_paa_cap_limits_the_step():
    state = PaaState(np.zeros(2), delta=0.35, c_pa=0.1)
    new, _, _ = paa_round(state, np.array([1.0, 0.0]), LabelOracle(-1), FixedDraw(0.0))
    np.testing.assert_allclose(new.w, [-0.1, 0.0])


# ablations --------------------------------------------------------------------------------

def test_no_selfadapt_decision_is_the_anchor():
    state = OsamdState(REFERENCE_INIT, REFERENCE_INIT + 0.1, GAUSS_PARAMS, GAUSS_LOSS)
    _, w, _ = ablation_no_selfadapt_round(state, np.array([12.0, 0.5, 1.0]), LabelOracle(1),
                                          FixedDraw(0.9))
    np.testing.assert_array_equal(w, state.w_hat)


def test_no_selfadapt_hand_round():
    state = OsamdState(np.array([1.0, 0.0]), np.array([0.5, 0.0]), OsamdParams(eta=0.1),
                       HingeSpec())
    new, w, out = ablation_no_selfadapt_round(state, np.array([1.0, 0.0]), LabelOracle(1),
                                              FixedDraw(0.0))
    # queried; hinge at w_hat.x = 0.5 is active, so w_hat += 0.1 * x
    assert out.queried
    np.testing.assert_allclose(new.w_hat, [0.6, 0.0])
    assert out.instantaneous_loss == pytest.approx(0.5)


def test_no_selfadapt_zero_gradient_round_is_a_no_op():
    state = OsamdState(np.array([2.0, 0.0]), np.array([2.0, 0.0]), OsamdParams(), HingeSpec())
    for u in (0.0, 0.99):
        new, _, _ = ablation_no_selfadapt_round(state, np.array([1.0, 0.0]), LabelOracle(1),
                                                FixedDraw(u))
        np.testing.assert_array_equal(new.theta, state.theta)
        np.testing.assert_array_equal(new.w_hat, state.w_hat)


def test_no_selfadapt_pseudolabel_variant_steps_on_unqueried_rounds():
    state = OsamdState(np.array([1.0, 0.0]), np.zeros(2), OsamdParams(eta=0.1), HingeSpec())
    x = np.array([1.0, 0.0])
    plain, _, _ = ablation_no_selfadapt_round(state, x, LabelOracle(1), FixedDraw(0.99))
    variant, _, _ = ablation_no_selfadapt_round(state, x, LabelOracle(1), FixedDraw(0.99),
                                                pseudolabel_updates=True)
    np.testing.assert_array_equal(plain.w_hat, [0.0, 0.0])
    np.testing.assert_allclose(variant.w_hat, [0.1, 0.0])


def test_no_active_rate_zero_freezes_teacher(rng):
    state = OsamdState(REFERENCE_INIT, REFERENCE_INIT, GAUSS_PARAMS, GAUSS_LOSS)
    xs, ys = _stream(rng, 300)
    for x, y in zip(xs, ys):
        state, _, out = ablation_no_active_round(state, x, LabelOracle(y), rng, 0.0)
        assert not out.queried
    np.testing.assert_array_equal(state.theta, REFERENCE_INIT)
    with pytest.raises(ValueError):
        ablation_no_active_round(state, xs[0], LabelOracle(1), rng, -0.1)


def test_no_active_realised_rate_concentrates(rng):
    state = OsamdState(np.zeros(2), np.zeros(2), OsamdParams(inner_iterations=1), HingeSpec())
    x = np.array([1.0, 0.0])
    n, rate = 10000, 0.18
    hits = 0
    for _ in range(n):
        state, _, out = ablation_no_active_round(state, x, LabelOracle(1), rng, rate)
        hits += out.queried
    assert abs(hits / n - rate) <= 3 * math.sqrt(rate * (1 - rate) / n)


def test_no_active_with_margin_rule_is_osamd():
    xs, ys = _stream(np.random.default_rng(3), 300)
    a = b = OsamdState(REFERENCE_INIT, REFERENCE_INIT, GAUSS_PARAMS, GAUSS_LOSS)
    ra, rb = np.random.default_rng(9), np.random.default_rng(9)
    rule = lambda c: query_probability(GAUSS_PARAMS.sigma, c)
    for x, y in zip(xs, ys):
        a, wa, oa = osamd_round(a, x, LabelOracle(y), ra)
        b, wb, ob = osamd_round(b, x, LabelOracle(y), rb, query_rule=rule)
        assert oa == ob and np.array_equal(wa, wb)


# pretraining ------------------------------------------------------------------------------

def test_pretrain_separable_pair_reaches_zero_loss():
    samples = [(np.array([2.0, 1.0]), 1), (np.array([-2.0, 1.0]), -1)]
    w = pretrain(samples, HingeSpec(), EUCLIDEAN, epochs=200, rate=0.05,
                 rng=np.random.default_rng(0))
    assert sum(hinge_value(HingeSpec(), w, x, y) for x, y in samples) == 0.0


def test_pretrain_trivial_cases():
    samples = [(np.array([1.0, 1.0]), 1)]
    np.testing.assert_array_equal(pretrain(samples, HingeSpec(), epochs=0), [0.0, 0.0])
    np.testing.assert_array_equal(pretrain([], HingeSpec(), fixed_init=REFERENCE_INIT), REFERENCE_INIT)
    with pytest.raises(ValueError):
        pretrain([], HingeSpec())
    with pytest.raises(ValueError):
        pretrain([(np.array([1.0]), 0)], HingeSpec())


def test_pretrain_is_seeded():
    rng = np.random.default_rng(1)
    samples = [(rng.normal(size=3), int(rng.choice([-1, 1]))) for _ in range(120)]
    a = pretrain(samples, GAUSS_LOSS, epochs=5, rng=np.random.default_rng(4))
    b = pretrain(samples, GAUSS_LOSS, epochs=5, rng=np.random.default_rng(4))
    np.testing.assert_array_equal(a, b)
