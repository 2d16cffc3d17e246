"""Acceptance checks at full experimental scale.

Each test records a PASS/FAIL line that pytest prints in its terminal
summary. The Gaussian experiment runs once per session and is shared.
"""
import math
import os
import time

import numpy as np
import pytest

from osamd.environments import RotatingGaussianConfig, iter_stream, rotation_angle
from osamd.geometry import EUCLIDEAN, proximal_step
from osamd.harness import load_config, run_experiment, label_flip_scenario
from osamd.learners import (
    LabelOracle,
    OmdState,
    OsamdParams,
    OsamdState,
    ablation_no_active_round,
    ablation_no_selfadapt_round,
    omd_round,
    osamd_round,
)
from osamd.losses import (
    HingeSpec,
    hinge_value_and_gradient,
    multiclass_hinge_value_and_gradient,
    multiclass_scores,
)
from osamd.metrics import (
    comparator_oracle,
    comparator_series,
    dynamic_regret,
    expected_hinge_gaussian,
    gaussian_sampler,
    mc_expected_loss,
)

from oracles import central_difference, hinge_prox_exact, prox_objective

JOBS = min(4, os.cpu_count() or 1)
GAUSS_LOSS = HingeSpec(1.0, 0.2, penalize_bias=False)
GAUSS_PARAMS = OsamdParams(sigma=0.35, eta=0.01, tau_cap=1.0, tau_margin=1.0)
TABLE = {"OMD-all": 98.9, "OMD-partial": 97.0, "PAA": 98.5, "no-selfadapt": 98.2, "no-active": 96.6}
LIMITED = ("PAA", "OMD-partial", "no-selfadapt", "no-active")


@pytest.fixture(scope="module")
def gaussian():
    return run_experiment(load_config(), jobs=JOBS).summary


def _pct(row, key):
    return 100.0 * row[f"{key}_mean"]


def test_table_osamd_accuracy_and_labels(gaussian, criterion):
    acc, labels = _pct(gaussian["OSAMD"], "accuracy"), _pct(gaussian["OSAMD"], "label_fraction")
    ok = 98.0 <= acc <= 99.5 and 15.0 <= labels <= 22.0
    assert criterion("table / OSAMD", ok, f"accuracy {acc:.2f}% in [98, 99.5], labels {labels:.2f}% in [15, 22]")


@pytest.mark.parametrize("name", list(TABLE))
def test_table_baseline_accuracy(gaussian, criterion, name):
    acc = _pct(gaussian[name], "accuracy")
    ok = abs(acc - TABLE[name]) <= 1.0
    assert criterion(f"table / {name}", ok, f"accuracy {acc:.2f}% vs {TABLE[name]}% +-1.0")


def test_table_ordering(gaussian, criterion):
    top = gaussian["OSAMD"]
    lo_top = top["accuracy_mean"] - top["accuracy_ci"]
    details, ok = [], True
    for name in LIMITED:
        row = gaussian[name]
        fine = (top["accuracy_mean"] >= row["accuracy_mean"]
                or lo_top <= row["accuracy_mean"] + row["accuracy_ci"])
        ok &= fine
        details.append(f"{name} {100 * row['accuracy_mean']:.2f}")
    assert criterion("table / ordering", ok,
                     f"OSAMD {100 * top['accuracy_mean']:.2f} >= " + ", ".join(details))


def test_regret_profile(gaussian, criterion):
    regret = {name: row["final_regret_mean"] for name, row in gaussian.items()}
    mine = regret["OSAMD"]
    ok = mine <= 1.5 * regret["OMD-all"] and all(mine < regret[n] for n in LIMITED)
    others = ", ".join(f"{n} {regret[n]:.1f}" for n in LIMITED)
    assert criterion("regret profile", ok,
                     f"OSAMD {mine:.1f} <= 1.5 x OMD-all {regret['OMD-all']:.1f}; below {others}")


def test_label_flip_recovery(criterion):
    horizon = 2000
    _, report = label_flip_scenario(horizon=horizon, repeats=10, jobs=JOBS)
    frozen, mine = report["self-trainer"], report["OSAMD"]
    ok = (frozen["post_flip_regret_mean"] >= 0.4 * horizon
          and mine["post_flip_loss_mean"] <= 0.1 * horizon
          and mine["query_fraction_mean"] <= 0.15)
    assert criterion(
        "label flip", ok,
        f"self-trainer second-half regret {frozen['post_flip_regret_mean']:.0f} >= {0.4 * horizon:.0f}; "
        f"OSAMD post-flip loss {mine['post_flip_loss_mean']:.1f} <= {0.1 * horizon:.0f}, "
        f"queries {100 * mine['query_fraction_mean']:.1f}% <= 15%")


def _mistakes(horizon, sigma):
    cfg = load_config({
        "environment": {"kind": "rotating_gaussian", "horizon": horizon},
        "defaults": {"sigma": sigma},
        "learners": [{"name": "OSAMD", "kind": "osamd"}],
        "metrics": {"compute_regret": False},
        "repeats": 10,
    })
    return run_experiment(cfg, jobs=JOBS).summary["OSAMD"]["pseudolabel_mistakes_mean"]


def test_pseudolabel_mistakes_do_not_grow_with_horizon(criterion):
    start = time.perf_counter()
    short, long_, sharp = _mistakes(2000, 0.35), _mistakes(4000, 0.35), _mistakes(2000, 0.1)
    elapsed = time.perf_counter() - start
    ok = long_ <= 2 * short and short <= sharp
    assert criterion("pseudolabel mistakes", ok,
                     f"T=4000 {long_:.1f} <= 2 x T=2000 {short:.1f}; sigma 0.35 {short:.1f} <= "
                     f"sigma 0.1 {sharp:.1f} ({elapsed:.0f} s)")


def test_numerical_core(criterion):
    rng = np.random.default_rng(2718)
    start = time.perf_counter()

    gap = 0.0
    for _ in range(100):
        dim = int(rng.integers(2, 6))
        C, pb = float(rng.choice([0.0, 0.2, 1.0])), bool(rng.integers(2))
        spec = HingeSpec(1.0, C, pb)
        anchor, x, y = rng.normal(size=dim) * 2, rng.normal(size=dim), int(rng.choice([-1, 1]))
        step = float(rng.uniform(0.05, 2.0))
        out = proximal_step(EUCLIDEAN, anchor, lambda w: hinge_value_and_gradient(spec, w, x, y),
                            step, inner_iterations=50, method="kink_search")
        exact = hinge_prox_exact(anchor, x, y, step, 1.0, C, pb)
        gap = max(gap, prox_objective(anchor, x, y, step, out, 1.0, C, pb)
                  - prox_objective(anchor, x, y, step, exact, 1.0, C, pb))

    rel = 0.0
    for _ in range(50):
        spec = HingeSpec(1.0, float(rng.uniform(0, 1)), bool(rng.integers(2)))
        w, x, y = rng.normal(size=4), rng.normal(size=4), int(rng.choice([-1, 1]))
        if abs(1.0 - y * w @ x) < 1e-3:
            continue
        g = hinge_value_and_gradient(spec, w, x, y)[1]
        fd = central_difference(lambda v: hinge_value_and_gradient(spec, v, x, y)[0], w)
        rel = max(rel, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
        W, cls = rng.normal(size=(3, 4)), int(rng.integers(3))
        s = multiclass_scores(W, x)
        if abs(1.0 - (s[cls] - np.max(np.delete(s, cls)))) < 1e-3 or np.sort(s)[-1] - np.sort(s)[-2] < 1e-3:
            continue
        G = multiclass_hinge_value_and_gradient(spec, W, x, cls)[1]
        fd = central_difference(lambda V: multiclass_hinge_value_and_gradient(spec, V, x, cls)[0], W)
        rel = max(rel, np.linalg.norm(G - fd) / max(1.0, np.linalg.norm(G)))

    cfg = RotatingGaussianConfig()
    worst_z = 0.0
    for _ in range(20):
        w = rng.normal(size=3) * np.array([0.5, 0.5, 3.0])
        t = int(rng.integers(1, cfg.horizon + 1))
        est, se = mc_expected_loss(GAUSS_LOSS, w, gaussian_sampler(cfg, t), 1_000_000, rng)
        worst_z = max(worst_z, abs(est - expected_hinge_gaussian(GAUSS_LOSS, w, cfg, t)) / se)

    base = comparator_oracle(GAUSS_LOSS, cfg, 1).w
    resid = 0.0
    for t in (500, 1000, 1999):
        a = rotation_angle(cfg.total_rotation, cfg.horizon, t)
        c, s = math.cos(a), math.sin(a)
        rotated = np.array([c * base[0] - s * base[1], s * base[0] + c * base[1], base[2]])
        resid = max(resid, float(np.max(np.abs(comparator_oracle(GAUSS_LOSS, cfg, t).w - rotated))))

    short = RotatingGaussianConfig(horizon=30)
    series = comparator_series(GAUSS_LOSS, short)
    own = [expected_hinge_gaussian(GAUSS_LOSS, w, short, t) for t, w in enumerate(series.per_step_optimal, 1)]
    self_regret = float(np.max(np.abs(dynamic_regret(own, series))))

    elapsed = time.perf_counter() - start
    ok = gap <= 1e-6 and rel <= 1e-6 and worst_z <= 3.0 and resid <= 1e-4 and self_regret == 0.0 and elapsed < 10
    assert criterion("numerical core", ok,
                     f"prox gap {gap:.1e}, gradient rel err {rel:.1e}, MC |z| {worst_z:.2f}, "
                     f"equivariance {resid:.1e}, comparator regret {self_regret}, {elapsed:.1f} s")


def _shared_stream(n=400, seed=5):
    cfg = RotatingGaussianConfig(horizon=n)
    return [(x, y) for _, x, y in iter_stream(cfg, np.random.default_rng(seed))]


def test_equivalences(criterion):
    stream = _shared_stream()
    init = np.array([-0.4, 0.0, 4.0])
    force = lambda _c: 1.0

    a = OsamdState(init, init, GAUSS_PARAMS, GAUSS_LOSS)
    b = OmdState(init, eta=GAUSS_PARAMS.eta, loss=GAUSS_LOSS)
    ra, rb = np.random.default_rng(1), np.random.default_rng(1)
    same_omd = True
    for x, y in stream:
        a, wa, oa = ablation_no_selfadapt_round(a, x, LabelOracle(y), ra, query_rule=force)
        b, wb, ob = omd_round(b, x, LabelOracle(y), rb, "always")
        same_omd &= (np.array_equal(wa, wb) and np.array_equal(a.w_hat, b.w)
                     and oa.instantaneous_loss == ob.instantaneous_loss
                     and oa.predicted_label == ob.predicted_label and oa.queried == ob.queried)

    c = d = OsamdState(init, init, GAUSS_PARAMS, GAUSS_LOSS)
    rc, rd = np.random.default_rng(2), np.random.default_rng(2)
    same_osamd = True
    for x, y in stream:
        c, wc, oc = ablation_no_active_round(c, x, LabelOracle(y), rc, 1.0)
        d, wd, od = osamd_round(d, x, LabelOracle(y), rd, query_rule=force)
        same_osamd &= (oc == od and np.array_equal(wc, wd)
                       and np.array_equal(c.theta, d.theta) and np.array_equal(c.w_hat, d.w_hat))

    ok = same_omd and same_osamd
    assert criterion("equivalences", ok,
                     f"no-selfadapt(forced) == omd(always): {same_omd}; "
                     f"no-active(rate 1) == OSAMD(forced): {same_osamd}")
