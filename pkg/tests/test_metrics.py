import numpy as np
import pytest

import oracles
from grafair.errors import DegenerateGroup, EmptyMask, NegativeStd
from grafair.graph import build_graph, normalize_adjacency
from grafair.metrics import (MetricsReport, aggregate, counterfactual_fairness, equal_opportunity, evaluate,
                             f1_score, group_counts, robustness_score, statistical_parity)
from grafair.model import ModelDims, init_weights


def all_true(n):
    return np.ones(n, dtype=bool)


def test_f1_examples():
    y = np.array([1, 0, 1, 0])
    assert f1_score(y, y, all_true(4)) == 100.0
    assert f1_score(np.zeros(4, int), y, all_true(4)) == 0.0
    # TP=2, FP=1, FN=1
    pred = np.array([1, 1, 1, 0, 0])
    lab = np.array([1, 1, 0, 1, 0])
    assert f1_score(pred, lab, all_true(5)) == pytest.approx(200 / 3)


def test_f1_empty_mask():
    with pytest.raises(EmptyMask):
        f1_score([1], [1], [False])


def test_statistical_parity_examples():
    assert statistical_parity([1, 1, 0, 0], [1, 1, 0, 0], all_true(4)) == 100.0
    assert statistical_parity([1, 1, 1, 1], [1, 0, 1, 0], all_true(4)) == 0.0
    assert statistical_parity([1, 0, 1, 0], [1, 1, 0, 0], all_true(4)) == 0.0
    with pytest.raises(DegenerateGroup):
        statistical_parity([1, 0], [1, 1], all_true(2))


def test_equal_opportunity_examples():
    # group 1: TPR 3/4; group 0: TPR 1/2
    pred = [1, 1, 1, 0, 1, 0]
    lab = [1, 1, 1, 1, 1, 1]
    s = [1, 1, 1, 1, 0, 0]
    assert equal_opportunity(pred, lab, s, all_true(6)) == pytest.approx(25.0)
    assert equal_opportunity(lab, lab, s, all_true(6)) == 0.0
    with pytest.raises(DegenerateGroup):
        equal_opportunity([1, 1], [1, 0], [1, 0], all_true(2))


def test_metrics_match_counting_oracle_on_200_instances():
    rng = np.random.default_rng(123)
    for _ in range(200):
        n = int(rng.integers(1, 51))
        p, y, s = (rng.integers(0, 2, n) for _ in range(3))
        m = all_true(n)
        assert f1_score(p, y, m) == oracles.f1(p.tolist(), y.tolist())
        sp = oracles.statistical_parity(p.tolist(), s.tolist())
        if sp is None:
            with pytest.raises(DegenerateGroup):
                statistical_parity(p, s, m)
        else:
            assert statistical_parity(p, s, m) == sp
        eo = oracles.equal_opportunity(p.tolist(), y.tolist(), s.tolist())
        if eo is None:
            with pytest.raises(DegenerateGroup):
                equal_opportunity(p, y, s, m)
        else:
            assert equal_opportunity(p, y, s, m) == eo
        c = group_counts(p, y, s, m)
        assert c.sum() == n
        for key, v in oracles.counts(p, y, s).items():
            assert c[key] == v


def test_group_relabel_and_permutation_invariance():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = 40
        p, y, s = (rng.integers(0, 2, n) for _ in range(3))
        y[:4] = 1
        s[:2] = 0
        s[2:4] = 1
        m = all_true(n)
        assert statistical_parity(p, 1 - s, m) == pytest.approx(statistical_parity(p, s, m), abs=1e-12)
        assert equal_opportunity(p, y, 1 - s, m) == pytest.approx(equal_opportunity(p, y, s, m), abs=1e-12)
        perm = rng.permutation(n)
        assert statistical_parity(p[perm], s[perm], m) == pytest.approx(statistical_parity(p, s, m), abs=1e-12)
        assert f1_score(p[perm], y[perm], m) == pytest.approx(f1_score(p, y, m), abs=1e-12)


def graph_and_model(variant="full", seed=0, n=40):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 4))
    x[:, 0] = np.arange(n) % 2
    y = (rng.random(n) < 0.5).astype(int)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < 0.1
    g = build_graph(x, np.stack([iu[keep], ju[keep]], 1), 0, y)
    model = init_weights(ModelDims(4, 6), seed, variant)
    return g, normalize_adjacency(g), model


def test_counterfactual_zero_when_s_is_invisible():
    g, adj, model = graph_and_model("vanilla-wo-s")
    cf = counterfactual_fairness(model, g, adj, g.test_mask)
    assert cf.delta == 0.0 and cf.flip_rate == 0.0


def test_counterfactual_nonzero_when_decoder_sees_s():
    g, adj, model = graph_and_model("full")
    model.params["dec0.W"][-1] += 50.0  # strongly favour class 1 when s = 1
    cf = counterfactual_fairness(model, g, adj, all_true(g.n))
    assert cf.flip_rate > 0


def test_robustness_examples():
    g, adj, model = graph_and_model("full")
    assert robustness_score(model, g, adj, g.test_mask, noise_std=0.0).delta == 0.0
    a = robustness_score(model, g, adj, g.test_mask, 1.0, 3, seed=4)
    b = robustness_score(model, g, adj, g.test_mask, 1.0, 3, seed=4)
    assert a == b
    const = model.copy()
    for k in const.params:
        const.params[k] = np.zeros_like(const.params[k])
    const.params["dec0.b"] = np.array([[0.0, 1.0]])
    r = robustness_score(const, g, adj, g.test_mask, 5.0, 3)
    assert r.delta == 0.0 and r.change_rate == 0.0
    with pytest.raises(NegativeStd):
        robustness_score(model, g, adj, g.test_mask, -1.0)


def test_evaluate_report_ranges_and_roundtrip():
    g, adj, model = graph_and_model("full", seed=2, n=80)
    rep = evaluate(model, g, adj, all_true(g.n), n_trials=2)
    for k in ("f1", "delta_sp", "delta_eo", "delta_cf", "delta_rs"):
        assert 0.0 <= getattr(rep, k) <= 100.0
    assert rep.group_counts.sum() == g.n
    again = MetricsReport.from_dict(rep.as_dict())
    assert again.as_dict() == rep.as_dict()


def test_aggregate_population_std():
    g, adj, model = graph_and_model("full", seed=2, n=80)
    rep = evaluate(model, g, adj, all_true(g.n), n_trials=1)
    agg = aggregate([rep])
    assert all(v["std"] == 0.0 for v in agg.values())
    assert agg["f1"]["mean"] == rep.f1
    r2 = MetricsReport.from_dict({**rep.as_dict(), "f1": rep.f1 + 2.0})
    assert aggregate([rep, r2])["f1"]["std"] == pytest.approx(1.0)
