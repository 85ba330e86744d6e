"""Look inside one trained model: how many test predictions change when we
intervene on the sensitive attribute, and how stable predictions are under
feature noise.

    python3 demos/counterfactual_probe.py
"""
import numpy as np

from grafair.config import TrainConfig
from grafair.data import load_dataset
from grafair.graph import flip_sensitive
from grafair.metrics import counterfactual_fairness, predict, robustness_score
from grafair.train import eval_adjacency, train

g = load_dataset("german")
cfg = TrainConfig(seeds=(0,))
run = train(g, cfg)
model, adj = run.model, eval_adjacency(g, cfg, 0)
test = g.test_mask

as_women = predict(model, flip_sensitive(g, 1), adj)
as_men = predict(model, flip_sensitive(g, 0), adj)
changed = np.flatnonzero(test & (as_women != as_men))
print(f"test nodes: {int(test.sum())}; prediction changes when gender is flipped: {len(changed)}")
for i in changed[:5]:
    print(f"  node {i}: predicted {as_women[i]} as female, {as_men[i]} as male (true label {g.labels[i]})")

cf = counterfactual_fairness(model, g, adj, test)
print(f"\naccuracy gap between the two interventions: {cf.delta:.2f} points "
      f"(flip rate {cf.flip_rate:.2f} %)")

for std in (0.1, 0.5, 1.0):
    rs = robustness_score(model, g, adj, test, noise_std=std, n_trials=5, seed=0)
    print(f"noise std {std:>3}: accuracy drop {rs.delta:.2f} points, {rs.change_rate:.1f} % of predictions change")
