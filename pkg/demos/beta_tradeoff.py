"""Sweep the information-bottleneck weight beta and watch accuracy and
fairness move together.

Small beta weights the KL term heavily, so the representation carries little
information about anything and the classifier falls back to a constant
prediction. Large beta lets the representation keep what predicts the label.

    python3 demos/beta_tradeoff.py
"""
from grafair.config import TrainConfig
from grafair.data import synth_biased_graph
from grafair.report import table_csv
from grafair.train import sweep_beta

# A homophilous graph whose labels depend on features as well as on s.
g = synth_biased_graph(500, homophily=0.9, bias_strength=0.3, seed=0)
rows, _ = sweep_beta(g, TrainConfig(seeds=(0, 1, 2), rs_trials=1), [1, 10, 100, 1000, 10000, 50000])

print(f"{'beta':>8} {'F1':>7} {'delta_sp':>9}")
for r in rows:
    print(f"{r['beta']:>8g} {r['f1']:>7.2f} {r['delta_sp']:>9.2f}")

print("\nThe same rows as CSV (the format written by `grafair sweep-beta`):\n")
print(table_csv(rows))
