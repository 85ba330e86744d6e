"""Run every model variant on one graph and print the ablation table.

Variants:
  full           variational encoder, KL penalty, decoder sees s
  no-kl          as full, KL penalty switched off
  no-s-concat    as full, decoder does not see s
  deterministic  posterior mean only, no KL
  vanilla        two-layer GCN on all attributes
  vanilla-wo-s   the same GCN with the sensitive column removed

    python3 demos/ablation.py [german|synth]
"""
import sys

from grafair.config import TrainConfig
from grafair.data import load_dataset, synth_biased_graph
from grafair.train import ablation_matrix

which = sys.argv[1] if len(sys.argv) > 1 else "german"
g = load_dataset("german") if which == "german" else synth_biased_graph(500, 0.9, 0.3, 0)
rows, _ = ablation_matrix(g, TrainConfig(seeds=(0, 1, 2)))

cols = ("f1", "delta_sp", "delta_eo", "delta_cf", "delta_rs")
print(f"{'variant':<14}" + "".join(f"{c:>10}" for c in cols))
for r in rows:
    print(f"{r['variant']:<14}" + "".join(f"{r[c]:>10.2f}" for c in cols))
