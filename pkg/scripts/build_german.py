"""Rebuild the German credit graph from the raw UCI ``german.data`` file.

Node attributes follow the common binarized layout (27 columns with Gender
as the sensitive attribute, GoodCustomer as the label). Edges link people
with similar attributes: each node's similarity to every other node is
1 / (1 + euclidean distance) on min-max scaled attributes, and a pair is
linked when its similarity exceeds ``t`` times either endpoint's
best-neighbor similarity. ``t`` is chosen so the graph has exactly
``--edges`` undirected edges (22242 by default).

The raw file ships inside the ``responsibly`` wheel
(``responsibly/dataset/german/german.data``) and on the UCI repository.

usage: python scripts/build_german.py path/to/german.data [--out DIR]
"""
import argparse
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.spatial import distance_matrix

RAW_COLUMNS = ("checking duration history purpose amount savings employment rate status debtors "
               "residence property age plans housing credits job liable telephone foreign good").split()


def binarize(raw: pd.DataFrame) -> pd.DataFrame:
    out = pd.DataFrame(index=raw.index)
    out["Gender"] = raw.status.isin(["A92", "A95"]).astype(int)
    out["ForeignWorker"] = (raw.foreign == "A201").astype(int)
    out["Single"] = raw.status.isin(["A93", "A95"]).astype(int)
    out["Age"] = raw.age
    out["LoanDuration"] = raw.duration
    out["LoanAmount"] = raw.amount
    out["LoanRateAsPercentOfIncome"] = raw.rate
    out["YearsAtCurrentHome"] = raw.residence
    out["NumberOfOtherLoansAtBank"] = raw.credits
    out["NumberOfLiableIndividuals"] = raw.liable
    out["HasTelephone"] = (raw.telephone == "A192").astype(int)
    out["CheckingAccountBalance_geq_0"] = raw.checking.isin(["A12", "A13"]).astype(int)
    out["CheckingAccountBalance_geq_200"] = (raw.checking == "A13").astype(int)
    out["SavingsAccountBalance_geq_100"] = raw.savings.isin(["A62", "A63", "A64"]).astype(int)
    out["SavingsAccountBalance_geq_500"] = raw.savings.isin(["A63", "A64"]).astype(int)
    out["MissedPayments"] = (raw.history == "A33").astype(int)
    out["NoCurrentLoan"] = (raw.history == "A30").astype(int)
    out["CriticalAccountOrLoansElsewhere"] = (raw.history == "A34").astype(int)
    out["OtherLoansAtBank"] = (raw.plans == "A141").astype(int)
    out["HasCoapplicant"] = (raw.debtors == "A102").astype(int)
    out["HasGuarantor"] = (raw.debtors == "A103").astype(int)
    out["OwnsHouse"] = (raw.housing == "A152").astype(int)
    out["RentsHouse"] = (raw.housing == "A151").astype(int)
    out["Unemployed"] = (raw.employment == "A71").astype(int)
    out["YearsAtCurrentJob_lt_1"] = (raw.employment == "A72").astype(int)
    out["YearsAtCurrentJob_geq_4"] = raw.employment.isin(["A74", "A75"]).astype(int)
    out["JobClassIsSkilled"] = raw.job.isin(["A173", "A174"]).astype(int)
    out["GoodCustomer"] = (raw.good == 1).astype(int)
    return out


def similarity_edges(x: np.ndarray, n_edges: int):
    span = x.max(axis=0) - x.min(axis=0)
    xs = (x - x.min(axis=0)) / np.where(span > 0, span, 1.0)
    sim = 1.0 / (1.0 + distance_matrix(xs, xs))
    np.fill_diagonal(sim, -np.inf)
    best = sim.max(axis=1)
    # pair score: the largest t for which the relative-threshold rule keeps it
    ratio = np.maximum(sim / best[:, None], sim / best[None, :])
    iu, ju = np.triu_indices(len(x), k=1)
    score = ratio[iu, ju]
    order = np.lexsort((ju, iu, -score))[:n_edges]
    threshold = score[order[-1]]
    edges = np.stack([iu[order], ju[order]], axis=1)
    return edges[np.lexsort((edges[:, 1], edges[:, 0]))], threshold


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw", type=Path)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/grafair/datasets/german")
    ap.add_argument("--edges", type=int, default=22242)
    args = ap.parse_args(argv)

    raw = pd.read_csv(args.raw, sep=" ", header=None, names=RAW_COLUMNS)
    table = binarize(raw)
    attrs = table.drop(columns=["GoodCustomer"]).to_numpy(dtype=float)
    edges, threshold = similarity_edges(attrs, args.edges)

    args.out.mkdir(parents=True, exist_ok=True)
    table.to_csv(args.out / "german.csv", index=False)
    np.savetxt(args.out / "german_edges.txt", edges, fmt="%d")
    print(f"{len(table)} nodes, {attrs.shape[1]} attributes, {len(edges)} edges (threshold {threshold:.6f})")


if __name__ == "__main__":
    main()
