"""Serialization of experiment results.

Reports are JSON with sorted keys and no wall-clock data, so identical runs
produce byte-identical files. Timing goes to a separate file.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .train import TABLE_METRICS, ExperimentResult

REPORT_FORMAT = "grafair-report-v1"


def report_dict(result: ExperimentResult, graph_summary: dict | None = None) -> dict:
    d = result.as_dict(timing=False)
    d["format"] = REPORT_FORMAT
    if graph_summary is not None:
        d["graph"] = graph_summary
    return d


def graph_summary(g) -> dict:
    return {
        "nodes": int(g.n),
        "features": int(g.num_features),
        "edges": int(g.num_edges),
        "train": int(g.train_mask.sum()),
        "val": int(g.val_mask.sum()),
        "test": int(g.test_mask.sum()),
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_report(result: ExperimentResult, path, graph=None) -> Path:
    path = Path(path)
    summary = graph_summary(graph) if graph is not None else None
    path.write_text(dumps(report_dict(result, summary)))
    return path


def timing_dict(results) -> dict:
    out = {}
    for res in results:
        for r in res.runs:
            key = f"{res.config.variant}/beta={res.config.beta:g}/seed={r.seed}"
            out[key] = {"mean_epoch_seconds": r.mean_epoch_seconds, "epochs": len(r.epoch_seconds)}
    return out


def write_timing(results, path) -> Path:
    path = Path(path)
    path.write_text(dumps(timing_dict(results)))
    return path


def table_csv(rows: list) -> str:
    if not rows:
        return ""
    label = next(k for k in rows[0] if k not in TABLE_METRICS and not k.endswith("_std"))
    cols = [label] + [c for k in TABLE_METRICS for c in (k, f"{k}_std")]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: (f"{row[c]:.6f}" if isinstance(row[c], float) and c != label else row[c]) for c in cols})
    return buf.getvalue()


def write_table(rows: list, path) -> Path:
    path = Path(path)
    path.write_text(table_csv(rows))
    return path


def format_summary(summary: dict, keys=TABLE_METRICS) -> str:
    """One line per metric, ``name  mean ± std``."""
    return "\n".join(f"{k:<10} {summary[k]['mean']:7.2f} ± {summary[k]['std']:.2f}" for k in keys)
