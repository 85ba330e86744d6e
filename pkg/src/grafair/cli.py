"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path


from . import report
from .config import TrainConfig, coerce, read_config, write_config
from .data import synth_biased_graph, write_graph_files
from .errors import DataError, GrafairError, InvalidParameter, NumericalError
from .graph import SplitSpec
from .model import ALL_VARIANTS, load_model, save_model
from .train import (ablation_matrix, evaluate_model, load_config_graph, run_experiment,
                    sweep_beta)
from .metrics import aggregate
from . import verify as selftest

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_BETAS = (1, 5, 10, 50, 100, 500, 1000, 5000, 10000, 50000)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt_default(v) -> str:
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS,
                   help="key = value config file; flags override it")
    grp = p.add_argument_group("training configuration")
    for f in fields(TrainConfig):
        grp.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", metavar="VALUE", default=argparse.SUPPRESS,
                         help=f"(default: {_fmt_default(f.default)})")


def _config_from(args) -> TrainConfig:
    path = getattr(args, "config", None)
    cfg = read_config(path) if path else TrainConfig()
    changes = {}
    for f in fields(TrainConfig):
        raw = getattr(args, f"cfg_{f.name}", None)
        if raw is not None:
            try:
                changes[f.name] = coerce(f.name, raw)
            except ValueError as exc:
                raise UsageError(f"--{f.name.replace('_', '-')}: {exc}") from None
    return cfg.replace(**changes) if changes else cfg


def _run_dir(out: str, cfg: TrainConfig, kind: str) -> Path:
    d = Path(out) / f"{kind}-{cfg.digest()}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_train(args) -> int:
    cfg = _config_from(args)
    g = load_config_graph(cfg)
    res = run_experiment(g, cfg)
    d = _run_dir(args.out, cfg, "train")
    write_config(cfg, d / "config.cfg")
    report.write_report(res, d / "report.json", g)
    report.write_timing([res], d / "timing.json")
    for r in res.runs:
        save_model(r.model, d / f"model-seed{r.seed}.npz")
    print(report.format_summary(res.summary))
    print(f"wrote {d}")
    return EXIT_OK


def _checkpoint_metrics(cfg, g, path, seed):
    model = load_model(path)
    if model.dims.in_features != g.num_features:
        raise DataError(f"{path} expects {model.dims.in_features} features, graph has {g.num_features}")
    return evaluate_model(model, g, cfg, seed)


def cmd_eval(args) -> int:
    run = Path(args.run)
    if not (run / "config.cfg").is_file():
        raise DataError(f"{run} is not a train output directory (no config.cfg)")
    cfg = read_config(run / "config.cfg")
    g = load_config_graph(cfg)
    if args.split == "val":
        g = g.replace(test_mask=g.val_mask)
    reports = [_checkpoint_metrics(cfg, g, run / f"model-seed{s}.npz", s) for s in sorted(cfg.seeds)]
    summary = aggregate(reports)
    print(report.format_summary(summary))
    if args.output:
        Path(args.output).write_text(report.dumps({"split": args.split, "summary": summary,
                                                   "runs": [r.as_dict() for r in reports]}))
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = _config_from(args)
    g = load_config_graph(cfg)
    seed = cfg.seeds[0] if args.seed is None else args.seed
    m = _checkpoint_metrics(cfg, g, args.checkpoint, seed)
    text = report.dumps(m.as_dict())
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_list(text: str, cast):
    try:
        return [cast(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


def cmd_sweep(args) -> int:
    cfg = _config_from(args)
    betas = _parse_list(args.betas, float)
    g = load_config_graph(cfg)
    rows, results = sweep_beta(g, cfg, betas)
    d = _run_dir(args.out, cfg, "sweep")
    write_config(cfg, d / "config.cfg")
    report.write_table(rows, d / "sweep.csv")
    (d / "sweep.json").write_text(report.dumps([report.report_dict(r) for r in results]))
    report.write_timing(results, d / "timing.json")
    sys.stdout.write(report.table_csv(rows))
    print(f"wrote {d}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _config_from(args)
    variants = _parse_list(args.variants, str)
    g = load_config_graph(cfg)
    rows, results = ablation_matrix(g, cfg, variants)
    d = _run_dir(args.out, cfg, "ablate")
    write_config(cfg, d / "config.cfg")
    report.write_table(rows, d / "ablation.csv")
    (d / "ablation.json").write_text(report.dumps([report.report_dict(r) for r in results]))
    report.write_timing(results, d / "timing.json")
    sys.stdout.write(report.table_csv(rows))
    print(f"wrote {d}")
    return EXIT_OK


def cmd_synth(args) -> int:
    g = synth_biased_graph(args.n, args.homophily, args.bias_strength, args.seed,
                           split=SplitSpec(seed=args.seed))
    paths = write_graph_files(g, args.out)
    cfg = TrainConfig(features_path=str(paths["features"].resolve()), edges_path=str(paths["edges"].resolve()),
                      masks_path=str(paths["masks"].resolve()), sensitive_column="s", label_column="label",
                      feature_norm="none")
    write_config(cfg, Path(args.out) / "synth.cfg")
    print(f"{g.n} nodes, {g.num_edges} edges; train with: grafair train --config {Path(args.out) / 'synth.cfg'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ok = True
    for res in selftest.run_all(samples=args.samples, seed=args.seed):
        print(res.line())
        ok &= res.passed
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    top = _Parser(prog="grafair", description="Fair node classification with a conditional fairness bottleneck.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train over all seeds, write report and checkpoints", formatter_class=fmt)
    _add_config_flags(p)
    p.add_argument("--out", default="runs", help="parent directory for outputs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="re-evaluate the checkpoints of a train directory", formatter_class=fmt)
    p.add_argument("--run", required=True, help="directory written by `train`")
    p.add_argument("--split", choices=("test", "val"), default="test", help="node mask to score")
    p.add_argument("--output", default=None, help="also write JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("metrics", help="full metrics report for one checkpoint", formatter_class=fmt)
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True, help="model .npz written by `train`")
    p.add_argument("--seed", type=int, default=None, help="seed for noise trials (default: first config seed)")
    p.add_argument("--output", default=None, help="write JSON here instead of standard output")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep-beta", help="one experiment per beta", formatter_class=fmt)
    _add_config_flags(p)
    p.add_argument("--betas", default=",".join(str(b) for b in DEFAULT_BETAS), help="comma-separated betas")
    p.add_argument("--out", default="runs", help="parent directory for outputs")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="one experiment per model variant", formatter_class=fmt)
    _add_config_flags(p)
    p.add_argument("--variants", default=",".join(v.value for v in ALL_VARIANTS), help="comma-separated variants")
    p.add_argument("--out", default="runs", help="parent directory for outputs")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a planted-bias synthetic graph", formatter_class=fmt)
    p.add_argument("--n", type=int, default=500, help="number of nodes")
    p.add_argument("--homophily", type=float, default=0.9, help="same-group edge share")
    p.add_argument("--bias-strength", type=float, default=0.8, help="rate at which labels copy s")
    p.add_argument("--seed", type=int, default=0, help="generator and split seed")
    p.add_argument("--out", default="synth", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="gradient, KL and bound self-tests", formatter_class=fmt)
    p.add_argument("--samples", type=int, default=10**6, help="Monte-Carlo samples for the bound check")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.set_defaults(func=cmd_verify)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:           # --help
        return int(exc.code or 0)
    except (UsageError, InvalidParameter) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GrafairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
