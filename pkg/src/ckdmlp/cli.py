"""Command-line pipeline: ``gen``, ``train``, ``eval`` and ``importance``.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
Every subcommand accepts ``--config FILE`` holding ``key=value`` lines
(keys are flag names, dashes or underscores); explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import dataio, importance, metrics, neuralnet, synthgen


class UsageError(Exception):
    pass


def _fraction_open(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return v


def _rate(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {text}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {text}")
    return v


def _non_negative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _hidden(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two sizes like 32,16, got {text!r}")
    return _positive_int(parts[0]), _positive_int(parts[1])


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckdmlp", description="Tabular CKD classifier pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; explicit flags override it")

    g = sub.add_parser("gen", parents=[common], help="write a synthetic CKD-like CSV")
    g.add_argument("--n", type=_positive_int, default=synthgen.DEFAULT_N_ROWS)
    g.add_argument("--ckd-fraction", type=_fraction_open, default=synthgen.DEFAULT_CKD_FRACTION)
    g.add_argument("--missing-rate", type=_rate, default=synthgen.DEFAULT_MISSING_RATE)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", parents=[common], help="load, impute, split, standardise and train")
    t.add_argument("--data", required=True)
    t.add_argument("--model", required=True, help="model file; stats go to <model>.stats")
    t.add_argument("--curves", help="curves CSV (default: curves.csv next to the model)")
    t.add_argument("--epochs", type=_positive_int, default=100)
    t.add_argument("--lr", type=_non_negative_float, default=0.01)
    t.add_argument("--batch-size", type=_positive_int, default=32)
    t.add_argument("--hidden", type=_hidden, default=(32, 16))
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--train-fraction", type=_fraction_open, default=0.7)
    t.add_argument("--split-seed", type=_seed, help="defaults to --seed")
    t.add_argument("--stratified", type=_bool, default=True)
    t.add_argument("--standardize", type=_bool, default=True)

    e = sub.add_parser("eval", parents=[common], help="metric report for a model or a score file")
    e.add_argument("--model")
    e.add_argument("--data")
    e.add_argument("--scores", help="CSV with columns score,label; replaces --model/--data")
    e.add_argument("--held-out", action="store_true", help="evaluate only the training run's test split")
    e.add_argument("--threshold", type=_fraction_open, default=0.5)
    e.add_argument("--out", required=True)

    i = sub.add_parser("importance", parents=[common], help="permutation feature importance CSV")
    i.add_argument("--model", required=True)
    i.add_argument("--data", required=True)
    i.add_argument("--held-out", action="store_true")
    i.add_argument("--repeats", type=_positive_int, default=10)
    i.add_argument("--seed", type=_seed, default=0)
    i.add_argument("--scoring", choices=("accuracy", "loss"), default="accuracy")
    i.add_argument("--out", required=True)
    return parser


def read_config(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    # Re-parse with the file's values as defaults so argparse still applies
    # type checks to them and explicit flags still take precedence.
    try:
        file_values = read_config(args.config)
    except OSError as exc:
        parser.error(f"cannot read config: {exc}")
    except UsageError as exc:
        parser.error(str(exc))
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(file_values) - known)
    if unknown:
        parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    subparser.set_defaults(**file_values)
    return parser.parse_args(argv)


def _model_paths(model: str) -> tuple[Path, Path]:
    p = Path(model)
    return p, p.with_name(p.name + ".stats")


def _prepared(data_path: str, stats_path: Path, held_out: bool) -> dataio.Dataset:
    """Load, impute and transform data exactly as the training run did."""
    if not stats_path.exists():
        raise FileNotFoundError(
            f"standardisation stats {stats_path} not found; evaluate a model produced by "
            "'ckdmlp train' (it writes <model>.stats) or supply that file"
        )
    st, split_spec = dataio.read_stats(stats_path)
    d = dataio.impute_mean(dataio.load_csv(data_path))
    if held_out:
        if split_spec is None:
            raise ValueError(f"{stats_path} records no split; cannot select the held-out rows")
        _, d = dataio.split(d, split_spec)
    return st.transform(d)


def cmd_gen(args) -> int:
    cfg = synthgen.GeneratorConfig(
        n_rows=args.n, ckd_fraction=args.ckd_fraction, seed=args.seed, missing_rate=args.missing_rate
    )
    try:
        cfg.validate()
    except synthgen.ConfigError as exc:
        raise UsageError(str(exc)) from None
    d = synthgen.generate(cfg)
    dataio.write_csv(d, args.out)
    n_ckd = int(d.labels.sum())
    print(f"wrote {len(d)} rows to {args.out}: ckd={n_ckd} notckd={len(d) - n_ckd} "
          f"missing_cells={int(d.missing_mask.sum())}")
    return 0


def cmd_train(args) -> int:
    model_path, stats_path = _model_paths(args.model)
    curves_path = Path(args.curves) if args.curves else model_path.with_name("curves.csv")
    split_spec = dataio.SplitSpec(
        args.train_fraction,
        args.seed if args.split_seed is None else args.split_seed,
        args.stratified,
    )
    d = dataio.impute_mean(dataio.load_csv(args.data))
    train_set, test_set = dataio.split(d, split_spec)
    if args.standardize:
        st = dataio.fit_standardizer(train_set)
    else:
        st = dataio.Standardizer(np.zeros(d.schema.n_features), np.ones(d.schema.n_features))
    train_set, test_set = st.transform(train_set), st.transform(test_set)

    cfg = neuralnet.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        hidden_dims=args.hidden,
        validation=test_set,
    )
    try:
        cfg.validate()
    except neuralnet.ConfigError as exc:
        raise UsageError(str(exc)) from None
    model, log = neuralnet.train(train_set, cfg)
    neuralnet.save_model(model, model_path)
    dataio.write_stats(stats_path, st, d.schema, split_spec)
    neuralnet.write_curves(log, curves_path)

    scores = neuralnet.forward(model, test_set.features)[:, 0]
    report = metrics.full_report(scores, 0.5, test_set.labels)
    print(f"train_rows={len(train_set)} test_rows={len(test_set)} epochs={len(log)}")
    print(report.one_line())
    return 0


def _read_scores(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"score", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: score file needs columns score,label")
        scores, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            key = row["label"].strip().lower()
            if key not in dataio.LABEL_VALUES:
                raise ValueError(f"{path}: line {lineno}: bad label {row['label']!r}")
            scores.append(float(row["score"]))
            labels.append(dataio.LABEL_VALUES[key])
    return np.array(scores), np.array(labels)


def cmd_eval(args) -> int:
    if args.scores:
        if args.model or args.data:
            raise UsageError("--scores cannot be combined with --model/--data")
        scores, truth = _read_scores(args.scores)
    else:
        if not (args.model and args.data):
            raise UsageError("eval needs --model and --data, or --scores")
        model_path, stats_path = _model_paths(args.model)
        model = neuralnet.load_model(model_path)
        d = _prepared(args.data, stats_path, args.held_out)
        scores, truth = neuralnet.forward(model, d.features)[:, 0], d.labels
    report = metrics.full_report(scores, args.threshold, truth)
    metrics.write_report(report, args.out)
    print(report.one_line())
    return 0


def cmd_importance(args) -> int:
    model_path, stats_path = _model_paths(args.model)
    model = neuralnet.load_model(model_path)
    d = _prepared(args.data, stats_path, args.held_out)
    rep = importance.permutation_importance(model, d, args.repeats, args.seed, args.scoring)
    importance.write_importance_csv(rep, args.out)
    print(" > ".join(rep.ranking()))
    return 0


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "importance": cmd_importance}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ckdmlp {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"ckdmlp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
