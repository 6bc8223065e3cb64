"""Command-line interface.

Subcommands: gen-balls, train, predict, bench, stats. All file writes are
atomic (temp file + rename). Relative data paths that do not exist are
also tried under $GBUTSVM_DATA_DIR. Exit codes:

    0  success
    2  infeasible ball thresholds (nothing survives the delete pass)
    3  I/O failure
    4  malformed input (CSV/config/model file or bad arguments)
    5  solver failure
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .bench import emit_report, parse_config, run_experiment
from .datasets import accuracy, load_csv, load_features_csv
from .errors import (
    DataFormatError,
    InfeasibleThresholdsError,
    ModelFormatError,
    SolverError,
)
from .granular import (
    BallGenConfig,
    generate_balls,
    universum_balls_average,
    universum_balls_split,
    write_balls_csv,
)
from .model_io import atomic_write_text, load_model, save_model
from .models import (
    Hyperparams,
    TrainInputs,
    assemble_dual_negative,
    assemble_dual_positive,
    classify,
    decision_values,
    train_gbutsvm,
    train_tsvm,
    train_utsvm,
)
from .qp import dump_box_qp, solve_box_qp
from .stats import AccuracyMatrix, compile_report, load_reference_matrix, report_to_csv, report_to_markdown

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_SOLVER = 5


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the malformed-input code on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FORMAT, f"{self.prog}: error: {message}\n")


def _resolve(path):
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    data_dir = os.environ.get("GBUTSVM_DATA_DIR")
    if data_dir:
        candidate = Path(data_dir) / p
        if candidate.exists():
            return candidate
    return p


def _label_column(value):
    try:
        return int(value)
    except ValueError:
        return value


def _add_data_args(p, with_labels=True):
    p.add_argument("--data", required=True, help="input CSV file")
    if with_labels:
        p.add_argument("--label-col", default="-1",
                       help="label column index or name (default: last column)")
        p.add_argument("--positive-label", default=None,
                       help="raw label value mapped to +1 (default: column already +1/-1)")
    p.add_argument("--header", action=argparse.BooleanOptionalAction, default=True,
                   help="whether the CSV starts with a header row")
    p.add_argument("--scale", action=argparse.BooleanOptionalAction, default=True,
                   help="min-max scale feature columns to [0, 1]")


def _load_dataset(args):
    return load_csv(
        _resolve(args.data),
        label_column=_label_column(args.label_col),
        positive_label=args.positive_label,
        header=args.header,
        scale=args.scale,
    )


def _ball_config(args):
    return BallGenConfig(num_min=args.num_min, purity_threshold=args.purity,
                         radius_mode=args.radius_mode)


def _add_ball_args(p):
    p.add_argument("--num-min", type=int, default=1,
                   help="minimum members a ball must keep (default 1)")
    p.add_argument("--purity", type=float, default=1.0,
                   help="purity threshold in (0.5, 1] (default 1.0)")
    p.add_argument("--radius-mode", choices=["average", "maximum"], default="average")


def _cmd_gen_balls(args):
    d = _load_dataset(args)
    bs = generate_balls(d, _ball_config(args), seed=args.seed)
    counts = bs.counts()
    print(f"dataset: {d.name} ({d.n_samples} samples, {d.n_features} features)")
    print(f"balls: {len(bs)} (+1: {counts[1]}, -1: {counts[-1]}), splits: {bs.n_splits}")
    print(f"mean radius: {float(np.mean(bs.radii())):.6g}")
    print(f"compression: {bs.compression(d.n_samples):.2f} samples/ball")
    if args.out:
        write_balls_csv(bs, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _train_model(args):
    d = _load_dataset(args)
    h = Hyperparams(c1=args.c1, c2=args.c2, cu=args.cu, epsilon=args.epsilon,
                    kernel=args.kernel, sigma=args.sigma)
    inputs = None
    if args.model == "tsvm":
        model = train_tsvm(d.features, d.labels, h)
    elif args.model == "utsvm":
        if not args.universum_data:
            raise DataFormatError("--model utsvm requires --universum-data")
        U = load_features_csv(_resolve(args.universum_data), header=args.header,
                                  scale=args.scale)
        model = train_utsvm(d.features, d.labels, U, h)
    else:
        cfg = _ball_config(args)
        class_balls = generate_balls(d, cfg, seed=args.seed)
        if args.universum_method == "average":
            univ_balls = universum_balls_average(class_balls)
        elif args.universum_data:
            u = load_csv(
                _resolve(args.universum_data),
                label_column=_label_column(args.label_col),
                positive_label=args.positive_label,
                header=args.header,
                scale=args.scale,
            )
            univ_balls = universum_balls_split(u, cfg, seed=args.seed)
        else:
            univ_balls = None
        inputs = TrainInputs.from_balls(class_balls, univ_balls)
        model = train_gbutsvm(inputs, h)
        print(f"balls: {len(class_balls)} class"
              + (f" + {len(univ_balls)} universum" if univ_balls else ""))
    return model, inputs, d


def _cmd_train(args):
    model, inputs, d = _train_model(args)
    diag = model.diagnostics
    print(f"trained {model.kind} on {d.name}: "
          f"{d.n_samples} samples, kernel={model.params.kernel}")
    print(f"solver iterations: +{diag.get('iterations_positive')} / "
          f"-{diag.get('iterations_negative')}; "
          f"train time: {diag.get('train_seconds', 0.0):.4f}s")
    if args.dump_qp:
        if inputs is None:
            inputs = TrainInputs.from_points(d.features, d.labels)
        out = Path(args.dump_qp)
        out.mkdir(parents=True, exist_ok=True)
        for side, qp in (("positive", assemble_dual_positive(inputs, model.params)),
                         ("negative", assemble_dual_negative(inputs, model.params))):
            dump_box_qp(qp, solve_box_qp(qp), out / f"dual_{side}.csv")
        print(f"dumped duals to {out}")
    save_model(model, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_predict(args):
    model = load_model(_resolve(args.model))
    labels = None
    if args.label_col is not None:
        d = load_csv(
            _resolve(args.data),
            label_column=_label_column(args.label_col),
            positive_label=args.positive_label,
            header=args.header,
            scale=args.scale,
        )
        X, labels = d.features, d.labels
    else:
        X = load_features_csv(_resolve(args.data), header=args.header, scale=args.scale)
    pred = classify(model, X, normalized=args.normalized)
    d_vals = decision_values(model, X, normalized=args.normalized)
    lines = ["row,prediction,distance_positive,distance_negative"]
    for i, (p, dv) in enumerate(zip(pred, d_vals)):
        lines.append(f"{i},{p},{'%.17g' % dv[0]},{'%.17g' % dv[1]}")
    if args.out:
        atomic_write_text(args.out, "\n".join(lines) + "\n")
        print(f"wrote {args.out} ({len(pred)} predictions)")
    else:
        print("\n".join(lines))
    if labels is not None:
        print(f"accuracy: {accuracy(pred, labels):.2f}%")
    return EXIT_OK


def _cmd_bench(args):
    config = parse_config(_resolve(args.config))
    out_dir = args.out_dir or config.out_dir
    if not out_dir:
        raise DataFormatError("no output directory: pass --out-dir or set out_dir in the config")
    seed = args.seed if args.seed is not None else config.seed
    jobs = args.jobs if args.jobs is not None else config.jobs
    split = config.split if args.seed is None else type(config.split)(
        train_fraction=config.split.train_fraction,
        universum_fraction=config.split.universum_fraction,
        test_fraction=config.split.test_fraction,
        seed=seed,
    )
    records = []
    for path in config.datasets:
        d = load_csv(
            _resolve(path),
            label_column=config.label_column,
            positive_label=config.positive_label,
            header=config.header,
            scale=config.scale,
        )
        print(f"running {d.name}: {d.n_samples} samples, {d.n_features} features")
        records.extend(
            run_experiment(
                d,
                models=config.models,
                grid=config.grid,
                split=split,
                universum_method=config.universum_method,
                seed=seed,
                jobs=jobs,
            )
        )
    if not records:
        raise InfeasibleThresholdsError("every (dataset, model) run failed")
    out = emit_report(records, out_dir, report_format=args.format)
    for r in records:
        print(f"{r.dataset} {r.model}: test {r.test_accuracy:.2f}% "
              f"(cv {r.cv_accuracy:.2f}%, refit {r.train_seconds:.4f}s)")
    print(f"wrote {out}/accuracy_matrix.csv, runs.csv, report.{args.format}")
    return EXIT_OK


def _cmd_stats(args):
    if args.matrix:
        matrix = AccuracyMatrix.from_csv(_resolve(args.matrix))
    else:
        matrix = load_reference_matrix()
    report = compile_report(matrix, reference=args.reference, tie_tol=args.tie_tol)
    text = report_to_markdown(report) if args.format == "md" else report_to_csv(report)
    if args.out:
        atomic_write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="gbutsvm",
                     description="Granular-ball twin SVM toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-balls", parents=[], help="generate granular balls from a CSV",
                       description="Cover a labeled CSV with granular balls and write them to CSV.")
    _add_data_args(p)
    _add_ball_args(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None, help="output ball CSV path")
    p.set_defaults(func=_cmd_gen_balls)

    p = sub.add_parser("train", help="train a model on a CSV",
                       description="Train tsvm/utsvm/gbutsvm on a labeled CSV and save the model file.")
    _add_data_args(p)
    p.add_argument("--model", choices=["tsvm", "utsvm", "gbutsvm"], required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--cu", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--kernel", choices=["linear", "rbf"], default="linear")
    p.add_argument("--sigma", type=float, default=1.0)
    _add_ball_args(p)
    p.add_argument("--universum-method", choices=["split", "average"], default="split")
    p.add_argument("--universum-data", default=None,
                   help="universum CSV: labeled for gbutsvm (split method), feature-only for utsvm")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dump-qp", default=None, metavar="DIR",
                   help="dump the assembled duals and their solutions to DIR")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict labels with a saved model",
                       description="Apply a saved model to a CSV; accuracy is printed when labels are present.")
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--label-col", default=None,
                   help="label column (omit for a feature-only CSV)")
    p.add_argument("--positive-label", default=None)
    p.add_argument("--header", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--scale", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--normalized", action="store_true",
                   help="divide decision values by ||w||")
    p.add_argument("--out", default=None, help="prediction CSV (stdout when omitted)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("bench", help="run the benchmark harness",
                       description="Run the split/grid-search/refit protocol from a config file.")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--out-dir", default=None, help="report directory (overrides config)")
    p.add_argument("--jobs", type=int, default=None, help="concurrent grid workers")
    p.add_argument("--format", choices=["md", "csv"], default="md",
                   help="report format (accuracy_matrix.csv and runs.csv are always written)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("stats", help="rank statistics over an accuracy matrix",
                       description="Friedman, Kruskal-Wallis, Wilcoxon and win-tie-loss "
                                   "over a dataset x model accuracy CSV.")
    p.add_argument("--matrix", default=None,
                   help="accuracy CSV (default: the bundled published matrix)")
    p.add_argument("--reference", default=None,
                   help="reference model column (default: first)")
    p.add_argument("--tie-tol", type=float, default=0.0)
    p.add_argument("--format", choices=["md", "csv"], default="md")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.set_defaults(func=_cmd_stats)
    return parser


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleThresholdsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataFormatError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
