"""Command-line interface.

Subcommands: ``train``, ``eval``, ``sweep``, ``text-train``, ``text-eval``,
``baseline``, ``report``.  Every random choice descends from ``--seed``, so
repeating a command reproduces its model files, CSVs, and traces byte for
byte.  Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import train_l1
from .data import (
    load_corpus,
    normalize_features,
    parse_sparse_rows,
    split,
    split_corpus,
)
from .errors import DatasetError, DatumwiseError, NumericalError, OutOfRangeError
from .evaluation import (
    SparsityAccuracyCurve,
    accuracy_at_sparsity,
    build_curve,
    derived_seed,
    evaluate,
    evaluate_text,
    sweep_lambda,
)
from .feature_mdp import FeatureAcquisitionProblem, RewardParams, classify_trace
from .learner import RolloutConfig, train
from .mdp import LinearPolicy
from .serialize import ModelBundle, load_model, save_model
from .text_mdp import TextReadingProblem, classify_document

STANDARD_TRAIN_FRACTIONS = "0.05,0.1,0.25,0.5"
DEFAULT_REPORT_TARGETS = "0.8,0.6,0.4"


class UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message, self)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="single source of randomness")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--rollout-states", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--rollouts-per-action", type=int, default=1)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--zero-mask-fraction", type=float, default=0.25)
    p.add_argument(
        "--diagnostics", type=Path, default=None, help="write per-iteration JSON lines here"
    )


def _config_from_args(args) -> RolloutConfig:
    return RolloutConfig(
        num_states=args.rollout_states,
        iterations=args.iterations,
        alpha=args.alpha,
        rollouts_per_action=args.rollouts_per_action,
        ridge=args.ridge,
        zero_mask_fraction=args.zero_mask_fraction,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="datumwise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="train a feature-acquiring classifier")
    p_train.add_argument("--data", type=Path, required=True, help="sparse tabular file")
    p_train.add_argument("--train-fraction", type=float, default=0.5)
    p_train.add_argument("--lambda", dest="feature_cost", type=float, default=0.01)
    p_train.add_argument("--constrained", action="store_true")
    p_train.add_argument("--out", type=Path, required=True, help="model file to write")
    _add_training_flags(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a trained model on the test split")
    p_eval.add_argument("--data", type=Path, required=True)
    p_eval.add_argument("--train-fraction", type=float, default=0.5)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--model", type=Path, required=True)
    p_eval.add_argument("--out", type=Path, default=None, help="report JSON (default stdout)")
    p_eval.add_argument("--traces", type=Path, default=None, help="per-datum JSONL traces")

    p_sweep = sub.add_parser("sweep", help="sparsity/accuracy curve over a lambda grid")
    p_sweep.add_argument("--data", type=Path, required=True)
    p_sweep.add_argument("--train-fraction", type=float, default=0.5)
    p_sweep.add_argument(
        "--train-fractions",
        type=_float_list,
        nargs="?",
        const=[0.05, 0.1, 0.25, 0.5],
        default=None,
        help=f"sweep several train fractions (default set: {STANDARD_TRAIN_FRACTIONS})",
    )
    p_sweep.add_argument("--lambda-grid", type=_float_list, required=True)
    p_sweep.add_argument("--constrained", action="store_true")
    p_sweep.add_argument("--repeats", type=int, default=1)
    p_sweep.add_argument("--out", type=Path, required=True, help="curve CSV to write")
    _add_training_flags(p_sweep)

    p_tt = sub.add_parser("text-train", help="train a sentence-by-sentence text classifier")
    p_tt.add_argument("--manifest", type=Path, required=True)
    p_tt.add_argument("--mode", choices=["mono", "multi"], default="mono")
    p_tt.add_argument("--train-fraction", type=float, default=0.5)
    p_tt.add_argument("--out", type=Path, required=True)
    _add_training_flags(p_tt)

    p_te = sub.add_parser("text-eval", help="evaluate a text model")
    p_te.add_argument("--manifest", type=Path, required=True)
    p_te.add_argument("--mode", choices=["mono", "multi"], default=None,
                      help="defaults to the mode stored in the model")
    p_te.add_argument("--train-fraction", type=float, default=0.5)
    p_te.add_argument("--seed", type=int, default=0)
    p_te.add_argument("--model", type=Path, required=True)
    p_te.add_argument("--out", type=Path, default=None)
    p_te.add_argument("--traces", type=Path, default=None)

    p_base = sub.add_parser("baseline", help="L1 logistic baseline over a strength grid")
    p_base.add_argument("--data", type=Path, required=True)
    p_base.add_argument("--train-fraction", type=float, default=0.5)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--l1-grid", type=_float_list, required=True)
    p_base.add_argument("--max-iters", type=int, default=500)
    p_base.add_argument("--tol", type=float, default=1e-6)
    p_base.add_argument("--out", type=Path, required=True, help="curve CSV to write")

    p_rep = sub.add_parser("report", help="interpolated accuracy at fixed sparsity levels")
    p_rep.add_argument("--curve", type=Path, action="append", required=True,
                       help="curve CSV (repeatable)")
    p_rep.add_argument("--targets", type=_float_list, default=None,
                       help=f"sparsity levels (default {DEFAULT_REPORT_TARGETS})")
    p_rep.add_argument("--average", action="store_true",
                       help="add a row averaging the interpolated values across curves")
    p_rep.add_argument("--out", type=Path, default=None)
    return parser


def _load_split_normalized(args):
    dataset = parse_sparse_rows(args.data)
    train_ds, test_ds = split(dataset, args.train_fraction, args.seed)
    train_norm, scaler = normalize_features(train_ds)
    return dataset, train_norm, scaler.apply(test_ds), scaler


def _write_or_print(payload: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(payload)
    else:
        out.write_text(payload, encoding="utf-8")


def _cmd_train(args) -> int:
    dataset, train_norm, _, scaler = _load_split_normalized(args)
    problem = FeatureAcquisitionProblem(
        train_norm.X,
        train_norm.y,
        params=RewardParams(feature_cost=args.feature_cost),
        n_classes=dataset.n_classes,
        constrained=args.constrained,
    )
    config = _config_from_args(args)
    diag_handle = open(args.diagnostics, "w", encoding="utf-8") if args.diagnostics else None
    try:
        policy, diags = train(problem, config, diagnostics_out=diag_handle)
    finally:
        if diag_handle:
            diag_handle.close()
    bundle = ModelBundle(
        policy=policy,
        kind="feature",
        n_features=dataset.n_features,
        n_classes=dataset.n_classes,
        constrained=args.constrained,
        scaler=scaler,
        label_names=dataset.label_names,
    )
    save_model(args.out, bundle, config=_provenance(args, "train"))
    summary = {
        "model": str(args.out),
        "mean_training_reward": diags[-1].mean_training_reward if diags else 0.0,
        "mean_features_used": diags[-1].mean_features_used if diags else 0.0,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _provenance(args, command: str) -> dict:
    skip = {"diagnostics", "out", "command"}
    payload = {"command": command}
    for key, value in vars(args).items():
        if key in skip or callable(value):
            continue
        payload[key] = str(value) if isinstance(value, Path) else value
    return payload


def _dump_feature_traces(policy: LinearPolicy, X: np.ndarray, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for i in range(X.shape[0]):
            label, mask, actions = classify_trace(policy, X[i])
            handle.write(
                json.dumps(
                    {
                        "index": i,
                        "actions": [int(a) for a in actions],
                        "label": int(label),
                        "mask": [int(b) for b in mask],
                    }
                )
                + "\n"
            )


def _cmd_eval(args) -> int:
    bundle = load_model(args.model)
    if bundle.kind != "feature":
        raise DatasetError("eval expects a feature-acquisition model; use text-eval")
    dataset = parse_sparse_rows(args.data)
    if dataset.n_features != bundle.n_features:
        raise DatasetError(
            f"model was trained on {bundle.n_features} features, data has {dataset.n_features}"
        )
    _, test_ds = split(dataset, args.train_fraction, args.seed)
    X_test = bundle.scaler.transform(test_ds.X) if bundle.scaler else test_ds.X
    report = evaluate(bundle.policy, X_test, test_ds.y)
    if args.traces:
        _dump_feature_traces(bundle.policy, X_test, args.traces)
    _write_or_print(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _curve_csv(
    curve: SparsityAccuracyCurve, comments: list[str]
) -> str:
    lines = [f"# {c}" for c in comments]
    for lam, spars, acc in curve.dropped:
        lines.append(f"# dropped duplicate-sparsity point: {lam!r},{spars!r},{acc!r}")
    lines.append("lambda,sparsity,accuracy")
    for lam, spars, acc in curve.points:
        lines.append(f"{lam!r},{spars!r},{acc!r}")
    return "\n".join(lines) + "\n"


def _with_suffix_tag(path: Path, tag: str) -> Path:
    return path.with_name(path.stem + tag + path.suffix)


def _cmd_sweep(args) -> int:
    dataset = parse_sparse_rows(args.data)
    fractions = args.train_fractions if args.train_fractions else [args.train_fraction]
    multi_fraction = len(fractions) > 1
    config = _config_from_args(args)
    for fi, fraction in enumerate(fractions):
        train_ds, test_ds = split(dataset, fraction, args.seed)
        train_norm, scaler = normalize_features(train_ds)
        test_norm = scaler.apply(test_ds)
        out = _with_suffix_tag(args.out, f"_tf{fraction}") if multi_fraction else args.out
        per_repeat: list[SparsityAccuracyCurve] = []
        all_reports: dict[str, list[dict]] = {repr(l): [] for l in args.lambda_grid}
        for rep in range(args.repeats):
            rep_config = replace(
                config, seed=derived_seed(args.seed, fi * 10007 + rep)
            )
            curve, reports = sweep_lambda(
                train_norm.X,
                train_norm.y,
                test_norm.X,
                test_norm.y,
                args.lambda_grid,
                rep_config,
                constrained=args.constrained,
                n_classes=dataset.n_classes,
            )
            per_repeat.append(curve)
            for lam, report in reports.items():
                all_reports[repr(lam)].append(report.to_dict())
            if args.repeats > 1:
                rep_out = _with_suffix_tag(out, f"_rep{rep}")
                rep_out.write_text(
                    _curve_csv(curve, [f"train_fraction={fraction!r}", f"repeat={rep}"]),
                    encoding="utf-8",
                )
        if args.repeats > 1:
            # average per-lambda over repeats, then rebuild the frontier
            averaged = []
            for li, lam in enumerate(args.lambda_grid):
                reps = all_reports[repr(lam)]
                averaged.append(
                    (
                        lam,
                        float(np.mean([1.0 - r["mean_features_used"] / r["n_features"] for r in reps])),
                        float(np.mean([r["accuracy"] for r in reps])),
                    )
                )
            final = build_curve(averaged)
            comments = [
                f"train_fraction={fraction!r}",
                f"repeats={args.repeats} (points average the repeats; see _rep*.csv for each run)",
            ]
        else:
            final = per_repeat[0]
            comments = [f"train_fraction={fraction!r}"]
        out.write_text(_curve_csv(final, comments), encoding="utf-8")
        reports_path = Path(str(out) + ".reports.json")
        reports_path.write_text(
            json.dumps(all_reports, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote {out}")
    return 0


def _cmd_text_train(args) -> int:
    corpus = load_corpus(args.manifest)
    train_c, _ = split_corpus(corpus, args.train_fraction, args.seed)
    problem = TextReadingProblem(list(train_c.docs), train_c.labels, mode=args.mode)
    config = _config_from_args(args)
    diag_handle = open(args.diagnostics, "w", encoding="utf-8") if args.diagnostics else None
    try:
        policy, diags = train(problem, config, diagnostics_out=diag_handle)
    finally:
        if diag_handle:
            diag_handle.close()
    vocab_in_order = tuple(
        tok for tok, _ in sorted(corpus.vocabulary.items(), key=lambda kv: kv[1])
    )
    bundle = ModelBundle(
        policy=policy,
        kind="text",
        n_features=corpus.vocab_size,
        n_classes=corpus.n_categories,
        mode=args.mode,
        vocabulary=vocab_in_order,
        idf=corpus.idf,
        category_names=corpus.category_names,
    )
    save_model(args.out, bundle, config=_provenance(args, "text-train"))
    summary = {
        "model": str(args.out),
        "mean_training_reward": diags[-1].mean_training_reward if diags else 0.0,
        "mean_sentences_read": diags[-1].mean_features_used if diags else 0.0,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_text_eval(args) -> int:
    bundle = load_model(args.model)
    if bundle.kind != "text":
        raise DatasetError("text-eval expects a text model; use eval")
    vocabulary = {tok: i for i, tok in enumerate(bundle.vocabulary)}
    corpus = load_corpus(
        args.manifest,
        vocabulary=vocabulary,
        idf=bundle.idf,
        category_names=bundle.category_names,
    )
    _, test_c = split_corpus(corpus, args.train_fraction, args.seed)
    mode = args.mode or bundle.mode
    report = evaluate_text(bundle.policy, list(test_c.docs), test_c.labels, mode)
    if args.traces:
        with open(args.traces, "w", encoding="utf-8") as handle:
            for i, doc in enumerate(test_c.docs):
                y_hat, read, trace = classify_document(bundle.policy, doc, mode)
                handle.write(
                    json.dumps(
                        {
                            "doc": doc.doc_id,
                            "actions": [int(a) for a in trace.actions],
                            "labels": [int(b) for b in y_hat],
                            "sentences_read": int(read),
                        }
                    )
                    + "\n"
                )
    _write_or_print(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _cmd_baseline(args) -> int:
    dataset = parse_sparse_rows(args.data)
    train_ds, test_ds = split(dataset, args.train_fraction, args.seed)
    train_norm, scaler = normalize_features(train_ds)
    test_norm = scaler.apply(test_ds)
    points = []
    for strength in args.l1_grid:
        model = train_l1(
            train_norm.X,
            train_norm.y,
            l1_strength=strength,
            max_iters=args.max_iters,
            tol=args.tol,
            n_classes=dataset.n_classes,
        )
        report = evaluate(model, test_norm.X, test_norm.y)
        points.append((strength, report.mean_sparsity, report.accuracy))
    curve = build_curve(points)
    args.out.write_text(
        _curve_csv(curve, ["baseline=l1-logistic", f"train_fraction={args.train_fraction!r}"]),
        encoding="utf-8",
    )
    print(f"wrote {args.out}")
    return 0


def read_curve_csv(path: Path) -> SparsityAccuracyCurve:
    points = []
    header_seen = False
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != "lambda,sparsity,accuracy":
                    raise DatasetError(f"{path}: unexpected curve header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DatasetError(f"{path}:{lineno}: expected 3 columns")
            points.append(tuple(float(v) for v in parts))
    if not points:
        raise DatasetError(f"{path}: no curve points")
    return build_curve(points)


def _cmd_report(args) -> int:
    targets = args.targets if args.targets else _float_list(DEFAULT_REPORT_TARGETS)
    lines = ["curve," + ",".join(f"accuracy@sparsity={t!r}" for t in targets)]
    table: list[list[float | None]] = []
    for path in args.curve:
        curve = read_curve_csv(path)
        row: list[float | None] = []
        cells = []
        for t in targets:
            try:
                value = accuracy_at_sparsity(curve, t)
            except (OutOfRangeError, DatasetError):
                value = None
            row.append(value)
            cells.append("n/a" if value is None else repr(value))
        table.append(row)
        lines.append(f"{path}," + ",".join(cells))
    if args.average and table:
        cells = []
        for j in range(len(targets)):
            column = [row[j] for row in table if row[j] is not None]
            cells.append(repr(float(np.mean(column))) if column else "n/a")
        lines.append("mean-of-curves," + ",".join(cells))
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "text-train": _cmd_text_train,
    "text-eval": _cmd_text_eval,
    "baseline": _cmd_baseline,
    "report": _cmd_report,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse -h/--help
        return int(exc.code or 0)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DatumwiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
