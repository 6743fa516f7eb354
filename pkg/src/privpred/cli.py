"""Command-line interface wiring generation, feature derivation, training,
evaluation, ablation, and reporting.

All randomness flows from the --seed flag; every output file is written to
a temporary file and atomically renamed, so interrupted runs never leave a
torn report behind.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

from .data import (
    dataset_stats,
    load_location_records,
    load_osn_graph,
    save_location_records,
    save_osn_graph,
)
from .errors import PrivpredError
from .evaluation import (
    AblationReport,
    AudienceSurveyDataset,
    EvalResult,
    MatrixDataset,
    ablate,
    adapted_cv,
    export_fold_assignments,
    render_ablation_table,
    render_results_table,
)
from .fileio import atomic_write_text, atomic_writer
from .location_features import build_location_features
from .matrix import FACTOR_GROUPS, FeatureMatrix
from .model_io import load_model, save_model
from .osn_features import build_osn_features
from .pipeline import FittedPipeline, make_learner
from .synth import PlantedRule, generate_location_survey, generate_osn_graph


@dataclass
class RunConfig:
    """Validated settings for one CLI invocation."""

    command: str
    args: argparse.Namespace

    def __getattr__(self, item):
        return getattr(self.args, item)


def _add_learner_flags(parser):
    parser.add_argument("--learner", default="tree",
                        choices=["tree", "nb", "loglinear-additive", "loglinear-full"],
                        help="classifier to train")
    parser.add_argument("--confidence", type=float, default=0.25,
                        help="tree pruning confidence")
    parser.add_argument("--min-leaf", type=int, default=2,
                        help="minimum instances per tree leaf")
    parser.add_argument("--l2", type=float, default=1e-4,
                        help="L2 penalty for loglinear fits")


def _add_cv_flags(parser):
    parser.add_argument("--repeats", type=int, default=10,
                        help="independent undersampled datasets")
    parser.add_argument("--folds", type=int, default=10,
                        help="cross-validation folds per repeat")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel evaluation workers")
    parser.add_argument("--seed", type=int, required=True,
                        help="master seed for sampling and folding (required)")


def _add_input_selector(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--platform", choices=["twitter", "googleplus"],
                       help="treat --in as a JSONL follow graph for this platform")
    group.add_argument("--audience", choices=["Family", "Friend", "Colleague"],
                       help="treat --in as a location survey CSV, keep this audience")


def _add_rule_flags(parser, alpha, betas):
    parser.add_argument("--alpha", type=float, default=alpha,
                        help="planted rule intercept")
    for factor, default in zip(
            ("tendency", "sensitivity", "trustworthiness", "appropriateness"), betas):
        parser.add_argument(f"--beta-{factor}", type=float, default=default,
                            help=f"planted coefficient for {factor}")
    parser.add_argument("--eta", type=float, default=0.1,
                        help="label noise rate in [0, 0.5)")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="privpred",
        description="Predict privacy disclosure decisions from social-graph "
                    "and location-survey data.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize datasets with a planted rule")
    gen_sub = gen.add_subparsers(dest="mode", required=True)

    gen_osn = gen_sub.add_parser("osn", formatter_class=fmt,
                                 help="synthetic follow graph (JSONL)")
    gen_osn.add_argument("--platform", required=True,
                         choices=["twitter", "googleplus"])
    gen_osn.add_argument("--users", type=int, default=1000,
                         help="number of users")
    gen_osn.add_argument("--mean-degree", type=float, default=4.0,
                         help="mean requests issued per user")
    gen_osn.add_argument("--verified-fraction", type=float, default=0.0,
                         help="fraction of top-followed users marked verified "
                              "(twitter only)")
    _add_rule_flags(gen_osn, alpha=-0.4, betas=(2.0, -1.5, 2.5, 2.5))
    gen_osn.add_argument("--seed", type=int, required=True,
                         help="generator seed (required)")
    gen_osn.add_argument("--out", required=True, help="output JSONL path")
    gen_osn.add_argument("--truth-out", default=None,
                         help="ground-truth sidecar path (default: OUT.truth.json)")

    gen_loc = gen_sub.add_parser("location", formatter_class=fmt,
                                 help="synthetic location survey (CSV)")
    gen_loc.add_argument("--participants", type=int, default=1088,
                         help="number of participants")
    gen_loc.add_argument("--study-mix", default="1:84,2:133,3:244,4:510,5:117",
                         help="participants per study design, e.g. 1:84,2:133,...")
    _add_rule_flags(gen_loc, alpha=0.6, betas=(1.5, -2.0, 1.2, 2.0))
    gen_loc.add_argument("--seed", type=int, required=True,
                         help="generator seed (required)")
    gen_loc.add_argument("--out", required=True, help="output CSV path")
    gen_loc.add_argument("--truth-out", default=None,
                         help="ground-truth sidecar path (default: OUT.truth.json)")

    feat = sub.add_parser("features", formatter_class=fmt,
                          help="derive a feature matrix from a dataset")
    feat.add_argument("--in", dest="input", required=True, help="input data path")
    _add_input_selector(feat)
    feat.add_argument("--out", required=True, help="feature CSV path")
    feat.add_argument("--meta-out", default=None,
                      help="sidecar column-group JSON (default: OUT.meta.json)")

    train = sub.add_parser("train", formatter_class=fmt,
                           help="train a model on a feature matrix")
    train.add_argument("--in", dest="input", required=True, help="feature CSV path")
    train.add_argument("--meta", default=None,
                       help="sidecar JSON path (default: IN.meta.json)")
    _add_learner_flags(train)
    train.add_argument("--out", required=True, help="model JSON path")

    pred = sub.add_parser("predict", formatter_class=fmt,
                          help="score rows of a feature matrix with a saved model")
    pred.add_argument("--model", required=True, help="model JSON path")
    pred.add_argument("--in", dest="input", required=True, help="feature CSV path")
    pred.add_argument("--meta", default=None,
                      help="sidecar JSON path (default: IN.meta.json)")
    pred.add_argument("--out", required=True, help="predictions CSV path")

    ev = sub.add_parser("evaluate", formatter_class=fmt,
                        help="undersampled repeated cross-validation")
    ev.add_argument("--in", dest="input", required=True, help="input data path")
    _add_input_selector(ev)
    _add_learner_flags(ev)
    _add_cv_flags(ev)
    ev.add_argument("--out", default=None, help="write the result JSON here")
    ev.add_argument("--folds-out", default=None,
                    help="write (record_id, repeat, fold) assignments CSV here")

    ab = sub.add_parser("ablate", formatter_class=fmt,
                        help="evaluate with each factor group removed")
    ab.add_argument("--in", dest="input", required=True, help="input data path")
    _add_input_selector(ab)
    _add_learner_flags(ab)
    _add_cv_flags(ab)
    ab.add_argument("--groups", default="1,2,3,4,5",
                    help="factor groups to remove (indices or names)")
    ab.add_argument("--out", default=None, help="write the report JSON here")

    st = sub.add_parser("stats", formatter_class=fmt,
                        help="label counts of a dataset")
    st.add_argument("--in", dest="input", required=True, help="input data path")
    st.add_argument("--platform", choices=["twitter", "googleplus"], default=None,
                    help="treat --in as a JSONL graph (omit for location CSV)")
    st.add_argument("--out", default=None, help="write the rendered table here")

    rep = sub.add_parser("report", formatter_class=fmt,
                         help="render a saved evaluation/ablation JSON as text")
    rep.add_argument("--in", dest="input", required=True, help="report JSON path")
    rep.add_argument("--name", default="dataset", help="dataset label for the table")
    rep.add_argument("--out", default=None, help="write the rendered table here")

    return parser


def _rule_from_args(args):
    return PlantedRule(
        alpha=args.alpha,
        betas=(args.beta_tendency, args.beta_sensitivity,
               args.beta_trustworthiness, args.beta_appropriateness),
        noise=args.eta)


def _parse_study_mix(text):
    mix = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            design, count = chunk.split(":")
            mix[int(design)] = int(count)
        except ValueError:
            raise PrivpredError(f"bad study-mix entry {chunk!r}; expected DESIGN:COUNT") \
                from None
    return mix


def _parse_groups(text):
    by_index = {str(i + 1): g for i, g in enumerate(FACTOR_GROUPS)}
    groups = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if chunk in by_index:
            groups.append(by_index[chunk])
        elif chunk in FACTOR_GROUPS:
            groups.append(chunk)
        else:
            raise PrivpredError(f"unknown factor group {chunk!r}")
    return tuple(groups)


def _load_dataset(args):
    """(dataset name, cv dataset) from the --platform/--audience selector."""
    if args.platform:
        graph = load_osn_graph(args.input, args.platform)
        return args.platform, MatrixDataset(build_osn_features(graph))
    records = load_location_records(args.input)
    return args.audience, AudienceSurveyDataset(records, args.audience)


def _cmd_generate(config):
    args = config.args
    truth_out = args.truth_out or f"{args.out}.truth.json"
    rule = _rule_from_args(args)
    if args.mode == "osn":
        result = generate_osn_graph(
            args.users, args.mean_degree, rule, args.platform, args.seed,
            verified_fraction=args.verified_fraction)
        save_osn_graph(result.graph, args.out)
        result.truth.save(truth_out)
        print(f"wrote {result.graph.n_users()} users, {result.graph.n_edges()} edges "
              f"to {args.out}")
    else:
        mix = _parse_study_mix(args.study_mix)
        result = generate_location_survey(args.participants, mix, rule, args.seed)
        save_location_records(result.records, args.out)
        result.truth.save(truth_out)
        print(f"wrote {len(result.records)} records to {args.out}")
    print(f"wrote ground truth to {truth_out}")
    return 0


def _cmd_features(config):
    args = config.args
    if args.platform:
        graph = load_osn_graph(args.input, args.platform)
        matrix = build_osn_features(graph)
    else:
        records = load_location_records(args.input)
        kept = [r for r in records if r.audience == args.audience]
        # Export-only convenience: tables over all kept records. Evaluation
        # refits them per training fold instead of using this file.
        matrix = build_location_features(kept, args.audience)
    matrix.save(args.out, args.meta_out)
    print(f"wrote {matrix.n_rows} rows x {matrix.n_columns} feature columns "
          f"to {args.out}")
    return 0


def _cmd_train(config):
    args = config.args
    matrix = FeatureMatrix.load(args.input, args.meta)
    learner = make_learner(args.learner, confidence=args.confidence,
                           min_leaf=args.min_leaf, l2=args.l2)
    fitted = learner.fit(matrix)
    save_model(fitted, args.out)
    print(f"trained {args.learner} on {matrix.n_rows} rows; model at {args.out}")
    return 0


def _cmd_predict(config):
    args = config.args
    model = load_model(args.model)
    matrix = FeatureMatrix.load(args.input, args.meta)
    if isinstance(model, FittedPipeline):
        scores = model.predict_scores(matrix)
    else:
        scores = [model.score_row(matrix.row(i)) for i in range(matrix.n_rows)]
    with atomic_writer(args.out, newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["record_id", "label", "score"])
        for rid, score in zip(matrix.row_ids, scores):
            writer.writerow([rid, int(score >= 0.5), repr(float(score))])
    print(f"wrote {matrix.n_rows} predictions to {args.out}")
    return 0


def _cmd_evaluate(config):
    args = config.args
    name, dataset = _load_dataset(args)
    learner = make_learner(args.learner, confidence=args.confidence,
                           min_leaf=args.min_leaf, l2=args.l2)
    result = adapted_cv(dataset, learner, repeats=args.repeats, folds=args.folds,
                        seed=args.seed, jobs=args.jobs)
    print(render_results_table([(name, result)]))
    if args.out:
        atomic_write_text(args.out, json.dumps(result.to_json(), indent=2) + "\n")
        print(f"wrote result JSON to {args.out}")
    if args.folds_out:
        export_fold_assignments(args.folds_out, dataset.labels,
                                repeats=args.repeats, folds=args.folds, seed=args.seed)
        print(f"wrote fold assignments to {args.folds_out}")
    return 0


def _cmd_ablate(config):
    args = config.args
    name, dataset = _load_dataset(args)
    learner = make_learner(args.learner, confidence=args.confidence,
                           min_leaf=args.min_leaf, l2=args.l2)
    report = ablate(dataset, learner, groups=_parse_groups(args.groups),
                    repeats=args.repeats, folds=args.folds, seed=args.seed,
                    jobs=args.jobs)
    print(render_ablation_table(name, report))
    if args.out:
        atomic_write_text(args.out, json.dumps(report.to_json(), indent=2) + "\n")
        print(f"wrote report JSON to {args.out}")
    return 0


def _cmd_stats(config):
    args = config.args
    if args.platform:
        from .osn_features import derive_labels

        graph = load_osn_graph(args.input, args.platform)
        records = derive_labels(graph)
    else:
        records = load_location_records(args.input)
    text = dataset_stats(records).render()
    print(text)
    if args.out:
        atomic_write_text(args.out, text + "\n")
    return 0


def _cmd_report(config):
    args = config.args
    with open(args.input, "r", encoding="utf-8") as handle:
        obj = json.load(handle)
    kind = obj.get("kind")
    if kind == "evaluation":
        text = render_results_table([(args.name, EvalResult.from_json(obj))])
    elif kind == "ablation":
        text = render_ablation_table(args.name, AblationReport.from_json(obj))
    else:
        raise PrivpredError(f"{args.input}: unknown report kind {kind!r}")
    print(text)
    if args.out:
        atomic_write_text(args.out, text + "\n")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "features": _cmd_features,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
    "stats": _cmd_stats,
    "report": _cmd_report,
}


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    config = RunConfig(command=args.command, args=args)
    try:
        return _COMMANDS[args.command](config)
    except PrivpredError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
