"""fixscope command line: train, inspect, serve, classify, evaluate, sweep.

Exit codes: 0 on success, 1 on domain errors, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

from . import __version__
from .classify import ClassifierConfig, classify
from .cluster import assign_label
from .errors import FixscopeError
from .evaluate import (DEFAULT_THRESHOLDS, SplitSpec, SweepGrid, pr_curve,
                       split, sweep, true_label_for)
from .classify import classify_script
from .minilang import parse_minilang
from .model_io import load_model, save_model
from .pipeline import corpus_digest, train_model
from .represent import AutoencoderConfig, EqualityScheme, MetricFamily
from .synth import DEFAULT_OPERATORS, OPERATORS, generate_synthetic_corpus
from .treediff import MatcherParams, diff, shortest_script
from .treeio import read_corpus, read_tree, write_corpus


def _load_tree_arg(path: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        return read_tree(text)
    return parse_minilang(text)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _matcher_from(args) -> MatcherParams:
    return MatcherParams(min_height=args.min_height, min_dice=args.min_dice,
                         max_recovery_size=args.max_recovery_size)


def _add_matcher_flags(parser) -> None:
    parser.add_argument("--min-height", type=int, default=2,
                        help="top-down matcher minimum subtree height")
    parser.add_argument("--min-dice", type=float, default=0.5,
                        help="bottom-up matcher dice threshold")
    parser.add_argument("--max-recovery-size", type=int, default=100,
                        help="recovery pass subtree size limit")


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    operators = DEFAULT_OPERATORS
    if args.operators:
        names = [n.strip() for n in args.operators.split(",") if n.strip()]
        unknown = [n for n in names if n not in OPERATORS]
        if unknown:
            raise FixscopeError(f"unknown operators: {', '.join(unknown)} "
                                f"(available: {', '.join(sorted(OPERATORS))})")
        operators = tuple(OPERATORS[n] for n in names)
    pairs = generate_synthetic_corpus(args.n_pairs, operators=operators,
                                      seed=args.seed)
    write_corpus(pairs, args.output)
    counts = Counter(p.ground_truth_label for p in pairs)
    _say(args, f"wrote {len(pairs)} pairs to {args.output} "
               f"({', '.join(f'{k}={v}' for k, v in sorted(counts.items()))})")
    return 0


def cmd_ingest(args) -> int:
    pairs = read_corpus(args.corpus)
    problems = Counter(p.problem_id for p in pairs)
    labeled = sum(1 for p in pairs if p.ground_truth_label is not None)
    if args.format == "json":
        print(json.dumps({
            "pairs": len(pairs),
            "problems": dict(sorted(problems.items())),
            "labeled": labeled,
            "digest": corpus_digest(pairs),
        }))
    else:
        _say(args, f"{len(pairs)} pairs across {len(problems)} problem(s); "
                   f"{labeled} carry ground-truth labels")
        for problem, count in sorted(problems.items()):
            _say(args, f"  {problem}: {count}")
    if args.output:
        write_corpus(pairs, args.output)
        _say(args, f"normalized corpus written to {args.output}")
    return 0


def cmd_diff(args) -> int:
    src = _load_tree_arg(args.src)
    dst = _load_tree_arg(args.dst)
    script = diff(src, dst, _matcher_from(args))
    if args.format == "json":
        print(script.to_jsonl())
    else:
        _say(args, f"{script.length} action(s)")
        for action in script.actions:
            print(json.dumps(action.to_record(), ensure_ascii=False))
    return 0


def cmd_cluster(args) -> int:
    pairs = read_corpus(args.corpus)
    model = train_model(
        pairs,
        family=MetricFamily(args.metric),
        scheme=EqualityScheme(args.scheme),
        linkage=args.linkage,
        cut_threshold=args.cut,
        min_cluster_size=args.min_size,
        matcher=_matcher_from(args),
        min_df=args.min_df,
        ae_config=AutoencoderConfig(seed=args.seed),
        auto_label=args.auto_label,
    )
    save_model(model, args.output)
    sizes = ", ".join(str(c.size) for c in model.clusters)
    _say(args, f"{len(model.clusters)} cluster(s) of sizes [{sizes}]; "
               f"{len(model.unclustered)} script(s) unclustered")
    _say(args, f"model written to {args.output}")
    return 0


def cmd_label(args) -> int:
    model = load_model(args.model)
    changed = False
    for setting in args.set or []:
        cluster_id, _, label = setting.partition("=")
        try:
            cid = int(cluster_id)
        except ValueError:
            raise FixscopeError(f"--set expects ID=LABEL, got {setting!r}")
        assign_label(model, cid, label)
        changed = True
    if changed:
        save_model(model, args.model)
    if args.format == "json":
        print(json.dumps([
            {"cluster_id": c.cluster_id, "size": c.size, "label": c.label,
             "medoid_id": c.medoid_id}
            for c in model.clusters
        ]))
        return 0
    for c in model.clusters:
        label = c.label or "(unlabeled)"
        print(f"cluster {c.cluster_id}: {c.size} member(s)  label={label}")
        if c.medoid_id is not None:
            ts = model.scripts[c.medoid_id]
            for action in ts.script.actions[:3]:
                print(f"    {json.dumps(action.to_record(), ensure_ascii=False)}")
            if ts.incorrect_src and not args.quiet:
                first = ts.incorrect_src.strip().splitlines()[:1]
                if first:
                    print(f"    medoid source starts: {first[0]!r}")
    return 0


def cmd_classify(args) -> int:
    model = load_model(args.model)
    tree = _load_tree_arg(args.input)
    config = ClassifierConfig(method=args.method, k=args.k,
                              confidence_threshold=args.theta,
                              distance_threshold=args.delta)
    prediction = classify(tree, model, config)
    print(json.dumps(prediction.to_record(), ensure_ascii=False))
    return 0


def cmd_evaluate(args) -> int:
    from .report import save_curve_report

    model = load_model(args.model)
    pairs = read_corpus(args.corpus)
    if args.split != "all":
        train, validation, test = split(pairs, SplitSpec(seed=args.seed))
        pairs = {"train": train, "validation": validation, "test": test}[args.split]
    if not pairs:
        raise FixscopeError(f"split {args.split!r} is empty")
    labels = {c.label for c in model.labeled_clusters()}
    rows = []
    config = ClassifierConfig(method=args.method, k=args.k,
                              confidence_threshold=0.0,
                              distance_threshold=args.delta)
    for pair in pairs:
        script = shortest_script(pair.incorrect_tree, model.correct_pool,
                                 model.matcher_params, src_ref=pair.pair_id)
        rows.append((classify_script(script, model, config),
                     true_label_for(pair, labels)))
    curve = pr_curve(rows, DEFAULT_THRESHOLDS)
    png = save_curve_report(curve, args.curve,
                            title=f"PR on {args.split} split")
    _say(args, f"curve written to {args.curve} and {png}")
    print(json.dumps({"split": args.split, "items": len(rows),
                      "pr_auc": curve.auc}))
    return 0


def cmd_sweep(args) -> int:
    from .report import save_sweep_report

    pairs = read_corpus(args.corpus)
    grid = _load_grid(args.grid)
    report = sweep(pairs, grid, budget=args.budget,
                   split_spec=SplitSpec(seed=args.seed),
                   ae_config=AutoencoderConfig(seed=args.seed))
    png = save_sweep_report(report.results, args.output)
    _say(args, f"swept {len(report.results)} combination(s), trained "
               f"{report.models_trained} model(s); results in {args.output} "
               f"and {png}")
    best = report.results[0]
    print(json.dumps({"best_config": best.config.to_record(),
                      "validation_pr_auc": best.validation_pr_auc,
                      "models_trained": report.models_trained}))
    return 0


def _load_grid(path: str) -> SweepGrid:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return SweepGrid.from_dict(data.get("grid", data))


def cmd_serve(args) -> int:
    from .server import serve

    model_path = args.model or os.environ.get("FIXSCOPE_MODEL")
    if not model_path:
        raise FixscopeError("pass --model or set FIXSCOPE_MODEL")
    serve(model_path, bind_address=args.bind, static_dir=args.static_dir,
          cors_origin=args.cors_origin)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for anything randomized")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")
    common.add_argument("--format", choices=("json", "text"), default="text",
                        help="output format for listings")

    parser = argparse.ArgumentParser(
        prog="fixscope",
        description="Mine frequent error types from incorrect/correct "
                    "submission pairs and classify new submissions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic corpus with planted errors")
    p.add_argument("-n", "--n-pairs", type=int, default=250)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--operators",
                   help="comma-separated operator ids (default: the four "
                        "shipped error types)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common],
                       help="validate a corpus file and print a summary")
    p.add_argument("--corpus", required=True)
    p.add_argument("-o", "--output", help="write the normalized corpus here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("diff", parents=[common],
                       help="print the edit script between two programs")
    p.add_argument("src", help="MiniLang file, or .json serialized tree")
    p.add_argument("dst")
    _add_matcher_flags(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("cluster", parents=[common],
                       help="train a cluster model from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--metric", default="jaccard",
                   choices=[f.value for f in MetricFamily])
    p.add_argument("--scheme", default="kind_type_label",
                   choices=[s.value for s in EqualityScheme])
    p.add_argument("--linkage", default="average",
                   choices=("single", "complete", "average"))
    p.add_argument("--cut", type=float, default=0.3)
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--auto-label", action="store_true",
                   help="label clusters from majority ground truth")
    p.add_argument("-o", "--output", required=True)
    _add_matcher_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("label", parents=[common],
                       help="print clusters for terminal labeling")
    p.add_argument("--model", required=True)
    p.add_argument("--set", action="append", metavar="ID=LABEL",
                   help="assign LABEL to cluster ID (empty label clears)")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("classify", parents=[common],
                       help="classify one submission against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True,
                   help="MiniLang file, or .json serialized tree")
    p.add_argument("--method", default="nearest_cluster",
                   choices=("nearest_cluster", "knn"))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--theta", type=float, default=0.7,
                   help="confidence threshold below which Unknown is returned")
    p.add_argument("--delta", type=float, default=0.5,
                   help="distance threshold above which Unknown is returned")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", parents=[common],
                       help="PR curve of a model over a corpus split")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="test",
                   choices=("train", "validation", "test", "all"))
    p.add_argument("--curve", required=True, help="output CSV path "
                   "(a PNG figure lands next to it)")
    p.add_argument("--method", default="nearest_cluster",
                   choices=("nearest_cluster", "knn"))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common],
                       help="rank hyperparameter combinations by PR-AUC")
    p.add_argument("--corpus", required=True)
    p.add_argument("--grid", required=True, help="TOML grid file")
    p.add_argument("--budget", type=int,
                   help="evaluate only the first N combinations")
    p.add_argument("-o", "--output", required=True, help="results CSV path "
                   "(a PNG figure lands next to it)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", parents=[common],
                       help="serve the labeling/classification HTTP API")
    p.add_argument("--model", help="model path (or env FIXSCOPE_MODEL)")
    p.add_argument("--bind", help="host:port (or env FIXSCOPE_BIND; default "
                   "127.0.0.1:8642)")
    p.add_argument("--static-dir", help="serve the labeling UI from here")
    p.add_argument("--cors-origin",
                   help="allow this origin for cross-origin requests")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FixscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
