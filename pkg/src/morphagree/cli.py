"""Command-line interface: extract, evaluate, annotate, and report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .complexity import conciseness_correlation, word_entropy
from .conllu import Treebank, parse_conllu_file
from .errors import MorphagreeError, ZeroVarianceError
from .evaluation import (
    all_test_triples,
    arm,
    baseline_arm,
    hrm,
    pearson,
    read_annotations,
)
from .labeling import Label, ThresholdMode
from .pipeline import ExtractionConfig, extract_feature_rules
from .report import build_annotation_rows, write_annotation_sheet, write_report
from .serialization import (
    FORMAT_VERSION,
    eval_report_to_dict,
    load_rules,
    rules_document,
    write_json,
)
from .tree import leaf_count
from .triples import DEFAULT_FEATURES, extract_instances


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _report_failures(failures: dict[str, str]) -> int:
    for feature, message in sorted(failures.items()):
        print(f"error: {feature}: {message}", file=sys.stderr)
    print(
        f"failed features: {', '.join(sorted(failures))}",
        file=sys.stderr,
    )
    return 1


def _load_treebank(path: str) -> Treebank:
    return parse_conllu_file(path)


def cmd_extract(args: argparse.Namespace) -> int:
    config = ExtractionConfig(
        features=tuple(args.features),
        threshold_mode=ThresholdMode(args.threshold),
        hard_threshold=args.hard_threshold,
        alpha=args.alpha,
        phi_min=args.phi_min,
        phi_sqrt=args.phi_sqrt,
        marginals_scope=args.marginals,
        depth_range=args.depth_range,
        selection_metric=args.metric.replace("-", "_"),
        seed=args.seed,
    )
    train = _load_treebank(args.train)
    dev = _load_treebank(args.dev) if args.dev else None
    results = {}
    failures: dict[str, str] = {}
    for feature in config.features:
        try:
            results[feature] = extract_feature_rules(train, feature, config, dev)
        except (MorphagreeError, ValueError) as exc:
            failures[feature] = str(exc)
    write_json(rules_document(results, config, args.train), args.out)
    for feature in config.features:
        result = results.get(feature)
        if result is None:
            continue
        if result.absent:
            print(f"{feature}: absent (no qualifying edges)")
        else:
            required = sum(
                r.label is Label.REQUIRED for r in result.ruleset.rules
            )
            print(
                f"{feature}: {len(result.ruleset.rules)} rules "
                f"({required} required) from {result.ruleset.training_size} instances, "
                f"{leaf_count(result.tree)} leaves"
            )
    print(f"wrote {args.out}")
    if failures:
        return _report_failures(failures)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    doc = load_rules(args.rules)
    test = _load_treebank(args.test)
    features_out: dict[str, dict] = {}
    failures: dict[str, str] = {}
    for feature in doc.features:
        if feature in doc.absent:
            features_out[feature] = {"absent": True}
            continue
        dataset = extract_instances(test, feature)
        if args.top_k is not None:
            triples = [t for t, _ in doc.training_triples[feature][: args.top_k]]
        else:
            triples = all_test_triples(dataset)
        ruleset = doc.rulesets[feature]
        try:
            report = arm(ruleset, dataset, triples, tau=args.tau)
            baseline = (
                baseline_arm(dataset, triples, tau=args.tau) if args.baseline else None
            )
        except MorphagreeError as exc:
            failures[feature] = str(exc)
            continue
        entry = eval_report_to_dict(report, baseline)
        entry["absent"] = False
        features_out[feature] = entry
        line = f"{feature}: ARM {report.arm:.3f} over {len(report.verdicts)} triples"
        if baseline is not None:
            line += f" (baseline {baseline.arm:.3f})"
        print(line)
    out_doc = {
        "format_version": FORMAT_VERSION,
        "rules": args.rules,
        "test": args.test,
        "tau": args.tau,
        "selection": "all" if args.top_k is None else f"top-{args.top_k}",
        "features": features_out,
    }
    write_json(out_doc, args.out)
    print(f"wrote {args.out}")
    if failures:
        return _report_failures(failures)
    return 0


def cmd_annotation_sheet(args: argparse.Namespace) -> int:
    doc = load_rules(args.rules)
    train = _load_treebank(args.train)
    features = [f for f in doc.features if f not in doc.absent]
    rows = build_annotation_rows(features, train, args.top_k, args.examples, args.seed)
    write_annotation_sheet(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_hrm(args: argparse.Namespace) -> int:
    doc = load_rules(args.rules)
    records = read_annotations(args.annotations)
    annotated_features = {r.feature for r in records}
    strict = not args.lenient
    features_out: dict[str, dict] = {}
    evaluated = False
    for feature in doc.features:
        if feature in doc.absent or feature not in annotated_features:
            continue
        score, details = hrm(doc.rulesets[feature], records, strict=strict)
        evaluated = True
        features_out[feature] = {
            "hrm": score,
            "n_triples": len(details),
            "per_triple": [
                {
                    "relation": d.triple.relation,
                    "head_pos": d.triple.head_pos,
                    "dep_pos": d.triple.dep_pos,
                    "human_label": d.human_label.value,
                    "mapped_label": d.mapped_label.value,
                    "tree_label": d.tree_label.value,
                    "hs": d.hs,
                }
                for d in details
            ],
        }
        hits = sum(d.hs for d in details)
        print(f"{feature}: HRM {score:.3f} ({hits}/{len(details)})")
    if not evaluated:
        return _fail("no annotated feature matches the rules document")
    if args.out:
        write_json(
            {
                "format_version": FORMAT_VERSION,
                "rules": args.rules,
                "annotations": args.annotations,
                "mode": "lenient" if args.lenient else "strict",
                "features": features_out,
            },
            args.out,
        )
        print(f"wrote {args.out}")
    return 0


def _mean_leaf_count(doc) -> float | None:
    counts = [leaf_count(tree) for tree in doc.trees.values()]
    if not counts:
        return None
    return sum(counts) / len(counts)


def cmd_complexity(args: argparse.Namespace) -> int:
    if args.rules and len(args.rules) != len(args.train):
        return _fail("--rules must list one rules.json per --train treebank")
    entries: dict[str, dict] = {}
    entropies: dict[str, float] = {}
    leaf_means: dict[str, float] = {}
    for i, path in enumerate(args.train):
        treebank = _load_treebank(path)
        forms = (t.form for s in treebank.sentences for t in s.tokens)
        estimate = word_entropy(forms, args.lambda_override)
        entry = {
            "vocab_size": estimate.vocab_size,
            "total_tokens": estimate.total_tokens,
            "lambda": estimate.lambda_,
            "entropy_bits": estimate.entropy_bits,
            "mean_leaf_count": None,
        }
        entropies[path] = estimate.entropy_bits
        if args.rules:
            mean = _mean_leaf_count(load_rules(args.rules[i]))
            entry["mean_leaf_count"] = mean
            if mean is not None:
                leaf_means[path] = mean
        entries[path] = entry
        print(
            f"{path}: H={estimate.entropy_bits:.4f} bits "
            f"(V={estimate.vocab_size}, n={estimate.total_tokens}, "
            f"lambda={estimate.lambda_:.4f})"
        )
    correlation = None
    if args.rules and len(leaf_means) >= 2:
        correlation = conciseness_correlation(entropies, leaf_means)
        print(f"entropy vs mean leaf count: r = {correlation:.4f}")
    doc = {
        "format_version": FORMAT_VERSION,
        "treebanks": entries,
        "conciseness_pearson_r": correlation,
    }
    if args.out:
        write_json(doc, args.out)
        print(f"wrote {args.out}")
    if args.csv:
        lines = ["treebank,entropy_bits,mean_leaf_count"]
        for path in args.train:
            entry = entries[path]
            mean = entry["mean_leaf_count"]
            lines.append(
                f"{path},{entry['entropy_bits']!r},{'' if mean is None else repr(mean)}"
            )
        Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.csv}")
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    if len(args.eval) != len(args.hrm):
        return _fail("--eval and --hrm must list the same number of files")
    if len(args.eval) < 2:
        return _fail("need at least two settings to correlate")
    eval_docs = [json.loads(Path(p).read_text(encoding="utf-8")) for p in args.eval]
    hrm_docs = [json.loads(Path(p).read_text(encoding="utf-8")) for p in args.hrm]
    features: set[str] | None = None
    for doc in eval_docs:
        present = {
            f for f, e in doc.get("features", {}).items() if not e.get("absent")
        }
        features = present if features is None else features & present
    for doc in hrm_docs:
        features &= set(doc.get("features", {}))
    if not features:
        return _fail("no feature is present in every eval and hrm file")
    per_feature: dict[str, dict] = {}
    rs = []
    for feature in sorted(features):
        xs = [doc["features"][feature]["arm"] for doc in eval_docs]
        ys = [doc["features"][feature]["hrm"] for doc in hrm_docs]
        try:
            r = pearson(xs, ys)
            rs.append(r)
            print(f"{feature}: r = {r:.4f}")
        except ZeroVarianceError:
            r = None
            print(f"{feature}: r undefined (constant scores)")
        per_feature[feature] = {"arm": xs, "hrm": ys, "r": r}
    mean_r = sum(rs) / len(rs) if rs else None
    if mean_r is not None:
        print(f"mean r over {len(rs)} features: {mean_r:.4f}")
    if args.out:
        write_json(
            {
                "format_version": FORMAT_VERSION,
                "settings": [
                    {"eval": e, "hrm": h} for e, h in zip(args.eval, args.hrm)
                ],
                "per_feature": per_feature,
                "mean_r": mean_r,
            },
            args.out,
        )
        print(f"wrote {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    doc = load_rules(args.rules)
    train = _load_treebank(args.train)
    eval_doc = None
    if args.eval:
        eval_doc = json.loads(Path(args.eval).read_text(encoding="utf-8"))
    written = write_report(
        doc, train, args.out, examples=args.examples, seed=args.seed, eval_doc=eval_doc
    )
    print(f"wrote {len(written)} pages to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphagree",
        description="Extract and evaluate morphological agreement rules "
        "from CoNLL-U/SUD treebanks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="learn and label agreement rules")
    p.add_argument("--train", required=True, help="training treebank (.conllu)")
    p.add_argument("--dev", help="validation treebank for model selection")
    p.add_argument("--out", default="rules.json")
    p.add_argument("--features", nargs="+", default=list(DEFAULT_FEATURES))
    p.add_argument(
        "--threshold", choices=["statistical", "hard"], default="statistical"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--marginals", choices=["global", "per-leaf"], default="global")
    p.add_argument("--phi-sqrt", action="store_true",
                   help="use the square-root effect-size variant")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--phi-min", type=float, default=0.5)
    p.add_argument("--hard-threshold", type=float, default=0.9)
    p.add_argument("--depth-range", action="store_true",
                   help="search max depths 6..15 instead of {6, 15}")
    p.add_argument("--metric", choices=["accuracy", "macro-f1"], default="accuracy")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score rules against held-out data (ARM)")
    p.add_argument("--rules", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", default="eval.json")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--top-k", type=int, default=None,
                       help="evaluate the top K training triples")
    group.add_argument("--all", action="store_true",
                       help="evaluate every distinct test triple (default)")
    p.add_argument("--tau", type=float, default=0.95)
    p.add_argument("--baseline", action="store_true",
                   help="also score the all-chance baseline")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("annotation-sheet", help="export a TSV sheet for experts")
    p.add_argument("--rules", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--out", default="sheet.tsv")
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--examples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_annotation_sheet)

    p = sub.add_parser("hrm", help="score rules against expert annotations")
    p.add_argument("--rules", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--lenient", action="store_true",
                   help="map 'sometimes agree' to required instead of chance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_hrm)

    p = sub.add_parser("complexity", help="word entropy and rule conciseness")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--rules", nargs="*", default=[],
                   help="rules.json per treebank, enables leaf-count correlation")
    p.add_argument("--lambda", dest="lambda_override", type=float, default=None)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("correlate", help="Pearson r between ARM and HRM settings")
    p.add_argument("--eval", nargs="+", required=True)
    p.add_argument("--hrm", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="write a static HTML rule report")
    p.add_argument("--rules", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--eval")
    p.add_argument("--out", required=True)
    p.add_argument("--examples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MorphagreeError, OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
