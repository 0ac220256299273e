"""Command-line interface.

Exit codes: 0 = analysis ran and found nothing, 3 = analysis ran and found
faults (distinct so CI can gate on it), 2 = an input was invalid or missing,
1 = usage error. Diagnostics go to stderr; reports go to --out / --report or
stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import synth
from .dynvote import deserialize_model, serialize_model, train_ensemble
from .errors import FldeepError, InapplicableOperator
from .harness import (
    OPERATOR_IDS,
    ablate,
    build_corpus,
    eval_table,
    evaluate_corpus,
)
from .kg import build_kg, export_ntriples
from .linkpred import deserialize_linkpred, serialize_linkpred, train_linkpred
from .pipeline import AnalysisOptions, analyze_bundle
from .ranking import emit_report
from .rules import RulesConfig, builtin_rules, infer
from .bundle import parse_bundle

EXIT_CLEAN = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_FINDINGS = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _diag(message: str) -> None:
    print(f"fldeep: {message}", file=sys.stderr)


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _load_options(args: argparse.Namespace) -> AnalysisOptions:
    opts = AnalysisOptions()
    rules_path = getattr(args, "rules", None) or os.environ.get("FLDEEP_CONFIG")
    if rules_path:
        opts = replace(opts, rules_config=RulesConfig.from_json(rules_path))
    if getattr(args, "model", None):
        opts = replace(opts, ensemble=deserialize_model(Path(args.model).read_bytes()))
    if getattr(args, "linkpred_model", None):
        opts = replace(
            opts, link_model=deserialize_linkpred(Path(args.linkpred_model).read_bytes())
        )
    if getattr(args, "priors", None):
        table = json.loads(Path(args.priors).read_text())
        opts = replace(opts, priors={str(k): float(v) for k, v in table.items()})
    if getattr(args, "skip_dynamic", False):
        opts = replace(opts, skip_dynamic=True)
    if getattr(args, "skip_linkpred", False):
        opts = replace(opts, skip_linkpred=True)
    return opts


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        opts = _load_options(args)
    except (FldeepError, OSError, json.JSONDecodeError, ValueError) as exc:
        _diag(f"invalid configuration: {exc}")
        return EXIT_INVALID
    try:
        b = parse_bundle(args.bundle)
    except FldeepError as exc:
        _diag(f"invalid bundle: {exc}")
        return EXIT_INVALID
    result = analyze_bundle(b, opts)
    report = emit_report(result.findings, b.bundle_id, fmt=args.format)
    if args.out:
        _write_atomic(Path(args.out), report.encode())
    else:
        sys.stdout.write(report)
    if args.export_kg:
        _write_atomic(Path(args.export_kg), export_ntriples(result.graph))
    return EXIT_FINDINGS if result.findings else EXIT_CLEAN


def cmd_train(args: argparse.Namespace) -> int:
    corpus = synth.training_corpus(n_per_class=args.per_class, seed=args.corpus_seed)
    model = train_ensemble(corpus, seed=args.seed)
    _write_atomic(Path(args.out), serialize_model(model))
    _diag(f"ensemble trained on {len(corpus)} samples, written to {args.out}")
    return EXIT_CLEAN


def cmd_train_linkpred(args: argparse.Namespace) -> int:
    corpus = synth.linkpred_corpus(n_graphs=args.graphs, seed=args.corpus_seed)
    model = train_linkpred(corpus, dim=args.dim, seed=args.seed)
    _write_atomic(Path(args.out), serialize_linkpred(model))
    _diag(f"link predictor trained on {len(corpus)} graphs, written to {args.out}")
    return EXIT_CLEAN


def cmd_mutate(args: argparse.Namespace) -> int:
    try:
        b = parse_bundle(args.bundle)
    except FldeepError as exc:
        _diag(f"invalid bundle: {exc}")
        return EXIT_INVALID
    ops = tuple(s.strip() for s in args.ops.split(",")) if args.ops else OPERATOR_IDS
    unknown = [op for op in ops if op not in OPERATOR_IDS]
    if unknown:
        _diag(f"unknown operator(s): {', '.join(unknown)}")
        return EXIT_USAGE
    index = build_corpus(
        [b], args.out, n_variants=args.variants, base_seed=args.seed, operators=ops
    )
    mine = [row for row in index if row["source"] == b.bundle_id]
    _diag(f"{len(mine)} mutant(s) of {b.bundle_id} in {args.out}")
    return EXIT_CLEAN


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        opts = _load_options(args)
    except (FldeepError, OSError, json.JSONDecodeError, ValueError) as exc:
        _diag(f"invalid configuration: {exc}")
        return EXIT_INVALID
    try:
        rows, detail = evaluate_corpus(args.corpus, opts, top_k=args.top_k)
    except FldeepError as exc:
        _diag(f"invalid corpus: {exc}")
        return EXIT_INVALID
    doc = eval_table(rows, top_k=args.top_k)
    if args.detail:
        doc["bundles"] = detail
    if args.ablate:
        stages = ablate(args.corpus, opts, top_k=args.top_k)
        doc["ablation"] = {
            stage: {
                "detected": info["detected"],
                **({"reduction": info["reduction"]} if "reduction" in info else {}),
            }
            for stage, info in stages.items()
        }
    blob = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    if args.report:
        _write_atomic(Path(args.report), blob)
    else:
        sys.stdout.write(blob.decode())
    return EXIT_CLEAN


def cmd_export_kg(args: argparse.Namespace) -> int:
    try:
        b = parse_bundle(args.bundle)
    except FldeepError as exc:
        _diag(f"invalid bundle: {exc}")
        return EXIT_INVALID
    dyn = ()
    if not args.skip_dynamic:
        from .pipeline import default_ensemble
        from .features import extract_features
        from .dynvote import predict_faults
        from .errors import EmptyTrace

        try:
            dyn = predict_faults(default_ensemble(), extract_features(b))
        except EmptyTrace:
            dyn = ()
    g = build_kg(b, dyn)
    if args.infer:
        g = infer(g, builtin_rules(RulesConfig()))
    blob = export_ntriples(g)
    if args.out:
        _write_atomic(Path(args.out), blob)
    else:
        sys.stdout.write(blob.decode())
    return EXIT_CLEAN


def _build_parser() -> _Parser:
    parser = _Parser(prog="fldeep", description="Fault localization for recorded training runs")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", help="localize faults in one run bundle")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--model", help="voting ensemble file (default: shipped)")
    p.add_argument("--linkpred-model", help="link predictor file (default: shipped)")
    p.add_argument("--rules", help="rules threshold config JSON")
    p.add_argument("--priors", help="fault-type prior table JSON")
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--export-kg", help="also write the inferred graph as N-Triples")
    p.add_argument("--skip-dynamic", action="store_true")
    p.add_argument("--skip-linkpred", action="store_true")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("train", help="train the voting ensemble on the shipped corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--corpus-seed", type=int, default=synth.DEFAULT_CORPUS_SEED)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("train-linkpred", help="train the link predictor on the shipped corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--graphs", type=int, default=48)
    p.add_argument("--corpus-seed", type=int, default=synth.DEFAULT_LINK_CORPUS_SEED)
    p.set_defaults(fn=cmd_train_linkpred)

    p = sub.add_parser("mutate", help="write fault-injected variants of a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ops", help=f"comma-separated subset of {','.join(OPERATOR_IDS)}")
    p.add_argument("--seed", type=int, default=100)
    p.add_argument("--variants", type=int, default=3)
    p.set_defaults(fn=cmd_mutate)

    p = sub.add_parser("eval", help="score pipeline detections over a mutant corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--report", help="write eval table here instead of stdout")
    p.add_argument("--detail", action="store_true", help="include per-bundle outcomes")
    p.add_argument("--ablate", action="store_true", help="include signal-source ablation")
    p.add_argument("--model", help="voting ensemble file (default: shipped)")
    p.add_argument("--linkpred-model", help="link predictor file (default: shipped)")
    p.add_argument("--rules", help="rules threshold config JSON")
    p.add_argument("--priors", help="fault-type prior table JSON")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("export-kg", help="export a bundle's knowledge graph as N-Triples")
    p.add_argument("bundle")
    p.add_argument("--out")
    p.add_argument("--skip-dynamic", action="store_true")
    p.add_argument("--infer", action="store_true", help="run rules before exporting")
    p.set_defaults(fn=cmd_export_kg)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except InapplicableOperator as exc:
        _diag(str(exc))
        return EXIT_USAGE
    except FldeepError as exc:
        _diag(str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
