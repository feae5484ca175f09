"""Command-line surface binding the toolkit into reproducible runs.

Every run is a pure function of its inputs, flags, and seed: outputs are
byte-identical across repeats.  Prediction files are corpus JSON lines
with a manifest sidecar; evaluation reports embed their manifest.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    Document,
    GraphAnnotation,
    SchemaError,
    corpus_stats,
    document_graph,
    document_nodes,
    load_corpus,
    parse_corpus,
    save_corpus,
    split_corpus,
)
from .evaluation import evaluate_irp, evaluate_trp, measure_agreement
from .graph import ViolationError
from .model import EOS, ROOT, EntityLabel, MentionLabel
from .synth import SynthConfig, generate_corpus, heuristic_parent_scorer, oracle_scorer
from .tables import render_table
from .vop import (
    decode_transitions,
    flat_baseline,
    occorder_transitions,
    predict_parents,
    random_parent_baseline,
    random_transitions,
)
from .vsp import (
    MajorityScorer,
    entity_label_histogram,
    evaluate_vsp,
    majority_label,
    mention_label_histogram,
    predict_vsp,
)

log = logging.getLogger("voyagegraph")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging() -> None:
    level = os.environ.get("VOYAGEGRAPH_LOG", "warn").lower()
    if level not in _LOG_LEVELS:
        raise ValueError(
            f"VOYAGEGRAPH_LOG must be one of {sorted(_LOG_LEVELS)}, got {level!r}"
        )
    logging.basicConfig(level=_LOG_LEVELS[level], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _manifest(command: str, settings: dict, inputs: list, outputs: list) -> dict:
    payload = json.dumps({"command": command, "settings": settings}, sort_keys=True)
    return {
        "command": command,
        "settings": settings,
        "config_digest": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
    }


def _write_manifest(manifest: dict, output: Path) -> None:
    sidecar = Path(str(output) + ".manifest.json")
    sidecar.write_bytes(
        (json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")
    )


def _emit_report(report_dict: dict, manifest: dict, as_json: bool, table: str) -> None:
    if as_json:
        payload = {"manifest": manifest, "report": report_dict}
        print(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    else:
        print(table)
        print("# manifest " + json.dumps(manifest, sort_keys=True, separators=(",", ":")))


def _load_ids(path: str | None) -> set[str] | None:
    if path is None:
        return None
    return {
        line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    }


def _select(documents: list[Document], ids: set[str] | None) -> list[Document]:
    if ids is None:
        return sorted(documents, key=lambda d: d.id)
    index = {d.id: d for d in documents}
    missing = sorted(ids - set(index))
    if missing:
        raise ValueError(f"ids not present in the corpus: {missing[:5]}")
    return [index[i] for i in sorted(ids)]


def _doc_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2**63 - 1, size=n)]


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_validate(args) -> int:
    data = Path(args.input).read_bytes()
    any_violation = False
    try:
        documents = parse_corpus(data, check_graph=False)
    except SchemaError as e:
        print(f"error\t{e}", file=sys.stderr)
        return 2
    for doc in sorted(documents, key=lambda d: d.id):
        result = document_graph(doc, strict=args.strict)
        if isinstance(result, list):
            any_violation = True
            for violation in result:
                print(f"{doc.id}\t{violation.code.value}\t{violation.subject}\t{violation.detail}")
    print(f"checked {len(documents)} documents: " + ("violations found" if any_violation else "clean"))
    return 1 if any_violation else 0


def _cmd_stats(args) -> int:
    documents = load_corpus(args.input)
    stats = corpus_stats(documents)
    manifest = _manifest("stats", {"input": args.input}, [args.input], [])
    table_rows = [[k, v] for k, v in stats.as_dict().items() if not isinstance(v, dict)]
    for label, count in stats.mention_labels:
        table_rows.append([f"mention:{label}", count])
    for label, count in stats.entity_labels:
        table_rows.append([f"entity:{label}", count])
    _emit_report(stats.as_dict(), manifest, args.json, render_table(["Count", "Value"], table_rows))
    return 0


def _cmd_split(args) -> int:
    documents = load_corpus(args.input, check_graph=False)
    ratio = tuple(int(part) for part in args.ratio.split(":"))
    if len(ratio) != 3:
        raise ValueError(f"ratio must have three parts, got {args.ratio!r}")
    split = split_corpus(documents, ratio=ratio, seed=args.seed)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, ids in split.as_dict().items():
        (out_dir / f"{name}.txt").write_text(
            "".join(f"{i}\n" for i in ids), encoding="utf-8"
        )
    manifest = _manifest(
        "split",
        {"input": args.input, "ratio": list(ratio), "seed": args.seed},
        [args.input],
        [str(out_dir / f"{n}.txt") for n in ("train", "dev", "test")],
    )
    _write_manifest(manifest, out_dir / "split")
    print(f"train {len(split.train)}  dev {len(split.dev)}  test {len(split.test)}")
    return 0


def _cmd_synth(args) -> int:
    config = SynthConfig.from_json_file(args.config) if args.config else SynthConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    generated = generate_corpus(config)
    save_corpus(generated.documents, args.output)
    manifest = _manifest(
        "synth", {"config": config.as_dict()}, [args.config or "<default>"], [args.output]
    )
    _write_manifest(manifest, Path(args.output))
    log.info("generated %d documents", len(generated.documents))
    print(
        f"documents {generated.stats.documents}  entities {generated.stats.entities}  "
        f"relations {generated.stats.relations}"
    )
    return 0


def _predicted_vsp_documents(args, documents, targets):
    if args.system == "majority":
        if not args.train_ids:
            raise ValueError("--system majority requires --train-ids")
        train_docs = _select(documents, _load_ids(args.train_ids))
        mention_hist = mention_label_histogram(train_docs)
        entity_hist = entity_label_histogram(train_docs)
        scorer = MajorityScorer(majority_label(mention_hist))
        entity_constant = majority_label(entity_hist)
        for doc in targets:
            mention_labels = {m.id: scorer.label for m in doc.mentions}
            entity_labels = {e.id: entity_constant for e in doc.entities}
            yield doc, mention_labels, entity_labels
    elif args.system == "oracle":
        scorer = oracle_scorer(targets, sigma=args.sigma, seed=args.seed or 0)
        for doc in targets:
            prediction = predict_vsp(scorer, doc)
            yield doc, prediction.mention_labels, prediction.entity_labels
    else:
        raise ValueError(f"unsupported VSP system {args.system!r}")


def _cmd_predict_vsp(args) -> int:
    documents = load_corpus(args.input)
    targets = _select(documents, _load_ids(args.ids))
    predicted = []
    for doc, mention_labels, entity_labels in _predicted_vsp_documents(args, documents, targets):
        predicted.append(
            dataclasses.replace(
                doc,
                mentions=[
                    dataclasses.replace(m, gold_label=mention_labels[m.id]) for m in doc.mentions
                ],
                entities=[
                    dataclasses.replace(e, gold_label=entity_labels[e.id]) for e in doc.entities
                ],
                graph=None,
            )
        )
    save_corpus(predicted, args.output)
    manifest = _manifest(
        "predict-vsp",
        {
            "input": args.input, "system": args.system, "seed": args.seed,
            "sigma": args.sigma, "ids": args.ids, "train_ids": args.train_ids,
        },
        [args.input],
        [args.output],
    )
    _write_manifest(manifest, Path(args.output))
    print(f"predicted visit status for {len(predicted)} documents")
    return 0


def _cmd_predict_irp(args) -> int:
    documents = load_corpus(args.input)
    targets = _select(documents, _load_ids(args.ids))
    seeds = _doc_seeds(args.seed or 0, len(targets))
    if args.system == "oracle":
        scorer = oracle_scorer(targets, sigma=args.sigma, seed=args.seed or 0)
    elif args.system == "heuristic":
        levels = None
        if args.lexicon:
            levels = json.loads(Path(args.lexicon).read_text(encoding="utf-8"))
        scorer = heuristic_parent_scorer(levels)
    predicted = []
    for i, doc in enumerate(targets):
        nodes = document_nodes(doc)
        if args.system == "flat":
            assignment = flat_baseline(nodes)
        elif args.system == "random":
            assignment = random_parent_baseline(nodes, seed=seeds[i])
        elif args.system in ("oracle", "heuristic"):
            assignment = predict_parents(scorer, doc, nodes)
        else:
            raise ValueError(f"unsupported IRP system {args.system!r}")
        inclusion = tuple(
            sorted((parent, child) for child, parent in assignment.items() if parent != ROOT)
        )
        predicted.append(dataclasses.replace(doc, graph=GraphAnnotation(inclusion=inclusion)))
    save_corpus(predicted, args.output)
    manifest = _manifest(
        "predict-irp",
        {
            "input": args.input, "system": args.system, "seed": args.seed,
            "sigma": args.sigma, "ids": args.ids, "lexicon": args.lexicon,
        },
        [args.input],
        [args.output],
    )
    _write_manifest(manifest, Path(args.output))
    print(f"predicted parents for {len(predicted)} documents")
    return 0


def _cmd_predict_trp(args) -> int:
    documents = load_corpus(args.input)
    targets = _select(documents, _load_ids(args.ids))
    seeds = _doc_seeds(args.seed or 0, len(targets))
    if args.system == "oracle":
        scorer = oracle_scorer(targets, sigma=args.sigma, seed=args.seed or 0)
    predicted = []
    for i, doc in enumerate(targets):
        graph = document_graph(doc)
        if isinstance(graph, list):
            raise ViolationError(graph)
        if args.system == "random":
            assignment = random_transitions(graph, seed=seeds[i])
        elif args.system == "occorder-em":
            assignment = occorder_transitions(doc, graph, "em")
        elif args.system == "occorder-vs":
            assignment = occorder_transitions(doc, graph, "vs")
        elif args.system == "oracle":
            assignment = decode_transitions(scorer, doc, graph, decoder=args.decoder)
        else:
            raise ValueError(f"unsupported TRP system {args.system!r}")
        transition = tuple(
            sorted((src, dst) for src, dst in assignment.items() if dst != EOS)
        )
        annotation = doc.graph or GraphAnnotation()
        predicted.append(
            dataclasses.replace(
                doc,
                graph=GraphAnnotation(
                    inclusion=annotation.inclusion,
                    transition=transition,
                    overlap=annotation.overlap,
                ),
            )
        )
    save_corpus(predicted, args.output)
    manifest = _manifest(
        "predict-trp",
        {
            "input": args.input, "system": args.system, "decoder": args.decoder,
            "seed": args.seed, "sigma": args.sigma, "ids": args.ids,
        },
        [args.input],
        [args.output],
    )
    _write_manifest(manifest, Path(args.output))
    print(f"predicted successors for {len(predicted)} documents")
    return 0


def _paired_documents(args):
    gold_docs = _select(load_corpus(args.gold), _load_ids(args.ids))
    pred_docs = parse_corpus(Path(args.pred).read_bytes(), check_graph=False)
    pred_index = {d.id: d for d in pred_docs}
    missing = [d.id for d in gold_docs if d.id not in pred_index]
    if missing:
        raise ValueError(f"predictions missing for documents: {missing[:5]}")
    return gold_docs, pred_index


def _cmd_evaluate(args) -> int:
    gold_docs, pred_index = _paired_documents(args)
    if args.task == "vsp":
        label_set = MentionLabel if args.level == "mention" else EntityLabel
        gold_labels: dict = {}
        pred_labels: dict = {}
        for doc in gold_docs:
            pred = pred_index[doc.id]
            if args.level == "mention":
                gold_items = {m.id: m.gold_label for m in doc.mentions}
                pred_items = {m.id: m.gold_label for m in pred.mentions}
            else:
                gold_items = {e.id: e.gold_label for e in doc.entities}
                pred_items = {e.id: e.gold_label for e in pred.entities}
            unlabeled = [k for k, v in {**gold_items, **pred_items}.items() if v is None]
            if unlabeled:
                raise ValueError(f"document {doc.id!r}: unlabeled items {unlabeled[:5]}")
            gold_labels.update({(doc.id, k): v for k, v in gold_items.items()})
            pred_labels.update({(doc.id, k): v for k, v in pred_items.items()})
        report = evaluate_vsp(gold_labels, pred_labels, label_set)
        table = report.format_table()
        report_dict = report.as_dict()
    else:
        golds, assignments, index = {}, {}, {}
        for doc in gold_docs:
            graph = document_graph(doc)
            if isinstance(graph, list):
                raise ViolationError(graph)
            golds[doc.id] = graph
            index[doc.id] = doc
            annotation = pred_index[doc.id].graph or GraphAnnotation()
            if args.task == "irp":
                parent_of = {child: parent for parent, child in annotation.inclusion}
                assignments[doc.id] = {
                    ref: parent_of.get(ref, ROOT) for ref in graph.nodes
                }
            else:
                successor_of = dict(annotation.transition)
                assignments[doc.id] = {
                    ref: successor_of.get(ref, EOS) for ref in graph.nodes
                }
        if args.task == "irp":
            report = evaluate_irp(golds, assignments)
        else:
            report = evaluate_trp(golds, assignments, index)
        table = report.format_table()
        report_dict = report.as_dict()
    manifest = _manifest(
        "evaluate",
        {
            "task": args.task, "level": args.level, "gold": args.gold,
            "pred": args.pred, "ids": args.ids,
        },
        [args.gold, args.pred],
        [],
    )
    _emit_report(report_dict, manifest, args.json, table)
    return 0


def _cmd_iaa(args) -> int:
    docs_a = load_corpus(args.a, check_graph=False)
    docs_b = load_corpus(args.b, check_graph=False)
    report = measure_agreement(docs_a, docs_b, args.level)
    manifest = _manifest(
        "iaa", {"a": args.a, "b": args.b, "level": args.level}, [args.a, args.b], []
    )
    kappa = "n/a" if report.kappa is None else f"{report.kappa:.4f}"
    table = render_table(
        ["Measure", "Value"],
        [["f1", f"{report.f1:.4f}"], ["kappa", kappa], ["items", report.n_items]],
    )
    _emit_report(report.as_dict(), manifest, args.json, table)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voyagegraph",
        description="Visiting-order graph toolkit: validate, predict, evaluate, synthesize.",
    )
    parser.add_argument("--version", action="version", version=f"voyagegraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check corpus files against the graph constraints")
    p.add_argument("input")
    p.add_argument("--strict", action="store_true",
                   help="require one complete chain per sibling group")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("input")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("split", help="deterministic train/dev/test split")
    p.add_argument("input")
    p.add_argument("--ratio", default="7:1:2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="JSON file of generator settings")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("predict-vsp", help="predict visit status labels")
    p.add_argument("input")
    p.add_argument("--system", required=True, choices=["majority", "oracle"])
    p.add_argument("--output", required=True)
    p.add_argument("--ids", help="file of document ids to predict (default: all)")
    p.add_argument("--train-ids", help="file of training document ids (majority)")
    p.add_argument("--sigma", type=float, default=0.0, help="oracle noise level")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_predict_vsp)

    p = sub.add_parser("predict-irp", help="predict inclusion parents")
    p.add_argument("input")
    p.add_argument(
        "--system", required=True, choices=["flat", "random", "oracle", "heuristic"]
    )
    p.add_argument("--output", required=True)
    p.add_argument("--ids")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--lexicon", help="JSON file mapping surface suffixes to levels")
    p.set_defaults(func=_cmd_predict_irp)

    p = sub.add_parser("predict-trp", help="predict transition successors")
    p.add_argument("input")
    p.add_argument(
        "--system", required=True,
        choices=["random", "occorder-em", "occorder-vs", "oracle"],
    )
    p.add_argument("--decoder", choices=["naive", "seqsort"], default="seqsort",
                   help="decoding strategy for score-based systems")
    p.add_argument("--output", required=True)
    p.add_argument("--ids")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_predict_trp)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--task", required=True, choices=["vsp", "irp", "trp"])
    p.add_argument("--level", choices=["mention", "entity"], default="entity",
                   help="label level for VSP evaluation")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--ids")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("iaa", help="inter-annotator agreement")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument(
        "--level", required=True,
        choices=["mention", "entity", "inclusion", "transition", "relation"],
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_iaa)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging()
        return args.func(args)
    except (SchemaError, ViolationError, ValueError, OSError) as e:
        print(f"voyagegraph: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
