"""Command-line interface.

Subcommands: index, retrieve, evaluate-retrieval, run-baseline,
run-open-domain, perturb-sweep, baselines, export-trainset, compare, stats.
Experiment subcommands read a TOML or JSON config file; any config value can
be overridden with ``--set section.key=value``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import baselines as baselines_mod
from . import pipeline
from .corpus import DatasetConfig, build_index, load_dataset, load_index, save_index
from .errors import RtsumError
from .metrics import (
    ExampleScores,
    MetricReport,
    binomial_test,
    fleiss_kappa,
    paired_t_test,
    score_summary,
)
from .retrieval import (
    Bm25Params,
    EmbeddingStore,
    bm25_rank,
    build_pseudo_query,
    count_retrieval_errors,
    dense_rank,
    load_rankings,
    resolve_k,
    retrieval_pr_at_k,
    save_rankings,
)


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key] = value
    return overrides


def _load_config(args) -> pipeline.ExperimentConfig:
    return pipeline.load_config(args.config, _parse_overrides(args.set or []))


def _cmd_index(args) -> int:
    dataset = load_dataset(args.dataset, name=args.name, max_input_docs=args.max_input_docs)
    index = build_index(dataset)
    save_index(index, args.output)
    print(f"indexed {len(index)} documents -> {args.output}")
    return 0


def _cmd_retrieve(args) -> int:
    dataset = load_dataset(args.dataset, max_input_docs=args.max_input_docs)
    config = DatasetConfig(query_source=args.query_source)
    if args.index:
        index = load_index(args.index)
    else:
        index = build_index(dataset)
    store = EmbeddingStore.load(args.embeddings) if args.embeddings else None
    rankings = []
    for example in dataset.split_examples(args.split):
        cutoff = args.cutoff or resolve_k(args.top_k, dataset, example)
        if args.retriever == "dense":
            if store is None:
                raise SystemExit("dense retrieval requires --embeddings")
            rankings.append(dense_rank(store, example.example_id, cutoff))
        else:
            query = build_pseudo_query(example, config)
            rankings.append(
                bm25_rank(index, query, cutoff, Bm25Params(args.k1, args.b))
            )
    save_rankings(rankings, args.output)
    print(f"wrote {len(rankings)} rankings -> {args.output}")
    return 0


def _cmd_evaluate_retrieval(args) -> int:
    dataset = load_dataset(args.dataset, max_input_docs=args.max_input_docs)
    rankings = {r.example_id: r for r in load_rankings(args.rankings)}
    rows = []
    for example in dataset.split_examples(args.split):
        retrieval = rankings.get(example.example_id)
        if retrieval is None:
            continue
        k = resolve_k(args.top_k, dataset, example)
        retrieved = set(retrieval.top(k))
        gold = {doc.doc_id for doc in example.input_docs}
        precision, recall = retrieval_pr_at_k(retrieved, gold)
        tally = count_retrieval_errors(retrieved, gold)
        rows.append(
            [example.example_id, k, precision, recall,
             tally.additions, tally.deletions, tally.replacements]
        )
    with Path(args.output).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["example_id", "k", "precision_at_k", "recall_at_k",
             "additions", "deletions", "replacements"]
        )
        writer.writerows(rows)
        if rows:
            n = len(rows)
            writer.writerow(
                ["AGGREGATE", "",
                 sum(r[2] for r in rows) / n, sum(r[3] for r in rows) / n,
                 sum(r[4] for r in rows), sum(r[5] for r in rows),
                 sum(r[6] for r in rows)]
            )
    print(f"evaluated {len(rows)} examples -> {args.output}")
    return 0


def _cmd_run_baseline(args) -> int:
    config = _load_config(args)
    result = pipeline.run_baseline(config)
    aggregate = result.report.aggregate
    print(f"{result.condition}: {len(result.records)} records, "
          f"rouge_avg_f1={aggregate['rouge_avg_f1']:.4f} -> {result.records_path}")
    return 0


def _cmd_run_open_domain(args) -> int:
    config = _load_config(args)
    baseline = pipeline.load_result(args.baseline) if args.baseline else None
    result = pipeline.run_open_domain(config, baseline)
    aggregate = result.report.aggregate
    print(f"{result.condition}: {len(result.records)} records, "
          f"rouge_avg_f1={aggregate['rouge_avg_f1']:.4f} -> {result.records_path}")
    return 0


def _cmd_perturb_sweep(args) -> int:
    config = _load_config(args)
    if args.baseline:
        baseline = pipeline.load_result(args.baseline)
    else:
        baseline = pipeline.run_baseline(config)
    results = pipeline.run_perturbation_sweep(config, baseline)
    print(f"{len(results)} grid points -> {Path(config.output_dir) / 'sweep_summary.csv'}")
    return 0


def _cmd_baselines(args) -> int:
    dataset = load_dataset(args.dataset, max_input_docs=args.max_input_docs)
    kinds = baselines_mod.BASELINE_KINDS if args.kind == "all" else (args.kind,)
    output = Path(args.output)
    multiple = len(kinds) > 1
    if multiple:
        output.mkdir(parents=True, exist_ok=True)
    for kind in kinds:
        per_example = []
        for example in dataset.split_examples(args.split):
            try:
                summary = baselines_mod.generate(
                    kind, example, dataset, seed=args.seed,
                    first_line_is_title=args.first_line_is_title,
                )
            except RtsumError:
                continue  # e.g. background_abstract without additional_input
            rouge = score_summary(summary, example.reference_summary)
            per_example.append(
                ExampleScores(example.example_id, rouge["rouge1"], rouge["rouge2"],
                              rouge["rougeL"])
            )
        report = MetricReport(per_example=per_example)
        path = output / f"{kind}.csv" if multiple else output
        report.to_csv(path)
        print(f"{kind}: {len(per_example)} examples, "
              f"rouge_avg_f1={report.aggregate['rouge_avg_f1']:.4f} -> {path}")
    return 0


def _cmd_export_trainset(args) -> int:
    config = _load_config(args)
    path = pipeline.export_open_domain_trainset(config, args.output)
    print(f"exported trainset -> {path}")
    return 0


def _cmd_compare(args) -> int:
    report_a = _read_report(args.report_a)
    report_b = _read_report(args.report_b)
    rows = pipeline.compare(report_a, report_b, alpha=args.alpha)
    payload = json.dumps(rows, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(payload + "\n", encoding="utf-8")
    print(payload)
    return 0


def _read_report(path: str) -> MetricReport:
    path = Path(path)
    if path.suffix == ".jsonl":
        return pipeline.load_result(path).report
    return MetricReport.from_json(json.loads(path.read_text(encoding="utf-8")))


def _read_floats(path: str) -> list[float]:
    return [
        float(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _cmd_stats(args) -> int:
    if args.test == "binomial":
        result = binomial_test(args.successes, args.failures)
        payload = {"test": "binomial", "statistic": result.statistic,
                   "p_value": result.p_value, "n": result.n}
    elif args.test == "ttest":
        result = paired_t_test(_read_floats(args.a), _read_floats(args.b))
        payload = {"test": "paired-t", "statistic": result.statistic,
                   "p_value": result.p_value, "n": result.n}
    else:  # fleiss
        with Path(args.counts).open("r", encoding="utf-8", newline="") as handle:
            matrix = [[int(cell) for cell in row] for row in csv.reader(handle) if row]
        payload = {"test": "fleiss-kappa", "kappa": fleiss_kappa(matrix)}
    print(json.dumps(payload, sort_keys=True))
    return 0


def _add_config_arguments(parser) -> None:
    parser.add_argument("--config", required=True, help="TOML or JSON experiment config")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config value (dotted keys)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtsum")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist a document index")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--name")
    p.add_argument("--max-input-docs", type=int, dest="max_input_docs")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("retrieve", help="rank index documents for each pseudo-query")
    p.add_argument("--dataset", required=True)
    p.add_argument("--index", help="persisted index (default: build in memory)")
    p.add_argument("--retriever", choices=["sparse", "dense"], default="sparse")
    p.add_argument("--embeddings", help="embedding store file (dense only)")
    p.add_argument("--split", default="test")
    p.add_argument("--top-k", choices=["max", "mean", "oracle"], default="oracle",
                   dest="top_k")
    p.add_argument("--cutoff", type=int, help="fixed cutoff instead of a top-k strategy")
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--query-source", choices=["reference", "additional"],
                   default="reference", dest="query_source")
    p.add_argument("--max-input-docs", type=int, dest="max_input_docs")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("evaluate-retrieval", help="P@K/R@K and error tallies for rankings")
    p.add_argument("--rankings", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--top-k", choices=["max", "mean", "oracle"], default="oracle",
                   dest="top_k")
    p.add_argument("--max-input-docs", type=int, dest="max_input_docs")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_evaluate_retrieval)

    p = sub.add_parser("run-baseline", help="summarize ground-truth inputs and score")
    _add_config_arguments(p)
    p.set_defaults(func=_cmd_run_baseline)

    p = sub.add_parser("run-open-domain", help="retrieve-then-summarize and score")
    _add_config_arguments(p)
    p.add_argument("--baseline", help="baseline records JSONL for delta columns")
    p.set_defaults(func=_cmd_run_open_domain)

    p = sub.add_parser("perturb-sweep", help="run the perturbation grid")
    _add_config_arguments(p)
    p.add_argument("--baseline", help="baseline records JSONL (default: run it)")
    p.set_defaults(func=_cmd_perturb_sweep)

    p = sub.add_parser("baselines", help="score heuristic summary baselines")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--kind", choices=list(baselines_mod.BASELINE_KINDS) + ["all"],
                   default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--first-line-is-title", action="store_true",
                   dest="first_line_is_title")
    p.add_argument("--max-input-docs", type=int, dest="max_input_docs")
    p.add_argument("--output", required=True,
                   help="CSV path (or directory when --kind all)")
    p.set_defaults(func=_cmd_baselines)

    p = sub.add_parser("export-trainset", help="write retrieved top-k training inputs")
    _add_config_arguments(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_export_trainset)

    p = sub.add_parser("compare", help="paired significance tests between two reports")
    p.add_argument("--report-a", required=True, dest="report_a",
                   help="records JSONL or metric report JSON")
    p.add_argument("--report-b", required=True, dest="report_b")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("stats", help="standalone statistical tests")
    stats_sub = p.add_subparsers(dest="test", required=True)
    b = stats_sub.add_parser("binomial")
    b.add_argument("--successes", type=int, required=True)
    b.add_argument("--failures", type=int, required=True)
    t = stats_sub.add_parser("ttest")
    t.add_argument("--a", required=True, help="file of floats, one per line")
    t.add_argument("--b", required=True)
    f = stats_sub.add_parser("fleiss")
    f.add_argument("--counts", required=True, help="CSV of item x category counts")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RtsumError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
