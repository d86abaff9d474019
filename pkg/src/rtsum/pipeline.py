"""End-to-end experiment orchestration with resumable persistence.

Each run condition writes one JSON-Lines file of per-example records plus a
sidecar manifest. Records are deterministic for a fixed config and seed
(timestamps live only in the manifest), appended in example order, and
already-completed examples are skipped on restart. Aggregates are always
recomputable from the records.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .corpus import (
    Dataset,
    DatasetConfig,
    Example,
    SPLITS,
    build_index,
    load_dataset,
)
from .errors import LengthMismatch, ValidationError
from .gateway import (
    BUILTIN_IDENTITY,
    BUILTIN_LEAD,
    SummarizerSpec,
    SummaryRequest,
    summarize_many,
    transform_document,
    truncate_inputs,
)
from .metrics import (
    ExampleScores,
    MetricReport,
    RougeScore,
    paired_t_test,
    score_summary,
)
from .perturb import PerturbationSpec, SimilarityScorer, apply as apply_perturbation
from .retrieval import (
    Bm25Params,
    EmbeddingStore,
    bm25_rank,
    build_pseudo_query,
    count_retrieval_errors,
    dense_rank,
    resolve_k,
    retrieval_pr_at_k,
)

SUMMARIZER_ENDPOINT_ENV = "RTSUM_SUMMARIZER_ENDPOINT"
TRANSFORM_ENDPOINT_ENV = "RTSUM_TRANSFORM_ENDPOINT"

_F1_COLUMNS = ("rouge1_f1", "rouge2_f1", "rougeL_f1", "rouge_avg_f1")


@dataclass(frozen=True)
class PerturbationGrid:
    kind: str
    selection: str
    fractions: tuple[float, ...]

    def __post_init__(self):
        for fraction in self.fractions:
            if not 0.0 <= fraction <= 1.0:
                raise ValidationError(f"fraction {fraction} outside [0, 1]")


@dataclass
class ExperimentConfig:
    dataset_path: str
    output_dir: str
    dataset_format: str = "jsonl"
    dataset_name: str | None = None
    split: str = "test"
    query_source: str = "reference"
    max_input_docs: int | None = None
    first_line_is_title: bool = False
    retriever: str = "sparse"
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    embeddings_path: str | None = None
    top_k: str = "oracle"
    summarizer_id: str = "lead"
    summarizer_endpoint: str = BUILTIN_LEAD
    max_input_tokens: int = 1024
    max_words: int | None = None
    timeout: float = 30.0
    retries: int = 2
    max_in_flight: int = 1
    transformer_endpoint: str = BUILTIN_IDENTITY
    stem: bool = True
    perturbations: list[PerturbationGrid] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValidationError(f"unknown split {self.split!r}")
        if self.retriever not in ("sparse", "dense"):
            raise ValidationError(f"unknown retriever {self.retriever!r}")

    def summarizer_spec(self) -> SummarizerSpec:
        endpoint = os.environ.get(SUMMARIZER_ENDPOINT_ENV, self.summarizer_endpoint)
        return SummarizerSpec(
            id=self.summarizer_id,
            endpoint=endpoint,
            max_input_tokens=self.max_input_tokens,
            max_words_hint=self.max_words,
            timeout=self.timeout,
            retries=self.retries,
        )

    def transformer_spec(self) -> SummarizerSpec:
        endpoint = os.environ.get(TRANSFORM_ENDPOINT_ENV, self.transformer_endpoint)
        return SummarizerSpec(
            id="transformer",
            endpoint=endpoint,
            timeout=self.timeout,
            retries=self.retries,
        )

    def dataset_config(self) -> DatasetConfig:
        return DatasetConfig(
            query_source=self.query_source,
            max_input_docs=self.max_input_docs,
            first_line_is_title=self.first_line_is_title,
        )

    def load_dataset(self) -> Dataset:
        dataset = load_dataset(
            self.dataset_path,
            self.dataset_format,
            name=self.dataset_name,
            max_input_docs=self.max_input_docs,
        )
        if not dataset.split_examples(self.split):
            raise ValidationError(f"dataset has no examples in split {self.split!r}")
        return dataset

    def snapshot(self) -> dict:
        snap = asdict(self)
        snap["perturbations"] = [asdict(grid) for grid in self.perturbations]
        return snap


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read a TOML or JSON experiment config, then apply dotted-key overrides."""
    path = Path(path)
    if path.suffix == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        raw = json.loads(path.read_text(encoding="utf-8"))
    for key, value in (overrides or {}).items():
        _set_dotted(raw, key, value)
    return _config_from_mapping(raw)


def _set_dotted(raw: dict, dotted_key: str, value: str) -> None:
    parts = dotted_key.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = _coerce_override(value)


def _coerce_override(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("null", "none"):
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _config_from_mapping(raw: dict) -> ExperimentConfig:
    run = raw.get("run", {})
    dataset = raw.get("dataset", {})
    retriever = raw.get("retriever", {})
    summarizer = raw.get("summarizer", {})
    transformer = raw.get("transformer", {})
    metrics = raw.get("metrics", {})
    grids = [
        PerturbationGrid(
            kind=entry["kind"],
            selection=entry.get("selection", "random"),
            fractions=tuple(entry.get("fractions", ())),
        )
        for entry in raw.get("perturbation", [])
    ]
    return ExperimentConfig(
        dataset_path=dataset["path"],
        dataset_format=dataset.get("format", "jsonl"),
        dataset_name=dataset.get("name"),
        query_source=dataset.get("query_source", "reference"),
        max_input_docs=dataset.get("max_input_docs"),
        first_line_is_title=dataset.get("first_line_is_title", False),
        retriever=retriever.get("kind", "sparse"),
        bm25_k1=retriever.get("k1", 1.2),
        bm25_b=retriever.get("b", 0.75),
        embeddings_path=retriever.get("embeddings_path"),
        top_k=run.get("top_k", "oracle"),
        summarizer_id=summarizer.get("id", "lead"),
        summarizer_endpoint=summarizer.get("endpoint", BUILTIN_LEAD),
        max_input_tokens=summarizer.get("max_input_tokens", 1024),
        max_words=summarizer.get("max_words"),
        timeout=summarizer.get("timeout", 30.0),
        retries=summarizer.get("retries", 2),
        max_in_flight=summarizer.get("max_in_flight", 1),
        transformer_endpoint=transformer.get("endpoint", BUILTIN_IDENTITY),
        stem=metrics.get("stem", True),
        perturbations=grids,
        output_dir=run["output_dir"],
        split=run.get("split", "test"),
        seed=run.get("seed", 0),
    )


@dataclass
class ExperimentResult:
    condition: str
    records: list[dict]
    report: MetricReport
    config_snapshot: dict
    records_path: Path | None = None

    def scores_by_example(self) -> dict[str, dict[str, float]]:
        return {
            record["example_id"]: record["scores"]
            for record in self.records
            if "scores" in record
        }

    def failures(self) -> list[dict]:
        return [record for record in self.records if "error" in record]


def _report_from_records(records: list[dict]) -> MetricReport:
    per_example = []
    for record in records:
        scores = record.get("scores")
        if scores is None:
            continue
        per_example.append(
            ExampleScores(
                example_id=record["example_id"],
                rouge1=RougeScore(
                    scores["rouge1_precision"], scores["rouge1_recall"], scores["rouge1_f1"]
                ),
                rouge2=RougeScore(
                    scores["rouge2_precision"], scores["rouge2_recall"], scores["rouge2_f1"]
                ),
                rougeL=RougeScore(
                    scores["rougeL_precision"], scores["rougeL_recall"], scores["rougeL_f1"]
                ),
            )
        )
    return MetricReport(per_example=per_example)


def load_result(records_path: str | Path, condition: str | None = None) -> ExperimentResult:
    """Rebuild an ExperimentResult from a previously written records file."""
    records_path = Path(records_path)
    records = [
        json.loads(line)
        for line in records_path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return ExperimentResult(
        condition=condition or records_path.stem,
        records=records,
        report=_report_from_records(records),
        config_snapshot={},
        records_path=records_path,
    )


class _ConditionWriter:
    """Appends per-example records for one condition, skipping completed ones."""

    def __init__(self, output_dir: str | Path, condition: str):
        self.path = Path(output_dir) / f"{condition}.jsonl"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.completed: set[str] = set()
        self.records: list[dict] = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                self.records.append(record)
                self.completed.add(record["example_id"])

    def append(self, record: dict) -> None:
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=True) + "\n")
        self.records.append(record)
        self.completed.add(record["example_id"])


def _write_manifest(
    output_dir: str | Path,
    condition: str,
    config_snapshot: dict,
    records: list[dict],
    started_at: str,
) -> None:
    failures = [record["example_id"] for record in records if "error" in record]
    manifest = {
        "condition": condition,
        "config": config_snapshot,
        "n_records": len(records),
        "n_failures": len(failures),
        "failed_example_ids": failures,
        "started_at": started_at,
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(output_dir) / f"{condition}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _summarize_examples(
    config: ExperimentConfig,
    writer: _ConditionWriter,
    condition: str,
    jobs: list[tuple[Example, list[str], dict]],
) -> None:
    """Truncate, summarize, and score a list of (example, docs, extra-fields) jobs."""
    spec = config.summarizer_spec()
    pending: list[tuple[Example, dict, SummaryRequest]] = []
    for example, doc_texts, extra in jobs:
        if example.example_id in writer.completed:
            continue
        try:
            truncated = truncate_inputs(doc_texts, spec.max_input_tokens)
            request = SummaryRequest(
                documents=tuple(truncated),
                additional_input=example.additional_input,
                max_words=spec.max_words_hint,
            )
        except Exception as exc:
            writer.append(
                {"condition": condition, "example_id": example.example_id, "error": str(exc)}
            )
            continue
        pending.append((example, extra, request))

    responses = summarize_many(
        spec, [request for _, _, request in pending], max_in_flight=config.max_in_flight
    )
    for (example, extra, _), response in zip(pending, responses):
        if isinstance(response, Exception):
            writer.append(
                {
                    "condition": condition,
                    "example_id": example.example_id,
                    "error": str(response),
                }
            )
            continue
        rouge = score_summary(response.summary, example.reference_summary, config.stem)
        scores = ExampleScores(
            example_id=example.example_id,
            rouge1=rouge["rouge1"],
            rouge2=rouge["rouge2"],
            rougeL=rouge["rougeL"],
        )
        record = {
            "condition": condition,
            "example_id": example.example_id,
            "model_id": response.model_id,
            "summary": response.summary,
            "scores": scores.flat(),
        }
        record.update(extra)
        writer.append(record)


def run_baseline(config: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentResult:
    """Summarize the ground-truth document sets and score against references."""
    dataset = dataset or config.load_dataset()
    condition = "baseline"
    started = _utc_now()
    writer = _ConditionWriter(config.output_dir, condition)
    jobs = [
        (example, [doc.text for doc in example.input_docs], {})
        for example in dataset.split_examples(config.split)
    ]
    _summarize_examples(config, writer, condition, jobs)
    _write_manifest(config.output_dir, condition, config.snapshot(), writer.records, started)
    return ExperimentResult(
        condition=condition,
        records=writer.records,
        report=_report_from_records(writer.records),
        config_snapshot=config.snapshot(),
        records_path=writer.path,
    )


def _rank_for_example(
    config: ExperimentConfig,
    dataset: Dataset,
    index,
    store: EmbeddingStore | None,
    example: Example,
    k: int,
):
    if config.retriever == "dense":
        if store is None:
            raise ValidationError("dense retrieval requires an embeddings_path")
        return dense_rank(store, example.example_id, cutoff=k)
    query = build_pseudo_query(example, config.dataset_config())
    return bm25_rank(index, query, cutoff=k, params=Bm25Params(config.bm25_k1, config.bm25_b))


def run_open_domain(
    config: ExperimentConfig,
    baseline: ExperimentResult | None = None,
    dataset: Dataset | None = None,
) -> ExperimentResult:
    """Retrieve top-k documents per pseudo-query, summarize, and score.

    Also records P@K, R@K, and the addition/deletion/replacement tally per
    example; when a baseline result is supplied, per-example score deltas are
    recorded too.
    """
    dataset = dataset or config.load_dataset()
    index = build_index(dataset)
    store = EmbeddingStore.load(config.embeddings_path) if config.embeddings_path else None
    condition = f"open-domain_{config.retriever}_{config.top_k}"
    started = _utc_now()
    writer = _ConditionWriter(config.output_dir, condition)
    baseline_scores = baseline.scores_by_example() if baseline else {}

    jobs = []
    for example in dataset.split_examples(config.split):
        if example.example_id in writer.completed:
            continue
        k = resolve_k(config.top_k, dataset, example)
        retrieval = _rank_for_example(config, dataset, index, store, example, k)
        retrieved_ids = retrieval.top(k)
        gold_ids = {doc.doc_id for doc in example.input_docs}
        precision, recall = retrieval_pr_at_k(set(retrieved_ids), gold_ids)
        tally = count_retrieval_errors(set(retrieved_ids), gold_ids)
        extra = {
            "retrieval": {
                "retriever_id": retrieval.retriever_id,
                "k": k,
                "retrieved_doc_ids": retrieved_ids,
                "precision_at_k": precision,
                "recall_at_k": recall,
                "errors": {
                    "additions": tally.additions,
                    "deletions": tally.deletions,
                    "replacements": tally.replacements,
                },
            }
        }
        doc_texts = [index.documents[doc_id].text for doc_id in retrieved_ids]
        jobs.append((example, doc_texts, extra))

    _summarize_examples(config, writer, condition, jobs)
    if baseline_scores:
        _add_deltas_to_records(writer, baseline_scores)
    _write_manifest(config.output_dir, condition, config.snapshot(), writer.records, started)
    return ExperimentResult(
        condition=condition,
        records=writer.records,
        report=_report_from_records(writer.records),
        config_snapshot=config.snapshot(),
        records_path=writer.path,
    )


def _add_deltas_to_records(writer: _ConditionWriter, baseline_scores: dict) -> None:
    """Recompute the records file with delta columns against the baseline."""
    for record in writer.records:
        if "scores" not in record:
            continue
        base = baseline_scores.get(record["example_id"])
        if base is None:
            continue
        record["deltas"] = {
            column: record["scores"][column] - base[column] for column in _F1_COLUMNS
        }
    with writer.path.open("w", encoding="utf-8") as handle:
        for record in writer.records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=True) + "\n")


def _condition_slug(kind: str, selection: str, fraction: float) -> str:
    return f"perturb_{kind}_{selection}_{format(fraction, 'g')}"


def run_perturbation_sweep(
    config: ExperimentConfig,
    baseline: ExperimentResult,
    dataset: Dataset | None = None,
) -> list[ExperimentResult]:
    """One run per (kind, selection, fraction) grid point, with a sweep CSV.

    The CSV holds the mean per-example change in ROUGE-Avg F1 per grid point
    and a 68% confidence half-width (the standard error of the deltas).
    """
    dataset = dataset or config.load_dataset()
    index = build_index(dataset)
    scorer = _sweep_scorer(config)
    transformer_spec = config.transformer_spec()
    baseline_scores = baseline.scores_by_example()
    examples = dataset.split_examples(config.split)
    missing = [ex.example_id for ex in examples if ex.example_id not in baseline_scores]
    if missing:
        raise LengthMismatch(
            f"baseline result lacks {len(missing)} example(s), e.g. {missing[0]!r}"
        )

    results = []
    summary_rows = []
    for grid in config.perturbations:
        for fraction in grid.fractions:
            spec = PerturbationSpec(
                kind=grid.kind, fraction=fraction, selection=grid.selection, seed=config.seed
            )
            condition = _condition_slug(grid.kind, grid.selection, fraction)
            started = _utc_now()
            writer = _ConditionWriter(config.output_dir, condition)
            jobs = []
            for example in examples:
                if example.example_id in writer.completed:
                    continue
                perturbed = apply_perturbation(
                    spec,
                    example,
                    index,
                    scorer=scorer,
                    transformer=lambda text: transform_document(transformer_spec, text),
                )
                extra = {
                    "perturbation": {
                        "kind": grid.kind,
                        "selection": grid.selection,
                        "fraction": fraction,
                        "provenance": list(perturbed.provenance),
                        "doc_ids": [doc.doc_id for doc in perturbed.perturbed_docs],
                    }
                }
                doc_texts = [doc.text for doc in perturbed.perturbed_docs]
                jobs.append((example, doc_texts, extra))
            _summarize_examples(config, writer, condition, jobs)
            _add_deltas_to_records(writer, baseline_scores)
            _write_manifest(
                config.output_dir, condition, config.snapshot(), writer.records, started
            )
            result = ExperimentResult(
                condition=condition,
                records=writer.records,
                report=_report_from_records(writer.records),
                config_snapshot=config.snapshot(),
                records_path=writer.path,
            )
            results.append(result)
            deltas = [
                record["deltas"]["rouge_avg_f1"]
                for record in writer.records
                if "deltas" in record
            ]
            summary_rows.append(
                {
                    "kind": grid.kind,
                    "selection": grid.selection,
                    "fraction": fraction,
                    "mean_delta": float(np.mean(deltas)) if deltas else 0.0,
                    "ci68": _standard_error(deltas),
                }
            )
    _write_sweep_csv(Path(config.output_dir) / "sweep_summary.csv", summary_rows)
    return results


def _sweep_scorer(config: ExperimentConfig) -> SimilarityScorer:
    if config.embeddings_path:
        return SimilarityScorer("embedding_dot", EmbeddingStore.load(config.embeddings_path))
    return SimilarityScorer()


def _standard_error(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def _write_sweep_csv(path: Path, rows: list[dict]) -> None:
    lines = ["kind,selection,fraction,mean_delta,ci68"]
    for row in rows:
        lines.append(
            f"{row['kind']},{row['selection']},{row['fraction']!r},"
            f"{row['mean_delta']!r},{row['ci68']!r}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_open_domain_trainset(
    config: ExperimentConfig,
    output_path: str | Path,
    dataset: Dataset | None = None,
) -> Path:
    """Write a new dataset whose train inputs are the retrieved top-k documents."""
    dataset = dataset or config.load_dataset()
    index = build_index(dataset)
    store = EmbeddingStore.load(config.embeddings_path) if config.embeddings_path else None
    output_path = Path(output_path)
    with output_path.open("w", encoding="utf-8") as handle:
        for example in dataset.split_examples("train"):
            k = resolve_k(config.top_k, dataset, example)
            retrieval = _rank_for_example(config, dataset, index, store, example, k)
            retrieved_ids = retrieval.top(k)
            record = {
                "example_id": example.example_id,
                "split": "train",
                "documents": [index.documents[doc_id].text for doc_id in retrieved_ids],
                "reference_summary": example.reference_summary,
                "additional_input": example.additional_input,
            }
            handle.write(json.dumps(record, ensure_ascii=True) + "\n")
    return output_path


def compare(
    report_a: MetricReport, report_b: MetricReport, alpha: float = 0.01
) -> list[dict]:
    """Per-metric paired t-tests over per-example scores of two reports."""
    ids_a = report_a.example_ids()
    ids_b = report_b.example_ids()
    if set(ids_a) != set(ids_b):
        raise LengthMismatch("reports cover different example sets")
    order = sorted(ids_a)
    index_a = {scores.example_id: scores for scores in report_a.per_example}
    index_b = {scores.example_id: scores for scores in report_b.per_example}
    rows = []
    for column in _F1_COLUMNS:
        series_a = [index_a[example_id].flat()[column] for example_id in order]
        series_b = [index_b[example_id].flat()[column] for example_id in order]
        result = paired_t_test(series_a, series_b)
        rows.append(
            {
                "metric": column,
                "mean_a": sum(series_a) / len(series_a),
                "mean_b": sum(series_b) / len(series_b),
                "mean_diff": (sum(series_a) - sum(series_b)) / len(series_a),
                "statistic": result.statistic,
                "p_value": result.p_value,
                "significant": result.p_value < alpha,
            }
        )
    return rows
