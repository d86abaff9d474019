"""Dataset ingestion, validation, and the cross-split document index.

Datasets are read from JSON Lines (one example per line). Document ids are
derived deterministically from the example id and document position, so
re-serializing a loaded dataset round-trips exactly. The index covers every
document of every split and performs no deduplication: textually identical
documents from different examples keep distinct ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import text as text_util
from .errors import ParseError, ValidationError

SPLITS = ("train", "validation", "test")
DATASET_FORMAT_JSONL = "jsonl"
INDEX_FORMAT_VERSION = 1

_REQUIRED_FIELDS = ("example_id", "split", "documents", "reference_summary")


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    source_example_id: str
    source_split: str


@dataclass(frozen=True)
class Example:
    example_id: str
    input_docs: tuple[Document, ...]
    reference_summary: str
    additional_input: str | None
    split: str


@dataclass(frozen=True)
class DatasetStats:
    max_docs: int
    mean_docs: float
    total_docs: int


@dataclass(frozen=True)
class DatasetConfig:
    """Per-dataset knobs that change how examples are loaded and queried."""

    query_source: str = "reference"  # "reference" | "additional"
    max_input_docs: int | None = None
    first_line_is_title: bool = False


@dataclass(frozen=True)
class TokenizerConfig:
    scheme: str = text_util.TOKENIZER_SCHEME
    version: int = text_util.TOKENIZER_VERSION

    def tokenize(self, text: str) -> list[str]:
        if self.scheme != text_util.TOKENIZER_SCHEME:
            raise ValidationError(f"unknown tokenizer scheme {self.scheme!r}")
        return text_util.tokenize(text)


class Dataset:
    """A validated collection of examples partitioned by split."""

    def __init__(self, name: str, examples: list[Example]):
        _validate_examples(examples)
        self.name = name
        self.examples = list(examples)
        self._by_id = {ex.example_id: ex for ex in self.examples}

    @property
    def stats(self) -> DatasetStats:
        counts = [len(ex.input_docs) for ex in self.examples]
        return DatasetStats(
            max_docs=max(counts),
            mean_docs=sum(counts) / len(counts),
            total_docs=sum(counts),
        )

    def split_examples(self, split: str) -> list[Example]:
        return [ex for ex in self.examples if ex.split == split]

    def split_mean_docs(self, split: str) -> float:
        counts = [len(ex.input_docs) for ex in self.examples if ex.split == split]
        if not counts:
            raise ValidationError(f"dataset has no {split!r} examples")
        return sum(counts) / len(counts)

    def example(self, example_id: str) -> Example:
        return self._by_id[example_id]

    def __len__(self) -> int:
        return len(self.examples)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.name == other.name
            and self.examples == other.examples
        )


def _validate_examples(examples: list[Example]) -> None:
    if not examples:
        raise ValidationError("dataset contains no examples")
    seen_example_ids: set[str] = set()
    seen_doc_ids: set[str] = set()
    for ex in examples:
        if ex.example_id in seen_example_ids:
            raise ValidationError("duplicate example_id", example_id=ex.example_id)
        seen_example_ids.add(ex.example_id)
        if ex.split not in SPLITS:
            raise ValidationError(f"unknown split {ex.split!r}", example_id=ex.example_id)
        if not ex.input_docs:
            raise ValidationError("input_docs is empty", example_id=ex.example_id)
        if not ex.reference_summary.strip():
            raise ValidationError("reference_summary is empty", example_id=ex.example_id)
        for doc in ex.input_docs:
            if not doc.text.strip():
                raise ValidationError(
                    f"document {doc.doc_id!r} is empty", example_id=ex.example_id
                )
            if doc.source_example_id != ex.example_id:
                raise ValidationError(
                    f"document {doc.doc_id!r} carries a foreign source_example_id",
                    example_id=ex.example_id,
                )
            if doc.doc_id in seen_doc_ids:
                raise ValidationError(
                    f"duplicate doc_id {doc.doc_id!r}", example_id=ex.example_id
                )
            seen_doc_ids.add(doc.doc_id)


def _doc_id(example_id: str, position: int) -> str:
    # Zero-padded so lexicographic doc_id order equals input order.
    return f"{example_id}.{position:04d}"


def load_dataset(
    path: str | Path,
    format: str = DATASET_FORMAT_JSONL,
    *,
    name: str | None = None,
    max_input_docs: int | None = None,
) -> Dataset:
    """Load and validate a dataset from its canonical JSON Lines file.

    ``max_input_docs`` keeps only the first N documents of each example
    (the cap is applied at load time and recorded nowhere else).
    """
    if format != DATASET_FORMAT_JSONL:
        raise ParseError(f"unsupported dataset format {format!r}")
    path = Path(path)
    examples: list[Example] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", line_number) from exc
            examples.append(_example_from_record(record, line_number, max_input_docs))
    return Dataset(name=name or path.stem, examples=examples)


def _example_from_record(
    record: object, line_number: int, max_input_docs: int | None
) -> Example:
    if not isinstance(record, dict):
        raise ParseError("expected a JSON object", line_number)
    for key in _REQUIRED_FIELDS:
        if key not in record:
            raise ParseError(f"missing field {key!r}", line_number)
    example_id = record["example_id"]
    split = record["split"]
    documents = record["documents"]
    if not isinstance(example_id, str) or not isinstance(split, str):
        raise ParseError("example_id and split must be strings", line_number)
    if not isinstance(documents, list) or not all(isinstance(d, str) for d in documents):
        raise ParseError("documents must be an array of strings", line_number)
    if not isinstance(record["reference_summary"], str):
        raise ParseError("reference_summary must be a string", line_number)
    additional = record.get("additional_input")
    if additional is not None and not isinstance(additional, str):
        raise ParseError("additional_input must be a string or null", line_number)
    if max_input_docs is not None:
        documents = documents[:max_input_docs]
    docs = tuple(
        Document(
            doc_id=_doc_id(example_id, i),
            text=doc_text,
            source_example_id=example_id,
            source_split=split,
        )
        for i, doc_text in enumerate(documents)
    )
    return Example(
        example_id=example_id,
        input_docs=docs,
        reference_summary=record["reference_summary"],
        additional_input=additional,
        split=split,
    )


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back to the canonical JSON Lines format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for ex in dataset.examples:
            record = {
                "example_id": ex.example_id,
                "split": ex.split,
                "documents": [doc.text for doc in ex.input_docs],
                "reference_summary": ex.reference_summary,
                "additional_input": ex.additional_input,
            }
            handle.write(json.dumps(record, ensure_ascii=True) + "\n")


class DocumentIndex:
    """Immutable cross-split document index with inverted-index statistics.

    Built once by :func:`build_index`; safe for concurrent readers afterwards.
    Scoring-oriented array views of the postings are materialized lazily and
    cached per term.
    """

    def __init__(
        self,
        documents: dict[str, Document],
        postings: dict[str, dict[str, int]],
        doc_lengths: dict[str, int],
        tokenizer: TokenizerConfig,
    ):
        self.documents = documents
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.tokenizer = tokenizer
        n = len(documents)
        self.avg_doc_len = sum(doc_lengths.values()) / n if n else 0.0
        self.doc_id_list = list(documents)
        self._row_of = {doc_id: row for row, doc_id in enumerate(self.doc_id_list)}
        self._length_array = None
        self._posting_arrays: dict[str, tuple] = {}

    def length_array(self) -> np.ndarray:
        """Document lengths as float64, aligned with ``doc_id_list``."""
        if self._length_array is None:
            self._length_array = np.array(
                [self.doc_lengths[doc_id] for doc_id in self.doc_id_list], dtype=np.float64
            )
        return self._length_array

    def posting_arrays(self, term: str) -> tuple[np.ndarray, np.ndarray] | None:
        """(row indices, term frequencies) arrays for one term, or None."""
        cached = self._posting_arrays.get(term)
        if cached is None:
            posting = self.postings.get(term)
            if not posting:
                return None
            rows = np.fromiter(
                (self._row_of[doc_id] for doc_id in posting), dtype=np.intp, count=len(posting)
            )
            tfs = np.fromiter(posting.values(), dtype=np.float64, count=len(posting))
            cached = (rows, tfs)
            self._posting_arrays[term] = cached
        return cached

    def __len__(self) -> int:
        return len(self.documents)

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    @property
    def term_stats(self) -> dict[str, int]:
        return {term: len(posting) for term, posting in self.postings.items()}

    def provenance(self, doc_id: str) -> tuple[str, str]:
        doc = self.documents[doc_id]
        return (doc.source_example_id, doc.source_split)

    def pool_doc_ids(self, exclude_example_id: str) -> list[str]:
        """All doc ids except those sourced from the given example, ascending."""
        return sorted(
            doc_id
            for doc_id, doc in self.documents.items()
            if doc.source_example_id != exclude_example_id
        )


def build_index(dataset: Dataset, tokenizer: TokenizerConfig | None = None) -> DocumentIndex:
    """Index every document of every split. No deduplication is performed."""
    tokenizer = tokenizer or TokenizerConfig()
    documents: dict[str, Document] = {}
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for ex in dataset.examples:
        for doc in ex.input_docs:
            documents[doc.doc_id] = doc
            tokens = tokenizer.tokenize(doc.text)
            doc_lengths[doc.doc_id] = len(tokens)
            for token in tokens:
                postings.setdefault(token, {})
                postings[token][doc.doc_id] = postings[token].get(doc.doc_id, 0) + 1
    return DocumentIndex(documents, postings, doc_lengths, tokenizer)


def save_index(index: DocumentIndex, path: str | Path) -> None:
    """Persist the index as a versioned JSON container (deterministic bytes)."""
    payload = {
        "format_version": INDEX_FORMAT_VERSION,
        "tokenizer": {"scheme": index.tokenizer.scheme, "version": index.tokenizer.version},
        "documents": {
            doc_id: {
                "text": doc.text,
                "source_example_id": doc.source_example_id,
                "source_split": doc.source_split,
            }
            for doc_id, doc in index.documents.items()
        },
        "doc_lengths": index.doc_lengths,
        "postings": index.postings,
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=True, separators=(",", ":")),
        encoding="utf-8",
    )


def load_index(path: str | Path) -> DocumentIndex:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != INDEX_FORMAT_VERSION:
        raise ParseError(
            f"unsupported index format_version {version!r}, expected {INDEX_FORMAT_VERSION}"
        )
    tokenizer = TokenizerConfig(**payload["tokenizer"])
    documents = {
        doc_id: Document(
            doc_id=doc_id,
            text=entry["text"],
            source_example_id=entry["source_example_id"],
            source_split=entry["source_split"],
        )
        for doc_id, entry in payload["documents"].items()
    }
    return DocumentIndex(documents, payload["postings"], payload["doc_lengths"], tokenizer)
