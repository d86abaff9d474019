"""Sparse and dense ranking over the document index, plus retrieval metrics.

BM25 uses k1 = 1.2, b = 0.75 and the Robertson/Okapi idf variant
``ln(1 + (N - df + 0.5) / (df + 0.5))``; every query token occurrence
contributes its idf-weighted saturation term (query-side term frequency is a
plain sum over tokens). Dense scores are dot products over externally
produced vectors. All rankings break score ties by ascending doc_id, so
results are independent of document insertion order.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Dataset, DatasetConfig, DocumentIndex, Example
from .errors import EmptyGold, EmptyQuery, MissingField, MissingVector

TOP_K_KINDS = ("max", "mean", "oracle")


@dataclass(frozen=True)
class Query:
    example_id: str
    text: str


@dataclass(frozen=True)
class RankedRetrieval:
    example_id: str
    ranked: tuple[tuple[str, float], ...]
    retriever_id: str

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.ranked]

    def top(self, k: int) -> list[str]:
        return [doc_id for doc_id, _ in self.ranked[:k]]


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75


@dataclass(frozen=True)
class ErrorTally:
    additions: int
    deletions: int
    replacements: int


class EmbeddingStore:
    """Precomputed document and query vectors for dense retrieval."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._doc_vectors: dict[str, np.ndarray] = {}
        self._query_vectors: dict[str, np.ndarray] = {}
        self._matrix: np.ndarray | None = None
        self._matrix_ids: list[str] | None = None

    def _coerce(self, vector) -> np.ndarray:
        arr = np.asarray(vector, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise ValueError(f"vector has shape {arr.shape}, expected ({self.dim},)")
        return arr

    def add_doc(self, doc_id: str, vector) -> None:
        self._doc_vectors[doc_id] = self._coerce(vector)
        self._matrix = None

    def add_query(self, example_id: str, vector) -> None:
        self._query_vectors[example_id] = self._coerce(vector)

    def doc_vector(self, doc_id: str) -> np.ndarray:
        try:
            return self._doc_vectors[doc_id]
        except KeyError:
            raise MissingVector(f"no document vector for {doc_id!r}") from None

    def query_vector(self, example_id: str) -> np.ndarray:
        try:
            return self._query_vectors[example_id]
        except KeyError:
            raise MissingVector(f"no query vector for {example_id!r}") from None

    def doc_ids(self) -> list[str]:
        return sorted(self._doc_vectors)

    def _doc_matrix(self) -> tuple[list[str], np.ndarray]:
        if self._matrix is None:
            self._matrix_ids = self.doc_ids()
            self._matrix = np.stack(
                [self._doc_vectors[d] for d in self._matrix_ids]
            ) if self._matrix_ids else np.zeros((0, self.dim))
        return self._matrix_ids, self._matrix

    def save(self, path: str | Path) -> None:
        """Header line with the dimension, then one JSON record per vector."""
        with Path(path).open("w", encoding="utf-8") as handle:
            handle.write(json.dumps({"dim": self.dim}) + "\n")
            for doc_id in sorted(self._doc_vectors):
                record = {"id": doc_id, "kind": "doc", "vector": self._doc_vectors[doc_id].tolist()}
                handle.write(json.dumps(record) + "\n")
            for example_id in sorted(self._query_vectors):
                record = {
                    "id": example_id,
                    "kind": "query",
                    "vector": self._query_vectors[example_id].tolist(),
                }
                handle.write(json.dumps(record) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingStore":
        with Path(path).open("r", encoding="utf-8") as handle:
            header = json.loads(handle.readline())
            store = cls(dim=int(header["dim"]))
            for line in handle:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record["kind"] == "doc":
                    store.add_doc(record["id"], record["vector"])
                elif record["kind"] == "query":
                    store.add_query(record["id"], record["vector"])
                else:
                    raise ValueError(f"unknown vector kind {record['kind']!r}")
        return store


def build_pseudo_query(example: Example, config: DatasetConfig | None = None) -> Query:
    """Use the reference summary (or the configured additional input) as query."""
    config = config or DatasetConfig()
    if config.query_source == "additional":
        if example.additional_input is None:
            raise MissingField(
                f"example {example.example_id!r} has no additional_input to query with"
            )
        return Query(example.example_id, example.additional_input)
    return Query(example.example_id, example.reference_summary)


def bm25_rank(
    index: DocumentIndex,
    query: Query,
    cutoff: int,
    params: Bm25Params = Bm25Params(),
) -> RankedRetrieval:
    """Rank all indexed documents by BM25 score and keep the top ``cutoff``.

    Query terms absent from the index contribute zero; documents matching no
    term keep score 0.0 and fill the cutoff in ascending doc_id order.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    query_tokens = index.tokenizer.tokenize(query.text)
    if not query_tokens:
        raise EmptyQuery(f"query for example {query.example_id!r} has no terms")
    n_docs = len(index.documents)
    lengths = index.length_array()
    scores = np.zeros(n_docs)
    touched = np.zeros(n_docs, dtype=bool)
    # Accumulating one posting list at a time keeps each document's additions
    # in query-token order, so results match a scalar scorer bit for bit.
    for token in query_tokens:
        arrays = index.posting_arrays(token)
        if arrays is None:
            continue
        rows, tfs = arrays
        df = rows.size
        idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
        norm = tfs + params.k1 * (1.0 - params.b + params.b * lengths[rows] / index.avg_doc_len)
        scores[rows] += idf * (tfs * (params.k1 + 1.0)) / norm
        touched[rows] = True
    # Matched documents always score > 0, so they outrank the zero-score rest;
    # selecting from each group separately avoids sorting the whole index.
    doc_ids = index.doc_id_list
    matched = ((doc_ids[row], float(scores[row])) for row in np.flatnonzero(touched))
    ranked = heapq.nsmallest(cutoff, matched, key=lambda item: (-item[1], item[0]))
    if len(ranked) < cutoff:
        fill = heapq.nsmallest(
            cutoff - len(ranked),
            (doc_ids[row] for row in np.flatnonzero(~touched)),
        )
        ranked += [(doc_id, 0.0) for doc_id in fill]
    return RankedRetrieval(
        example_id=query.example_id,
        ranked=tuple(ranked),
        retriever_id="sparse-bm25",
    )


def dense_rank(store: EmbeddingStore, example_id: str, cutoff: int) -> RankedRetrieval:
    """Rank all stored document vectors by dot product with the example's query vector."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    query = store.query_vector(example_id)
    doc_ids, matrix = store._doc_matrix()
    scores = matrix @ query
    # lexsort uses the last key as primary: highest score first, doc_id ascending.
    order = np.lexsort((np.array(doc_ids), -scores))[:cutoff]
    return RankedRetrieval(
        example_id=example_id,
        ranked=tuple((doc_ids[i], float(scores[i])) for i in order),
        retriever_id="dense-dot",
    )


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def resolve_k(kind: str, dataset: Dataset, example: Example) -> int:
    """Number of documents to keep: dataset max, per-split rounded mean, or gold count."""
    if kind == "max":
        return dataset.stats.max_docs
    if kind == "mean":
        return _round_half_up(dataset.split_mean_docs(example.split))
    if kind == "oracle":
        return len(example.input_docs)
    raise ValueError(f"unknown top-k strategy {kind!r}")


def retrieval_pr_at_k(retrieved: set[str], gold: set[str]) -> tuple[float, float]:
    """Set-semantics precision and recall of a retrieved set against the gold set."""
    if not retrieved:
        raise ValueError("retrieved set is empty")
    if not gold:
        raise EmptyGold("gold set is empty")
    hits = len(set(retrieved) & set(gold))
    return hits / len(retrieved), hits / len(gold)


def count_retrieval_errors(retrieved: set[str], gold: set[str]) -> ErrorTally:
    """Tally addition/deletion errors, folding matched pairs into replacements."""
    raw_add = len(set(retrieved) - set(gold))
    raw_del = len(set(gold) - set(retrieved))
    replacements = min(raw_add, raw_del)
    return ErrorTally(
        additions=raw_add - replacements,
        deletions=raw_del - replacements,
        replacements=replacements,
    )


def save_rankings(rankings: list[RankedRetrieval], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["example_id", "rank", "doc_id", "score"])
        for retrieval in rankings:
            for rank, (doc_id, score) in enumerate(retrieval.ranked, start=1):
                writer.writerow([retrieval.example_id, rank, doc_id, repr(score)])


def load_rankings(path: str | Path, retriever_id: str = "loaded") -> list[RankedRetrieval]:
    grouped: dict[str, list[tuple[str, float]]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            grouped.setdefault(row["example_id"], []).append(
                (row["doc_id"], float(row["score"]))
            )
    return [
        RankedRetrieval(example_id, tuple(pairs), retriever_id)
        for example_id, pairs in grouped.items()
    ]
