"""Document-level perturbations simulating retrieval errors.

Six kinds: addition, deletion, replacement, duplication, sorting, and
backtranslation (token-level control). Targets are picked either uniformly at
random or by an oracle that ranks documents by similarity to the reference
summary: least similar first for targets, most similar first for pool
documents. Every random draw is seeded per example from (seed, example_id),
so results are identical regardless of execution order.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Callable

from . import text as text_util
from .corpus import Document, DocumentIndex, Example
from .errors import PoolExhausted, TransformerUnavailable
from .retrieval import EmbeddingStore

PERTURBATION_KINDS = (
    "addition",
    "deletion",
    "replacement",
    "duplication",
    "sorting",
    "backtranslation",
)
SELECTIONS = ("random", "oracle")

# Per-document provenance tags.
KEPT = "kept"
ADDED = "added"
DUPLICATED = "duplicated"
TRANSFORMED = "transformed"


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    fraction: float
    selection: str = "random"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection strategy {self.selection!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must be within [0, 1]")


@dataclass(frozen=True)
class PerturbedExample:
    example_id: str
    perturbed_docs: tuple[Document, ...]
    applied: PerturbationSpec
    provenance: tuple[str, ...]


def lexical_similarity(doc_text: str, reference_text: str) -> float:
    """Cosine similarity of unigram count vectors, in [0, 1]."""
    doc_counts: dict[str, int] = {}
    for token in text_util.tokenize(doc_text):
        doc_counts[token] = doc_counts.get(token, 0) + 1
    ref_counts: dict[str, int] = {}
    for token in text_util.tokenize(reference_text):
        ref_counts[token] = ref_counts.get(token, 0) + 1
    if not doc_counts or not ref_counts:
        return 0.0
    dot = sum(count * ref_counts.get(token, 0) for token, count in doc_counts.items())
    norm_doc = math.sqrt(sum(c * c for c in doc_counts.values()))
    norm_ref = math.sqrt(sum(c * c for c in ref_counts.values()))
    return dot / (norm_doc * norm_ref)


class SimilarityScorer:
    """Scores a document against an example's reference summary.

    The default is lexical unigram cosine; when an embedding store is given,
    similarity is the dot product of the stored document and query vectors.
    """

    def __init__(self, kind: str = "lexical_unigram_cosine", store: EmbeddingStore | None = None):
        if kind not in ("lexical_unigram_cosine", "embedding_dot"):
            raise ValueError(f"unknown similarity scorer {kind!r}")
        if kind == "embedding_dot" and store is None:
            raise ValueError("embedding_dot scorer requires an embedding store")
        self.kind = kind
        self.store = store

    def similarity(self, doc: Document, example: Example) -> float:
        if self.kind == "embedding_dot":
            doc_vec = self.store.doc_vector(doc.doc_id)
            query_vec = self.store.query_vector(example.example_id)
            return float(doc_vec @ query_vec)
        return lexical_similarity(doc.text, example.reference_summary)


def _example_rng(seed: int, example_id: str, label: str) -> random.Random:
    """Deterministic per-example generator, independent of thread schedule."""
    digest = hashlib.sha256(f"{seed}:{label}:{example_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def n_from_fraction(fraction: float, set_size: int, kind: str) -> int:
    """Round-half-up count of documents to perturb; deletion never empties the set."""
    if set_size < 1:
        raise ValueError("set_size must be >= 1")
    n = math.floor(fraction * set_size + 0.5)
    n = min(n, set_size)
    if kind == "deletion":
        n = min(n, set_size - 1)
    return n


def select_targets(
    example: Example,
    n: int,
    selection: str,
    scorer: SimilarityScorer,
    seed: int,
) -> list[Document]:
    """Pick n of the example's own documents to perturb.

    Oracle order is least-to-most similar to the reference summary, mimicking
    what a strong retriever would drop first; ties break by ascending doc_id.
    """
    docs = list(example.input_docs)
    if n > len(docs):
        raise ValueError("cannot select more targets than input documents")
    if selection == "random":
        rng = _example_rng(seed, example.example_id, "targets")
        return rng.sample(docs, n)
    scored = sorted(
        docs, key=lambda doc: (scorer.similarity(doc, example), doc.doc_id)
    )
    return scored[:n]


def select_pool_docs(
    index: DocumentIndex,
    example: Example,
    n: int,
    selection: str,
    scorer: SimilarityScorer,
    seed: int,
) -> list[Document]:
    """Pick n documents from the index, excluding the example's own documents.

    Oracle order is most-to-least similar to the reference summary, so the
    inserted "irrelevant" documents are the hardest confounders.
    """
    pool_ids = index.pool_doc_ids(example.example_id)
    if n > len(pool_ids):
        raise PoolExhausted(
            f"pool has {len(pool_ids)} documents, {n} requested "
            f"(example {example.example_id!r})"
        )
    pool = [index.documents[doc_id] for doc_id in pool_ids]
    if selection == "random":
        rng = _example_rng(seed, example.example_id, "pool")
        return rng.sample(pool, n)
    scored = sorted(
        pool, key=lambda doc: (-scorer.similarity(doc, example), doc.doc_id)
    )
    return scored[:n]


def apply(
    spec: PerturbationSpec,
    example: Example,
    index: DocumentIndex,
    scorer: SimilarityScorer | None = None,
    transformer: Callable[[str], str] | None = None,
) -> PerturbedExample:
    """Apply one perturbation to an example's document set.

    A resolved count of zero (fraction 0, or a fraction that rounds to zero)
    returns the input list unchanged for every kind.
    """
    scorer = scorer or SimilarityScorer()
    docs = list(example.input_docs)
    n = n_from_fraction(spec.fraction, len(docs), spec.kind)
    if n == 0:
        return PerturbedExample(
            example_id=example.example_id,
            perturbed_docs=tuple(docs),
            applied=spec,
            provenance=(KEPT,) * len(docs),
        )

    if spec.kind == "addition":
        added = select_pool_docs(index, example, n, spec.selection, scorer, spec.seed)
        return PerturbedExample(
            example_id=example.example_id,
            perturbed_docs=tuple(docs + added),
            applied=spec,
            provenance=(KEPT,) * len(docs) + (ADDED,) * n,
        )

    if spec.kind == "deletion":
        removed = {doc.doc_id for doc in select_targets(example, n, spec.selection, scorer, spec.seed)}
        kept = [doc for doc in docs if doc.doc_id not in removed]
        return PerturbedExample(
            example_id=example.example_id,
            perturbed_docs=tuple(kept),
            applied=spec,
            provenance=(KEPT,) * len(kept),
        )

    if spec.kind == "replacement":
        # Targets come out least-similar-first and pool docs most-similar-first,
        # so the i-th removal is paired with the i-th insertion.
        targets = select_targets(example, n, spec.selection, scorer, spec.seed)
        added = select_pool_docs(index, example, n, spec.selection, scorer, spec.seed)
        removed = {doc.doc_id for doc in targets}
        kept = [doc for doc in docs if doc.doc_id not in removed]
        return PerturbedExample(
            example_id=example.example_id,
            perturbed_docs=tuple(kept + added),
            applied=spec,
            provenance=(KEPT,) * len(kept) + (ADDED,) * n,
        )

    if spec.kind == "duplication":
        targets = select_targets(example, n, spec.selection, scorer, spec.seed)
        return PerturbedExample(
            example_id=example.example_id,
            perturbed_docs=tuple(docs + targets),
            applied=spec,
            provenance=(KEPT,) * len(docs) + (DUPLICATED,) * n,
        )

    if spec.kind == "sorting":
        if spec.selection == "random":
            rng = _example_rng(spec.seed, example.example_id, "sorting")
            reordered = list(docs)
            rng.shuffle(reordered)
        else:
            reordered = sorted(
                docs,
                key=lambda doc: (-scorer.similarity(doc, example), doc.doc_id),
            )
        return PerturbedExample(
            example_id=example.example_id,
            perturbed_docs=tuple(reordered),
            applied=spec,
            provenance=(KEPT,) * len(reordered),
        )

    # backtranslation
    if transformer is None:
        raise TransformerUnavailable("backtranslation requires a document transformer")
    targets = {doc.doc_id for doc in select_targets(example, n, spec.selection, scorer, spec.seed)}
    out_docs: list[Document] = []
    provenance: list[str] = []
    for doc in docs:
        if doc.doc_id in targets:
            out_docs.append(
                Document(
                    doc_id=doc.doc_id,
                    text=transformer(doc.text),
                    source_example_id=doc.source_example_id,
                    source_split=doc.source_split,
                )
            )
            provenance.append(TRANSFORMED)
        else:
            out_docs.append(doc)
            provenance.append(KEPT)
    return PerturbedExample(
        example_id=example.example_id,
        perturbed_docs=tuple(out_docs),
        applied=spec,
        provenance=tuple(provenance),
    )
