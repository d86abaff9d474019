"""Heuristic summary baselines for contextualizing summarizer scores.

Five baselines: a length-matched random summary borrowed from another
example, the concatenated first sentences of all input documents, the single
document with the highest ROUGE-1 F1 against the reference, that document's
first sentence (or first line when the dataset stores titles there), and the
additional input passed through verbatim.
"""

from __future__ import annotations

from . import text as text_util
from .corpus import Dataset, Example
from .errors import MissingField
from .metrics import rouge_n

BASELINE_KINDS = (
    "random_summary",
    "all_lead",
    "oracle_document",
    "oracle_lead",
    "background_abstract",
)


def random_summary(example: Example, dataset: Dataset, seed: int = 0) -> str:
    """Another example's reference summary with the closest token count.

    Ties break by ascending example_id; the seed is reserved for sampling
    among exact-length ties and is currently unused.
    """
    if len(dataset) < 2:
        raise ValueError("dataset needs at least 2 examples")
    target_length = len(text_util.tokenize(example.reference_summary))
    best = min(
        (other for other in dataset.examples if other.example_id != example.example_id),
        key=lambda other: (
            abs(len(text_util.tokenize(other.reference_summary)) - target_length),
            other.example_id,
        ),
    )
    return best.reference_summary


def all_lead(example: Example) -> str:
    """First sentence of each input document, joined in input order."""
    return " ".join(text_util.first_sentence(doc.text) for doc in example.input_docs)


def oracle_document(example: Example, stem_tokens: bool = True) -> tuple[str, str]:
    """The input document with the highest ROUGE-1 F1 against the reference."""
    best = min(
        example.input_docs,
        key=lambda doc: (
            -rouge_n(doc.text, example.reference_summary, 1, stem_tokens).f1,
            doc.doc_id,
        ),
    )
    return best.doc_id, best.text


def oracle_lead(example: Example, first_line_is_title: bool = False) -> str:
    """First sentence (or title line) of the oracle document."""
    _, doc_text = oracle_document(example)
    if first_line_is_title:
        return doc_text.splitlines()[0]
    return text_util.first_sentence(doc_text)


def background_abstract(example: Example) -> str:
    """The additional input used as the summary itself."""
    if example.additional_input is None:
        raise MissingField(f"example {example.example_id!r} has no additional_input")
    return example.additional_input


def generate(kind: str, example: Example, dataset: Dataset, seed: int = 0,
             first_line_is_title: bool = False) -> str:
    """Dispatch a baseline by kind name."""
    if kind == "random_summary":
        return random_summary(example, dataset, seed)
    if kind == "all_lead":
        return all_lead(example)
    if kind == "oracle_document":
        return oracle_document(example)[1]
    if kind == "oracle_lead":
        return oracle_lead(example, first_line_is_title)
    if kind == "background_abstract":
        return background_abstract(example)
    raise ValueError(f"unknown baseline kind {kind!r}")
