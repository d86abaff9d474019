"""Summarization metrics and the statistical tests behind the result tables.

ROUGE-1/2/L are computed over lowercase alphanumeric tokens, optionally
Porter-stemmed; ROUGE-L uses the whole text as one token sequence. Scores
live in [0, 1] internally and are scaled only at presentation time. The
tests are a two-sided paired t-test, an exact two-sided binomial test at
p0 = 0.5, and Fleiss' kappa.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from scipy.special import stdtr

from . import text as text_util
from .errors import LengthMismatch, RaggedMatrix
from .stem import stem

ROUGE_VARIANTS = ("rouge1", "rouge2", "rougeL")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: int


def preprocess(text: str) -> str:
    """Strip outer whitespace; collapse newlines, tabs, and space runs to one space."""
    return " ".join(text.split())


def _tokens(text: str, stem_tokens: bool) -> list[str]:
    tokens = text_util.tokenize(text)
    if stem_tokens:
        tokens = [stem(token) for token in tokens]
    return tokens


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def rouge_n(candidate: str, reference: str, n: int, stem_tokens: bool = True) -> RougeScore:
    """Clipped n-gram overlap precision/recall/F1 (n = 1 or 2)."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    cand = _ngram_counts(_tokens(candidate, stem_tokens), n)
    ref = _ngram_counts(_tokens(reference, stem_tokens), n)
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    if cand_total == 0 or ref_total == 0:
        return RougeScore(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref.get(gram, 0)) for gram, count in cand.items())
    precision = overlap / cand_total
    recall = overlap / ref_total
    return RougeScore(precision, recall, _f1(precision, recall))


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str, stem_tokens: bool = True) -> RougeScore:
    """LCS-based ROUGE over the full texts as single token sequences."""
    cand = _tokens(candidate, stem_tokens)
    ref = _tokens(reference, stem_tokens)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return RougeScore(precision, recall, _f1(precision, recall))


def rouge_avg(r1_f1: float, r2_f1: float, rl_f1: float) -> float:
    """Arithmetic mean of the three F1 scores."""
    return (r1_f1 + r2_f1 + rl_f1) / 3.0


def score_summary(candidate: str, reference: str, stem_tokens: bool = True) -> dict[str, RougeScore]:
    """All three ROUGE variants of a candidate against a reference, preprocessed."""
    candidate = preprocess(candidate)
    reference = preprocess(reference)
    return {
        "rouge1": rouge_n(candidate, reference, 1, stem_tokens),
        "rouge2": rouge_n(candidate, reference, 2, stem_tokens),
        "rougeL": rouge_l(candidate, reference, stem_tokens),
    }


def paired_t_test(a: list[float], b: list[float]) -> TestResult:
    """Two-sided paired t-test on the differences a - b.

    Degenerate inputs follow a total-order convention instead of faulting:
    all-zero differences give (0, 1.0); zero variance with nonzero mean gives
    (signed infinity, 0.0).
    """
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test requires at least 2 pairs")
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    variance = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if variance == 0.0:
        if mean == 0.0:
            return TestResult(statistic=0.0, p_value=1.0, n=n)
        return TestResult(statistic=math.copysign(math.inf, mean), p_value=0.0, n=n)
    statistic = mean / math.sqrt(variance / n)
    p_value = 2.0 * float(stdtr(n - 1, -abs(statistic)))
    return TestResult(statistic=statistic, p_value=min(1.0, max(0.0, p_value)), n=n)


def binomial_test(successes: int, failures: int) -> TestResult:
    """Exact two-sided binomial test against p0 = 0.5.

    Symmetry at p0 = 0.5 makes the two-sided p-value twice the smaller tail.
    """
    if successes < 0 or failures < 0:
        raise ValueError("counts must be non-negative")
    n = successes + failures
    if n < 1:
        raise ValueError("need at least one observation")
    k_min = min(successes, failures)
    if 2 * k_min == n:
        p_value = 1.0
    else:
        tail = sum(math.comb(n, i) for i in range(k_min + 1))
        p_value = min(1.0, 2.0 * tail / 2**n)
    return TestResult(statistic=float(successes), p_value=p_value, n=n)


def fleiss_kappa(ratings: list[list[int]]) -> float:
    """Fleiss' kappa over an items x categories matrix of rating counts.

    Every row must sum to the same rater count r >= 2. Perfect agreement
    returns 1.0 even when chance agreement is also perfect.
    """
    if not ratings or not ratings[0]:
        raise RaggedMatrix("ratings matrix is empty")
    raters = sum(ratings[0])
    for row in ratings:
        if len(row) != len(ratings[0]):
            raise RaggedMatrix("rows have different category counts")
        if sum(row) != raters:
            raise RaggedMatrix("rows do not all sum to the same rater count")
    if raters < 2:
        raise RaggedMatrix("need at least 2 raters")
    n_items = len(ratings)
    p_agree = [
        (sum(count * count for count in row) - raters) / (raters * (raters - 1))
        for row in ratings
    ]
    mean_agree = sum(p_agree) / n_items
    totals = [sum(row[j] for row in ratings) for j in range(len(ratings[0]))]
    proportions = [t / (n_items * raters) for t in totals]
    chance = sum(p * p for p in proportions)
    if chance == 1.0:
        return 1.0
    return (mean_agree - chance) / (1.0 - chance)


@dataclass(frozen=True)
class ExampleScores:
    example_id: str
    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore

    @property
    def rouge_avg_f1(self) -> float:
        return rouge_avg(self.rouge1.f1, self.rouge2.f1, self.rougeL.f1)

    def flat(self) -> dict[str, float]:
        values: dict[str, float] = {}
        for variant in ROUGE_VARIANTS:
            score: RougeScore = getattr(self, variant)
            values[f"{variant}_precision"] = score.precision
            values[f"{variant}_recall"] = score.recall
            values[f"{variant}_f1"] = score.f1
        values["rouge_avg_f1"] = self.rouge_avg_f1
        return values


METRIC_COLUMNS = [
    f"{variant}_{part}" for variant in ROUGE_VARIANTS for part in ("precision", "recall", "f1")
] + ["rouge_avg_f1"]


@dataclass
class MetricReport:
    """Per-example ROUGE scores plus aggregates, deltas, and significance."""

    per_example: list[ExampleScores]
    deltas: dict[str, float] | None = None
    significance: list[dict] | None = None

    @property
    def aggregate(self) -> dict[str, float]:
        if not self.per_example:
            return {column: 0.0 for column in METRIC_COLUMNS}
        sums = {column: 0.0 for column in METRIC_COLUMNS}
        for scores in self.per_example:
            for column, value in scores.flat().items():
                sums[column] += value
        return {column: total / len(self.per_example) for column, total in sums.items()}

    def example_ids(self) -> list[str]:
        return [scores.example_id for scores in self.per_example]

    def metric_series(self, column: str) -> list[float]:
        return [scores.flat()[column] for scores in self.per_example]

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["example_id"] + METRIC_COLUMNS)
            for scores in self.per_example:
                flat = scores.flat()
                writer.writerow([scores.example_id] + [repr(flat[c]) for c in METRIC_COLUMNS])
            aggregate = self.aggregate
            writer.writerow(["AGGREGATE"] + [repr(aggregate[c]) for c in METRIC_COLUMNS])

    def to_json(self, path: str | Path | None = None) -> dict:
        payload = {
            "per_example": [
                {"example_id": scores.example_id, **scores.flat()}
                for scores in self.per_example
            ],
            "aggregate": self.aggregate,
            "deltas": self.deltas,
            "significance": self.significance,
        }
        if path is not None:
            Path(path).write_text(
                json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
            )
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "MetricReport":
        per_example = []
        for entry in payload["per_example"]:
            per_example.append(
                ExampleScores(
                    example_id=entry["example_id"],
                    rouge1=RougeScore(
                        entry["rouge1_precision"], entry["rouge1_recall"], entry["rouge1_f1"]
                    ),
                    rouge2=RougeScore(
                        entry["rouge2_precision"], entry["rouge2_recall"], entry["rouge2_f1"]
                    ),
                    rougeL=RougeScore(
                        entry["rougeL_precision"], entry["rougeL_recall"], entry["rougeL_f1"]
                    ),
                )
            )
        return cls(
            per_example=per_example,
            deltas=payload.get("deltas"),
            significance=payload.get("significance"),
        )
