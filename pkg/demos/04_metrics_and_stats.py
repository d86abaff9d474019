"""ROUGE scoring, heuristic baselines, and the significance tests.

Everything here is pure computation: preprocessing, stemmed n-gram overlap,
LCS, and the exact tests used when comparing systems or annotators.
"""

from rtsum import (
    binomial_test,
    fleiss_kappa,
    paired_t_test,
    preprocess,
    rouge_avg,
    rouge_l,
    rouge_n,
)
from rtsum.baselines import all_lead, oracle_document, random_summary
from rtsum.corpus import Dataset, Document, Example

candidate = "  The cats\nwere running\tfast "
reference = "the cat ran fast"

print("preprocess:", repr(preprocess(candidate)))

r1 = rouge_n(candidate, reference, 1)   # Porter stemming merges cats/cat etc.
r2 = rouge_n(candidate, reference, 2)
rl = rouge_l(candidate, reference)
print(f"rouge1 P={r1.precision:.3f} R={r1.recall:.3f} F1={r1.f1:.3f}")
print(f"rouge2 F1={r2.f1:.3f}  rougeL F1={rl.f1:.3f}")
print(f"rouge-avg F1 = {rouge_avg(r1.f1, r2.f1, rl.f1):.3f}")

# Heuristic baselines put summarizer scores in context: if a trained model
# barely beats "first sentence of each document", something is off.
docs = tuple(
    Document(f"ex.{i:04d}", text, "ex", "test")
    for i, text in enumerate(
        ["The cat ran fast. It was gray.", "Dogs watched calmly. Nothing happened."]
    )
)
other = Example("other", (Document("other.0000", "filler text", "other", "test"),),
                "a summary of similar length", None, "test")
example = Example("ex", docs, reference, None, "test")
dataset = Dataset("demo", [example, other])

print("\nall-lead baseline:", all_lead(example))
print("oracle document:", oracle_document(example))
print("random (length-matched) summary:", random_summary(example, dataset))

# Paired t-test over per-example scores of two systems.
system_a = [0.31, 0.42, 0.28, 0.35, 0.40, 0.33]
system_b = [0.29, 0.38, 0.27, 0.31, 0.36, 0.30]
result = paired_t_test(system_a, system_b)
print(f"\npaired t-test: t={result.statistic:.3f} p={result.p_value:.4f} "
      f"(significant at 0.01: {result.p_value < 0.01})")

# Exact binomial test for pairwise human preferences (ties excluded)...
pref = binomial_test(60, 23)
print(f"binomial 60 vs 23: p={pref.p_value:.2e}")

# ...and Fleiss' kappa for inter-annotator agreement.
ratings = [[3, 0], [2, 1], [0, 3], [3, 0], [1, 2]]
print(f"fleiss kappa: {fleiss_kappa(ratings):.3f}")
