"""Apply each of the six retrieval-error perturbations to one example.

Perturbations simulate what an imperfect retriever does to a summarizer's
input: pad it with irrelevant documents, drop relevant ones, swap one for the
other, duplicate entries, reorder the set, or make token-level edits
(backtranslation; stubbed here with a word reverser).
"""

from rtsum import PerturbationSpec, apply, build_index, lexical_similarity
from rtsum.corpus import Dataset, Document, Example
from rtsum.perturb import SimilarityScorer

reference = "the spacecraft landed safely and returned samples"
own_docs = tuple(
    Document(f"mission.{i:04d}", text, "mission", "test")
    for i, text in enumerate(
        [
            "the spacecraft landed safely on the plain",
            "engineers cheered as samples returned to earth",
            "the landing site was chosen two years ago",
            "budget debates delayed the launch repeatedly",
        ]
    )
)
distractors = tuple(
    Document(f"other.{i:04d}", text, "other", "train")
    for i, text in enumerate(
        [
            "a new cafe opened downtown last week",
            "the league announced playoff schedules",
            "the spacecraft program inspired a documentary",
        ]
    )
)
dataset = Dataset(
    "demo-perturb",
    [
        Example("mission", own_docs, reference, None, "test"),
        Example("other", distractors, "unrelated reference", None, "train"),
    ],
)
index = build_index(dataset)
example = dataset.example("mission")
scorer = SimilarityScorer()  # lexical unigram cosine by default

print("similarity of each input doc to the reference summary:")
for doc in example.input_docs:
    print(f"  {doc.doc_id}: {lexical_similarity(doc.text, reference):.3f}")

for kind in ("addition", "deletion", "replacement", "duplication", "sorting",
             "backtranslation"):
    spec = PerturbationSpec(kind=kind, fraction=0.5, selection="oracle", seed=7)
    result = apply(
        spec, example, index, scorer,
        transformer=lambda text: " ".join(reversed(text.split())),
    )
    print(f"\n--- {kind} @ 50% (oracle selection) ---")
    for doc, tag in zip(result.perturbed_docs, result.provenance):
        marker = {"kept": " ", "added": "+", "duplicated": "=", "transformed": "~"}[tag]
        print(f" {marker} [{doc.doc_id}] {doc.text[:60]}")

print("\nfraction 0 is the identity for every kind, and a fixed seed makes")
print("every random choice reproducible per example.")
