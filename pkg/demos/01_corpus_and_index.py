"""Build a dataset file, load it, and inspect the cross-split index.

Every demo in this directory is a narrative script: run it top to bottom
with ``python demos/01_corpus_and_index.py``.
"""

import json
import tempfile
from pathlib import Path

from rtsum import build_index, load_dataset, save_index

# ---------------------------------------------------------------------------
# The canonical dataset format is JSON Lines: one example per line with the
# document texts inline. Document ids are derived from example id + position.
# ---------------------------------------------------------------------------
records = [
    {
        "example_id": "storm-2024",
        "split": "train",
        "documents": [
            "A powerful storm hit the coast on Monday. Thousands lost power.",
            "Utility crews worked through the night. Power was restored by dawn.",
        ],
        "reference_summary": "A coastal storm caused outages that crews fixed overnight.",
        "additional_input": None,
    },
    {
        "example_id": "election-2024",
        "split": "test",
        "documents": [
            "The city elected a new mayor on Tuesday. Turnout was high.",
            "The mayor-elect promised transit reform. Opponents conceded quickly.",
            "Analysts credited a strong ground game for the win.",
        ],
        "reference_summary": "A new mayor won on high turnout, promising transit reform.",
        "additional_input": None,
    },
]

workdir = Path(tempfile.mkdtemp(prefix="rtsum-demo-"))
dataset_path = workdir / "news.jsonl"
with dataset_path.open("w", encoding="utf-8") as fh:
    for record in records:
        fh.write(json.dumps(record) + "\n")

dataset = load_dataset(dataset_path, name="demo-news")
print(f"loaded {len(dataset)} examples")
print(f"stats: max={dataset.stats.max_docs} mean={dataset.stats.mean_docs:.2f} "
      f"total={dataset.stats.total_docs}")

# The index spans *all* splits; that guarantees each example's own documents
# are present when we retrieve, while other examples provide distractors.
index = build_index(dataset)
print(f"\nindexed {len(index)} documents, avg length {index.avg_doc_len:.1f} tokens")
print("df('the') =", index.document_frequency("the"))
print("df('mayor') =", index.document_frequency("mayor"))

index_path = workdir / "index.json"
save_index(index, index_path)
print(f"\nindex persisted to {index_path} ({index_path.stat().st_size} bytes)")
print("rebuilding from the same file is byte-identical, so runs are cacheable")
