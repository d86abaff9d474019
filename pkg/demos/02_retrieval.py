"""Rank documents for pseudo-queries and score the retrieval.

Shows both retriever families: BM25 over the inverted index, and dot-product
ranking over an embedding store (here filled with toy vectors; in production
the store is populated offline through the adapter's /embed endpoint).
"""

import numpy as np

from rtsum import (
    EmbeddingStore,
    bm25_rank,
    build_index,
    build_pseudo_query,
    count_retrieval_errors,
    dense_rank,
    resolve_k,
    retrieval_pr_at_k,
)
from rtsum.corpus import Dataset, Document, Example

# Three topics; each example's reference summary doubles as its pseudo-query.
topics = {
    "fire": ("wildfire contained after days",
             ["a wildfire burned for days", "firefighters contained the wildfire"]),
    "flood": ("flood waters recede in valley",
              ["heavy rain flooded the valley", "flood waters receded slowly"]),
    "quake": ("earthquake and aftershocks shake city",
              ["an earthquake shook the city", "aftershocks followed the earthquake"]),
}
examples = []
for name, (reference, texts) in topics.items():
    docs = tuple(
        Document(f"{name}.{i:04d}", text, name, "test") for i, text in enumerate(texts)
    )
    examples.append(Example(name, docs, reference, None, "test"))
dataset = Dataset("demo-topics", examples)
index = build_index(dataset)

print("=== sparse (BM25) ===")
for example in dataset.examples:
    query = build_pseudo_query(example)
    k = resolve_k("oracle", dataset, example)
    ranking = bm25_rank(index, query, cutoff=k)
    retrieved = set(ranking.top(k))
    gold = {doc.doc_id for doc in example.input_docs}
    precision, recall = retrieval_pr_at_k(retrieved, gold)
    tally = count_retrieval_errors(retrieved, gold)
    print(f"{example.example_id}: top-{k} {ranking.top(k)} "
          f"P@K={precision:.2f} R@K={recall:.2f} errors={tally}")

# Dense retrieval consumes precomputed vectors only. Toy 3-d vectors: each
# topic gets an axis, so dot products separate topics perfectly.
print("\n=== dense (dot product) ===")
axes = {"fire": 0, "flood": 1, "quake": 2}
store = EmbeddingStore(dim=3)
for example in dataset.examples:
    axis = axes[example.example_id]
    query_vec = np.eye(3)[axis]
    store.add_query(example.example_id, query_vec)
    for doc in example.input_docs:
        store.add_doc(doc.doc_id, query_vec * (1.0 + 0.1 * int(doc.doc_id[-1])))

for example in dataset.examples:
    ranking = dense_rank(store, example.example_id, cutoff=2)
    print(f"{example.example_id}: {[(d, round(s, 2)) for d, s in ranking.ranked]}")
