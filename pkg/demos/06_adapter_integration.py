"""Drive the wire-protocol adapter from the pipeline: summarize, transform,
and populate an embedding store over HTTP.

Requires the adapter to be built first:

    cd adapter && npm install && npm run build

The script spawns the adapter in test mode (deterministic echo, no model
weights), so it runs anywhere; point ``endpoint`` at a model-mode adapter to
use real summarizers through the identical protocol.
"""

import json
import subprocess
import tempfile
import time
from pathlib import Path

from rtsum import EmbeddingStore, ExperimentConfig, dense_rank
from rtsum.gateway import SummarizerSpec, embed_texts
from rtsum.pipeline import run_baseline, run_open_domain

ADAPTER_DIR = Path(__file__).resolve().parent.parent / "adapter"
PORT = 8137

if not (ADAPTER_DIR / "dist" / "server.js").exists():
    raise SystemExit("adapter not built; run: cd adapter && npm install && npm run build")

server = subprocess.Popen(
    ["node", str(ADAPTER_DIR / "dist" / "server.js"), "--test-mode", "--port", str(PORT)],
    stdout=subprocess.DEVNULL,
    stderr=subprocess.DEVNULL,
)
time.sleep(1.5)
endpoint = f"http://127.0.0.1:{PORT}"

try:
    workdir = Path(tempfile.mkdtemp(prefix="rtsum-adapter-demo-"))
    records = [
        {
            "example_id": f"item{i}",
            "split": "test",
            "documents": [
                f"subject{i} detail{i}a detail{i}b reported today. background follows.",
                f"subject{i} detail{i}c detail{i}d emerged later. officials commented.",
            ],
            "reference_summary": f"subject{i} detail{i}a detail{i}c reported today emerged",
            "additional_input": None,
        }
        for i in range(4)
    ]
    dataset_path = workdir / "mini.jsonl"
    with dataset_path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")

    config = ExperimentConfig(
        dataset_path=str(dataset_path),
        output_dir=str(workdir / "results"),
        split="test",
        top_k="oracle",
        summarizer_id="adapter-echo",
        summarizer_endpoint=endpoint,
        max_input_tokens=4096,
        timeout=10.0,
        seed=5,
    )
    baseline = run_baseline(config)
    open_domain = run_open_domain(config, baseline)
    print("remote summaries (echo = first 10 words of the input):")
    for record in baseline.records:
        print(f"  {record['example_id']}: {record['summary']!r}")
    print(f"\nopen-domain mean P@K: "
          f"{sum(r['retrieval']['precision_at_k'] for r in open_domain.records) / 4:.2f}")

    # Populate an embedding store over /embed, then rank densely with it.
    spec = SummarizerSpec(id="embedder", endpoint=endpoint, timeout=10.0)
    store = EmbeddingStore(dim=8)
    for record in records:
        vectors = embed_texts(spec, record["documents"])
        for j, vector in enumerate(vectors):
            store.add_doc(f"{record['example_id']}.{j:04d}", vector)
        store.add_query(record["example_id"], embed_texts(spec, [record["reference_summary"]])[0])
    ranking = dense_rank(store, "item0", cutoff=3)
    print("\ndense ranking for item0 using adapter-provided vectors:")
    for doc_id, score in ranking.ranked:
        print(f"  {doc_id}: {score:.1f}")
finally:
    server.terminate()
    server.wait()
