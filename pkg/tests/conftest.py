"""Shared fixtures: synthetic dataset builders and a wire-protocol stub server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from rtsum.corpus import Dataset, load_dataset


def record(example_id, documents, reference="reference text", split="test", additional=None):
    return {
        "example_id": example_id,
        "split": split,
        "documents": documents,
        "reference_summary": reference,
        "additional_input": additional,
    }


def write_jsonl(path, records):
    with path.open("w", encoding="utf-8") as handle:
        for entry in records:
            handle.write(json.dumps(entry) + "\n")


def make_dataset(tmp_path, records, name="synthetic", **kwargs) -> Dataset:
    path = tmp_path / f"{name}.jsonl"
    write_jsonl(path, records)
    return load_dataset(path, name=name, **kwargs)


def default_echo(body):
    words = " ".join(body["documents"]).split()
    return 200, {
        "request_id": body["request_id"],
        "summary": " ".join(words[:10]),
        "model_id": "echo",
    }


def default_reverse(body):
    return 200, {
        "request_id": body["request_id"],
        "text": " ".join(reversed(body["text"].split())),
    }


def default_embed(body):
    return 200, {
        "request_id": body["request_id"],
        "vectors": [[float(len(text))] * 4 for text in body["texts"]],
    }


class StubServer:
    """Tiny HTTP server whose per-path behavior is swappable from tests."""

    def __init__(self):
        self.behaviors = {
            "/summarize": default_echo,
            "/transform": default_reverse,
            "/embed": default_embed,
        }
        self.requests: list[tuple[str, dict]] = []
        self._lock = threading.Lock()

        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                with outer._lock:
                    outer.requests.append((self.path, body))
                behavior = outer.behaviors.get(self.path)
                if behavior is None:
                    self._reply(404, {"request_id": body.get("request_id"),
                                      "error": "no such endpoint"})
                    return
                status, payload = behavior(body)
                self._reply(status, payload)

            def _reply(self, status, payload):
                try:
                    data = json.dumps(payload).encode("utf-8")
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (timeout tests)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_port}"
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.close()
