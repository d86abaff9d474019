"""Client for the summarizer wire protocol, plus built-in fallbacks.

Remote endpoints speak JSON over HTTP POST: ``/summarize``, ``/transform``,
and ``/embed``, each echoing the caller's request id. Request ids are
content-derived, so retries are idempotent and reruns byte-stable. Two
builtins need no network: ``builtin:lead`` (first sentence of each document)
and ``builtin:identity`` (no-op transformer). Per-document truncation divides
the token budget evenly and never redistributes slack.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from . import text as text_util
from .errors import BudgetTooSmall, GatewayTimeout, ProtocolError, RemoteError

BUILTIN_LEAD = "builtin:lead"
BUILTIN_IDENTITY = "builtin:identity"


@dataclass(frozen=True)
class SummarizerSpec:
    id: str
    endpoint: str = BUILTIN_LEAD
    max_input_tokens: int = 1024
    max_words_hint: int | None = None
    timeout: float = 30.0
    retries: int = 2


@dataclass(frozen=True)
class SummaryRequest:
    documents: tuple[str, ...]
    additional_input: str | None = None
    max_words: int | None = None

    def __post_init__(self):
        if not self.documents:
            raise ValueError("documents must be non-empty")


@dataclass(frozen=True)
class SummaryResponse:
    summary: str
    model_id: str


def truncate_inputs(docs: list[str], max_input_tokens: int) -> list[str]:
    """Cap each document at floor(budget / #docs) whitespace tokens.

    Documents already under the per-document budget pass through unchanged;
    their slack is not given to longer documents.
    """
    if not docs:
        raise ValueError("docs must be non-empty")
    budget = max_input_tokens // len(docs)
    if budget == 0:
        raise BudgetTooSmall(
            f"budget of {max_input_tokens} tokens over {len(docs)} documents "
            "leaves zero tokens per document"
        )
    truncated = []
    for doc in docs:
        tokens = text_util.whitespace_tokens(doc)
        if len(tokens) <= budget:
            truncated.append(doc)
        else:
            truncated.append(" ".join(tokens[:budget]))
    return truncated


def _request_id(prefix: str, payload: object) -> str:
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=True)
    return f"{prefix}-{hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]}"


def _cap_words(summary: str, max_words: int | None) -> str:
    if max_words is None:
        return summary
    words = text_util.whitespace_tokens(summary)
    return " ".join(words[:max_words])


def _post(url: str, body: dict, timeout: float, retries: int) -> dict:
    """POST with retries; timeouts and connection failures retry, others do not."""
    last_exc: Exception | None = None
    for _ in range(retries + 1):
        try:
            response = requests.post(url, json=body, timeout=timeout)
        except requests.Timeout as exc:
            last_exc = exc
            continue
        except requests.ConnectionError as exc:
            last_exc = exc
            continue
        return _parse_response(response, body["request_id"])
    raise GatewayTimeout(f"no response from {url} after {retries + 1} attempts: {last_exc}")


def _parse_response(response: requests.Response, request_id: str) -> dict:
    try:
        payload = response.json()
    except ValueError as exc:
        raise ProtocolError(f"non-JSON response (HTTP {response.status_code})") from exc
    if response.status_code >= 400:
        message = payload.get("error") if isinstance(payload, dict) else None
        raise RemoteError(message or f"HTTP {response.status_code}")
    if not isinstance(payload, dict):
        raise ProtocolError("response is not a JSON object")
    if isinstance(payload.get("error"), str):
        raise RemoteError(payload["error"])
    if payload.get("request_id") != request_id:
        raise ProtocolError(
            f"response request_id {payload.get('request_id')!r} does not match {request_id!r}"
        )
    return payload


def summarize(spec: SummarizerSpec, request: SummaryRequest) -> SummaryResponse:
    """Run one summarization request against the configured endpoint.

    A request without an explicit word cap inherits the spec's
    ``max_words_hint``, for the builtin and on the wire alike.
    """
    max_words = request.max_words if request.max_words is not None else spec.max_words_hint
    if spec.endpoint == BUILTIN_LEAD:
        lead = " ".join(text_util.first_sentence(doc) for doc in request.documents)
        return SummaryResponse(summary=_cap_words(lead, max_words), model_id=BUILTIN_LEAD)
    body = {
        "request_id": _request_id(
            "sum",
            {
                "documents": list(request.documents),
                "additional_input": request.additional_input,
                "max_words": max_words,
            },
        ),
        "documents": list(request.documents),
        "additional_input": request.additional_input,
        "max_words": max_words,
    }
    payload = _post(spec.endpoint.rstrip("/") + "/summarize", body, spec.timeout, spec.retries)
    summary = payload.get("summary")
    model_id = payload.get("model_id")
    if not isinstance(summary, str) or not summary:
        raise ProtocolError("response lacks a non-empty 'summary'")
    if not isinstance(model_id, str):
        raise ProtocolError("response lacks 'model_id'")
    return SummaryResponse(summary=summary, model_id=model_id)


def summarize_many(
    spec: SummarizerSpec,
    requests_batch: list[SummaryRequest],
    max_in_flight: int = 4,
) -> list[SummaryResponse | Exception]:
    """Summarize a batch with bounded concurrency, preserving input order.

    Failed requests yield their exception instead of aborting the batch.
    """
    def run_one(request: SummaryRequest):
        try:
            return summarize(spec, request)
        except Exception as exc:  # collected, not raised: partial results survive
            return exc

    if spec.endpoint == BUILTIN_LEAD or max_in_flight <= 1 or len(requests_batch) <= 1:
        return [run_one(request) for request in requests_batch]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(run_one, requests_batch))


def transform_document(spec: SummarizerSpec, doc_text: str) -> str:
    """Run one document through the transformer endpoint (e.g. backtranslation)."""
    if spec.endpoint == BUILTIN_IDENTITY:
        return doc_text
    body = {"request_id": _request_id("tr", doc_text), "text": doc_text}
    payload = _post(spec.endpoint.rstrip("/") + "/transform", body, spec.timeout, spec.retries)
    transformed = payload.get("text")
    if not isinstance(transformed, str):
        raise ProtocolError("response lacks 'text'")
    return transformed


def embed_texts(spec: SummarizerSpec, texts: list[str]) -> list[list[float]]:
    """Fetch embedding vectors for a batch of texts (offline store population)."""
    body = {"request_id": _request_id("emb", texts), "texts": texts}
    payload = _post(spec.endpoint.rstrip("/") + "/embed", body, spec.timeout, spec.retries)
    vectors = payload.get("vectors")
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        raise ProtocolError("response 'vectors' missing or wrong length")
    return vectors
