"""Tokenization and sentence splitting used throughout the harness.

One reproducible tokenization scheme is used for all index statistics and
lexical metrics: Unicode-aware lowercasing, split on runs of non-alphanumeric
characters, drop empty tokens. Truncation budgets count plain whitespace
tokens instead, so truncated text can be reassembled without losing
punctuation.
"""

from __future__ import annotations

import re

# \w minus underscore, so tokens are alphanumeric runs (Unicode-aware).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# A sentence ends at a run of .!? followed by whitespace or end of text.
_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")

TOKENIZER_SCHEME = "unicode-lower-alnum"
TOKENIZER_VERSION = 1


def tokenize(text: str) -> list[str]:
    """Lowercase and split into alphanumeric-run tokens."""
    return _TOKEN_RE.findall(text.lower())


def whitespace_tokens(text: str) -> list[str]:
    """Split on whitespace, keeping punctuation attached to words."""
    return text.split()


def split_sentences(text: str) -> list[str]:
    """Split into sentences on `.`/`!`/`?` followed by whitespace or end.

    Terminators stay attached to their sentence. Text without any terminator
    is returned whole as a single sentence.
    """
    sentences = []
    start = 0
    for match in _SENTENCE_END_RE.finditer(text):
        sentence = text[start : match.end()].strip()
        if sentence:
            sentences.append(sentence)
        start = match.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def first_sentence(text: str) -> str:
    sentences = split_sentences(text)
    return sentences[0] if sentences else ""
