"""Prompt tokenization for the hashing text encoder.

Prompts are lowercased and split on anything that is not a letter or
digit; tokens hash into a fixed bucket vocabulary with a platform-stable
hash so embeddings are reproducible everywhere.
"""
from __future__ import annotations

import hashlib
import re

VOCAB_SIZE = 4096
MAX_TOKENS = 32

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(prompt: str) -> list[str]:
    return _TOKEN_RE.findall(prompt.lower())


def bucket(token: str, vocab_size: int = VOCAB_SIZE) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % vocab_size


def token_buckets(prompt: str, vocab_size: int = VOCAB_SIZE,
                  max_tokens: int = MAX_TOKENS) -> list[int]:
    """Bucket ids for a prompt, truncated to ``max_tokens``."""
    return [bucket(tok, vocab_size) for tok in tokenize(prompt)[:max_tokens]]
