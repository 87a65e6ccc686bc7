"""Keyed random streams for schedule-independent sampling.

Every random draw in the pipeline comes from a stream keyed by a tuple of
tokens (seed, stage, indices...). Streams are derived by hashing the tokens
into a Philox key, so the values a consumer sees depend only on the tokens,
never on worker count, tile layout, or iteration order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def stream_key(*tokens: object) -> np.ndarray:
    """Derive a 128-bit Philox key from a token tuple."""
    payload = _SEP.join(str(t).encode("utf-8") for t in tokens)
    digest = hashlib.sha256(payload).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64).copy()


def stream(*tokens: object) -> np.random.Generator:
    """Return a generator whose output is a pure function of the tokens."""
    return np.random.Generator(np.random.Philox(key=stream_key(*tokens)))
