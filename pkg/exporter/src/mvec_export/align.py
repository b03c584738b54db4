"""Whitespace-token spans and subword-to-token alignment.

The ranking pipeline tokenizes lowercased text with
``\\w+(?:[-']\\w+)*|[^\\w\\s]`` (words keep internal hyphens/apostrophes,
other punctuation is one token per character). The exporter reproduces
that split with character spans so encoder subword pieces, which carry
character offsets into the same lowercased string, can be pooled back
onto the tokens the pipeline will look up.
"""

from __future__ import annotations

import re

import numpy as np

_TOKEN_RE = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")


def span_tokenize(text: str) -> list[tuple[str, int, int]]:
    """Lowercase ``text`` and return (token, start, end) character spans.

    The token strings match the pipeline's tokenizer output exactly; the
    spans index into ``text.lower()``.
    """
    lowered = text.lower()
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(lowered)]


def align_pieces(
    token_spans: list[tuple[str, int, int]],
    piece_offsets: list[tuple[int, int]],
    piece_vectors: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Average piece vectors onto tokens by character-span overlap.

    ``piece_offsets`` and ``piece_vectors`` describe the encoder's
    non-special subword pieces (offsets into the same lowercased text as
    ``token_spans``). A token with no overlapping piece — typically one
    truncated away by the encoder's max length — falls back to the mean
    of all piece vectors. Returns the (n_tokens, dim) matrix and the
    number of fallback tokens.
    """
    dim = piece_vectors.shape[1]
    if len(piece_offsets) == 0:
        return np.zeros((len(token_spans), dim)), len(token_spans)
    mean_vec = piece_vectors.mean(axis=0)
    rows = np.empty((len(token_spans), dim))
    fallbacks = 0
    for i, (_tok, start, end) in enumerate(token_spans):
        hits = [
            j for j, (ps, pe) in enumerate(piece_offsets)
            if ps < end and pe > start
        ]
        if hits:
            rows[i] = piece_vectors[hits].mean(axis=0)
        else:
            rows[i] = mean_vec
            fallbacks += 1
    return rows, fallbacks
