"""Fuse the three views of an utterance into its latent representation.

Multiview CCA is fit per utterance (samples are that utterance's tokens) and
the contextual view's projection is kept as the representation.  This is the
statistically unusual part of the pipeline: fits on a handful of tokens are
heavily rank-deficient, and only the ridge keeps them well-posed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import fit_mcca, mcca_transform
from .views import (
    EmbeddingProviderConfig,
    TokenizedUtterance,
    ViewBundle,
    ViewError,
    build_views,
    make_utterance,
)


@dataclass(frozen=True)
class UtteranceRep:
    matrix: np.ndarray  # n_tokens x k
    dialogue_id: str
    utt_index: str
    k: int


_FRAME_SEED = 1234


@lru_cache(maxsize=None)
def _reference_frame(v1: int, k: int) -> np.ndarray:
    """Fixed orthonormal v1 x k frame, a function of the dimensions only.

    Per-utterance MCCA leaves the latent coordinate system arbitrary (scale
    from the D-normalization, rotation from the eigenbasis), so token vectors
    from different utterances would live in mutually unrelated frames and
    cosine comparisons across them would be noise.  Every utterance's weight
    columns are unit-normalized and rotated (orthogonal Procrustes) onto this
    shared frame; the fitted subspace itself is untouched.
    """
    rng = np.random.default_rng(_FRAME_SEED)
    q, _ = np.linalg.qr(rng.standard_normal((v1, k)))
    return q


def _canonicalize(weights: np.ndarray, v1: int, k: int) -> np.ndarray:
    w = weights / np.maximum(np.linalg.norm(weights, axis=0), 1e-12)
    u, _, vt = np.linalg.svd(w.T @ _reference_frame(v1, k))
    return w @ (u @ vt)


def encode_utterance(bundle: ViewBundle, k: int, ridge: float | None = None,
                     dialogue_id: str = "", utt_index: str = "0") -> UtteranceRep:
    """Fit MCCA on this utterance's views and keep the contextual projection.

    Single-token utterances cannot support a covariance fit; they fall back
    to the first k coordinates of the contextual row, unit-normalized.
    """
    views = [bundle.contextual, bundle.positional, bundle.syntactic]
    n = bundle.contextual.shape[0]
    min_dim = min(v.shape[1] for v in views)
    if not 1 <= k <= min_dim:
        raise ViewError(f"k must be in [1, {min_dim}], got {k}")

    if n == 1:
        row = bundle.contextual[0, :k].copy()
        norm = np.linalg.norm(row)
        if norm > 0:
            row /= norm
        return UtteranceRep(row[None, :], dialogue_id, utt_index, k)

    model = fit_mcca(views, k, ridge)
    # project the raw (uncentered) contextual view: because the fit uses this
    # utterance's own tokens as samples, the centered projection has exactly
    # zero-mean rows and mean-pooling downstream would collapse every
    # multi-token utterance to the zero vector
    w1 = _canonicalize(model.per_view_weights[0], bundle.contextual.shape[1], k)
    proj = bundle.contextual @ w1
    return UtteranceRep(proj, dialogue_id, utt_index, k)


def encode_text(text: str, cfg: EmbeddingProviderConfig, k: int,
                ridge: float | None = None, dialogue_id: str = "",
                utt_index: str = "0", tags: list[str] | None = None,
                positional_dim: int = 64) -> UtteranceRep:
    """Full pipeline for one raw string: tokenize, tag, build views, encode."""
    utt = make_utterance(text, dialogue_id, utt_index, tags)
    bundle = build_views(utt, cfg, positional_dim)
    return encode_utterance(bundle, k, ridge, dialogue_id, utt_index)


def encode_response(text: str, cfg: EmbeddingProviderConfig, k: int,
                    ridge: float | None = None, dialogue_id: str = "",
                    candidate_index: int = 0, tags: list[str] | None = None,
                    positional_dim: int = 64) -> UtteranceRep:
    """Encode a candidate response through the identical pipeline as context
    utterances; external-provider keys use utt_index ``r<candidate_index>``."""
    return encode_text(text, cfg, k, ridge, dialogue_id,
                       f"r{candidate_index}", tags, positional_dim)


def encode_utterance_views(utt: TokenizedUtterance, cfg: EmbeddingProviderConfig,
                           k: int, ridge: float | None = None,
                           positional_dim: int = 64) -> UtteranceRep:
    bundle = build_views(utt, cfg, positional_dim)
    return encode_utterance(bundle, k, ridge, utt.dialogue_id, utt.utt_index)
