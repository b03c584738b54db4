"""Cosine-similarity scoring of candidate responses against discourse tokens."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discourse import DiscourseState
from .encoder import UtteranceRep


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class RankingConfig:
    token_aggregation: str = "mean"  # or "max", over discourse tokens

    def __post_init__(self):
        if self.token_aggregation not in ("mean", "max"):
            raise RankingError(
                f"token_aggregation must be 'mean' or 'max', got "
                f"'{self.token_aggregation}'"
            )


@dataclass(frozen=True)
class ScoredCandidate:
    candidate_index: int
    score: float


def score_response(state: DiscourseState, response: UtteranceRep,
                   cfg: RankingConfig = RankingConfig()) -> float:
    """Aggregate cosine between the mean response vector and each discourse token."""
    if len(state) == 0:
        raise RankingError("discourse state is empty")
    if response.matrix.size == 0:
        raise RankingError("response representation is empty")
    if response.matrix.shape[1] != state.width:
        raise RankingError(
            f"response width {response.matrix.shape[1]} != state width {state.width}"
        )
    pooled = response.matrix.mean(axis=0)
    norm = np.linalg.norm(pooled)
    if norm < 1e-300:
        return 0.0
    pooled = pooled / norm
    cosines = state.as_matrix() @ pooled  # stored tokens are unit-norm
    if cfg.token_aggregation == "max":
        return float(np.max(cosines))
    return float(np.mean(cosines))


def rank_candidates(state: DiscourseState, responses: list[UtteranceRep],
                    cfg: RankingConfig = RankingConfig()) -> list[ScoredCandidate]:
    """Descending by score, ties broken by ascending candidate index."""
    if not responses:
        raise RankingError("need at least one candidate response")
    scored = [
        ScoredCandidate(i, score_response(state, rep, cfg))
        for i, rep in enumerate(responses)
    ]
    return sorted(scored, key=lambda sc: (-sc.score, sc.candidate_index))
