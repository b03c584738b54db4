"""Intent extraction and discourse-token accumulation over a context.

Intents come from CCA between two utterance representations under the
transposed-sample convention: samples are the k latent dimensions, variables
are the tokens, so at most l = min(token counts) components exist.  Unique
intents (cosine-threshold dedup) accumulate as discourse tokens, and each
later utterance is analyzed against the discourse built so far.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import UtteranceRep
from .spectral import SpectralError, cca_transform, fit_cca

DEFAULT_INTENTS = 5
DEFAULT_DEDUP_THRESHOLD = 0.95
DEFAULT_MAX_TOKENS = 256

# cosine slack so the tau = 1.0 boundary rejects duplicates up to ~1e-9
_COS_EPS = 1e-9


class DiscourseError(ValueError):
    pass


@dataclass(frozen=True)
class IntentMatrix:
    intents: np.ndarray  # k x a, columns are intent vectors
    source_pair: tuple[str, str]


@dataclass
class DiscourseState:
    """Accumulated unit-norm discourse tokens for one context.

    No two stored tokens have cosine >= dedup_threshold; insertion enforces it.
    """

    width: int
    dedup_threshold: float = DEFAULT_DEDUP_THRESHOLD
    max_tokens: int = DEFAULT_MAX_TOKENS
    evict_oldest: bool = False
    tokens: list[np.ndarray] = field(default_factory=list)
    provenance: list[tuple[int, int]] = field(default_factory=list)  # (step, column)

    def __post_init__(self):
        if not 0.0 < self.dedup_threshold <= 1.0:
            raise DiscourseError(
                f"dedup_threshold must be in (0, 1], got {self.dedup_threshold}"
            )
        if self.max_tokens < 1:
            raise DiscourseError("max_tokens must be >= 1")

    def __len__(self) -> int:
        return len(self.tokens)

    def as_matrix(self) -> np.ndarray:
        """Stored tokens stacked as rows, m x k."""
        if not self.tokens:
            raise DiscourseError("discourse state is empty")
        return np.vstack(self.tokens)

    def _admit(self, vec: np.ndarray, step: int, column: int) -> bool:
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            return False
        unit = vec / norm
        if self.tokens and float(np.max(self.as_matrix() @ unit)) > self.dedup_threshold - _COS_EPS:
            return False
        if len(self.tokens) >= self.max_tokens:
            if not self.evict_oldest:
                return False
            oldest = min(range(len(self.provenance)), key=lambda i: self.provenance[i][0])
            del self.tokens[oldest]
            del self.provenance[oldest]
        self.tokens.append(unit)
        self.provenance.append((step, column))
        return True

    def add_intents(self, intents: IntentMatrix, step: int) -> int:
        """Insert each intent column in order; returns how many were admitted."""
        if intents.intents.shape[0] != self.width:
            raise DiscourseError(
                f"intents have width {intents.intents.shape[0]}, state has {self.width}"
            )
        added = 0
        for j in range(intents.intents.shape[1]):
            if self._admit(intents.intents[:, j], step, j):
                added += 1
        return added

    def seed_rows(self, rep: UtteranceRep, step: int = 0) -> int:
        """Seed from an utterance's normalized token rows (1-utterance fallback)."""
        added = 0
        for j in range(rep.matrix.shape[0]):
            if self._admit(rep.matrix[j], step, j):
                added += 1
        return added


def _as_rows(obj) -> tuple[np.ndarray, str]:
    if isinstance(obj, UtteranceRep):
        return obj.matrix, f"{obj.dialogue_id}:{obj.utt_index}"
    if isinstance(obj, DiscourseState):
        return obj.as_matrix(), "<discourse>"
    return np.asarray(obj, dtype=np.float64), "<matrix>"


def pair_intents(left, right: UtteranceRep, n_intents: int = DEFAULT_INTENTS,
                 ridge: float | None = None, mode: str = "average") -> IntentMatrix:
    """Shared-subspace intents of two token-row matrices with equal width k.

    Both matrices are transposed so the k latent dimensions act as samples;
    CCA runs with l = min(p, q, n_intents) components and the intent columns
    are the averaged canonical variates (or one side, for ablation).
    """
    if mode not in ("average", "left-only", "right-only"):
        raise DiscourseError(f"unknown intent mode '{mode}'")
    lm, lid = _as_rows(left)
    rm, rid = _as_rows(right)
    if lm.shape[1] != rm.shape[1]:
        raise DiscourseError(
            f"width mismatch: left has {lm.shape[1]}, right has {rm.shape[1]}"
        )
    k = lm.shape[1]
    if k < 2:
        raise DiscourseError("latent width k must be >= 2 to act as samples")
    if n_intents < 1:
        raise DiscourseError("n_intents must be >= 1")

    n_components = min(lm.shape[0], rm.shape[0], n_intents)
    xt, yt = lm.T, rm.T  # k x p, k x q
    model = fit_cca(xt, yt, n_components, ridge)
    z_left, z_right = cca_transform(model, xt, yt)
    if mode == "left-only":
        h = z_left
    elif mode == "right-only":
        h = z_right
    else:
        h = (z_left + z_right) / 2.0
    return IntentMatrix(h[:, :n_components], (lid, rid))


def dedup_add(state: DiscourseState, intents: IntentMatrix, step: int = 0) -> DiscourseState:
    state.add_intents(intents, step)
    return state


def process_context(context: list[UtteranceRep], n_intents: int = DEFAULT_INTENTS,
                    dedup_threshold: float = DEFAULT_DEDUP_THRESHOLD,
                    ridge: float | None = None, mode: str = "average",
                    max_tokens: int = DEFAULT_MAX_TOKENS,
                    evict_oldest: bool = False) -> DiscourseState:
    """Chain intent extraction across the whole context.

    The state seeds from the first utterance's normalized rows; each further
    utterance contributes the intents of CCA(discourse-so-far, utterance).
    Returns the final state; ``state.step_counts`` style diagnostics live in
    the provenance list.
    """
    if not context:
        raise DiscourseError("context must contain at least one utterance")
    k = context[0].matrix.shape[1]
    state = DiscourseState(width=k, dedup_threshold=dedup_threshold,
                           max_tokens=max_tokens, evict_oldest=evict_oldest)
    state.seed_rows(context[0], step=0)
    for step, rep in enumerate(context[1:], start=1):
        if rep.matrix.shape[1] != k:
            raise DiscourseError("all utterance representations must share width k")
        try:
            intents = pair_intents(state, rep, n_intents, ridge, mode)
        except SpectralError:
            # degenerate pair (e.g. zero-variance transposed views); skip the turn
            continue
        state.add_intents(intents, step)
    return state
