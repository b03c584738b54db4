"""Retrieval and text-quality metrics: Recall@k, BLEU, ROUGE-1/L, distinct-n,
and perplexity under an add-alpha bigram language model."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

BLEU_EPS = 1e-9

BOS = "<s>"
# the reserved type doubles as the sentence-end event and the OOV bucket, so
# per-history distributions over the V seen words plus this one type sum to 1
END_OR_UNK = "</s>"


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class RankedExample:
    ranked_indices: tuple[int, ...]
    positive_index: int

    def __post_init__(self):
        n = len(self.ranked_indices)
        if sorted(self.ranked_indices) != list(range(n)):
            raise MetricError("ranked_indices must be a permutation of 0..n-1")
        if not 0 <= self.positive_index < n:
            raise MetricError("positive_index out of range")


def recall_at_k(examples: list[RankedExample], k: int) -> float:
    if k < 1:
        raise MetricError("k must be >= 1")
    if not examples:
        raise MetricError("no examples")
    hits = sum(
        1 for ex in examples
        if ex.positive_index in ex.ranked_indices[: min(k, len(ex.ranked_indices))]
    )
    return hits / len(examples)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: list[str], reference: list[str], max_n: int = 4) -> float:
    """Sentence BLEU with clipped modified precisions, an epsilon floor on
    zero precisions, and the standard brevity penalty."""
    if not candidate:
        return 0.0
    log_sum = 0.0
    n_orders = 0
    for n in range(1, max_n + 1):
        cand = _ngrams(candidate, n)
        total = sum(cand.values())
        if total == 0:
            continue  # candidate too short for this order; keep bleu(x, x) = 1
        ref = _ngrams(reference, n)
        clipped = sum(min(c, ref[g]) for g, c in cand.items())
        p = clipped / total if clipped > 0 else BLEU_EPS
        log_sum += math.log(p)
        n_orders += 1
    score = math.exp(log_sum / n_orders)
    c, r = len(candidate), len(reference)
    if c < r:
        score *= math.exp(1.0 - r / c)
    return min(score, 1.0)


def _prf(overlap: float, cand_total: float, ref_total: float) -> tuple[float, float, float]:
    p = overlap / cand_total if cand_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def rouge_n(candidate: list[str], reference: list[str], n: int = 1) -> tuple[float, float, float]:
    if n < 1:
        raise MetricError("n must be >= 1")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum(min(c, ref[g]) for g, c in cand.items())
    return _prf(overlap, sum(cand.values()), sum(ref.values()))


def _lcs_len(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> tuple[float, float, float]:
    if not candidate or not reference:
        return 0.0, 0.0, 0.0
    lcs = _lcs_len(candidate, reference)
    return _prf(lcs, len(candidate), len(reference))


def distinct_n(texts: list[list[str]], n: int = 1) -> float:
    if n < 1:
        raise MetricError("n must be >= 1")
    seen = set()
    total = 0
    for toks in texts:
        for i in range(len(toks) - n + 1):
            seen.add(tuple(toks[i:i + n]))
            total += 1
    return len(seen) / total if total else 0.0


@dataclass
class NgramLm:
    """Add-alpha smoothed bigram model with sentence-boundary markers.

    The event space per history is the V training word types plus one
    reserved type absorbing both the end marker and unseen words, so
    conditionals are (count + alpha) / (history_count + alpha * (V + 1)).
    """

    alpha: float = 1.0
    vocab: set = field(default_factory=set)
    bigram_counts: Counter = field(default_factory=Counter)
    history_counts: Counter = field(default_factory=Counter)
    uniform_size: int | None = None  # set -> flat 1/V model, used as a test fixture

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @classmethod
    def uniform(cls, n_types: int) -> "NgramLm":
        if n_types < 1:
            raise MetricError("uniform LM needs >= 1 type")
        return cls(uniform_size=n_types)

    def _map(self, word: str) -> str:
        return word if word in self.vocab else END_OR_UNK

    def probability(self, word: str, history: str) -> float:
        if self.uniform_size is not None:
            return 1.0 / self.uniform_size
        h = BOS if history == BOS else self._map(history)
        c_hw = self.bigram_counts[(h, self._map(word))]
        c_h = self.history_counts[h]
        return (c_hw + self.alpha) / (c_h + self.alpha * (self.vocab_size + 1))


def train_lm(corpus: list[list[str]], alpha: float = 1.0) -> NgramLm:
    if not corpus:
        raise MetricError("training corpus is empty")
    if alpha <= 0:
        raise MetricError("alpha must be > 0")
    lm = NgramLm(alpha=alpha)
    for sent in corpus:
        lm.vocab.update(sent)
    lm.vocab.discard(BOS)
    lm.vocab.discard(END_OR_UNK)
    for sent in corpus:
        seq = [BOS] + [w if w in lm.vocab else END_OR_UNK for w in sent] + [END_OR_UNK]
        for h, w in zip(seq, seq[1:]):
            lm.bigram_counts[(h, w)] += 1
            lm.history_counts[h] += 1
    return lm


def perplexity(lm: NgramLm, texts: list[list[str]]) -> float:
    """exp of the average negative log-likelihood, end markers included."""
    total_log = 0.0
    n_scored = 0
    for sent in texts:
        history = BOS
        for w in list(sent) + [END_OR_UNK]:
            total_log += math.log(lm.probability(w, history))
            history = w
            n_scored += 1
    if n_scored == 0:
        raise MetricError("no tokens to score")
    return math.exp(-total_log / n_scored)


@dataclass(frozen=True)
class EvalReport:
    recall: dict  # k -> fraction
    bleu: float
    rouge1_f: float
    rougeL_f: float
    distinct1: float
    distinct2: float
    perplexity: float
    n_examples: int

    def as_dict(self) -> dict:
        return {
            "recall": {str(k): v for k, v in self.recall.items()},
            "bleu": self.bleu,
            "rouge1_f": self.rouge1_f,
            "rougeL_f": self.rougeL_f,
            "distinct1": self.distinct1,
            "distinct2": self.distinct2,
            "perplexity": self.perplexity,
            "n_examples": self.n_examples,
        }


def evaluate(examples: list[RankedExample], selected: list[list[str]],
             references: list[list[str]], lm: NgramLm,
             ks: list[int] = (1, 2, 5)) -> EvalReport:
    """Assemble the full report.

    ``selected`` are the token lists of each example's top-1 response,
    ``references`` the ground-truth response token lists.
    """
    if not (len(examples) == len(selected) == len(references)):
        raise MetricError("examples, selected and references must align")
    recall = {int(k): recall_at_k(examples, k) for k in ks}
    n = len(examples)
    return EvalReport(
        recall=recall,
        bleu=sum(bleu(s, r) for s, r in zip(selected, references)) / n,
        rouge1_f=sum(rouge_n(s, r, 1)[2] for s, r in zip(selected, references)) / n,
        rougeL_f=sum(rouge_l(s, r)[2] for s, r in zip(selected, references)) / n,
        distinct1=distinct_n(selected, 1),
        distinct2=distinct_n(selected, 2),
        perplexity=perplexity(lm, selected),
        n_examples=n,
    )
