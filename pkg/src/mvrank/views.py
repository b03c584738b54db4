"""Per-token views of an utterance: contextual, positional, syntactic.

The contextual view comes from a pluggable provider: either a deterministic
feature-hashing stand-in (offline, seedable) or a table of externally
produced vectors keyed by ``dialogue_id:utt_index:position``.
"""

from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass, field

import numpy as np

# the 17 Universal POS tags, fixed alphabetical order (defines the one-hot layout)
UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)
_TAG_INDEX = {t: i for i, t in enumerate(UPOS_TAGS)}

SYNTACTIC_DIM = len(UPOS_TAGS)

DEFAULT_CONTEXTUAL_DIM = 64
DEFAULT_POSITIONAL_DIM = 64

# words with internal hyphens/apostrophes stay whole; other punctuation
# becomes one token per character
_TOKEN_RE = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")


class ViewError(ValueError):
    pass


class MissingEmbeddingError(KeyError):
    """External provider has no vector for a required key."""

    def __init__(self, key: str):
        super().__init__(key)
        self.key = key

    def __str__(self) -> str:
        return f"no embedding for key '{self.key}'"


@dataclass(frozen=True)
class Token:
    text: str
    pos_tag: str
    position: int

    def __post_init__(self):
        if not self.text:
            raise ViewError("token text must be non-empty")
        if self.pos_tag not in _TAG_INDEX:
            raise ViewError(f"unknown POS tag '{self.pos_tag}'")


@dataclass(frozen=True)
class TokenizedUtterance:
    dialogue_id: str
    utt_index: str
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ViewError("utterance must have at least one token")
        for i, t in enumerate(self.tokens):
            if t.position != i:
                raise ViewError("token positions must be consecutive from 0")


@dataclass(frozen=True)
class ViewBundle:
    contextual: np.ndarray  # n x v1
    positional: np.ndarray  # n x v2
    syntactic: np.ndarray  # n x 17


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = "hashed-deterministic"  # or "external-file"
    dim: int = DEFAULT_CONTEXTUAL_DIM
    seed: int = 0
    table: dict | None = None  # key -> vector, for the external kind

    def __post_init__(self):
        if self.kind not in ("hashed-deterministic", "external-file"):
            raise ViewError(f"unknown provider kind '{self.kind}'")
        if self.dim < 8:
            raise ViewError(f"contextual dim must be >= 8, got {self.dim}")
        if self.kind == "external-file" and self.table is None:
            raise ViewError("external-file provider needs a loaded table")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, then split punctuation into its own
    tokens (internal hyphens and apostrophes are kept)."""
    return _TOKEN_RE.findall(text.lower())


_LEXICON = {}
for _tag, _words in {
    "DET": "the a an this that these those some any each every all both another such",
    "PRON": ("i you he she it we they me him her us them mine yours hers ours theirs "
             "my your his its our their myself yourself himself herself itself "
             "ourselves themselves who whom whose what which someone anyone everyone "
             "nothing something anything everything"),
    "ADP": ("in on at of to with from by for about into over under after before "
            "between through during against among within without across behind "
            "beyond near above below off onto upon"),
    "CCONJ": "and or but nor yet plus",
    "SCONJ": "if because while although though unless whether since until whereas",
    "AUX": ("is am are was were be been being do does did done have has had having "
            "will would can could shall should may might must wo ca"),
    "PART": "not n't nt to",
    "INTJ": "hi hello hey oh ah yes yeah yep no nope ok okay thanks thank please "
            "wow hmm umm sorry cheers",
    "ADV": ("very so too also just now then here there when where why how again "
            "always never often soon still already maybe perhaps quite rather"),
    "ADJ": ("good bad new old big small great same other more most many much few "
            "little right wrong sure fine nice easy hard free full next last first"),
    "VERB": ("run runs ran running go goes went gone going get gets got gotten make "
             "makes made see sees saw seen know knows knew known think thinks thought "
             "want wants use uses say says said take takes took come comes came look "
             "looks find finds found give gives gave tell tells told ask asks work "
             "works try tries need needs install update upgrade remove reboot restart "
             "check fix fixed open close start stop put let keep mean means help "
             "feel feels seem seems leave show shows hear play move like love type "
             "click download boot mount sudo"),
}.items():
    for _w in _words.split():
        _LEXICON[_w] = _tag

_SYM_CHARS = set("$%+=<>^~|#&*@/\\")

# suffix rules applied after the closed-class lexicon, first match wins
_SUFFIX_RULES = (
    (("ly",), "ADV"),
    (("ing", "ed"), "VERB"),
    (("tion", "sion", "ness", "ment", "ity", "ship", "ance", "ence"), "NOUN"),
    (("ous", "ful", "ive", "able", "ible", "ical", "ish", "less"), "ADJ"),
)

_NUM_RE = re.compile(r"^\d+([.,]\d+)*$")


def pos_tag(tokens: list[str]) -> list[str]:
    """Deterministic rule tagger: closed-class lexicon, then digit and
    punctuation classes, then suffix rules, fallback NOUN."""
    tags = []
    for tok in tokens:
        low = tok.lower()
        if low in _LEXICON:
            tags.append(_LEXICON[low])
            continue
        if _NUM_RE.match(low):
            tags.append("NUM")
            continue
        if all(ch in string.punctuation for ch in low):
            tags.append("SYM" if all(ch in _SYM_CHARS for ch in low) else "PUNCT")
            continue
        for suffixes, tag in _SUFFIX_RULES:
            if len(low) > 3 and low.endswith(suffixes):
                tags.append(tag)
                break
        else:
            tags.append("NOUN")
    return tags


def make_utterance(text: str, dialogue_id: str = "", utt_index: str = "0",
                   tags: list[str] | None = None) -> TokenizedUtterance:
    """Tokenize and tag a raw string; a pre-supplied tag list overrides the tagger."""
    words = tokenize(text)
    if not words:
        raise ViewError("utterance is empty after tokenization")
    if tags is None:
        tags = pos_tag(words)
    elif len(tags) != len(words):
        raise ViewError(
            f"got {len(tags)} tags for {len(words)} tokens in '{text[:40]}'"
        )
    toks = tuple(Token(w, t, i) for i, (w, t) in enumerate(zip(words, tags)))
    return TokenizedUtterance(dialogue_id, utt_index, toks)


def _hash_slot(seed: int, slot: int, value: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        f"{seed}:{slot}:{value}".encode("utf-8"), digest_size=8
    ).digest()
    h = int.from_bytes(digest, "little")
    return (h >> 1) % dim, 1.0 if h & 1 else -1.0


def contextual_view(utt: TokenizedUtterance, cfg: EmbeddingProviderConfig) -> np.ndarray:
    """One contextual vector per token.

    Hashed kind: feature-hash (token, previous-or-BOS, next-or-EOS) into
    ``dim`` buckets with seeded signs, unit-normalized.  External kind: look
    up ``dialogue_id:utt_index:position`` in the loaded table.
    """
    n = len(utt.tokens)
    if cfg.kind == "external-file":
        rows = []
        for tok in utt.tokens:
            key = f"{utt.dialogue_id}:{utt.utt_index}:{tok.position}"
            if key not in cfg.table:
                raise MissingEmbeddingError(key)
            rows.append(np.asarray(cfg.table[key], dtype=np.float64))
        return np.vstack(rows)

    words = [t.text for t in utt.tokens]
    out = np.zeros((n, cfg.dim))
    for i, word in enumerate(words):
        prev = words[i - 1] if i > 0 else "<s>"
        nxt = words[i + 1] if i + 1 < n else "</s>"
        for slot, value in enumerate((word, prev, nxt)):
            bucket, sign = _hash_slot(cfg.seed, slot, value, cfg.dim)
            out[i, bucket] += sign
        norm = np.linalg.norm(out[i])
        if norm == 0.0:
            out[i, 0] = 1.0
        else:
            out[i] /= norm
    return out


def positional_view(n: int, dim: int = DEFAULT_POSITIONAL_DIM) -> np.ndarray:
    """Sinusoidal position encoding: (pos, 2i) -> sin, (pos, 2i+1) -> cos."""
    if dim < 2 or dim % 2 != 0:
        raise ViewError(f"positional dim must be even and >= 2, got {dim}")
    pos = np.arange(n)[:, None]
    freqs = 1.0 / np.power(10000.0, 2 * np.arange(dim // 2) / dim)
    angles = pos * freqs[None, :]
    out = np.empty((n, dim))
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def syntactic_view(tags: list[str]) -> np.ndarray:
    """One-hot rows over the fixed 17-tag ordering."""
    out = np.zeros((len(tags), SYNTACTIC_DIM))
    for i, tag in enumerate(tags):
        if tag not in _TAG_INDEX:
            raise ViewError(f"unknown POS tag '{tag}'")
        out[i, _TAG_INDEX[tag]] = 1.0
    return out


def build_views(utt: TokenizedUtterance, cfg: EmbeddingProviderConfig,
                positional_dim: int = DEFAULT_POSITIONAL_DIM) -> ViewBundle:
    return ViewBundle(
        contextual=contextual_view(utt, cfg),
        positional=positional_view(len(utt.tokens), positional_dim),
        syntactic=syntactic_view([t.pos_tag for t in utt.tokens]),
    )
