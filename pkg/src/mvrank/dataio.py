"""Dataset ingestion, the MVEC embedding container, and synthetic corpora.

MVEC layout (little-endian throughout): magic ``MVEC``, u32 version, u32 dim,
u32 count, then per entry a u32 key length, the UTF-8 key, and ``dim``
float32 values.  A JSONL table with the same key scheme is accepted wherever
MVEC is.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MVEC_MAGIC = b"MVEC"
MVEC_VERSION = 1


class DataError(ValueError):
    pass


class MvecFormatError(DataError):
    pass


@dataclass(frozen=True)
class DialogueRecord:
    dialogue_id: str
    context: tuple[str, ...]
    candidates: tuple[str, ...]
    positive_index: int
    context_tags: tuple | None = None  # per-utterance token tag lists
    candidate_tags: tuple | None = None

    def __post_init__(self):
        if not self.context:
            raise DataError("record needs at least 1 context utterance")
        if len(self.candidates) < 2:
            raise DataError("record needs at least 2 candidates")
        if not 0 <= self.positive_index < len(self.candidates):
            raise DataError(
                f"positive_index {self.positive_index} out of range for "
                f"{len(self.candidates)} candidates"
            )


def _record_from_obj(obj: dict, where: str) -> DialogueRecord:
    try:
        return DialogueRecord(
            dialogue_id=str(obj["dialogue_id"]),
            context=tuple(obj["context"]),
            candidates=tuple(obj["candidates"]),
            positive_index=int(obj["positive_index"]),
            context_tags=tuple(tuple(t) for t in obj["context_tags"])
            if obj.get("context_tags") is not None else None,
            candidate_tags=tuple(tuple(t) for t in obj["candidate_tags"])
            if obj.get("candidate_tags") is not None else None,
        )
    except KeyError as exc:
        raise DataError(f"{where}: missing field {exc}") from exc
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from exc


def load_jsonl(path) -> list[DialogueRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: invalid JSON: {exc}") from exc
            records.append(_record_from_obj(obj, f"line {lineno}"))
    return records


def dump_jsonl(records: list[DialogueRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {
                "dialogue_id": rec.dialogue_id,
                "context": list(rec.context),
                "candidates": list(rec.candidates),
                "positive_index": rec.positive_index,
            }
            if rec.context_tags is not None:
                obj["context_tags"] = [list(t) for t in rec.context_tags]
            if rec.candidate_tags is not None:
                obj["candidate_tags"] = [list(t) for t in rec.candidate_tags]
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def split_turns(context: str) -> list[str]:
    """Split a flat Ubuntu-style context on the __eou__/__eot__ markers."""
    for marker in ("__eou__", "__eot__"):
        context = context.replace(marker, "\x00")
    return [part.strip() for part in context.split("\x00") if part.strip()]


def load_ubuntu_csv(path) -> list[DialogueRecord]:
    """Ubuntu v2 CSV: either (context, response, label) triples grouped by
    identical context, or a test row of context plus candidate columns with
    the ground truth first."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("CSV file is empty") from None
        cols = [h.strip().lower() for h in header]
        if "context" not in cols:
            raise DataError("CSV is missing a 'context' column")
        ctx_i = cols.index("context")

        if "label" in cols:
            rsp_i, lab_i = cols.index("response"), cols.index("label")
            groups: dict[str, dict] = {}
            for lineno, row in enumerate(reader, start=2):
                if len(row) <= max(ctx_i, rsp_i, lab_i):
                    raise DataError(f"line {lineno}: too few columns")
                g = groups.setdefault(row[ctx_i], {"pos": [], "neg": []})
                (g["pos"] if row[lab_i].strip() == "1" else g["neg"]).append(row[rsp_i])
            records = []
            for i, (ctx, g) in enumerate(groups.items()):
                if not g["pos"]:
                    raise DataError(f"context group {i} has no positive response")
                candidates = g["pos"][:1] + g["neg"]
                if len(candidates) < 2:
                    raise DataError(f"context group {i} has fewer than 2 candidates")
                records.append(DialogueRecord(
                    dialogue_id=f"udc-{i}",
                    context=tuple(split_turns(ctx)),
                    candidates=tuple(candidates),
                    positive_index=0,
                ))
            return records

        # test format: context, ground-truth utterance, distractors
        records = []
        cand_idx = [i for i in range(len(cols)) if i != ctx_i]
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(cols):
                raise DataError(f"line {lineno}: expected {len(cols)} columns")
            candidates = [row[i] for i in cand_idx]
            if len(candidates) < 2:
                raise DataError(f"line {lineno}: fewer than 2 candidates")
            records.append(DialogueRecord(
                dialogue_id=f"udc-{lineno - 2}",
                context=tuple(split_turns(row[ctx_i])),
                candidates=tuple(candidates),
                positive_index=0,
            ))
        return records


def write_mvec(table: dict, path) -> None:
    """Write a key -> vector table; keys sorted for reproducible bytes."""
    keys = sorted(table)
    dim = None
    for k in keys:
        vec = np.asarray(table[k], dtype=np.float32)
        if vec.ndim != 1:
            raise MvecFormatError(f"vector for '{k}' is not 1-d")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise MvecFormatError(
                f"vector for '{k}' has dim {vec.shape[0]}, expected {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise MvecFormatError(f"vector for '{k}' has non-finite entries")
    if dim is None:
        dim = 0
    with open(path, "wb") as fh:
        fh.write(MVEC_MAGIC)
        fh.write(struct.pack("<III", MVEC_VERSION, dim, len(keys)))
        for k in keys:
            kb = k.encode("utf-8")
            fh.write(struct.pack("<I", len(kb)))
            fh.write(kb)
            fh.write(np.asarray(table[k], dtype="<f4").tobytes())


def read_mvec(path) -> dict:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MVEC_MAGIC:
        raise MvecFormatError(f"{path}: bad magic, not an MVEC file")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != MVEC_VERSION:
        raise MvecFormatError(f"{path}: unsupported version {version}")
    table = {}
    offset = 16
    for i in range(count):
        if offset + 4 > len(data):
            raise MvecFormatError(f"{path}: truncated at entry {i}")
        (klen,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + klen + 4 * dim > len(data):
            raise MvecFormatError(f"{path}: truncated at entry {i}")
        key = data[offset:offset + klen].decode("utf-8")
        offset += klen
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
        if key in table:
            raise MvecFormatError(f"{path}: duplicate key '{key}'")
        if not np.all(np.isfinite(vec)):
            raise MvecFormatError(f"{path}: non-finite values under '{key}'")
        table[key] = vec.astype(np.float64)
    if offset != len(data):
        raise MvecFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return table


def load_embedding_table(path) -> dict:
    """Read either an MVEC file or its JSONL fallback ({"key":..., "vector":...})."""
    p = Path(path)
    if p.suffix in (".jsonl", ".json"):
        table = {}
        with open(p, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                key = obj["key"]
                if key in table:
                    raise MvecFormatError(f"line {lineno}: duplicate key '{key}'")
                table[key] = np.asarray(obj["vector"], dtype=np.float64)
        return table
    return read_mvec(p)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_dialogues: int = 50
    n_topics: int = 8
    vocab_per_topic: int = 6
    context_len_min: int = 4
    context_len_max: int = 7
    candidates_per_record: int = 10
    utterance_len_min: int = 8
    utterance_len_max: int = 16
    topic_word_prob: float = 0.8

    def __post_init__(self):
        if min(self.n_dialogues, self.n_topics, self.vocab_per_topic,
               self.context_len_min, self.utterance_len_min) < 1:
            raise DataError("all synthetic counts must be >= 1")
        if self.candidates_per_record < 2:
            raise DataError("candidates_per_record must be >= 2")
        if self.context_len_max < self.context_len_min:
            raise DataError("context_len_max < context_len_min")


def _synth_utterance(rng: np.random.Generator, cfg: SynthConfig,
                     topic: int, vocab: list[list[str]]) -> str:
    length = int(rng.integers(cfg.utterance_len_min, cfg.utterance_len_max + 1))
    words = []
    for _ in range(length):
        if cfg.n_topics > 1 and rng.random() >= cfg.topic_word_prob:
            other = int(rng.integers(cfg.n_topics - 1))
            src = other if other < topic else other + 1
        else:
            src = topic
        words.append(vocab[src][int(rng.integers(cfg.vocab_per_topic))])
    return " ".join(words)


def gen_synthetic(cfg: SynthConfig) -> list[DialogueRecord]:
    """Seeded topical corpus: context and positive share a topic's vocabulary,
    distractors draw from the other topics."""
    rng = np.random.default_rng(cfg.seed)
    vocab = [
        [f"t{t}w{w}" for w in range(cfg.vocab_per_topic)]
        for t in range(cfg.n_topics)
    ]
    records = []
    for d in range(cfg.n_dialogues):
        topic = int(rng.integers(cfg.n_topics))
        n_ctx = int(rng.integers(cfg.context_len_min, cfg.context_len_max + 1))
        context = tuple(_synth_utterance(rng, cfg, topic, vocab) for _ in range(n_ctx))
        positive = _synth_utterance(rng, cfg, topic, vocab)
        distractors = []
        for _ in range(cfg.candidates_per_record - 1):
            if cfg.n_topics > 1:
                other = int(rng.integers(cfg.n_topics - 1))
                src = other if other < topic else other + 1
            else:
                src = topic
            distractors.append(_synth_utterance(rng, cfg, src, vocab))
        positive_index = int(rng.integers(cfg.candidates_per_record))
        candidates = distractors[:positive_index] + [positive] + distractors[positive_index:]
        records.append(DialogueRecord(
            dialogue_id=f"synth-{d}",
            context=context,
            candidates=tuple(candidates),
            positive_index=positive_index,
        ))
    return records
