"""Export contextual token embeddings for a dialogue dataset to MVEC."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from mvec_export.align import align_pieces, span_tokenize
from mvec_export.mvecio import read_mvec, write_mvec

logger = logging.getLogger("mvec_export")


class ExportError(ValueError):
    pass


@dataclass(frozen=True)
class ExportJob:
    dataset: str
    model: str
    out: str
    layer: int = -1  # index into hidden_states; -1 = last hidden layer
    max_length: int = 128

    def __post_init__(self):
        if self.max_length < 8:
            raise ExportError("max_length must be >= 8")


@dataclass(frozen=True)
class ExportSummary:
    n_keys: int
    dim: int
    n_utterances: int
    n_fallback_tokens: int
    n_truncated_utterances: int

    def as_dict(self) -> dict:
        return {
            "n_keys": self.n_keys,
            "dim": self.dim,
            "n_utterances": self.n_utterances,
            "n_fallback_tokens": self.n_fallback_tokens,
            "n_truncated_utterances": self.n_truncated_utterances,
        }


def load_dataset(path) -> list[dict]:
    """Read the dialogue JSONL schema: one object per line with
    dialogue_id, context (list of utterances) and candidates."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}: line {lineno}: {exc}") from exc
            for fld in ("dialogue_id", "context", "candidates"):
                if fld not in obj:
                    raise ExportError(f"{path}: line {lineno}: missing '{fld}'")
            records.append(obj)
    return records


def iter_utterances(records: list[dict]):
    """Yield (dialogue_id, utt_index, text) in dataset order: context
    utterances under their turn index, candidates under ``r<j>``."""
    for rec in records:
        for i, text in enumerate(rec["context"]):
            yield rec["dialogue_id"], str(i), text
        for j, text in enumerate(rec["candidates"]):
            yield rec["dialogue_id"], f"r{j}", text


def required_keys(records: list[dict]) -> list[str]:
    keys = []
    for dialogue_id, utt_index, text in iter_utterances(records):
        for pos in range(len(span_tokenize(text))):
            keys.append(f"{dialogue_id}:{utt_index}:{pos}")
    return keys


def _encode_utterance(text, tokenizer, model, layer, max_length):
    """Return (piece_offsets, piece_vectors, truncated) for one utterance."""
    lowered = text.lower()
    enc = tokenizer(
        lowered,
        truncation=True,
        max_length=max_length,
        return_offsets_mapping=True,
        return_special_tokens_mask=True,
        return_tensors="pt",
    )
    truncated = len(tokenizer(lowered)["input_ids"]) > max_length
    offsets = enc.pop("offset_mapping")[0].tolist()
    special = enc.pop("special_tokens_mask")[0].tolist()
    with torch.no_grad():
        out = model(**enc, output_hidden_states=True)
    hidden = out.hidden_states[layer][0].numpy().astype(np.float64)
    piece_offsets = [tuple(o) for o, s in zip(offsets, special) if not s]
    piece_vectors = np.array(
        [hidden[i] for i, s in enumerate(special) if not s]
    ).reshape(len(piece_offsets), -1)
    return piece_offsets, piece_vectors, truncated


def export_embeddings(job: ExportJob) -> ExportSummary:
    records = load_dataset(job.dataset)
    tokenizer = AutoTokenizer.from_pretrained(job.model)
    model = AutoModel.from_pretrained(job.model)
    model.eval()

    table = {}
    dim = model.config.hidden_size
    n_utts = 0
    n_fallback = 0
    n_truncated = 0
    for dialogue_id, utt_index, text in iter_utterances(records):
        spans = span_tokenize(text)
        if not spans:
            continue
        n_utts += 1
        piece_offsets, piece_vectors, truncated = _encode_utterance(
            text, tokenizer, model, job.layer, job.max_length
        )
        if truncated:
            n_truncated += 1
            logger.warning(
                "utterance %s:%s exceeds max_length=%d; truncated",
                dialogue_id, utt_index, job.max_length,
            )
        rows, fallbacks = align_pieces(spans, piece_offsets, piece_vectors)
        n_fallback += fallbacks
        for pos in range(rows.shape[0]):
            table[f"{dialogue_id}:{utt_index}:{pos}"] = rows[pos]

    write_mvec(table, job.out)
    summary = ExportSummary(
        n_keys=len(table),
        dim=dim,
        n_utterances=n_utts,
        n_fallback_tokens=n_fallback,
        n_truncated_utterances=n_truncated,
    )
    manifest = {
        "model": job.model,
        "layer": job.layer,
        "max_length": job.max_length,
        "dataset": str(job.dataset),
        **summary.as_dict(),
    }
    Path(str(job.out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return summary


def verify_mvec(path, dataset) -> dict:
    """Check an MVEC file covers every key the ranking pipeline needs for
    ``dataset``. Report-only: returns a dict, never raises for missing keys
    (format errors from the reader still propagate)."""
    table = read_mvec(path)
    needed = required_keys(load_dataset(dataset))
    missing = [k for k in needed if k not in table]
    dims = {v.shape[0] for v in table.values()}
    return {
        "n_entries": len(table),
        "n_required": len(needed),
        "missing": missing,
        "n_missing": len(missing),
        "n_extra": len(set(table) - set(needed)),
        "dim": dims.pop() if len(dims) == 1 else sorted(dims),
        "ok": not missing,
    }
