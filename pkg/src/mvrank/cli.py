"""Command-line surface: synth, encode, rank, eval.

Exit codes: 0 success, 2 input/validation errors, 3 missing embedding key,
64 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataio, report as report_mod
from .dataio import DataError, DialogueRecord, SynthConfig
from .discourse import DiscourseError, process_context
from .encoder import UtteranceRep, encode_response, encode_text
from .metrics import MetricError, RankedExample, evaluate, train_lm
from .ranker import RankingConfig, RankingError, rank_candidates
from .views import (
    DEFAULT_CONTEXTUAL_DIM,
    DEFAULT_POSITIONAL_DIM,
    EmbeddingProviderConfig,
    MissingEmbeddingError,
    SYNTACTIC_DIM,
    ViewError,
    tokenize,
)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_MISSING_EMBEDDING = 3
EXIT_USAGE = 64

DEFAULT_K = min(DEFAULT_CONTEXTUAL_DIM, DEFAULT_POSITIONAL_DIM, SYNTACTIC_DIM)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_dataset(path: str, fmt: str) -> list[DialogueRecord]:
    if fmt == "jsonl":
        return dataio.load_jsonl(path)
    if fmt == "ubuntu-csv":
        return dataio.load_ubuntu_csv(path)
    raise DataError(f"unknown dataset format '{fmt}'")


def _provider(args) -> EmbeddingProviderConfig:
    if args.emb is not None:
        table = dataio.load_embedding_table(args.emb)
        if not table:
            raise DataError(f"embedding table {args.emb} is empty")
        dim = len(next(iter(table.values())))
        return EmbeddingProviderConfig(kind="external-file", dim=dim, table=table)
    return EmbeddingProviderConfig(kind="hashed-deterministic", dim=args.v1,
                                   seed=args.seed)


def _resolved_ridge(args) -> float | None:
    return None if args.ridge == "auto" else float(args.ridge)


def _encode_record(rec: DialogueRecord, provider: EmbeddingProviderConfig,
                   args) -> tuple[list[UtteranceRep], list[UtteranceRep]]:
    ridge = _resolved_ridge(args)
    context_reps = []
    for i, utt in enumerate(rec.context):
        if not tokenize(utt):
            continue
        tags = list(rec.context_tags[i]) if rec.context_tags else None
        context_reps.append(encode_text(utt, provider, args.k, ridge,
                                        rec.dialogue_id, str(i), tags,
                                        args.v2))
    if not context_reps:
        raise DataError(f"{rec.dialogue_id}: no non-empty context utterances")
    cand_reps = []
    for j, cand in enumerate(rec.candidates):
        tags = list(rec.candidate_tags[j]) if rec.candidate_tags else None
        cand_reps.append(encode_response(cand, provider, args.k, ridge,
                                         rec.dialogue_id, j, tags, args.v2))
    return context_reps, cand_reps


def _reps_from_table(table: dict, rec: DialogueRecord,
                     k: int) -> tuple[list[UtteranceRep], list[UtteranceRep]]:
    import numpy as np

    def fetch(utt_index: str) -> UtteranceRep | None:
        rows = []
        while True:
            key = f"{rec.dialogue_id}:{utt_index}:{len(rows)}"
            if key not in table:
                break
            rows.append(table[key])
        if not rows:
            return None
        return UtteranceRep(np.vstack(rows), rec.dialogue_id, utt_index, k)

    context_reps = []
    for i in range(len(rec.context)):
        rep = fetch(str(i))
        if rep is not None:
            context_reps.append(rep)
    if not context_reps:
        raise MissingEmbeddingError(f"{rec.dialogue_id}:0:0")
    cand_reps = []
    for j in range(len(rec.candidates)):
        rep = fetch(f"r{j}")
        if rep is None:
            raise MissingEmbeddingError(f"{rec.dialogue_id}:r{j}:0")
        cand_reps.append(rep)
    return context_reps, cand_reps


def _rank_record(context_reps, cand_reps, args) -> dict:
    state = process_context(context_reps, n_intents=args.intents,
                            dedup_threshold=args.tau,
                            ridge=_resolved_ridge(args))
    ranking = rank_candidates(state, cand_reps,
                              RankingConfig(token_aggregation=args.aggregation))
    return {
        "ranked_indices": [sc.candidate_index for sc in ranking],
        "scores": [round(sc.score, 12) for sc in ranking],
    }


def cmd_synth(args) -> int:
    cfg = SynthConfig(seed=args.seed, n_dialogues=args.dialogues,
                      n_topics=args.topics, vocab_per_topic=args.vocab,
                      candidates_per_record=args.candidates)
    records = dataio.gen_synthetic(cfg)
    dataio.dump_jsonl(records, args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    records = _load_dataset(args.dataset, args.format)
    provider = _provider(args)
    table = {}
    for rec in records:
        context_reps, cand_reps = _encode_record(rec, provider, args)
        for rep in context_reps + cand_reps:
            for r in range(rep.matrix.shape[0]):
                table[f"{rep.dialogue_id}:{rep.utt_index}:{r}"] = rep.matrix[r]
    dataio.write_mvec(table, args.out)
    return EXIT_OK


def cmd_rank(args) -> int:
    records = _load_dataset(args.dataset, args.format)
    reps_table = dataio.read_mvec(args.reps) if args.reps else None
    provider = None if reps_table is not None else _provider(args)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            if reps_table is not None:
                context_reps, cand_reps = _reps_from_table(reps_table, rec, args.k)
            else:
                context_reps, cand_reps = _encode_record(rec, provider, args)
            line = {"dialogue_id": rec.dialogue_id}
            line.update(_rank_record(context_reps, cand_reps, args))
            fh.write(json.dumps(line) + "\n")
    return EXIT_OK


def _load_rankings(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"rankings line {lineno}: {exc}") from exc
    return out


def cmd_eval(args) -> int:
    records = _load_dataset(args.dataset, args.format)
    rankings = _load_rankings(args.rankings)
    if len(rankings) != len(records):
        raise DataError(
            f"rankings have {len(rankings)} lines but dataset has "
            f"{len(records)} records"
        )
    by_id = {rec.dialogue_id: rec for rec in records}
    ks = [int(k) for k in args.k_list.split(",")]

    examples, selected, references, per_dialogue = [], [], [], []
    for line in rankings:
        rec = by_id.get(line.get("dialogue_id"))
        if rec is None:
            raise DataError(f"rankings refer to unknown dialogue "
                            f"'{line.get('dialogue_id')}'")
        ranked = tuple(line["ranked_indices"])
        if sorted(ranked) != list(range(len(rec.candidates))):
            raise DataError(f"{rec.dialogue_id}: ranked indices are not a "
                            "permutation of the candidate pool")
        examples.append(RankedExample(ranked, rec.positive_index))
        selected.append(tokenize(rec.candidates[ranked[0]]))
        references.append(tokenize(rec.candidates[rec.positive_index]))
        per_dialogue.append({
            "dialogue_id": rec.dialogue_id,
            "ranked_indices": list(ranked),
            "scores": line.get("scores"),
            "positive_index": rec.positive_index,
        })

    lm = train_lm([tokenize(rec.candidates[rec.positive_index])
                   for rec in records], alpha=args.alpha)
    report = evaluate(examples, selected, references, lm, ks)

    pool = len(records[0].candidates)
    config = {
        "dataset": str(args.dataset),
        "format": args.format,
        "rankings": str(args.rankings),
        "ks": ks,
        "lm_alpha": args.alpha,
        "pool_size": pool,
    }
    payload = report_mod.report_payload(report, config, per_dialogue)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report_mod.write_report_json(payload, out)
    md_path = out.with_suffix(".md")
    md_path.write_text(report_mod.render_markdown(report, pool), encoding="utf-8")
    csv_path = out.with_suffix(".csv")
    report_mod.write_report_csv(report, csv_path)
    fig_dir = Path(args.figures_dir) if args.figures_dir else out.parent / "figures"
    report_mod.render_figures(report, fig_dir)
    return EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("jsonl", "ubuntu-csv"), default="jsonl")
    p.add_argument("--emb", default=None,
                   help="external embedding table (MVEC or JSONL)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the hashed contextual provider")
    p.add_argument("--v1", type=int, default=DEFAULT_CONTEXTUAL_DIM,
                   help="hashed contextual dimension")
    p.add_argument("--v2", type=int, default=DEFAULT_POSITIONAL_DIM,
                   help="positional dimension")
    p.add_argument("--k", type=int, default=DEFAULT_K,
                   help="latent dimension (capped at min view dim)")
    p.add_argument("--intents", type=int, default=5,
                   help="intent columns kept per turn pair")
    p.add_argument("--tau", type=float, default=0.95,
                   help="discourse-token dedup cosine threshold")
    p.add_argument("--ridge", default="auto",
                   help="ridge value, or 'auto' for the scaled default")
    p.add_argument("--aggregation", choices=("mean", "max"), default="mean")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mvrank",
                     description="Discourse-aware response ranking via "
                                 "multiview CCA")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    defaults = SynthConfig()
    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--dialogues", type=int, default=defaults.n_dialogues)
    p.add_argument("--topics", type=int, default=defaults.n_topics)
    p.add_argument("--vocab", type=int, default=defaults.vocab_per_topic)
    p.add_argument("--candidates", type=int, default=defaults.candidates_per_record)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="write per-token representations as MVEC")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("rank", help="rank candidate responses per record")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reps", default=None,
                   help="reuse cached MVEC representations from 'encode'")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="score rankings and write the report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("jsonl", "ubuntu-csv"), default="jsonl")
    p.add_argument("--rankings", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--k-list", default="1,2,5", help="comma-separated recall cutoffs")
    p.add_argument("--alpha", type=float, default=1.0, help="LM smoothing")
    p.add_argument("--figures-dir", default=None)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except MissingEmbeddingError as exc:
        print(f"mvrank: {exc}", file=sys.stderr)
        return EXIT_MISSING_EMBEDDING
    except (DataError, DiscourseError, MetricError, RankingError, ViewError,
            OSError, ValueError) as exc:
        print(f"mvrank: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
