import json

import numpy as np
import pytest

from mvrank.cli import (
    EXIT_DATA,
    EXIT_MISSING_EMBEDDING,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from mvrank.dataio import load_jsonl, read_mvec, write_mvec


@pytest.fixture
def small_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    assert main(["synth", "--seed", "7", "--dialogues", "6", "--out", str(path)]) == EXIT_OK
    return path


class TestSynth:
    def test_writes_requested_dialogues(self, tmp_path):
        out = tmp_path / "c.jsonl"
        assert main(["synth", "--seed", "42", "--dialogues", "50",
                     "--out", str(out)]) == EXIT_OK
        assert len(out.read_text().splitlines()) == 50

    def test_missing_out_is_usage_error(self):
        assert main(["synth", "--seed", "1"]) == EXIT_USAGE

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["synth", "--seed", "5", "--dialogues", "10",
                         "--out", str(out)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestRank:
    def test_rankings_are_permutations(self, tmp_path, small_corpus):
        out = tmp_path / "rankings.jsonl"
        assert main(["rank", "--dataset", str(small_corpus), "--out", str(out)]) == EXIT_OK
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        records = load_jsonl(small_corpus)
        assert len(lines) == len(records)
        for line, rec in zip(lines, records):
            assert sorted(line["ranked_indices"]) == list(range(len(rec.candidates)))
            assert len(line["scores"]) == len(rec.candidates)

    def test_missing_embedding_file(self, tmp_path, small_corpus):
        out = tmp_path / "r.jsonl"
        code = main(["rank", "--dataset", str(small_corpus), "--out", str(out),
                     "--emb", str(tmp_path / "nope.mvec")])
        assert code == EXIT_DATA

    def test_incomplete_embedding_table(self, tmp_path, small_corpus):
        emb = tmp_path / "partial.mvec"
        write_mvec({"synth-0:0:0": np.ones(16)}, emb)
        out = tmp_path / "r.jsonl"
        code = main(["rank", "--dataset", str(small_corpus), "--out", str(out),
                     "--emb", str(emb)])
        assert code == EXIT_MISSING_EMBEDDING

    def test_byte_identical_reruns(self, tmp_path, small_corpus):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["rank", "--dataset", str(small_corpus),
                         "--out", str(out), "--seed", "3"]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestEncode:
    def test_mvec_dim_is_k(self, tmp_path, small_corpus):
        out = tmp_path / "reps.mvec"
        assert main(["encode", "--dataset", str(small_corpus),
                     "--out", str(out)]) == EXIT_OK
        table = read_mvec(out)
        assert all(v.shape == (17,) for v in table.values())

    def test_cached_reps_reproduce_rankings(self, tmp_path, small_corpus):
        reps = tmp_path / "reps.mvec"
        direct = tmp_path / "direct.jsonl"
        cached = tmp_path / "cached.jsonl"
        assert main(["encode", "--dataset", str(small_corpus),
                     "--out", str(reps)]) == EXIT_OK
        assert main(["rank", "--dataset", str(small_corpus),
                     "--out", str(direct)]) == EXIT_OK
        assert main(["rank", "--dataset", str(small_corpus),
                     "--out", str(cached), "--reps", str(reps)]) == EXIT_OK
        a = [json.loads(l)["ranked_indices"] for l in direct.read_text().splitlines()]
        b = [json.loads(l)["ranked_indices"] for l in cached.read_text().splitlines()]
        assert a == b

    def test_empty_dataset(self, tmp_path):
        corpus = tmp_path / "empty.jsonl"
        corpus.write_text("")
        out = tmp_path / "reps.mvec"
        assert main(["encode", "--dataset", str(corpus), "--out", str(out)]) == EXIT_OK
        assert read_mvec(out) == {}


class TestEval:
    def _rank(self, tmp_path, corpus):
        rankings = tmp_path / "rankings.jsonl"
        assert main(["rank", "--dataset", str(corpus), "--out", str(rankings)]) == EXIT_OK
        return rankings

    def test_report_written_with_all_surfaces(self, tmp_path, small_corpus):
        rankings = self._rank(tmp_path, small_corpus)
        report = tmp_path / "report.json"
        assert main(["eval", "--dataset", str(small_corpus),
                     "--rankings", str(rankings), "--out", str(report)]) == EXIT_OK
        payload = json.loads(report.read_text())
        for field in ("config", "recall", "bleu", "rouge1_f", "rougeL_f",
                      "distinct1", "distinct2", "perplexity", "n_examples",
                      "per_dialogue"):
            assert field in payload
        assert set(payload["recall"]) == {"1", "2", "5"}
        md = (tmp_path / "report.md").read_text()
        assert "Recall@1" in md and "Recall@5" in md
        assert (tmp_path / "report.csv").exists()
        figures = tmp_path / "figures"
        assert (figures / "recall_at_k.png").exists()
        assert (figures / "text_quality.png").exists()

    def test_perfect_oracle_rankings(self, tmp_path, small_corpus):
        records = load_jsonl(small_corpus)
        rankings = tmp_path / "oracle.jsonl"
        with open(rankings, "w") as fh:
            for rec in records:
                order = [rec.positive_index] + [
                    i for i in range(len(rec.candidates)) if i != rec.positive_index
                ]
                fh.write(json.dumps({"dialogue_id": rec.dialogue_id,
                                     "ranked_indices": order,
                                     "scores": list(range(len(order), 0, -1))}) + "\n")
        report = tmp_path / "report.json"
        assert main(["eval", "--dataset", str(small_corpus),
                     "--rankings", str(rankings), "--out", str(report)]) == EXIT_OK
        payload = json.loads(report.read_text())
        assert all(v == 1.0 for v in payload["recall"].values())
        assert payload["bleu"] == pytest.approx(1.0, abs=1e-9)

    def test_mismatched_rankings(self, tmp_path, small_corpus):
        rankings = tmp_path / "short.jsonl"
        rankings.write_text('{"dialogue_id": "synth-0", "ranked_indices": []}\n')
        report = tmp_path / "report.json"
        assert main(["eval", "--dataset", str(small_corpus),
                     "--rankings", str(rankings), "--out", str(report)]) == EXIT_DATA

    def test_markdown_has_requested_k_columns(self, tmp_path, small_corpus):
        rankings = self._rank(tmp_path, small_corpus)
        report = tmp_path / "report.json"
        assert main(["eval", "--dataset", str(small_corpus),
                     "--rankings", str(rankings), "--out", str(report),
                     "--k-list", "1,3,7"]) == EXIT_OK
        md = (tmp_path / "report.md").read_text()
        for k in (1, 3, 7):
            assert f"Recall@{k}" in md

    def test_byte_identical_reruns(self, tmp_path, small_corpus):
        rankings = self._rank(tmp_path, small_corpus)
        outputs = []
        for name in ("r1", "r2"):
            d = tmp_path / name
            d.mkdir()
            report = d / "report.json"
            assert main(["eval", "--dataset", str(small_corpus),
                         "--rankings", str(rankings), "--out", str(report)]) == EXIT_OK
            outputs.append(d)
        for fname in ("report.json", "report.md", "report.csv",
                      "figures/recall_at_k.png", "figures/text_quality.png"):
            assert (outputs[0] / fname).read_bytes() == (outputs[1] / fname).read_bytes()


class TestUsage:
    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_missing_dataset_file(self, tmp_path):
        out = tmp_path / "r.jsonl"
        assert main(["rank", "--dataset", str(tmp_path / "none.jsonl"),
                     "--out", str(out)]) == EXIT_DATA
