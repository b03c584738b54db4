import json

import numpy as np
import pytest

from mvec_export.export import (
    ExportError,
    ExportJob,
    export_embeddings,
    load_dataset,
    required_keys,
    verify_mvec,
)
from mvec_export.mvecio import MvecFormatError, read_mvec, write_mvec


class TestExport:
    def test_counting_contract(self, tmp_path, tiny_model_dir, toy_dataset):
        out = tmp_path / "emb.mvec"
        summary = export_embeddings(
            ExportJob(dataset=str(toy_dataset), model=tiny_model_dir, out=str(out))
        )
        needed = required_keys(load_dataset(toy_dataset))
        assert summary.n_keys == len(needed)
        table = read_mvec(out)
        assert set(table) == set(needed)
        assert summary.dim == 32
        assert all(v.shape == (32,) for v in table.values())

    def test_rerun_bitwise_identical(self, tmp_path, tiny_model_dir, toy_dataset):
        a, b = tmp_path / "a.mvec", tmp_path / "b.mvec"
        for out in (a, b):
            export_embeddings(
                ExportJob(dataset=str(toy_dataset), model=tiny_model_dir, out=str(out))
            )
        assert a.read_bytes() == b.read_bytes()

    def test_truncation_warns_and_falls_back(self, tmp_path, tiny_model_dir, caplog):
        long_utt = " ".join(["reboot"] * 40)
        dataset = tmp_path / "long.jsonl"
        dataset.write_text(json.dumps({
            "dialogue_id": "d0", "context": [long_utt],
            "candidates": ["it works", "it failed"], "positive_index": 0,
        }) + "\n")
        out = tmp_path / "emb.mvec"
        with caplog.at_level("WARNING", logger="mvec_export"):
            summary = export_embeddings(ExportJob(
                dataset=str(dataset), model=tiny_model_dir,
                out=str(out), max_length=16,
            ))
        assert summary.n_truncated_utterances == 1
        assert summary.n_fallback_tokens > 0
        assert any("truncated" in r.message for r in caplog.records)
        # every key still present despite truncation
        assert summary.n_keys == len(required_keys(load_dataset(dataset)))

    def test_manifest_records_model(self, tmp_path, tiny_model_dir, toy_dataset):
        out = tmp_path / "emb.mvec"
        export_embeddings(
            ExportJob(dataset=str(toy_dataset), model=tiny_model_dir, out=str(out))
        )
        manifest = json.loads((tmp_path / "emb.mvec.manifest.json").read_text())
        assert manifest["model"] == tiny_model_dir
        assert manifest["layer"] == -1
        assert manifest["dim"] == 32

    def test_layer_selection_changes_output(self, tmp_path, tiny_model_dir, toy_dataset):
        last = tmp_path / "last.mvec"
        first = tmp_path / "first.mvec"
        export_embeddings(ExportJob(dataset=str(toy_dataset),
                                    model=tiny_model_dir, out=str(last)))
        export_embeddings(ExportJob(dataset=str(toy_dataset),
                                    model=tiny_model_dir, out=str(first), layer=0))
        assert last.read_bytes() != first.read_bytes()

    def test_bad_dataset_line(self, tmp_path, tiny_model_dir):
        dataset = tmp_path / "bad.jsonl"
        dataset.write_text('{"dialogue_id": "d0"}\n')
        with pytest.raises(ExportError):
            export_embeddings(ExportJob(dataset=str(dataset),
                                        model=tiny_model_dir,
                                        out=str(tmp_path / "x.mvec")))


class TestVerify:
    def _export(self, tmp_path, model, dataset):
        out = tmp_path / "emb.mvec"
        export_embeddings(ExportJob(dataset=str(dataset), model=model, out=str(out)))
        return out

    def test_complete_export_ok(self, tmp_path, tiny_model_dir, toy_dataset):
        out = self._export(tmp_path, tiny_model_dir, toy_dataset)
        report = verify_mvec(out, toy_dataset)
        assert report["ok"] and report["n_missing"] == 0

    def test_deleted_entry_reported(self, tmp_path, tiny_model_dir, toy_dataset):
        out = self._export(tmp_path, tiny_model_dir, toy_dataset)
        table = read_mvec(out)
        victim = sorted(table)[0]
        del table[victim]
        write_mvec(table, out)
        report = verify_mvec(out, toy_dataset)
        assert report["missing"] == [victim]
        assert not report["ok"]

    def test_corrupt_magic_surfaces_format_error(self, tmp_path, toy_dataset):
        bad = tmp_path / "bad.mvec"
        bad.write_bytes(b"NOPE" + b"\x00" * 12)
        with pytest.raises(MvecFormatError):
            verify_mvec(bad, toy_dataset)
