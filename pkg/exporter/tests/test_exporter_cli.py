import json

from mvec_export.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main


class TestCli:
    def test_export_then_verify(self, tmp_path, tiny_model_dir, toy_dataset, capsys):
        out = tmp_path / "emb.mvec"
        assert main(["export", "--dataset", str(toy_dataset),
                     "--model", tiny_model_dir, "--out", str(out)]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["n_keys"] > 0 and summary["dim"] == 32
        assert main(["verify", "--mvec", str(out),
                     "--dataset", str(toy_dataset)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["ok"]

    def test_missing_dataset_is_data_error(self, tmp_path, tiny_model_dir):
        code = main(["export", "--dataset", str(tmp_path / "none.jsonl"),
                     "--model", tiny_model_dir,
                     "--out", str(tmp_path / "x.mvec")])
        assert code == EXIT_DATA

    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_missing_required_flag_is_usage_error(self):
        assert main(["export", "--dataset", "x"]) == EXIT_USAGE
