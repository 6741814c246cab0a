import json

import pytest

from app.cli import format_report, main
from tests.test_pipeline import write_experiment


class TestGrid:
    def test_table1_grid(self, capsys):
        assert main(["grid"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 11
        assert lines[0] == "baseline\tBaseline\t"
        assert lines[-1] == "she+them\tShe/them\tShe said to them:"

    def test_full_grid(self, capsys):
        assert main(["grid", "--full-grid"]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 13

    def test_unknown_condition_is_a_config_error(self):
        assert main(["grid", "--condition", "they+him"]) == 2


class TestExperimentCommands:
    """Exit codes and printed reports of translate/score/report"""

    def test_translate_prints_report(self, tmp_path, capsys):
        config = write_experiment(
            tmp_path, annotations=[{"label": "reported", "values": {"bleu": 19.2}, "note": "single run"}]
        )
        assert main(["translate", "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "She/them" in out
        assert "100.00" in out
        assert "[published] reported: bleu=19.2  (single run)" in out

    def test_score_and_report_reuse_archive(self, tmp_path, capsys):
        config = write_experiment(tmp_path)
        assert main(["translate", "--config", str(config)]) == 0
        first = capsys.readouterr().out
        assert main(["score", "--config", str(config)]) == 0
        assert capsys.readouterr().out == first
        assert main(["report", "--out", str(tmp_path / "out")]) == 0
        assert capsys.readouterr().out == first

    def test_missing_report_is_a_data_error(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == 3

    def test_corpus_mismatch_is_a_data_error(self, tmp_path):
        config = write_experiment(tmp_path, references=["only one line"])
        assert main(["translate", "--config", str(config)]) == 3

    def test_missing_fixture_is_a_backend_error(self, tmp_path):
        config = write_experiment(tmp_path)
        assert main(["translate", "--config", str(config), "--condition", "i"]) == 4

    def test_unknown_backend_is_a_config_error(self, tmp_path):
        config = write_experiment(tmp_path)
        assert main(["translate", "--config", str(config), "--backend", "nope"]) == 2

    def test_lowercase_flag_reaches_metadata(self, tmp_path):
        config = write_experiment(tmp_path)
        assert main(["translate", "--config", str(config), "--lc"]) == 0
        report = json.loads((tmp_path / "out" / "condition_report.json").read_text(encoding="utf-8"))
        assert report["metadata"]["lowercase"] is True

    def test_drop_unstripped_when_nothing_strips(self, tmp_path, capsys):
        (tmp_path / "rules.yaml").write_text('target_language: he\ndelimiter: "§"\n', encoding="utf-8")
        config = write_experiment(tmp_path, strip_rules="rules.yaml")
        assert main(["translate", "--config", str(config), "--drop-unstripped"]) == 0
        lines = capsys.readouterr().out.splitlines()
        he_row = next(line for line in lines if line.startswith("He "))
        assert he_row.split() == ["He", "-", "-", "-", "-", "0.0000"]
        report = json.loads((tmp_path / "out" / "condition_report.json").read_text(encoding="utf-8"))
        assert [row["condition"] for row in report["rows"]] == ["baseline", "he", "she+them"]
        assert report["rows"][1]["bleu"] is None
        assert report["rows"][1]["unstripped"] == 2


def test_probe_command(tmp_path, capsys):
    assert main(["probe", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "cs\tHe->Feminine\tShe->Feminine\tFAIL" in out
    assert out.rstrip().endswith("6/10 languages")


def test_audit_without_files_is_a_data_error(tmp_path):
    assert main(["audit", "--conllu-dir", str(tmp_path), "--reference", str(tmp_path / "ref.conllu"),
                 "--out", str(tmp_path / "out")]) == 3


def test_audit_with_missing_reference_is_a_data_error(tmp_path):
    (tmp_path / "he.conllu").write_text("1\tאני\t_\tPRON\t_\t_\t0\troot\t_\t_\n\n", encoding="utf-8")
    assert main(["audit", "--conllu-dir", str(tmp_path), "--reference", str(tmp_path / "ref.conllu"),
                 "--out", str(tmp_path / "out")]) == 3


def test_format_report_marks_missing_strip_rate():
    data = {
        "rows": [{"condition": "baseline", "bleu": 12.5, "delta_vs_baseline": 0.0, "bp": 1.0,
                  "len_ratio": 1.02, "strip_rate": None}],
    }
    lines = format_report(data).splitlines()
    assert lines[1].startswith("Baseline")
    assert lines[1].endswith("-")


@pytest.mark.parametrize("argv", [[], ["translate"]])
def test_usage_errors_exit(argv):
    with pytest.raises(SystemExit):
        main(argv)
