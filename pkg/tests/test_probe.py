import json
from unittest.mock import Mock

import pytest

from app.errors import ConfigError, EmptyInput, MissingFixture
from app.models import BackendKind, BackendSpec, ProbeCase, ProbeDetection
from app.pipeline import default_probe_backend, run_probe
from app.services.hint_grammar import default_template_set
from app.services.probe import (
    PROBE_COLUMNS,
    detect_form,
    load_probe_cases,
    probe_summary,
    run_gender_probe,
)


class TestDetectForm:
    def setup_method(self):
        self.case = ProbeCase(language="ca", source="I am rich", masculine_form="ric", feminine_form="rica")

    def test_whole_word_only(self):
        assert detect_form("sóc rica", self.case) == ProbeDetection.FEMININE
        assert detect_form("sóc ric.", self.case) == ProbeDetection.MASCULINE

    def test_neither_when_absent_or_both(self):
        assert detect_form("sóc pobre", self.case) == ProbeDetection.NEITHER
        assert detect_form("ric o rica", self.case) == ProbeDetection.NEITHER

    def test_case_insensitive(self):
        assert detect_form("Ric", self.case) == ProbeDetection.MASCULINE

    def test_hebrew_suffix_is_a_different_word(self):
        case = ProbeCase(language="he", source="I am nice", masculine_form="נחמד", feminine_form="נחמדה")
        assert detect_form("אני נחמדה", case) == ProbeDetection.FEMININE

    def test_forms_must_differ(self):
        with pytest.raises(ValueError):
            ProbeCase(language="fr", source="I am", masculine_form="x", feminine_form="X")


class TestLoadProbeCases:
    def test_shipped_cases(self):
        cases = load_probe_cases()
        assert [c.language for c in cases] == ["he", "es", "pt", "fr", "it", "ru", "cs", "ro", "ca", "pl"]

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "cases.tsv"
        path.write_text("# header\nfr\tI am patient\tpatient\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="line 2"):
            load_probe_cases(path)


class TestGenderProbe:
    """Test cases for the multi-language He/She probe"""

    def test_published_translations(self):
        result = run_gender_probe(load_probe_cases(), default_probe_backend(), default_template_set(), sleep=Mock())
        assert result.successes == 6
        assert result.summary == pytest.approx(0.6)
        summary = probe_summary(result)
        assert summary["failed_languages"] == ["pt", "ru", "cs", "ca"]

    def test_feminine_under_both_prefixes_fails(self):
        result = run_gender_probe(load_probe_cases(), default_probe_backend(), default_template_set(), sleep=Mock())
        czech = next(item for item in result.cases if item.case.language == "cs")
        assert czech.he_translation == "Dala jsem jí květinu"
        assert czech.he_detected == ProbeDetection.FEMININE
        assert not czech.success

    def test_empty_cases(self):
        with pytest.raises(EmptyInput):
            run_gender_probe([], default_probe_backend(), default_template_set())

    def test_missing_row_names_case_and_prefix(self, tmp_path):
        (tmp_path / "fr.tsv").write_text("He said: I am patient\tIl a dit : je suis patient\n", encoding="utf-8")
        spec = BackendSpec(name="t", kind=BackendKind.TABLE, source_lang="en", target_lang="en",
                           fixture=str(tmp_path / "{target_lang}.tsv"))
        case = ProbeCase(language="fr", source="I am patient", masculine_form="patient", feminine_form="patiente")
        with pytest.raises(MissingFixture) as exc_info:
            run_gender_probe([case], spec, default_template_set(), sleep=Mock())
        assert exc_info.value.sentence_index == 0
        assert exc_info.value.condition_label == "she"


def test_run_probe_writes_outputs(tmp_path):
    result = run_probe(tmp_path / "out", sleep=Mock())
    rows = (tmp_path / "out" / "probe_results.csv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == ",".join(PROBE_COLUMNS)
    assert len(rows) == 11
    summary = json.loads((tmp_path / "out" / "probe_summary.json").read_text(encoding="utf-8"))
    assert summary["successes"] == result.successes == 6
    assert summary["cases"] == 10
