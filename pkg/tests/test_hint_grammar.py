import pytest

from app.errors import ConfigError, MalformedLabel, UnknownCondition
from app.models import GenderSpec, HintCondition, NumberSpec, PrefixTemplateSet
from app.services.hint_grammar import (
    DATA_DIR,
    FULL_GRID_LABELS,
    TABLE1_LABELS,
    default_template_set,
    enumerate_grid,
    grid_position,
    load_template_set,
    parse_condition_label,
    render_prefix,
    resolve_conditions,
)


class TestConditionLabels:
    """Test cases for the condition label grammar"""

    def test_parse_speaker_and_audience(self):
        condition = parse_condition_label("she+them")
        assert condition.speaker == GenderSpec.FEMININE
        assert condition.audience_gender == GenderSpec.UNSPECIFIED
        assert condition.audience_number == NumberSpec.PLURAL
        assert condition.label == "she+them"

    def test_parse_is_case_insensitive(self):
        assert parse_condition_label(" He+Her ").label == "he+her"

    def test_i_and_baseline_are_distinct(self):
        i = parse_condition_label("i")
        baseline = parse_condition_label("baseline")
        assert i.speaker == baseline.speaker == GenderSpec.UNSPECIFIED
        assert i != baseline
        assert baseline.is_baseline and not i.is_baseline

    @pytest.mark.parametrize("label", ["baseline", *FULL_GRID_LABELS])
    def test_labels_round_trip(self, label):
        assert parse_condition_label(label).label == label

    def test_malformed_speaker(self):
        with pytest.raises(MalformedLabel) as exc_info:
            parse_condition_label("they+him")
        assert exc_info.value.token == "they"

    def test_malformed_audience(self):
        with pytest.raises(MalformedLabel, match="bad token 'us'"):
            parse_condition_label("she+us")

    def test_plural_audience_has_no_gender(self):
        with pytest.raises(ValueError):
            HintCondition(
                speaker=GenderSpec.FEMININE,
                audience_gender=GenderSpec.FEMININE,
                audience_number=NumberSpec.PLURAL,
            )

    def test_baseline_cannot_specify_speaker(self):
        with pytest.raises(ValueError):
            HintCondition(speaker=GenderSpec.MASCULINE, prefixed=False)

    def test_display_names(self):
        assert parse_condition_label("she+them").display_name == "She/them"
        assert parse_condition_label("i").display_name == "I/–"
        assert parse_condition_label("baseline").display_name == "Baseline"


class TestTemplates:
    """Test cases for prefix rendering and grid enumeration"""

    def setup_method(self):
        self.templates = default_template_set()

    def test_render_prefix_verbatim(self):
        assert render_prefix(parse_condition_label("she+him"), self.templates) == "She said to him:"
        assert render_prefix(parse_condition_label("baseline"), self.templates) == ""

    def test_render_unknown_condition(self):
        templates = PrefixTemplateSet(source_language="en", entries={"he": "He said:"})
        with pytest.raises(UnknownCondition):
            render_prefix(parse_condition_label("she"), templates)

    def test_table1_grid_order(self):
        grid = enumerate_grid(self.templates)
        assert [c.label for c in grid] == ["baseline", *TABLE1_LABELS]
        assert len(grid) == 11

    def test_full_grid(self):
        grid = enumerate_grid(self.templates, full_grid=True)
        assert len(grid) == 13
        assert [c.label for c in grid][5:9] == ["i", "i+him", "i+her", "i+them"]

    def test_grid_skips_labels_missing_from_templates(self):
        templates = PrefixTemplateSet(source_language="en", entries={"she": "She said:", "he": "He said:"})
        assert [c.label for c in enumerate_grid(templates)] == ["baseline", "he", "she"]

    def test_prefix_must_end_with_delimiter(self):
        with pytest.raises(ValueError, match="delimiter"):
            PrefixTemplateSet(source_language="en", entries={"she": "She said"})

    def test_baseline_added_to_entries(self):
        templates = PrefixTemplateSet(source_language="en", entries={"she": "She said:"})
        assert templates.entries["baseline"] == ""

    def test_resolve_explicit_labels_puts_baseline_first(self):
        conditions = resolve_conditions(["she+them", "he"], self.templates)
        assert [c.label for c in conditions] == ["baseline", "she+them", "he"]

    def test_resolve_unknown_label(self):
        templates = load_template_set(DATA_DIR / "templates" / "en_told.yaml")
        with pytest.raises(UnknownCondition):
            resolve_conditions(["i+him"], templates)

    def test_grid_position_orders_baseline_first(self):
        labels = ["she", "baseline", "he+them", "i"]
        assert sorted(labels, key=grid_position) == ["baseline", "he+them", "i", "she"]

    def test_told_variant_uses_its_own_delimiter(self):
        templates = load_template_set(DATA_DIR / "templates" / "en_told.yaml")
        assert templates.delimiter == "that"
        assert render_prefix(parse_condition_label("she+them"), templates) == "She told them that"

    def test_load_rejects_bad_label_keys(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text('prefixes:\n  we: "We said:"\n', encoding="utf-8")
        with pytest.raises(MalformedLabel):
            load_template_set(path)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="Cannot read"):
            load_template_set(tmp_path / "missing.yaml")
