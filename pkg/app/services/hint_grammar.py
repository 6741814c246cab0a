import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import yaml

from app.errors import ConfigError, MalformedLabel, UnknownCondition
from app.models import (
    AUDIENCE_TOKENS,
    BASELINE_LABEL,
    SPEAKER_TOKENS,
    HintCondition,
    PrefixTemplateSet,
)

# Set up logging
logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_TEMPLATES = DATA_DIR / "templates" / "en.yaml"

# Row order of the published comparison table; I/him and I/her are absent there
TABLE1_LABELS = (
    "he", "he+him", "he+her", "he+them",
    "i", "i+them",
    "she", "she+him", "she+her", "she+them",
)
FULL_GRID_LABELS = tuple(
    speaker if audience is None else f"{speaker}+{audience}"
    for speaker in ("he", "i", "she")
    for audience in (None, "him", "her", "them")
)

BASELINE = HintCondition(prefixed=False)


def parse_condition_label(label: str) -> HintCondition:
    """Parse `<speaker>[+<audience>]` (or "baseline") into a HintCondition"""
    text = label.strip().lower()
    if text == BASELINE_LABEL:
        return BASELINE

    speaker_token, plus, audience_token = text.partition("+")
    if speaker_token not in SPEAKER_TOKENS:
        raise MalformedLabel(label, speaker_token)
    if plus and audience_token not in AUDIENCE_TOKENS:
        raise MalformedLabel(label, audience_token)

    if not plus:
        return HintCondition(speaker=SPEAKER_TOKENS[speaker_token])
    gender, number = AUDIENCE_TOKENS[audience_token]
    return HintCondition(
        speaker=SPEAKER_TOKENS[speaker_token],
        audience_gender=gender,
        audience_number=number,
    )


def render_prefix(condition: HintCondition, templates: PrefixTemplateSet) -> str:
    """Return the template text for a condition verbatim ("" for the baseline)"""
    try:
        return templates.entries[condition.label]
    except KeyError:
        raise UnknownCondition(condition.label, list(templates.entries)) from None


def enumerate_grid(templates: PrefixTemplateSet, full_grid: bool = False) -> List[HintCondition]:
    """Baseline followed by the grid conditions the template set defines, in table order"""
    labels = FULL_GRID_LABELS if full_grid else TABLE1_LABELS
    grid = [BASELINE]
    grid.extend(parse_condition_label(label) for label in labels if label in templates.entries)
    return grid


def resolve_conditions(
    selection: Union[str, Sequence[str], None],
    templates: PrefixTemplateSet,
) -> List[HintCondition]:
    """Turn "table1", "full-grid" or explicit labels into an ordered condition list.

    The baseline is always included first since every report is relative to it.
    """
    if selection is None or selection == "table1":
        return enumerate_grid(templates)
    if selection == "full-grid":
        return enumerate_grid(templates, full_grid=True)
    if isinstance(selection, str):
        selection = [selection]

    conditions = [BASELINE]
    for label in selection:
        condition = parse_condition_label(label)
        if condition.label not in templates.entries:
            raise UnknownCondition(condition.label, list(templates.entries))
        if condition not in conditions:
            conditions.append(condition)
    return conditions


def grid_position(label: str) -> int:
    """Sort key placing labels in full-grid order, baseline first"""
    if label == BASELINE_LABEL:
        return -1
    try:
        return FULL_GRID_LABELS.index(label)
    except ValueError:
        return len(FULL_GRID_LABELS)


def load_template_set(path: Optional[Union[str, Path]] = None) -> PrefixTemplateSet:
    """Load a template document (source_language, separator, delimiter, prefixes)"""
    path = Path(path) if path else DEFAULT_TEMPLATES
    logger.debug(f"Loading prefix templates from {path}")
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read template file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Template file {path} is not valid YAML: {e}") from e

    prefixes = raw.get("prefixes") or {}
    entries = {}
    for label, text in prefixes.items():
        # keys must follow the label grammar
        condition = parse_condition_label(str(label))
        entries[condition.label] = "" if text is None else str(text)

    try:
        templates = PrefixTemplateSet(
            source_language=raw.get("source_language", "en"),
            entries=entries,
            separator=raw.get("separator", " "),
            delimiter=raw.get("delimiter", ":"),
        )
    except ValueError as e:
        raise ConfigError(f"Invalid template file {path}: {e}") from e

    logger.info(f"Loaded {len(templates.entries)} prefix templates ({templates.source_language}) from {path}")
    return templates


def default_template_set() -> PrefixTemplateSet:
    return load_template_set(DEFAULT_TEMPLATES)
