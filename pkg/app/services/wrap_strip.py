import logging
import re
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

import yaml

from app.errors import ConfigError, EmptyInput, EmptySentence
from app.models import (
    PrefixTemplateSet,
    StripMethod,
    StripOutcome,
    StripRuleSet,
    WrappedSentence,
)

# Set up logging
logger = logging.getLogger(__name__)

RULES_DIR = Path(__file__).resolve().parent.parent / "data" / "strip_rules"

_TRAILING_PUNCTUATION = ".!?…"


def wrap(sentence: str, prefix: str, separator: str = " ") -> WrappedSentence:
    """Prepend a hint prefix to a source sentence"""
    if not sentence or not sentence.strip():
        raise EmptySentence("Cannot wrap an empty sentence")
    if not prefix:
        return WrappedSentence(original=sentence, prefix="", wrapped=sentence)
    return WrappedSentence(original=sentence, prefix=prefix, wrapped=f"{prefix}{separator}{sentence}")


def strip(raw_translation: str, rules: StripRuleSet) -> StripOutcome:
    """Remove the translated hint clause from the start of a translation.

    Exact target-side patterns are tried first (longest first), then the
    delimiter heuristic. Failure is reported as Unstripped, never raised.
    """
    unstripped = StripOutcome(stripped=raw_translation, method=StripMethod.UNSTRIPPED)
    text = raw_translation.lstrip()
    if not text:
        return unstripped

    for pattern in sorted(rules.exact_patterns, key=len, reverse=True):
        if pattern and text.startswith(pattern):
            remainder = _trim_quotes(text[len(pattern):].lstrip(), rules)
            if remainder:
                return StripOutcome(
                    stripped=remainder,
                    method=StripMethod.EXACT_PATTERN,
                    matched_pattern=pattern,
                )

    match = _find_delimiter(text, rules)
    if match is not None:
        end = match.end()
        # 1-based index of the whitespace token holding the delimiter
        token_index = len(text[:end].split())
        if token_index <= rules.max_prefix_tokens:
            remainder = _trim_quotes(text[end:].lstrip(), rules)
            if remainder:
                return StripOutcome(stripped=remainder, method=StripMethod.DELIMITER_HEURISTIC)

    logger.debug(f"No parataxis prefix found in translation: {raw_translation[:60]!r}")
    return unstripped


def _find_delimiter(text: str, rules: StripRuleSet) -> Optional[re.Match]:
    """First delimiter that closes a whitespace token (a quote may follow it).

    A word delimiter such as ``that`` must be the whole token, so ``thatched``
    or ``10:30`` never count.
    """
    delimiter = re.escape(rules.delimiter)
    if any(c.isalnum() for c in rules.delimiter):
        delimiter = rf"(?<!\S){delimiter}"
    return re.search(rf"{delimiter}(?=[\s{re.escape(rules.quote_chars)}]|$)", text)


def _trim_quotes(text: str, rules: StripRuleSet) -> str:
    """Drop a quote pair around the reported clause; a lone opening quote stays"""
    if not rules.trim_quotes or not text or text[0] not in rules.quote_chars:
        return text
    inner = text[1:]
    body = inner.rstrip(_TRAILING_PUNCTUATION)
    if not body or body[-1] not in rules.quote_chars:
        return text
    return (body[:-1] + inner[len(body):]).strip()


def strip_rate(outcomes: Iterable[StripOutcome]) -> float:
    """Fraction of outcomes whose prefix was removed, rounded to 4 places"""
    outcomes = list(outcomes)
    if not outcomes:
        raise EmptyInput("strip_rate needs at least one outcome")
    stripped = sum(1 for outcome in outcomes if outcome.succeeded)
    return round(float(Fraction(stripped, len(outcomes))), 4)


def not_applicable(raw_translation: str) -> StripOutcome:
    """Outcome for baseline records, which carry no injected clause"""
    return StripOutcome(stripped=raw_translation, method=StripMethod.NOT_APPLICABLE)


def rules_from_templates(templates: PrefixTemplateSet) -> StripRuleSet:
    """Rule set for an identity backend: the source prefixes come back verbatim"""
    return StripRuleSet(
        target_language=templates.source_language,
        exact_patterns=[text for text in templates.entries.values() if text],
        delimiter=templates.delimiter,
    )


def load_strip_rules(path: Union[str, Path]) -> StripRuleSet:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read strip rule file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Strip rule file {path} is not valid YAML: {e}") from e

    try:
        rules = StripRuleSet(**raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid strip rule file {path}: {e}") from e
    logger.info(f"Loaded {len(rules.exact_patterns)} strip patterns for {rules.target_language} from {path}")
    return rules


def default_strip_rules(target_language: str) -> Optional[StripRuleSet]:
    """Shipped rules for a target language, if any"""
    path = RULES_DIR / f"{target_language}.yaml"
    if not path.exists():
        return None
    return load_strip_rules(path)


def rules_for_language(target_language: str, rules_dir: Optional[Union[str, Path]] = None) -> StripRuleSet:
    """Per-language rules from a directory or the shipped set; delimiter-only fallback"""
    if rules_dir:
        path = Path(rules_dir) / f"{target_language}.yaml"
        if path.exists():
            return load_strip_rules(path)
    rules = default_strip_rules(target_language)
    if rules is None:
        logger.debug(f"No strip patterns for {target_language}; using the delimiter heuristic only")
        rules = StripRuleSet(target_language=target_language)
    return rules
