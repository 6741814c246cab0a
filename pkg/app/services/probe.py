import csv
import logging
import re
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

from app.errors import BackendError, ConfigError, EmptyInput
from app.models import (
    BackendSpec,
    PrefixTemplateSet,
    ProbeCase,
    ProbeCaseResult,
    ProbeDetection,
    ProbeResult,
    StripRuleSet,
)
from app.services.hint_grammar import parse_condition_label, render_prefix
from app.services.translation import TranslationBackend, get_backend, translate_one
from app.services.wrap_strip import rules_for_language, strip, wrap

# Set up logging
logger = logging.getLogger(__name__)

DEFAULT_CASES = Path(__file__).resolve().parent.parent / "data" / "probe" / "cases.tsv"
PROBE_COLUMNS = ["language", "source", "masculine_form", "feminine_form",
                 "he_translation", "she_translation", "he_detected", "she_detected", "success"]


def load_probe_cases(path: Optional[Union[str, Path]] = None) -> List[ProbeCase]:
    """Read probe cases: language, source, masculine_form, feminine_form per line"""
    path = Path(path) if path else DEFAULT_CASES
    cases = []
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f, delimiter="\t"))
    except OSError as e:
        raise ConfigError(f"Cannot read probe cases {path}: {e}") from e

    for line_number, row in enumerate(rows, start=1):
        if not row or not "".join(row).strip() or row[0].startswith("#"):
            continue
        if len(row) != 4:
            raise ConfigError(f"{path}: line {line_number}: expected 4 tab-separated columns, found {len(row)}")
        language, source, masculine, feminine = (value.strip() for value in row)
        try:
            cases.append(ProbeCase(language=language, source=source,
                                   masculine_form=masculine, feminine_form=feminine))
        except ValueError as e:
            raise ConfigError(f"{path}: line {line_number}: {e}") from e
    return cases


def _contains_word(text: str, form: str) -> bool:
    return re.search(rf"(?<!\w){re.escape(form)}(?!\w)", text, re.IGNORECASE) is not None


def detect_form(text: str, case: ProbeCase) -> ProbeDetection:
    """Which of the case's two forms occurs in the text, as a whole word"""
    masculine = _contains_word(text, case.masculine_form)
    feminine = _contains_word(text, case.feminine_form)
    if masculine and not feminine:
        return ProbeDetection.MASCULINE
    if feminine and not masculine:
        return ProbeDetection.FEMININE
    return ProbeDetection.NEITHER


def run_gender_probe(
    cases: Sequence[ProbeCase],
    backend_spec: BackendSpec,
    templates: PrefixTemplateSet,
    strip_rules: Optional[Dict[str, StripRuleSet]] = None,
    rules_dir: Optional[Union[str, Path]] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ProbeResult:
    """Translate every case under "He said:" and "She said:" and check the gendered form.

    Each case is sent to a backend derived for its own target language;
    strip rules come from ``strip_rules`` or the per-language rule files.
    """
    if not cases:
        raise EmptyInput("The gender probe needs at least one case")

    he_prefix = render_prefix(parse_condition_label("he"), templates)
    she_prefix = render_prefix(parse_condition_label("she"), templates)
    strip_rules = dict(strip_rules or {})
    backends: Dict[str, TranslationBackend] = {}

    results = []
    for index, case in enumerate(cases):
        if case.language not in backends:
            backends[case.language] = get_backend(backend_spec.for_target(case.language))
        if case.language not in strip_rules:
            strip_rules[case.language] = rules_for_language(case.language, rules_dir)
        backend, rules = backends[case.language], strip_rules[case.language]

        translations = {}
        for label, prefix in (("he", he_prefix), ("she", she_prefix)):
            wrapped = wrap(case.source, prefix, templates.separator)
            try:
                raw = translate_one(wrapped.wrapped, backend, sleep=sleep)
            except BackendError as e:
                raise e.annotate(index, label)
            translations[label] = strip(raw, rules).stripped

        result = ProbeCaseResult(
            case=case,
            he_translation=translations["he"],
            she_translation=translations["she"],
            he_detected=detect_form(translations["he"], case),
            she_detected=detect_form(translations["she"], case),
        )
        logger.info(
            f"Probe {case.language}: He -> {result.he_detected.value}, She -> {result.she_detected.value}"
            f"{'' if result.success else ' (failed)'}"
        )
        results.append(result)

    probe = ProbeResult(cases=results)
    logger.info(f"Gender probe: {probe.successes}/{len(results)} languages flipped the form")
    return probe


def probe_csv_rows(result: ProbeResult) -> List[List[str]]:
    rows = [list(PROBE_COLUMNS)]
    for item in result.cases:
        rows.append([
            item.case.language, item.case.source, item.case.masculine_form, item.case.feminine_form,
            item.he_translation, item.she_translation,
            item.he_detected.value, item.she_detected.value, "yes" if item.success else "no",
        ])
    return rows


def probe_summary(result: ProbeResult) -> Dict[str, object]:
    return {
        "cases": len(result.cases),
        "successes": result.successes,
        "summary": round(result.summary, 4),
        "failed_languages": [item.case.language for item in result.cases if not item.success],
    }
