"""Experiment orchestration: translation grid, offline rescoring, morphology audit, probe.

Experiment documents are YAML. Precedence for every setting is
CLI flag > experiment document > environment (``Settings``) > default.
Relative paths in a document resolve against the document's directory.
"""
import logging
import time
from collections import defaultdict
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Union

import yaml
from pydantic import ValidationError

from app.config import settings
from app.errors import ConfigError, DataError, EmptyInput
from app.models import (
    BackendKind,
    BackendSpec,
    ConditionReport,
    ExperimentConfig,
    MorphReport,
    ProbeResult,
    StripMethod,
    TranslationRecord,
)
from app.services.bleu import condition_report, report_csv_rows, report_json
from app.services.cache import TranslationCache
from app.services.charts import write_chart
from app.services.conllu import read_conllu_file
from app.services.file_handler import FileHandler
from app.services.hint_grammar import (
    TABLE1_LABELS,
    grid_position,
    load_template_set,
    parse_condition_label,
    resolve_conditions,
)
from app.services.morphology import (
    ComparisonRow,
    build_morph_report,
    chart_data,
    compare_to_reference,
    comparison_csv_rows,
    load_lexicon,
    morph_report_csv_rows,
)
from app.services.probe import load_probe_cases, probe_csv_rows, probe_summary, run_gender_probe
from app.services.translation import TranslationBackend, get_backend, translate_corpus
from app.services.wrap_strip import load_strip_rules, rules_for_language, rules_from_templates, strip_rate

# Set up logging
logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / "data"
PROBE_FIXTURES = DATA_DIR / "probe" / "translations" / "{target_lang}.tsv"

RECORDS_FILE = "records.jsonl"
STRIP_RATES_FILE = "strip_rates.json"
REPORT_CSV_FILE = "condition_report.csv"
REPORT_JSON_FILE = "condition_report.json"

_PATH_KEYS = ("templates", "strip_rules", "source_corpus", "reference_corpus", "cache", "output_dir")


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read experiment document {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Experiment document {path} is not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"Experiment document {path} must be a mapping")
    return raw


def _resolve(base_dir: Path, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    path = Path(value).expanduser()
    return str(path if path.is_absolute() else base_dir / path)


def resolve_backend(raw: Dict[str, Any], base_dir: Path, name: Optional[str] = None) -> BackendSpec:
    """Pick the backend: a name from the ``backends`` list, or an inline mapping"""
    choice = name or raw.get("backend")
    candidates = {item.get("name"): item for item in raw.get("backends") or []}
    if isinstance(choice, dict):
        data = dict(choice)
    elif isinstance(choice, str):
        if choice not in candidates:
            known = ", ".join(sorted(str(k) for k in candidates)) or "none"
            raise ConfigError(f"Unknown backend {choice!r} (configured: {known})")
        data = dict(candidates[choice])
    elif len(candidates) == 1:
        data = dict(next(iter(candidates.values())))
    else:
        raise ConfigError("No backend selected; set 'backend' in the document or pass --backend")

    if data.get("fixture"):
        data["fixture"] = _resolve(base_dir, data["fixture"])
    try:
        return BackendSpec(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid backend configuration: {e}") from e


def load_experiment_config(path: Union[str, Path], overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Load an experiment document and apply CLI overrides on top of it"""
    path = Path(path)
    raw = read_document(path)
    base_dir = path.resolve().parent
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}

    backend = resolve_backend(raw, base_dir, overrides.pop("backend", None))
    data = {key: value for key, value in raw.items() if key not in ("backend", "backends")}
    for key in _PATH_KEYS:
        if data.get(key) is not None:
            data[key] = _resolve(base_dir, data[key])

    data.setdefault("cache", settings.CACHE_PATH)
    data.setdefault("output_dir", settings.OUTPUT_DIR)
    data.setdefault("max_in_flight", settings.MAX_IN_FLIGHT)

    if overrides.pop("full_grid", False):
        data["conditions"] = "full-grid"
    data.update(overrides)

    try:
        config = ExperimentConfig(backend=backend, **data)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment document {path}: {e}") from e
    logger.info(f"Loaded experiment {path}: backend {backend.name} ({backend.source_lang}->{backend.target_lang})")
    return config


def check_config_files(config: ExperimentConfig) -> None:
    """Every file the experiment reads must exist before any backend call"""
    required = {"source_corpus": config.source_corpus, "reference_corpus": config.reference_corpus}
    if config.templates:
        required["templates"] = config.templates
    if config.strip_rules:
        required["strip_rules"] = config.strip_rules
    if config.backend.kind == BackendKind.TABLE:
        required["backend fixture"] = config.backend.fixture_path
    missing = [f"{name} ({path})" for name, path in required.items() if not Path(path).exists()]
    if missing:
        raise ConfigError(f"Missing input files: {', '.join(missing)}")


class ExperimentResult(NamedTuple):
    report: ConditionReport
    records: Dict[str, List[TranslationRecord]]
    backend_calls: int


def _report_metadata(config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "backend": config.backend.name,
        "source_lang": config.backend.source_lang,
        "target_lang": config.backend.target_lang,
        "corpus_mode": config.corpus_mode,
    }


def _scoring_tokenizer(config: ExperimentConfig) -> str:
    # tokenized corpora are scored as they are
    return config.tokenizer if config.corpus_mode == "raw" else "none"


def _write_reports(output_dir: Path, report: ConditionReport) -> None:
    FileHandler.write_csv(output_dir / REPORT_CSV_FILE, report_csv_rows(report))
    FileHandler.write_json(output_dir / REPORT_JSON_FILE, report_json(report))


def _strip_rates(records: Mapping[str, List[TranslationRecord]]) -> Dict[str, Any]:
    rates = {}
    for label in sorted(records, key=grid_position):
        outcomes = [r.strip for r in records[label] if r.strip.method != StripMethod.NOT_APPLICABLE]
        if not outcomes:
            continue
        methods = defaultdict(int)
        for outcome in outcomes:
            methods[outcome.method.value] += 1
        rates[label] = {"strip_rate": strip_rate(outcomes), "methods": dict(sorted(methods.items()))}
    return rates


def run_experiment(
    config: ExperimentConfig,
    backend: Optional[TranslationBackend] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ExperimentResult:
    """Translate the corpus under every condition, strip, score and write the reports"""
    check_config_files(config)
    templates = load_template_set(config.templates)
    conditions = resolve_conditions(config.conditions, templates)

    if config.strip_rules:
        rules = load_strip_rules(config.strip_rules)
    elif config.backend.kind == BackendKind.ECHO:
        rules = rules_from_templates(templates)
    else:
        rules = rules_for_language(config.backend.target_lang)

    sources, references = FileHandler.read_parallel_corpus(config.source_corpus, config.reference_corpus)
    backend = backend or get_backend(config.backend)
    cache = TranslationCache(config.cache)
    output_dir = FileHandler.ensure_directory(config.output_dir)

    logger.info(f"Running {len(conditions)} conditions over {len(sources)} sentences")
    records: Dict[str, List[TranslationRecord]] = {}
    # one condition at a time
    for condition in conditions:
        records[condition.label] = translate_corpus(
            sources, condition, backend, cache, rules, templates,
            max_in_flight=config.max_in_flight, sleep=sleep,
        )

    FileHandler.write_records(output_dir / RECORDS_FILE, [r for label in records for r in records[label]])
    FileHandler.write_json(output_dir / STRIP_RATES_FILE, _strip_rates(records))

    report = condition_report(
        records,
        references,
        lowercase=config.lowercase_bleu,
        tokenize=_scoring_tokenizer(config),
        drop_unstripped=config.drop_unstripped,
        metadata=_report_metadata(config),
        annotations=config.annotations,
    )
    _write_reports(output_dir, report)
    logger.info(f"Experiment finished: {backend.calls} backend calls, reports in {output_dir}")
    return ExperimentResult(report=report, records=records, backend_calls=backend.calls)


def score_archive(
    config: ExperimentConfig,
    records_path: Optional[Union[str, Path]] = None,
) -> ConditionReport:
    """Recompute the condition report from a records archive, without any backend"""
    records_path = Path(records_path) if records_path else Path(config.output_dir) / RECORDS_FILE
    references = FileHandler.read_corpus(config.reference_corpus)

    grouped: Dict[str, List[TranslationRecord]] = defaultdict(list)
    for record in FileHandler.read_records(records_path):
        grouped[record.condition_label].append(record)
    records = {label: sorted(items, key=lambda r: r.index) for label, items in grouped.items()}

    report = condition_report(
        records,
        references,
        lowercase=config.lowercase_bleu,
        tokenize=_scoring_tokenizer(config),
        drop_unstripped=config.drop_unstripped,
        metadata=_report_metadata(config),
        annotations=config.annotations,
    )
    _write_reports(FileHandler.ensure_directory(config.output_dir), report)
    return report


class AuditResult(NamedTuple):
    reports: Dict[str, MorphReport]
    reference: MorphReport
    comparison: List[ComparisonRow]


def run_morph_audit(
    conllu_dir: Union[str, Path],
    reference_conllu: Union[str, Path],
    output_dir: Union[str, Path],
    lexicon_path: Optional[Union[str, Path]] = None,
) -> AuditResult:
    """Audit one parsed ``<condition>.conllu`` file per condition against a reference"""
    conllu_dir, reference_conllu = Path(conllu_dir), Path(reference_conllu)
    lexicon = load_lexicon(lexicon_path)

    conditions = {}
    for path in sorted(conllu_dir.glob("*.conllu")):
        if path.resolve() == reference_conllu.resolve():
            continue
        try:
            conditions[path] = parse_condition_label(path.stem)
        except ConfigError as e:
            logger.warning(f"Skipping {path}: file name is not a condition label ({e})")
    if not conditions:
        expected = ", ".join(f"{label}.conllu" for label in ("baseline",) + TABLE1_LABELS)
        raise EmptyInput(f"No CoNLL-U files in {conllu_dir}; expected one per condition: {expected}")

    reports = {}
    for path, condition in conditions.items():
        reports[condition.label] = build_morph_report(condition.label, read_conllu_file(path), lexicon)
        logger.info(f"Audited {path}: {reports[condition.label].matched_items} pronouns matched")
    reference = build_morph_report("reference", read_conllu_file(reference_conllu), lexicon)

    comparison = compare_to_reference(reports, reference)
    ordered = [reports[label] for label in sorted(reports, key=grid_position)] + [reference]

    output_dir = FileHandler.ensure_directory(output_dir)
    charts = chart_data(reports, reference)
    FileHandler.write_csv(output_dir / "morph_report.csv", morph_report_csv_rows(ordered))
    FileHandler.write_csv(output_dir / "morph_comparison.csv", comparison_csv_rows(comparison))
    FileHandler.write_json(output_dir / "morph_chart_data.json", charts)
    write_chart(output_dir / "speaker_gender.svg", charts["speaker_gender"])
    write_chart(output_dir / "audience_number.svg", charts["audience_number"])
    return AuditResult(reports=reports, reference=reference, comparison=comparison)


def default_probe_backend() -> BackendSpec:
    """Table backend replaying the published per-language probe translations"""
    return BackendSpec(
        name="published-probe",
        kind=BackendKind.TABLE,
        source_lang="en",
        target_lang="he",
        fixture=str(PROBE_FIXTURES),
    )


def run_probe(
    output_dir: Union[str, Path],
    cases_path: Optional[Union[str, Path]] = None,
    backend_spec: Optional[BackendSpec] = None,
    templates_path: Optional[Union[str, Path]] = None,
    rules_dir: Optional[Union[str, Path]] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ProbeResult:
    cases = load_probe_cases(cases_path)
    templates = load_template_set(templates_path)
    result = run_gender_probe(
        cases,
        backend_spec or default_probe_backend(),
        templates,
        rules_dir=rules_dir,
        sleep=sleep,
    )
    output_dir = FileHandler.ensure_directory(output_dir)
    FileHandler.write_csv(output_dir / "probe_results.csv", probe_csv_rows(result))
    FileHandler.write_json(output_dir / "probe_summary.json", probe_summary(result))
    return result


def load_report(output_dir: Union[str, Path]) -> Dict[str, Any]:
    path = Path(output_dir) / REPORT_JSON_FILE
    if not path.exists():
        raise DataError(f"No condition report at {path}; run 'translate' or 'score' first")
    return FileHandler.read_json(path)
