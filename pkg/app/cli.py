"""Command line for the gender-hint translation toolkit.

Settings precedence: CLI flag > experiment document > environment > default.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 backend failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import uvicorn

from app.config import settings, setup_logging
from app.errors import ToolkitError
from app.pipeline import (
    load_experiment_config,
    load_report,
    read_document,
    resolve_backend,
    run_experiment,
    run_morph_audit,
    run_probe,
    score_archive,
)
from app.services.hint_grammar import load_template_set, parse_condition_label, render_prefix, resolve_conditions

logger = logging.getLogger(__name__)


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment document (YAML)")
    parser.add_argument("--condition", action="append", dest="conditions", metavar="LABEL",
                        help="condition label to run (repeatable); the baseline is always included")
    parser.add_argument("--full-grid", action="store_true", help="run every speaker x audience condition")
    parser.add_argument("--backend", help="backend name from the document's backends list")
    parser.add_argument("--cache", help=f"translation cache file (env CACHE_PATH, default {settings.CACHE_PATH})")
    parser.add_argument("--out", help=f"output directory (env OUTPUT_DIR, default {settings.OUTPUT_DIR})")
    parser.add_argument("--drop-unstripped", action="store_true", default=None,
                        help="exclude translations whose prefix could not be stripped from BLEU")
    parser.add_argument("--lc", action="store_true", default=None, help="lowercase before BLEU")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genderhint",
        description="Control speaker/audience gender and number in black-box MT with injected prefixes.",
        epilog="Precedence: CLI flag > experiment document > environment (.env) > built-in default.",
    )
    parser.add_argument("--log-level", help=f"logging level (env LOG_LEVEL, default {settings.LOG_LEVEL})")
    sub = parser.add_subparsers(dest="command", required=True)

    grid = sub.add_parser("grid", help="list the conditions and their prefixes")
    grid.add_argument("--templates", help="prefix template file (YAML)")
    grid.add_argument("--full-grid", action="store_true")
    grid.add_argument("--condition", action="append", dest="conditions", metavar="LABEL")

    translate = sub.add_parser("translate", help="translate, strip and score every condition")
    _add_experiment_flags(translate)

    score = sub.add_parser("score", help="rescore a records archive offline")
    _add_experiment_flags(score)
    score.add_argument("--records", help="records archive (default: <out>/records.jsonl)")

    audit = sub.add_parser("audit", help="morphological audit of parsed translations")
    audit.add_argument("--conllu-dir", required=True, help="directory with one <condition>.conllu per condition")
    audit.add_argument("--reference", required=True, help="parsed reference translations (CoNLL-U)")
    audit.add_argument("--lexicon", help="pronoun lexicon (default: shipped Hebrew lexicon)")
    audit.add_argument("--out", default=None)

    probe = sub.add_parser("probe", help="check whether He/She prefixes flip gendered forms")
    probe.add_argument("--cases", help="probe cases TSV (default: shipped cases)")
    probe.add_argument("--config", help="experiment document supplying the backend "
                                        "(default: replay the published translations)")
    probe.add_argument("--backend")
    probe.add_argument("--templates")
    probe.add_argument("--rules-dir", help="directory of <lang>.yaml strip rules")
    probe.add_argument("--out", default=None)

    report = sub.add_parser("report", help="print a stored condition report")
    report.add_argument("--out", default=None)

    serve = sub.add_parser("serve", help="run the fixture translation server")
    serve.add_argument("--table", help="TSV fixture to serve (env FIXTURE_TABLE)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "conditions": args.conditions,
        "full_grid": args.full_grid or None,
        "backend": args.backend,
        "cache": args.cache,
        "output_dir": args.out,
        "drop_unstripped": args.drop_unstripped,
        "lowercase_bleu": args.lc,
    }


def _fmt(value: Optional[float], spec: str = ".2f") -> str:
    return "-" if value is None else format(value, spec)


def format_report(data: Dict[str, Any]) -> str:
    """Text table of a condition report as stored in condition_report.json"""
    lines = []
    metadata = data.get("metadata", {})
    if metadata:
        lines.append("  ".join(f"{key}={value}" for key, value in metadata.items()))
    lines.append(f"{'condition':<12}{'BLEU':>8}{'delta':>8}{'BP':>8}{'ratio':>8}{'strip':>8}")
    for row in data["rows"]:
        name = parse_condition_label(row["condition"]).display_name
        lines.append(
            f"{name:<12}{_fmt(row['bleu']):>8}{_fmt(row['delta_vs_baseline'], '+.2f'):>8}"
            f"{_fmt(row['bp'], '.3f'):>8}{_fmt(row['len_ratio'], '.3f'):>8}{_fmt(row.get('strip_rate'), '.4f'):>8}"
        )
    for annotation in data.get("annotations", []):
        values = "  ".join(f"{key}={value}" for key, value in annotation.get("values", {}).items())
        note = f"  ({annotation['note']})" if annotation.get("note") else ""
        lines.append(f"[published] {annotation['label']}: {values}{note}")
    return "\n".join(lines)


def _cmd_grid(args) -> int:
    templates = load_template_set(args.templates)
    selection = args.conditions or ("full-grid" if args.full_grid else "table1")
    for condition in resolve_conditions(selection, templates):
        print(f"{condition.label}\t{condition.display_name}\t{render_prefix(condition, templates)}")
    return 0


def _cmd_translate(args) -> int:
    config = load_experiment_config(args.config, _overrides(args))
    result = run_experiment(config)
    print(format_report(load_report(config.output_dir)))
    logger.info(f"{result.backend_calls} backend calls")
    return 0


def _cmd_score(args) -> int:
    config = load_experiment_config(args.config, _overrides(args))
    score_archive(config, args.records)
    print(format_report(load_report(config.output_dir)))
    return 0


def _cmd_audit(args) -> int:
    result = run_morph_audit(args.conllu_dir, args.reference, args.out or settings.OUTPUT_DIR, args.lexicon)
    for row in result.comparison:
        if row.distribution in ("speaker", "audience_number"):
            print(f"{row.condition}\t{row.distribution}:{row.category}\t"
                  f"{_fmt(row.proportion, '.4f')}\t{_fmt(row.reference_proportion, '.4f')}")
    return 0


def _cmd_probe(args) -> int:
    backend_spec = None
    if args.config:
        document = read_document(args.config)
        backend_spec = resolve_backend(document, Path(args.config).resolve().parent, args.backend)
    result = run_probe(
        args.out or settings.OUTPUT_DIR,
        cases_path=args.cases,
        backend_spec=backend_spec,
        templates_path=args.templates,
        rules_dir=args.rules_dir,
    )
    for item in result.cases:
        status = "ok" if item.success else "FAIL"
        print(f"{item.case.language}\tHe->{item.he_detected.value}\tShe->{item.she_detected.value}\t{status}")
    print(f"{result.successes}/{len(result.cases)} languages")
    return 0


def _cmd_report(args) -> int:
    print(format_report(load_report(args.out or settings.OUTPUT_DIR)))
    return 0


def _cmd_serve(args) -> int:
    if args.table:
        settings.FIXTURE_TABLE = args.table
    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return 0


COMMANDS = {
    "grid": _cmd_grid,
    "translate": _cmd_translate,
    "score": _cmd_score,
    "audit": _cmd_audit,
    "probe": _cmd_probe,
    "report": _cmd_report,
    "serve": _cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ToolkitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
