"""Corpus BLEU with the semantics of the Moses multi-bleu scorer.

Sufficient statistics (clipped n-gram matches, n-gram totals and lengths,
summed over the corpus) come from sacrebleu with tokenization and
smoothing switched off; the score is then combined exactly as
multi-bleu does: no smoothing, zero on any zero precision.
"""
import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Sequence

from sacrebleu.metrics import BLEU

from app.errors import DataError, EmptyCorpus, LengthMismatch, MissingBaseline
from app.models import (
    BASELINE_LABEL,
    Annotation,
    BleuScore,
    ConditionReport,
    ConditionRow,
    StripMethod,
    TranslationRecord,
)
from app.services.hint_grammar import grid_position
from app.services.wrap_strip import strip_rate

# Set up logging
logger = logging.getLogger(__name__)

CSV_COLUMNS = ["condition", "bleu", "p1", "p2", "p3", "p4", "bp", "len_ratio", "delta_vs_baseline"]
TOKENIZERS = ("none", "13a", "intl", "char")


def corpus_bleu(
    hypotheses: Sequence[str],
    references: Sequence[str],
    lowercase: bool = False,
    tokenize: str = "none",
) -> BleuScore:
    """Single-reference corpus BLEU over whitespace-tokenized text"""
    if len(hypotheses) != len(references):
        raise LengthMismatch(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise EmptyCorpus("Cannot score an empty corpus")
    if tokenize not in TOKENIZERS:
        raise DataError(f"Unknown tokenizer {tokenize!r}; expected one of {', '.join(TOKENIZERS)}")

    scorer = BLEU(lowercase=lowercase, tokenize=tokenize, smooth_method="none",
                  effective_order=False, force=True)
    stats = scorer.corpus_score(list(hypotheses), [list(references)])

    hyp_len, ref_len = stats.sys_len, stats.ref_len
    if ref_len == 0:
        raise EmptyCorpus("References contain no tokens")

    precisions = [
        correct / total if total else 0.0
        for correct, total in zip(stats.counts, stats.totals)
    ]

    if hyp_len == 0:
        brevity_penalty = 0.0
    elif hyp_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / hyp_len)
    else:
        brevity_penalty = 1.0

    if all(p > 0 for p in precisions):
        bleu = 100 * brevity_penalty * math.exp(sum(math.log(p) for p in precisions) / 4)
    else:
        bleu = 0.0

    return BleuScore(
        bleu=min(100.0, bleu),
        precisions=precisions,
        brevity_penalty=brevity_penalty,
        hyp_len=hyp_len,
        ref_len=ref_len,
        length_ratio=hyp_len / ref_len,
    )


def _score_condition(label, records, references, lowercase, tokenize, drop_unstripped) -> Optional[BleuScore]:
    """BLEU of one condition; None when the drop policy leaves no sentence to score"""
    try:
        if len(records) != len(references):
            raise LengthMismatch(f"{len(records)} hypotheses vs {len(references)} references")
        keep = [
            i for i, record in enumerate(records)
            if not (drop_unstripped and record.strip.method == StripMethod.UNSTRIPPED)
        ]
        if records and not keep:
            logger.warning(f"Condition {label}: every translation is unstripped, nothing left to score")
            return None
        return corpus_bleu(
            [records[i].strip.stripped for i in keep],
            [references[i] for i in keep],
            lowercase=lowercase,
            tokenize=tokenize,
        )
    except DataError as e:
        raise type(e)(f"condition {label}: {e}") from e


def condition_report(
    records_by_condition: Mapping[str, Sequence[TranslationRecord]],
    references: Sequence[str],
    lowercase: bool = False,
    tokenize: str = "none",
    drop_unstripped: bool = False,
    metadata: Optional[Dict[str, Any]] = None,
    annotations: Optional[List[Annotation]] = None,
) -> ConditionReport:
    """BLEU per condition, with deltas against the baseline row, in grid order"""
    if BASELINE_LABEL not in records_by_condition:
        raise MissingBaseline("A condition report needs a baseline condition")

    scored = {}
    for label in sorted(records_by_condition, key=grid_position):
        records = list(records_by_condition[label])
        score = _score_condition(label, records, references, lowercase, tokenize, drop_unstripped)

        other = None
        unstripped = sum(1 for r in records if r.strip.method == StripMethod.UNSTRIPPED)
        if unstripped:
            other_score = _score_condition(label, records, references, lowercase, tokenize, not drop_unstripped)
            other = None if other_score is None else other_score.bleu
        prefixed = [r.strip for r in records if r.strip.method != StripMethod.NOT_APPLICABLE]
        rate = strip_rate(prefixed) if prefixed else None

        scored[label] = (score, rate, unstripped, other)
        if score is not None:
            logger.info(f"Condition {label}: BLEU {score.bleu:.2f} (strip rate {rate})")

    baseline_bleu = scored[BASELINE_LABEL][0].bleu
    rows = [
        ConditionRow(
            condition=label,
            score=score,
            delta_vs_baseline=None if score is None else score.bleu - baseline_bleu,
            strip_rate=rate,
            unstripped=unstripped,
            bleu_other_policy=other,
        )
        for label, (score, rate, unstripped, other) in scored.items()
    ]
    meta = dict(metadata or {})
    meta.setdefault("lowercase", lowercase)
    meta.setdefault("tokenizer", tokenize)
    meta.setdefault("unstripped_policy", "drop" if drop_unstripped else "keep")
    return ConditionReport(rows=rows, metadata=meta, annotations=list(annotations or []))


def report_csv_rows(report: ConditionReport) -> List[List[str]]:
    rows = [list(CSV_COLUMNS)]
    for row in report.rows:
        score = row.score
        if score is None:
            rows.append([row.condition] + [""] * (len(CSV_COLUMNS) - 1))
            continue
        rows.append([
            row.condition,
            f"{score.bleu:.2f}",
            *(f"{p:.4f}" for p in score.precisions),
            f"{score.brevity_penalty:.4f}",
            f"{score.length_ratio:.4f}",
            f"{row.delta_vs_baseline:.2f}",
        ])
    return rows


def report_json(report: ConditionReport) -> Dict[str, Any]:
    rows = []
    for row in report.rows:
        score = row.score
        if score is None:
            measured = dict.fromkeys(
                ("bleu", "p1", "p2", "p3", "p4", "bp", "len_ratio", "delta_vs_baseline", "hyp_len", "ref_len")
            )
        else:
            p1, p2, p3, p4 = (round(p, 6) for p in score.precisions)
            measured = {
                "bleu": round(score.bleu, 4),
                "p1": p1, "p2": p2, "p3": p3, "p4": p4,
                "bp": round(score.brevity_penalty, 6),
                "len_ratio": round(score.length_ratio, 6),
                "delta_vs_baseline": round(row.delta_vs_baseline, 4),
                "hyp_len": score.hyp_len,
                "ref_len": score.ref_len,
            }
        rows.append({
            "condition": row.condition,
            **measured,
            "strip_rate": row.strip_rate,
            "unstripped": row.unstripped,
            "bleu_other_policy": None if row.bleu_other_policy is None else round(row.bleu_other_policy, 4),
        })
    return {
        "metadata": report.metadata,
        "rows": rows,
        "annotations": [annotation.model_dump(exclude_none=True) for annotation in report.annotations],
    }


def report_from_json(data: Dict[str, Any]) -> ConditionReport:
    """Rebuild a report from its JSON form (precisions are rounded there)"""
    rows = []
    for item in data["rows"]:
        score = None
        if item["bleu"] is not None:
            score = BleuScore(
                bleu=item["bleu"],
                precisions=[item["p1"], item["p2"], item["p3"], item["p4"]],
                brevity_penalty=item["bp"],
                hyp_len=item["hyp_len"],
                ref_len=item["ref_len"],
                length_ratio=item["len_ratio"],
            )
        rows.append(ConditionRow(
            condition=item["condition"],
            score=score,
            delta_vs_baseline=item["delta_vs_baseline"],
            strip_rate=item.get("strip_rate"),
            unstripped=item.get("unstripped", 0),
            bleu_other_policy=item.get("bleu_other_policy"),
        ))
    return ConditionReport(
        rows=rows,
        metadata=data.get("metadata", {}),
        annotations=[Annotation(**a) for a in data.get("annotations", [])],
    )
