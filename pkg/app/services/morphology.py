import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Union

from pydantic import BaseModel

from app.errors import ConfigError, MissingBaseline
from app.models import (
    BASELINE_LABEL,
    Distribution,
    GenderLabel,
    MorphReport,
    ParsedSentence,
    Token,
)
from app.services.hint_grammar import grid_position, parse_condition_label

# Set up logging
logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_LEXICON = DATA_DIR / "lexicons" / "he.tsv"

DEFAULT_SUBJECT_RELATIONS = frozenset({"nsubj", "nsubj:pass", "nsubj:cop"})
VERBAL_UPOS = frozenset({"VERB", "AUX"})
NOMINAL_UPOS = frozenset({"ADJ", "NOUN", "PRON"})

GENDER_CATEGORIES = [label.value for label in GenderLabel]
MARKED_GENDERS = ["Masculine", "Feminine", "Both"]
NUMBER_CATEGORIES = ["Singular", "Plural", "Unmarked"]
PREDICATE_CATEGORIES = [f"{gender}+{number}" for gender in GENDER_CATEGORIES for number in NUMBER_CATEGORIES]


class LexiconEntry(BaseModel):
    form: str
    lemma: str
    person: int
    number: Optional[str] = None
    gender: Optional[str] = None


class PronounLexicon:
    """Pronoun forms the audit looks for, with their person/number/gender"""

    def __init__(
        self,
        entries: Iterable[LexiconEntry],
        subject_relations: Iterable[str] = DEFAULT_SUBJECT_RELATIONS,
        zero_copula: bool = False,
    ):
        self.entries = list(entries)
        self.subject_relations = frozenset(subject_relations)
        self.zero_copula = zero_copula

    def _lookup(self, token: Token, person: int, number: Optional[str] = None) -> Optional[LexiconEntry]:
        if token.upos not in ("PRON", "_"):
            return None
        form, lemma = token.form.casefold(), token.lemma.casefold()
        for entry in self.entries:
            if entry.person != person or (number and entry.number != number):
                continue
            if entry.form.casefold() == form or (entry.lemma != "_" and entry.lemma.casefold() == lemma):
                return entry
        return None

    def speaker_entry(self, token: Token) -> Optional[LexiconEntry]:
        return self._lookup(token, person=1, number="Sing")

    def audience_entry(self, token: Token) -> Optional[LexiconEntry]:
        return self._lookup(token, person=2)

    def is_subject(self, token: Token) -> bool:
        return token.deprel in self.subject_relations


def load_lexicon(path: Optional[Union[str, Path]] = None) -> PronounLexicon:
    """Read a lexicon file: form, lemma, person, number, optional gender per line.

    ``#!`` lines set options: ``#! zero_copula`` and
    ``#! subject_relations nsubj,nsubj:pass``.
    """
    path = Path(path) if path else DEFAULT_LEXICON
    entries = []
    subject_relations = DEFAULT_SUBJECT_RELATIONS
    zero_copula = False
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ConfigError(f"Cannot read lexicon {path}: {e}") from e

    for line_number, line in enumerate(lines, start=1):
        line = line.strip()
        if line.startswith("#!"):
            option, _, value = line[2:].strip().partition(" ")
            if option == "zero_copula":
                zero_copula = value.strip().lower() not in ("false", "no", "0")
            elif option == "subject_relations":
                subject_relations = frozenset(v.strip() for v in value.split(",") if v.strip())
            else:
                raise ConfigError(f"{path}: line {line_number}: unknown option {option!r}")
            continue
        if not line or line.startswith("#"):
            continue
        columns = line.split()
        if len(columns) not in (4, 5):
            raise ConfigError(f"{path}: line {line_number}: expected form, lemma, person, number[, gender]")
        form, lemma, person, number = columns[:4]
        gender = columns[4] if len(columns) == 5 else None
        try:
            entries.append(LexiconEntry(
                form=form,
                lemma=lemma,
                person=int(person),
                number=None if number == "_" else number,
                gender=None if gender in (None, "_") else gender,
            ))
        except ValueError as e:
            raise ConfigError(f"{path}: line {line_number}: {e}") from e

    logger.info(f"Loaded {len(entries)} pronoun entries from {path}")
    return PronounLexicon(entries, subject_relations=subject_relations, zero_copula=zero_copula)


def gender_label(values: Iterable[str]) -> GenderLabel:
    values = set(values)
    masculine, feminine = "Masc" in values, "Fem" in values
    if masculine and feminine:
        return GenderLabel.BOTH
    if masculine:
        return GenderLabel.MASCULINE
    if feminine:
        return GenderLabel.FEMININE
    return GenderLabel.UNMARKED


def number_label(values: Iterable[str]) -> str:
    values = set(values)
    if values == {"Sing"}:
        return "Singular"
    if values == {"Plur"}:
        return "Plural"
    return "Unmarked"


def governing_predicate(sentence: ParsedSentence, token: Token, zero_copula: bool = False) -> Optional[Token]:
    """The verb heading a subject, or the nominal head of a copular clause"""
    head = sentence.token(token.head)
    if head is None:
        return None
    if head.upos in VERBAL_UPOS:
        return head
    if head.upos in NOMINAL_UPOS:
        if zero_copula or any(d.deprel.split(":")[0] == "cop" for d in sentence.dependents(head.id)):
            return head
    return None


def speaker_gender_stats(sentences: Sequence[ParsedSentence], lexicon: PronounLexicon) -> Distribution:
    """Gender of predicates governed by first-person-singular subject pronouns"""
    distribution = Distribution(categories=list(GENDER_CATEGORIES))
    for sentence in sentences:
        for token in sentence.tokens:
            if not lexicon.is_subject(token) or lexicon.speaker_entry(token) is None:
                continue
            predicate = governing_predicate(sentence, token, lexicon.zero_copula)
            label = gender_label(predicate.feature("Gender")) if predicate else GenderLabel.UNMARKED
            distribution.add(label.value)
    return distribution


class AudienceStats(NamedTuple):
    number: Distribution
    gender: Distribution
    predicates: Distribution


def audience_stats(sentences: Sequence[ParsedSentence], lexicon: PronounLexicon) -> AudienceStats:
    """Number and gender of second-person pronouns, plus their predicates when subjects"""
    number = Distribution(categories=list(NUMBER_CATEGORIES))
    gender = Distribution(categories=list(GENDER_CATEGORIES))
    predicates = Distribution(categories=list(PREDICATE_CATEGORIES))

    for sentence in sentences:
        for token in sentence.tokens:
            entry = lexicon.audience_entry(token)
            if entry is None:
                continue

            token_number = number_label(token.feature("Number"))
            if token_number == "Unmarked" and entry.number:
                token_number = number_label([entry.number])
            number.add(token_number)

            token_gender = gender_label(token.feature("Gender"))
            if token_gender == GenderLabel.UNMARKED and entry.gender:
                token_gender = gender_label(entry.gender.split(","))
            gender.add(token_gender.value)

            if lexicon.is_subject(token):
                predicate = governing_predicate(sentence, token, lexicon.zero_copula)
                if predicate is None:
                    predicates.add("Unmarked+Unmarked")
                else:
                    predicates.add(
                        f"{gender_label(predicate.feature('Gender')).value}+{number_label(predicate.feature('Number'))}"
                    )
    return AudienceStats(number=number, gender=gender, predicates=predicates)


def build_morph_report(condition: str, sentences: Sequence[ParsedSentence], lexicon: PronounLexicon) -> MorphReport:
    speaker = speaker_gender_stats(sentences, lexicon)
    audience = audience_stats(sentences, lexicon)
    return MorphReport(
        condition=condition,
        sentences=len(sentences),
        speaker=speaker,
        audience_number=audience.number,
        audience_gender=audience.gender,
        audience_predicates=audience.predicates,
        matched_items=speaker.total + audience.number.total,
    )


# (distribution name, attribute, categories compared, normalization pool)
COMPARED_PROPORTIONS = [
    ("speaker", "speaker", MARKED_GENDERS, MARKED_GENDERS),
    ("speaker_excl_both", "speaker", ["Masculine", "Feminine"], ["Masculine", "Feminine"]),
    ("audience_number", "audience_number", ["Singular", "Plural"], ["Singular", "Plural"]),
    ("audience_gender", "audience_gender", MARKED_GENDERS, MARKED_GENDERS),
]


class ComparisonRow(NamedTuple):
    condition: str
    distribution: str
    category: str
    proportion: Optional[float]
    reference_proportion: Optional[float]
    difference: Optional[float]


def compare_to_reference(
    condition_reports: Mapping[str, MorphReport],
    reference_report: MorphReport,
) -> List[ComparisonRow]:
    """Absolute distance of every condition's proportions from the reference's"""
    if BASELINE_LABEL not in condition_reports:
        raise MissingBaseline("Morphological comparison needs a baseline condition")

    rows = []
    for label in sorted(condition_reports, key=grid_position):
        report = condition_reports[label]
        for name, attribute, categories, pool in COMPARED_PROPORTIONS:
            ours = getattr(report, attribute)
            theirs = getattr(reference_report, attribute)
            for category in categories:
                proportion = ours.proportion(category, among=pool)
                reference = theirs.proportion(category, among=pool)
                difference = None
                if proportion is not None and reference is not None:
                    difference = abs(proportion - reference)
                rows.append(ComparisonRow(label, name, category, proportion, reference, difference))
    return rows


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def morph_report_csv_rows(reports: Sequence[MorphReport]) -> List[List[str]]:
    """condition,category,count,proportion (+ both speaker normalizations)"""
    rows = [["condition", "category", "count", "proportion", "proportion_incl_both", "proportion_excl_both"]]
    for report in reports:
        for category in report.speaker.categories:
            incl = report.speaker.proportion(category, among=MARKED_GENDERS)
            excl = report.speaker.proportion(category, among=["Masculine", "Feminine"])
            rows.append([report.condition, f"speaker:{category}", str(report.speaker.count(category)),
                         _fmt(incl), _fmt(incl), _fmt(excl)])
        for name, distribution, pool in (
            ("audience_number", report.audience_number, ["Singular", "Plural"]),
            ("audience_gender", report.audience_gender, MARKED_GENDERS),
            ("audience_predicate", report.audience_predicates, None),
        ):
            for category in distribution.categories:
                count = distribution.count(category)
                if name == "audience_predicate" and count == 0:
                    continue
                rows.append([report.condition, f"{name}:{category}", str(count),
                             _fmt(distribution.proportion(category, among=pool)), "", ""])
    return rows


def comparison_csv_rows(rows: Sequence[ComparisonRow]) -> List[List[str]]:
    table = [["condition", "distribution", "category", "proportion", "reference_proportion", "abs_difference"]]
    for row in rows:
        table.append([row.condition, row.distribution, row.category,
                      _fmt(row.proportion), _fmt(row.reference_proportion), _fmt(row.difference)])
    return table


def _series_name(label: str) -> str:
    return parse_condition_label(label).display_name


def chart_data(condition_reports: Mapping[str, MorphReport], reference_report: MorphReport) -> Dict[str, dict]:
    """Grouped-bar data for the speaker-gender and audience-number charts"""
    labels = sorted(condition_reports, key=grid_position)
    charts = {}
    for key, title, attribute, categories in (
        ("speaker_gender", "Gender of predicates governed by first-person subjects",
         "speaker", MARKED_GENDERS),
        ("audience_number", "Number of second-person pronouns",
         "audience_number", ["Singular", "Plural"]),
    ):
        series = []
        for label in labels:
            distribution = getattr(condition_reports[label], attribute)
            series.append({
                "label": label,
                "name": _series_name(label),
                "values": [distribution.proportion(c, among=categories) for c in categories],
                "counts": [distribution.count(c) for c in categories],
            })
        distribution = getattr(reference_report, attribute)
        series.append({
            "label": "reference",
            "name": "Reference",
            "values": [distribution.proportion(c, among=categories) for c in categories],
            "counts": [distribution.count(c) for c in categories],
        })
        charts[key] = {"title": title, "categories": categories, "series": series}
    return charts
