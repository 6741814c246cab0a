import hashlib
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

BASELINE_LABEL = "baseline"


class GenderSpec(str, Enum):
    MASCULINE = "Masculine"
    FEMININE = "Feminine"
    UNSPECIFIED = "Unspecified"


class NumberSpec(str, Enum):
    SINGULAR = "Singular"
    PLURAL = "Plural"
    UNSPECIFIED = "Unspecified"


# Label tokens of the condition grammar `<speaker>[+<audience>]`
SPEAKER_TOKENS: Dict[str, GenderSpec] = {
    "he": GenderSpec.MASCULINE,
    "i": GenderSpec.UNSPECIFIED,
    "she": GenderSpec.FEMININE,
}
AUDIENCE_TOKENS: Dict[str, tuple] = {
    "him": (GenderSpec.MASCULINE, NumberSpec.SINGULAR),
    "her": (GenderSpec.FEMININE, NumberSpec.SINGULAR),
    "them": (GenderSpec.UNSPECIFIED, NumberSpec.PLURAL),
}
_NO_AUDIENCE = (GenderSpec.UNSPECIFIED, NumberSpec.UNSPECIFIED)


class HintCondition(BaseModel):
    """One speaker/audience cell of the condition grid"""

    model_config = ConfigDict(frozen=True)

    speaker: GenderSpec = GenderSpec.UNSPECIFIED
    audience_gender: GenderSpec = GenderSpec.UNSPECIFIED
    audience_number: NumberSpec = NumberSpec.UNSPECIFIED
    # False only for the baseline; tells "I said:" apart from no prefix at all
    prefixed: bool = True

    @model_validator(mode="after")
    def _check_cell(self):
        audience = (self.audience_gender, self.audience_number)
        if self.audience_number == NumberSpec.PLURAL and self.audience_gender != GenderSpec.UNSPECIFIED:
            raise ValueError("a plural audience carries no gender")
        if audience != _NO_AUDIENCE and audience not in AUDIENCE_TOKENS.values():
            raise ValueError(f"unsupported audience {audience[0].value}/{audience[1].value}")
        if not self.prefixed and (self.speaker != GenderSpec.UNSPECIFIED or audience != _NO_AUDIENCE):
            raise ValueError("the baseline condition cannot specify speaker or audience")
        return self

    @computed_field
    @property
    def label(self) -> str:
        if not self.prefixed:
            return BASELINE_LABEL
        speaker = next(token for token, value in SPEAKER_TOKENS.items() if value == self.speaker)
        audience = (self.audience_gender, self.audience_number)
        for token, value in AUDIENCE_TOKENS.items():
            if value == audience:
                return f"{speaker}+{token}"
        return speaker

    @property
    def is_baseline(self) -> bool:
        return not self.prefixed

    @property
    def display_name(self) -> str:
        """Speaker/Audience rendering used in charts, e.g. "She/them" or "I/–" """
        if self.is_baseline:
            return "Baseline"
        speaker, _, audience = self.label.partition("+")
        return f"{speaker.capitalize() if speaker != 'i' else 'I'}/{audience or '–'}"


class PrefixTemplateSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    source_language: str
    entries: Dict[str, str]
    separator: str = " "
    delimiter: str = ":"

    @model_validator(mode="before")
    @classmethod
    def _default_baseline(cls, data: Any):
        if isinstance(data, dict):
            entries = dict(data.get("entries") or {})
            entries.setdefault(BASELINE_LABEL, "")
            data = {**data, "entries": entries}
        return data

    @model_validator(mode="after")
    def _check_prefixes(self):
        for label, text in self.entries.items():
            if label == BASELINE_LABEL:
                if text:
                    raise ValueError("baseline must map to the empty prefix")
                continue
            if not text or not text.strip():
                raise ValueError(f"prefix for {label!r} is empty")
            if not text.rstrip().endswith(self.delimiter):
                raise ValueError(f"prefix for {label!r} must end with the delimiter {self.delimiter!r}")
        return self


class WrappedSentence(BaseModel):
    model_config = ConfigDict(frozen=True)

    original: str
    prefix: str
    wrapped: str


class StripMethod(str, Enum):
    EXACT_PATTERN = "ExactPattern"
    DELIMITER_HEURISTIC = "DelimiterHeuristic"
    UNSTRIPPED = "Unstripped"
    # baseline records: nothing was injected, nothing is stripped
    NOT_APPLICABLE = "NotApplicable"


class StripOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    stripped: str
    method: StripMethod
    matched_pattern: Optional[str] = None

    @model_validator(mode="after")
    def _check_pattern(self):
        if self.method == StripMethod.EXACT_PATTERN and not self.matched_pattern:
            raise ValueError("ExactPattern outcomes must name the matched pattern")
        return self

    @property
    def succeeded(self) -> bool:
        return self.method != StripMethod.UNSTRIPPED


class StripRuleSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    target_language: str
    exact_patterns: List[str] = Field(default_factory=list)
    delimiter: str = ":"
    max_prefix_tokens: int = Field(default=6, ge=1)
    trim_quotes: bool = False
    quote_chars: str = "\"'“”„«»״"


class BackendKind(str, Enum):
    HTTP = "Http"
    TABLE = "Table"
    ECHO = "Echo"
    OPENAI = "OpenAI"

    @classmethod
    def _missing_(cls, value):
        # documents may spell kinds in lowercase
        if isinstance(value, str):
            for member in cls:
                if member.value.lower() == value.lower():
                    return member
        return None


class BackendSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: BackendKind
    source_lang: str
    target_lang: str
    endpoint: Optional[str] = None
    credentials_env: Optional[str] = None
    # Table backend: TSV path, may contain "{target_lang}"
    fixture: Optional[str] = None
    # Passthrough request parameters (model variant, formality, ...)
    params: Dict[str, Any] = Field(default_factory=dict)
    # Generic JSON adapter shape
    request_fields: Dict[str, str] = Field(
        default_factory=lambda: {"text": "text", "source": "source", "target": "target"}
    )
    response_path: str = "translation"
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    model: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == BackendKind.HTTP and not self.endpoint:
            raise ValueError(f"Http backend {self.name!r} needs an endpoint")
        if self.kind == BackendKind.TABLE and not self.fixture:
            raise ValueError(f"Table backend {self.name!r} needs a fixture file")
        return self

    def for_target(self, target_lang: str) -> "BackendSpec":
        return self.model_copy(update={"target_lang": target_lang})

    @property
    def fixture_path(self) -> Optional[Path]:
        if not self.fixture:
            return None
        return Path(self.fixture.format(target_lang=self.target_lang, source_lang=self.source_lang))


class CacheKey(BaseModel):
    model_config = ConfigDict(frozen=True)

    backend_name: str
    source_lang: str
    target_lang: str
    digest: str

    @classmethod
    def for_text(cls, backend: BackendSpec, wrapped: str) -> "CacheKey":
        return cls(
            backend_name=backend.name,
            source_lang=backend.source_lang,
            target_lang=backend.target_lang,
            digest=hashlib.sha256(wrapped.encode("utf-8")).hexdigest(),
        )


class TranslationRecord(BaseModel):
    index: int
    source: str
    condition_label: str
    wrapped: str
    raw_translation: str
    strip: StripOutcome
    backend_name: str
    from_cache: bool
    timestamp: int


class BleuScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    bleu: float = Field(ge=0.0, le=100.0)
    precisions: List[float]
    brevity_penalty: float = Field(ge=0.0, le=1.0)
    hyp_len: int
    ref_len: int
    length_ratio: float

    @field_validator("precisions")
    @classmethod
    def _four_orders(cls, value: List[float]):
        if len(value) != 4:
            raise ValueError("BLEU carries exactly four n-gram precisions")
        return value


class Annotation(BaseModel):
    """Published numbers carried into a report untouched"""

    label: str
    values: Dict[str, float]
    note: Optional[str] = None


class ConditionRow(BaseModel):
    condition: str
    # None when nothing was left to score (every translation dropped as unstripped)
    score: Optional[BleuScore] = None
    delta_vs_baseline: Optional[float] = None
    strip_rate: Optional[float] = None
    unstripped: int = 0
    bleu_other_policy: Optional[float] = None


class ConditionReport(BaseModel):
    rows: List[ConditionRow]
    metadata: Dict[str, Any] = Field(default_factory=dict)
    annotations: List[Annotation] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_baseline(self):
        baselines = [row for row in self.rows if row.condition == BASELINE_LABEL]
        if len(baselines) != 1:
            raise ValueError(f"a condition report needs exactly one baseline row, found {len(baselines)}")
        return self

    def row(self, condition: str) -> ConditionRow:
        for row in self.rows:
            if row.condition == condition:
                return row
        raise KeyError(condition)


class Token(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    form: str
    lemma: str
    upos: str
    feats: Dict[str, FrozenSet[str]] = Field(default_factory=dict)
    head: int
    deprel: str

    def feature(self, name: str) -> FrozenSet[str]:
        return self.feats.get(name, frozenset())


class ParsedSentence(BaseModel):
    model_config = ConfigDict(frozen=True)

    sentence_id: str
    tokens: List[Token]
    text: Optional[str] = None
    multiword_tokens: List[str] = Field(default_factory=list)
    empty_nodes: List[str] = Field(default_factory=list)

    def token(self, token_id: int) -> Optional[Token]:
        if 1 <= token_id <= len(self.tokens):
            return self.tokens[token_id - 1]
        return None

    def dependents(self, token_id: int) -> List[Token]:
        return [token for token in self.tokens if token.head == token_id]


class GenderLabel(str, Enum):
    MASCULINE = "Masculine"
    FEMININE = "Feminine"
    BOTH = "Both"
    UNMARKED = "Unmarked"


class Distribution(BaseModel):
    """Ordered category counts with exact proportions"""

    categories: List[str]
    counts: Dict[str, int] = Field(default_factory=dict)

    def count(self, category: str) -> int:
        return self.counts.get(category, 0)

    def add(self, category: str, amount: int = 1) -> None:
        if category not in self.categories:
            raise ValueError(f"unknown category {category!r}")
        self.counts[category] = self.counts.get(category, 0) + amount

    @property
    def total(self) -> int:
        return sum(self.count(category) for category in self.categories)

    def proportion(self, category: str, among: Optional[List[str]] = None) -> Optional[float]:
        """Share of `category` among `among` (default: all categories); None when undefined"""
        pool = among if among is not None else self.categories
        if category not in pool:
            return None
        denominator = sum(self.count(name) for name in pool)
        if denominator == 0:
            return None
        return float(Fraction(self.count(category), denominator))

    def merged(self, other: "Distribution") -> "Distribution":
        counts = {name: self.count(name) + other.count(name) for name in self.categories}
        return Distribution(categories=list(self.categories), counts=counts)


class MorphReport(BaseModel):
    condition: str
    sentences: int
    speaker: Distribution
    audience_number: Distribution
    audience_gender: Distribution
    audience_predicates: Distribution
    matched_items: int


class ExperimentConfig(BaseModel):
    backend: BackendSpec
    templates: Optional[Path] = None
    strip_rules: Optional[Path] = None
    conditions: Union[Literal["table1", "full-grid"], List[str]] = "table1"
    source_corpus: Path
    reference_corpus: Path
    cache: Path
    output_dir: Path
    drop_unstripped: bool = False
    lowercase_bleu: bool = False
    corpus_mode: Literal["tokenized", "raw"] = "tokenized"
    tokenizer: str = "none"
    max_in_flight: int = Field(default=4, ge=1)
    annotations: List[Annotation] = Field(default_factory=list)


class ProbeCase(BaseModel):
    model_config = ConfigDict(frozen=True)

    language: str
    source: str
    masculine_form: str
    feminine_form: str

    @model_validator(mode="after")
    def _distinct_forms(self):
        if self.masculine_form.casefold() == self.feminine_form.casefold():
            raise ValueError(f"{self.language}: masculine and feminine forms must differ")
        return self


class ProbeDetection(str, Enum):
    MASCULINE = "Masculine"
    FEMININE = "Feminine"
    NEITHER = "Neither"


class ProbeCaseResult(BaseModel):
    case: ProbeCase
    he_translation: str
    she_translation: str
    he_detected: ProbeDetection
    she_detected: ProbeDetection

    @property
    def success(self) -> bool:
        return (self.he_detected == ProbeDetection.MASCULINE
                and self.she_detected == ProbeDetection.FEMININE)


class ProbeResult(BaseModel):
    cases: List[ProbeCaseResult]

    @property
    def successes(self) -> int:
        return sum(1 for case in self.cases if case.success)

    @property
    def summary(self) -> float:
        return float(Fraction(self.successes, len(self.cases))) if self.cases else 0.0
