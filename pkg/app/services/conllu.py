"""CoNLL-U reader producing ParsedSentence objects.

Lines are parsed with the ``conllu`` package; this module adds the tree
checks (contiguous ids, heads in range, a single root) and reports
failures with their line number. Multiword ranges (``3-4``) and empty
nodes (``5.1``) are kept aside on the sentence by their raw IDs.
"""
import logging
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from conllu.exceptions import ParseException
from conllu.parser import DEFAULT_FIELDS, parse_comment_line, parse_dict_value, parse_line

from app.errors import ConlluError, MalformedLine, MissingRoot, NonContiguousIds
from app.models import ParsedSentence, Token

# Set up logging
logger = logging.getLogger(__name__)


def parse_feats(value: str, line_number: Optional[int] = None) -> Dict[str, FrozenSet[str]]:
    """Parse a FEATS column, e.g. ``Gender=Fem,Masc|Number=Sing``"""
    feats = {}
    for name, values in (parse_dict_value(value) or {}).items():
        if not values:
            raise MalformedLine(f"bad feature {name!r} in {value!r}", line_number)
        feats[name] = frozenset(values.split(","))
    return feats


class _SentenceBuilder:
    def __init__(self, ordinal: int):
        self.ordinal = ordinal
        self.sentence_id: Optional[str] = None
        self.text: Optional[str] = None
        self.rows: List[Tuple[int, str, dict]] = []
        self.multiword_tokens: List[str] = []
        self.empty_nodes: List[str] = []

    def comment(self, line: str) -> None:
        metadata = dict(parse_comment_line(line))
        if metadata.get("sent_id"):
            self.sentence_id = metadata["sent_id"].strip()
        if metadata.get("text"):
            self.text = metadata["text"].strip()

    def build(self) -> ParsedSentence:
        tokens = []
        size = len(self.rows)
        roots = []
        for expected, (line_number, feats, row) in enumerate(self.rows, start=1):
            token_id = row["id"]
            if token_id != expected:
                raise NonContiguousIds(f"token id {token_id}, expected {expected}", line_number)
            head = row.get("head")
            if not isinstance(head, int):
                raise MalformedLine(f"HEAD {head!r} is not a token id", line_number)
            if head > size:
                raise MalformedLine(f"HEAD {head} points past the last token ({size})", line_number)
            if head == token_id:
                raise MalformedLine(f"token {token_id} is its own head", line_number)
            if head == 0:
                roots.append(line_number)
                if len(roots) > 1:
                    raise MalformedLine("second root in sentence", line_number)
            tokens.append(Token(
                id=token_id,
                form=row.get("form") or "_",
                lemma=row.get("lemma") or "_",
                upos=row.get("upos") or "_",
                feats=parse_feats(feats, line_number),
                head=head,
                deprel=row.get("deprel") or "_",
            ))
        if not roots:
            first_line = self.rows[0][0] if self.rows else None
            raise MissingRoot("sentence has no token with HEAD 0", first_line)
        return ParsedSentence(
            sentence_id=self.sentence_id or str(self.ordinal),
            tokens=tokens,
            text=self.text,
            multiword_tokens=self.multiword_tokens,
            empty_nodes=self.empty_nodes,
        )


def _parse_row(line: str, line_number: int) -> Tuple[dict, List[str]]:
    columns = line.split("\t")
    if len(columns) != len(DEFAULT_FIELDS):
        raise MalformedLine(
            f"expected {len(DEFAULT_FIELDS)} tab-separated columns, found {len(columns)}", line_number
        )
    try:
        return parse_line(line, DEFAULT_FIELDS), columns
    except ParseException as e:
        raise MalformedLine(str(e), line_number) from e


def parse_conllu(document: str, source: Optional[str] = None) -> List[ParsedSentence]:
    """Parse a CoNLL-U document into sentences; errors carry the line number"""
    sentences: List[ParsedSentence] = []
    builder = _SentenceBuilder(1)
    try:
        for line_number, line in enumerate(document.splitlines(), start=1):
            line = line.rstrip("\r")
            if not line.strip():
                if builder.rows:
                    sentences.append(builder.build())
                    builder = _SentenceBuilder(len(sentences) + 1)
                continue
            if line.startswith("#"):
                builder.comment(line)
                continue

            row, columns = _parse_row(line, line_number)
            token_id = row["id"]
            if isinstance(token_id, int):
                builder.rows.append((line_number, columns[5], row))
            elif isinstance(token_id, tuple) and token_id[1] == "-":
                builder.multiword_tokens.append(columns[0])
            elif isinstance(token_id, tuple) and token_id[1] == ".":
                builder.empty_nodes.append(columns[0])
            else:
                raise MalformedLine(f"bad token id {columns[0]!r}", line_number)

        if builder.rows:
            sentences.append(builder.build())
    except ConlluError as e:
        if source and not e.source:
            e.source = source
            e.args = (f"{source}: {e.args[0]}",)
        raise

    logger.debug(f"Parsed {len(sentences)} sentences{' from ' + source if source else ''}")
    return sentences


def read_conllu_file(path: Union[str, Path]) -> List[ParsedSentence]:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            document = f.read()
    except OSError as e:
        raise ConlluError(f"cannot read file: {e.strerror or e}", source=str(path)) from e
    except UnicodeDecodeError as e:
        raise ConlluError(f"not valid UTF-8 at byte {e.start}", source=str(path)) from e
    return parse_conllu(document, source=str(path))
