import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, List, Sequence, Tuple, Union

from pydantic import ValidationError

from app.errors import CorpusLengthMismatch, DataError, EmptyInput
from app.models import TranslationRecord

# Set up logging
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class FileHandler:
    """Reads corpora and archives, writes reports"""

    @staticmethod
    def read_corpus(path: PathLike) -> List[str]:
        """Read a UTF-8 corpus with one sentence per line"""
        logger.debug(f"Reading corpus: {path}")
        try:
            with open(path, encoding="utf-8") as f:
                lines = [line.rstrip("\r\n") for line in f]
        except FileNotFoundError as e:
            logger.error(f"Corpus not found: {path}")
            raise DataError(f"Corpus file not found: {path}") from e
        except UnicodeDecodeError as e:
            raise DataError(f"Corpus {path} is not valid UTF-8: {e}") from e
        except OSError as e:
            raise DataError(f"Cannot read corpus {path}: {e}") from e

        if not lines:
            raise EmptyInput(f"Corpus {path} is empty")
        logger.info(f"Read {len(lines)} sentences from {path}")
        return lines

    @staticmethod
    def read_parallel_corpus(source_path: PathLike, reference_path: PathLike) -> Tuple[List[str], List[str]]:
        """Read source and reference corpora, which must align line by line"""
        sources = FileHandler.read_corpus(source_path)
        references = FileHandler.read_corpus(reference_path)
        if len(sources) != len(references):
            raise CorpusLengthMismatch(
                f"{source_path} has {len(sources)} lines but {reference_path} has {len(references)}"
            )
        return sources, references

    @staticmethod
    def ensure_directory(path: PathLike) -> Path:
        """Ensure an output directory exists"""
        path = Path(path)
        try:
            path.mkdir(parents=True, exist_ok=True)
            logger.debug(f"Output directory ensured: {path}")
        except OSError as e:
            logger.error(f"Failed to create output directory {path}: {e}")
            raise DataError(f"Failed to create output directory {path}: {e}") from e
        return path

    @staticmethod
    def write_csv(path: PathLike, rows: Sequence[Sequence[Any]]) -> Path:
        path = Path(path)
        FileHandler.ensure_directory(path.parent)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerows(rows)
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def write_json(path: PathLike, data: Any) -> Path:
        path = Path(path)
        FileHandler.ensure_directory(path.parent)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
            f.write("\n")
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def read_json(path: PathLike) -> Any:
        try:
            with open(path, encoding="utf-8") as f:
                return json.load(f)
        except OSError as e:
            raise DataError(f"Cannot read {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise DataError(f"{path} is not valid JSON: {e}") from e

    @staticmethod
    def write_records(path: PathLike, records: Sequence[TranslationRecord]) -> Path:
        """Write the records archive, one JSON object per line"""
        path = Path(path)
        FileHandler.ensure_directory(path.parent)
        tmp_path = path.with_suffix(path.suffix + ".tmp")
        with open(tmp_path, "w", encoding="utf-8") as f:
            for record in records:
                f.write(record.model_dump_json() + "\n")
        os.replace(tmp_path, path)
        logger.info(f"Wrote {len(records)} translation records to {path}")
        return path

    @staticmethod
    def read_records(path: PathLike) -> List[TranslationRecord]:
        records = []
        try:
            with open(path, encoding="utf-8") as f:
                for line_number, line in enumerate(f, start=1):
                    if not line.strip():
                        continue
                    try:
                        records.append(TranslationRecord.model_validate_json(line))
                    except ValidationError as e:
                        raise DataError(f"{path}: line {line_number}: invalid record: {e}") from e
        except OSError as e:
            raise DataError(f"Cannot read records archive {path}: {e}") from e
        if not records:
            raise EmptyInput(f"Records archive {path} is empty")
        logger.info(f"Read {len(records)} translation records from {path}")
        return records
