import json
import logging
import os
import threading
from pathlib import Path
from typing import Dict, Optional, Union

from app.errors import CorruptCacheLine
from app.models import CacheKey

# Set up logging
logger = logging.getLogger(__name__)


class TranslationCache:
    """Append-only JSON-lines cache of raw backend translations.

    Each line holds the key fields and the raw translation. On load the
    last line for a key wins; unreadable lines are skipped with a warning.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._entries: Dict[CacheKey, str] = {}
        self._lock = threading.Lock()
        self.skipped_lines = 0
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    key, translation = self._decode(line, line_number)
                except CorruptCacheLine as e:
                    self.skipped_lines += 1
                    logger.warning(f"{self.path}: {e} (skipped)")
                    continue
                self._entries[key] = translation
        logger.info(f"Loaded {len(self._entries)} cached translations from {self.path}")

    @staticmethod
    def _decode(line: str, line_number: int):
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorruptCacheLine(line_number, f"invalid JSON ({e.msg})") from e
        if not isinstance(data, dict):
            raise CorruptCacheLine(line_number, "not a JSON object")
        try:
            key = CacheKey(
                backend_name=data["backend"],
                source_lang=data["source_lang"],
                target_lang=data["target_lang"],
                digest=data["digest"],
            )
            translation = data["translation"]
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptCacheLine(line_number, f"missing or invalid field ({e})") from e
        if not isinstance(translation, str):
            raise CorruptCacheLine(line_number, "translation is not text")
        return key, translation

    def get(self, key: CacheKey) -> Optional[str]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: CacheKey, translation: str, wrapped: Optional[str] = None) -> None:
        """Store a translation in memory and append it to the cache file"""
        record = {
            "backend": key.backend_name,
            "source_lang": key.source_lang,
            "target_lang": key.target_lang,
            "digest": key.digest,
            "wrapped": wrapped,
            "translation": translation,
        }
        with self._lock:
            self._entries[key] = translation
            if self.path is None:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
                f.flush()
                os.fsync(f.fileno())

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: CacheKey) -> bool:
        return self.get(key) is not None


def cache_get(cache: TranslationCache, key: CacheKey) -> Optional[str]:
    return cache.get(key)


def cache_put(cache: TranslationCache, key: CacheKey, translation: str) -> None:
    cache.put(key, translation)
