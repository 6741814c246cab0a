import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Sequence

import requests
from openai import OpenAI
import openai

from app.config import settings
from app.errors import (
    AuthError,
    BackendError,
    DataError,
    EmptyInput,
    MissingFixture,
    NetworkError,
    QuotaError,
)
from app.models import (
    BackendKind,
    BackendSpec,
    CacheKey,
    HintCondition,
    PrefixTemplateSet,
    StripRuleSet,
    TranslationRecord,
)
from app.services.cache import TranslationCache
from app.services.hint_grammar import render_prefix
from app.services.wrap_strip import not_applicable, strip, wrap

# Set up logging
logger = logging.getLogger(__name__)


class TranslationBackend:
    """A black-box translator: wrapped source text in, target text out"""

    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self.calls = 0
        self._calls_lock = threading.Lock()

    def translate(self, text: str) -> str:
        with self._calls_lock:
            self.calls += 1
        return self._translate(text)

    def _translate(self, text: str) -> str:
        raise NotImplementedError


class EchoBackend(TranslationBackend):
    """Returns its input; used to test the wrap/strip chain"""

    def _translate(self, text: str) -> str:
        return text


class TableBackend(TranslationBackend):
    """Replays translations from a TSV fixture (wrapped text <TAB> translation)"""

    def __init__(self, spec: BackendSpec):
        super().__init__(spec)
        self.path = spec.fixture_path
        self.table = load_fixture_table(self.path)

    def _translate(self, text: str) -> str:
        try:
            return self.table[text]
        except KeyError:
            raise MissingFixture(f"No fixture row in {self.path} for: {text[:80]!r}") from None


class HttpBackend(TranslationBackend):
    """Generic JSON adapter over HTTP.

    The request body maps the configured field names to the text and the
    language pair, plus any passthrough params; the translation is read
    from a dotted path in the response body.
    """

    def __init__(self, spec: BackendSpec, session: Optional[requests.Session] = None):
        super().__init__(spec)
        self.api_key = _read_credentials(spec)
        # an injected session is shared as is; otherwise each pool thread opens its own
        self._session = session
        self._local = threading.local()
        self.timeout = settings.HTTP_TIMEOUT

    @property
    def session(self) -> requests.Session:
        if self._session is not None:
            return self._session
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            scheme = f"{self.spec.auth_scheme} " if self.spec.auth_scheme else ""
            headers[self.spec.auth_header] = f"{scheme}{self.api_key}"
        return headers

    def _payload(self, text: str) -> Dict[str, Any]:
        fields = self.spec.request_fields
        payload: Dict[str, Any] = dict(self.spec.params)
        payload[fields.get("text", "text")] = text
        if fields.get("source"):
            payload[fields["source"]] = self.spec.source_lang
        if fields.get("target"):
            payload[fields["target"]] = self.spec.target_lang
        return payload

    def _translate(self, text: str) -> str:
        try:
            response = self.session.post(
                self.spec.endpoint,
                json=self._payload(text),
                headers=self._headers(),
                timeout=self.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as e:
            raise NetworkError(f"{self.spec.name}: request failed: {e}") from e
        except requests.RequestException as e:
            raise BackendError(f"{self.spec.name}: request failed: {e}") from e

        status_code = response.status_code
        if status_code in (401, 403):
            raise AuthError(f"{self.spec.name}: credentials rejected (HTTP {status_code})")
        if status_code == 429:
            raise QuotaError(
                f"{self.spec.name}: quota exceeded (HTTP 429)",
                retry_after=_parse_retry_after(response.headers.get("Retry-After")),
            )
        if status_code >= 500:
            raise NetworkError(f"{self.spec.name}: service unavailable (HTTP {status_code})")
        if status_code >= 400:
            raise BackendError(f"{self.spec.name}: request rejected (HTTP {status_code}): {response.text[:200]}")

        try:
            body = response.json()
        except ValueError as e:
            raise BackendError(f"{self.spec.name}: response is not JSON") from e
        translation = _dig(body, self.spec.response_path)
        if not isinstance(translation, str):
            raise BackendError(f"{self.spec.name}: no text at response path {self.spec.response_path!r}")
        return translation


class OpenAIBackend(TranslationBackend):
    """Chat-completion model used as a black-box translator"""

    def __init__(self, spec: BackendSpec, client: Optional[OpenAI] = None):
        super().__init__(spec)
        if client is None:
            api_key = _read_credentials(spec) if spec.credentials_env else os.getenv("OPENAI_API_KEY")
            if not api_key:
                raise AuthError(f"{spec.name}: {spec.credentials_env or 'OPENAI_API_KEY'} is not set")
            client = OpenAI(api_key=api_key, base_url=spec.endpoint or None)
        self.client = client
        self.model = spec.model or settings.OPENAI_MODEL

    def _create_translation_prompt(self, text: str) -> str:
        return (
            f"Translate the following {self.spec.source_lang} text into {self.spec.target_lang}. "
            f"Reply with the translation only, keeping any leading clause such as \"She said:\".\n\n"
            f"{text}"
        )

    def _translate(self, text: str) -> str:
        try:
            response = self.client.chat.completions.create(
                model=self.model,
                messages=[
                    {"role": "system", "content": "You are a professional translator."},
                    {"role": "user", "content": self._create_translation_prompt(text)},
                ],
                temperature=0,
                **self.spec.params,
            )
        except openai.AuthenticationError as e:
            raise AuthError(f"{self.spec.name}: invalid OpenAI API key") from e
        except openai.RateLimitError as e:
            retry_after = None
            if getattr(e, "response", None) is not None:
                retry_after = _parse_retry_after(e.response.headers.get("retry-after"))
            raise QuotaError(f"{self.spec.name}: OpenAI rate limit exceeded", retry_after=retry_after) from e
        except (openai.APIConnectionError, openai.APITimeoutError) as e:
            raise NetworkError(f"{self.spec.name}: OpenAI API unreachable: {e}") from e
        except openai.APIStatusError as e:
            if e.status_code >= 500:
                raise NetworkError(f"{self.spec.name}: OpenAI API temporarily unavailable") from e
            raise BackendError(f"{self.spec.name}: OpenAI request rejected (HTTP {e.status_code})") from e

        content = response.choices[0].message.content or ""
        return content.strip()


_BACKENDS: Dict[BackendKind, Callable[[BackendSpec], TranslationBackend]] = {
    BackendKind.ECHO: EchoBackend,
    BackendKind.TABLE: TableBackend,
    BackendKind.HTTP: HttpBackend,
    BackendKind.OPENAI: OpenAIBackend,
}


# Factory function to create a backend instance
def get_backend(spec: BackendSpec) -> TranslationBackend:
    """Get a backend instance for a spec"""
    return _BACKENDS[spec.kind](spec)


def load_fixture_table(path) -> Dict[str, str]:
    """Read a headerless UTF-8 TSV of wrapped text to translation; last row wins"""
    table: Dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                source, tab, translation = line.partition("\t")
                if not tab:
                    raise DataError(f"{path}: line {line_number}: expected wrapped text and translation separated by a tab")
                table[source] = translation
    except OSError as e:
        raise DataError(f"Cannot read fixture table {path}: {e}") from e
    logger.info(f"Loaded {len(table)} fixture translations from {path}")
    return table


def _read_credentials(spec: BackendSpec) -> Optional[str]:
    if not spec.credentials_env:
        return None
    value = os.getenv(spec.credentials_env)
    if not value:
        raise AuthError(f"{spec.name}: environment variable {spec.credentials_env} is not set")
    return value


def _parse_retry_after(value: Optional[str]) -> Optional[float]:
    if not value:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


def _dig(body: Any, path: str) -> Any:
    current = body
    for part in path.split("."):
        if isinstance(current, list):
            try:
                current = current[int(part)]
            except (ValueError, IndexError):
                return None
        elif isinstance(current, dict):
            current = current.get(part)
        else:
            return None
    return current


def translate_one(
    wrapped: str,
    backend: TranslationBackend,
    attempts: Optional[int] = None,
    base_delay: Optional[float] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Translate one wrapped sentence, retrying transient failures with exponential backoff"""
    attempts = attempts or settings.RETRY_ATTEMPTS
    base_delay = settings.RETRY_BASE_DELAY if base_delay is None else base_delay

    for attempt in range(attempts):
        try:
            return backend.translate(wrapped)
        except BackendError as e:
            if not e.retryable or attempt == attempts - 1:
                raise
            delay = base_delay * (2 ** attempt)
            if isinstance(e, QuotaError) and e.retry_after is not None:
                delay = e.retry_after
            logger.warning(
                f"Backend {backend.spec.name} attempt {attempt + 1}/{attempts} failed: {e}. "
                f"Retrying in {delay:.1f}s"
            )
            sleep(delay)
    raise NetworkError(f"{backend.spec.name}: translation failed after {attempts} attempts")


def translate_corpus(
    sentences: Sequence[str],
    condition: HintCondition,
    backend: TranslationBackend,
    cache: TranslationCache,
    rules: StripRuleSet,
    templates: PrefixTemplateSet,
    max_in_flight: Optional[int] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> List[TranslationRecord]:
    """Wrap, translate (cache first) and strip every sentence under one condition.

    Misses go to the backend through a bounded pool. Each result is cached
    as soon as it arrives (by this thread only), so a failing run keeps the
    translations it already got; records come back in input order.
    """
    if not sentences:
        raise EmptyInput("translate_corpus needs at least one sentence")

    prefix = render_prefix(condition, templates)
    wrapped = [wrap(sentence, prefix, templates.separator) for sentence in sentences]
    keys = [CacheKey.for_text(backend.spec, item.wrapped) for item in wrapped]

    raw: Dict[int, str] = {}
    from_cache = set()
    missing = []
    for index, key in enumerate(keys):
        cached = cache.get(key)
        if cached is not None:
            raw[index] = cached
            from_cache.add(index)
        else:
            missing.append(index)
    logger.info(
        f"Condition {condition.label}: {len(from_cache)} cached, {len(missing)} to translate via {backend.spec.name}"
    )

    if missing:
        workers = max(1, max_in_flight or settings.MAX_IN_FLIGHT)
        failure = None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(translate_one, wrapped[index].wrapped, backend, sleep=sleep): index
                for index in missing
            }
            # results reach the cache as they complete, always from this thread
            for future in as_completed(futures):
                index = futures[future]
                if future.cancelled():
                    continue
                error = future.exception()
                if error is not None:
                    if failure is None or index < failure[0]:
                        failure = (index, error)
                    for other in futures:
                        other.cancel()
                    continue
                raw[index] = future.result()
                cache.put(keys[index], raw[index], wrapped=wrapped[index].wrapped)

        if failure is not None:
            index, error = failure
            logger.error(f"Condition {condition.label}: sentence {index} failed: {error}")
            if isinstance(error, BackendError):
                raise error.annotate(index, condition.label)
            raise BackendError(str(error)).annotate(index, condition.label) from error

    timestamp = int(datetime.now(timezone.utc).timestamp())
    records = []
    unstripped = 0
    for index, item in enumerate(wrapped):
        if condition.is_baseline:
            outcome = not_applicable(raw[index])
        else:
            outcome = strip(raw[index], rules)
            if not outcome.succeeded:
                unstripped += 1
        records.append(TranslationRecord(
            index=index,
            source=item.original,
            condition_label=condition.label,
            wrapped=item.wrapped,
            raw_translation=raw[index],
            strip=outcome,
            backend_name=backend.spec.name,
            from_cache=index in from_cache,
            timestamp=timestamp,
        ))
    if unstripped:
        logger.info(f"Condition {condition.label}: {unstripped}/{len(records)} translations kept their prefix")
    return records
