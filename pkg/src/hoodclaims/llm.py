"""Claim labeling through a chat-completion service.

Each listing spawns up to three independent requests, one per text field,
so no field's content leaks into another's prompt. Responses are parsed
back to canonical names, cached append-only by request fingerprint, and
combined with the same title > body > neighborhood-field cascade used by
string matching. With a warm cache (or a recorded transcript) the whole
workflow runs offline and byte-deterministically.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable

import httpx

from .claims import (
    FIELD_BODY,
    FIELD_NEIGHBORHOOD,
    FIELD_TITLE,
    ClaimLabel,
    FieldMatch,
    match_field,
    resolve_claim,
)
from .corpus import CleanListing
from .gazetteer import UNKNOWN, Gazetteer, NormalizationTable, normalize_label

log = logging.getLogger(__name__)

PROMPT_VERSION = "claim_prompt_v1"

PARSE_CLEAN = "clean"
PARSE_REPAIRED = "repaired"
PARSE_UNPARSEABLE = "unparseable"

_INTENTIONAL_UNKNOWN = {"unknown", "none", "n/a"}


@dataclass(frozen=True)
class PromptRequest:
    field: str
    text: str
    allowed: tuple[str, ...]
    model_id: str
    temperature: float


@dataclass(frozen=True)
class ParsedLabel:
    label: str
    parse_status: str


@dataclass
class LlmConfig:
    model_id: str = "gpt-4.1-mini"
    temperature: float = 0.0
    max_rpm: int = 60
    cache_path: str | Path = "llm_cache.jsonl"
    offline: bool = False
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    max_workers: int = 4
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.5
    template_path: str | Path | None = None


@dataclass(frozen=True)
class AnnotationFailure:
    listing_id: str
    field: str
    message: str


@dataclass
class AnnotationReport:
    listings: int
    labeled: int
    network_calls: int
    cache_hits: int
    skipped_empty_fields: int
    failed_listings: int
    elapsed_seconds: float
    mean_call_seconds: float | None


@dataclass
class AnnotationRun:
    labels: list[ClaimLabel]
    failures: list[AnnotationFailure]
    report: AnnotationReport


class AnnotationError(RuntimeError):
    pass


def load_prompt_template(path: str | Path | None = None) -> str:
    if path is None:
        return resources.files("hoodclaims.data").joinpath(f"{PROMPT_VERSION}.txt").read_text("utf-8")
    return Path(path).read_text(encoding="utf-8")


def build_prompt(request: PromptRequest, template: str | None = None) -> str:
    """Fill the versioned template; substitution is literal, no escaping."""
    if not request.allowed:
        raise ValueError("allowed list must not be empty")
    if template is None:
        template = load_prompt_template()
    return template.replace("{body}", request.text).replace(
        "{zillow_list}", ", ".join(request.allowed)
    )


def fingerprint(request: PromptRequest, prompt_version: str = PROMPT_VERSION) -> str:
    """Stable id for one request; collisions imply byte-identical requests."""
    payload = json.dumps(
        [request.field, request.text, list(request.allowed), request.model_id, prompt_version],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


_FRAME_RE = re.compile(r"label\s*:\s*(.+)", re.IGNORECASE | re.DOTALL)


def parse_response(
    raw_text: str, table: NormalizationTable, gazetteer: Gazetteer
) -> ParsedLabel:
    """Recover a canonical label from model output; degrades to unknown.

    Strips the ``label:`` framing and brackets, keeps the first segment
    before a comma or slash, lowercases, and runs spelling normalization.
    A segment that still does not resolve (free-text wrappers like "The
    neighborhood is X") gets a gazetteer scan, earliest match winning.
    ``clean`` means the framed answer needed none of the repairs.
    """
    text = (raw_text or "").strip()
    if not text:
        return ParsedLabel(UNKNOWN, PARSE_UNPARSEABLE)
    framed = _FRAME_RE.search(text)
    candidate = framed.group(1) if framed else text
    candidate = candidate.strip().strip("[]").strip()
    had_separator = bool(re.search(r"[,/]", candidate))
    segment = re.split(r"[,/]", candidate, maxsplit=1)[0]
    candidate = segment.strip().strip("[]").strip("\"'`").rstrip(".!").strip().lower()

    resolved = normalize_label(candidate, table, gazetteer)
    if resolved == UNKNOWN and candidate not in _INTENTIONAL_UNKNOWN:
        scanned = match_field(segment, gazetteer, "response")
        if scanned:
            return ParsedLabel(scanned[0].canonical, PARSE_REPAIRED)
        return ParsedLabel(UNKNOWN, PARSE_UNPARSEABLE)
    needed_table = resolved != candidate and resolved != UNKNOWN
    spoke_unknown = candidate != "unknown" and resolved == UNKNOWN
    if framed and not had_separator and not needed_table and not spoke_unknown:
        return ParsedLabel(resolved, PARSE_CLEAN)
    return ParsedLabel(resolved, PARSE_REPAIRED)


class ResponseCache:
    """Append-only JSONL store of raw responses keyed by fingerprint.

    The same format doubles as a recorded transcript for offline runs.
    Later entries for a fingerprint supersede earlier ones.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with self.path.open(encoding="utf-8") as handle:
                for lineno, line in enumerate(handle, start=1):
                    if not line.strip():
                        continue
                    try:
                        record = json.loads(line)
                        self._entries[record["fingerprint"]] = record["raw_text"]
                    except (json.JSONDecodeError, KeyError, TypeError):
                        raise ValueError(f"{self.path}:{lineno}: malformed cache record")
            log.info("loaded %d cached responses from %s", len(self._entries), self.path)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._entries.get(key)

    def append(self, key: str, raw_text: str) -> None:
        record = {
            "fingerprint": key,
            "raw_text": raw_text,
            "received_at": datetime.now(timezone.utc).isoformat(),
        }
        line = json.dumps(record, ensure_ascii=False)
        with self._lock:
            self._entries[key] = raw_text
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")
                handle.flush()


class _RateLimiter:
    def __init__(self, max_rpm: int):
        self.interval = 60.0 / max_rpm if max_rpm > 0 else 0.0
        self._lock = threading.Lock()
        self._next_start = 0.0

    def wait(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next_start)
            self._next_start = start + self.interval
        delay = start - now
        if delay > 0:
            time.sleep(delay)


class _ServerError(Exception):
    pass


class HttpChatClient:
    """Minimal chat-completions client with retries and rate limiting."""

    def __init__(self, config: LlmConfig):
        api_key = os.environ.get(config.api_key_env, "")
        if not api_key:
            raise AnnotationError(
                f"no credentials: set {config.api_key_env} or run with offline=True"
            )
        self.config = config
        self._limiter = _RateLimiter(config.max_rpm)
        self._client = httpx.Client(
            base_url=config.base_url,
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=config.timeout,
        )

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            self._limiter.wait()
            try:
                response = self._client.post("/chat/completions", json=payload)
                if response.status_code >= 500:
                    raise _ServerError(f"server error {response.status_code}")
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (httpx.TransportError, _ServerError) as exc:
                last_error = exc
                if attempt + 1 < self.config.retries:
                    time.sleep(self.config.backoff * 2**attempt)
            except (httpx.HTTPStatusError, KeyError, ValueError) as exc:
                raise AnnotationError(f"chat completion failed: {exc}") from exc
        raise AnnotationError(f"transport failed after {self.config.retries} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()


@dataclass
class _ListingOutcome:
    label: ClaimLabel | None
    failures: list[AnnotationFailure]
    cache_hits: int
    network_calls: int
    skipped_empty: int
    call_seconds: list[float] = field(default_factory=list)


def _field_texts(listing: CleanListing) -> list[tuple[str, str]]:
    return [
        (FIELD_TITLE, listing.cleaned_title.strip()),
        (FIELD_BODY, listing.cleaned_body.strip()),
        (FIELD_NEIGHBORHOOD, (listing.neighborhood_field or "").strip()),
    ]


def annotate_listing(
    listing: CleanListing,
    gazetteer: Gazetteer,
    table: NormalizationTable,
    config: LlmConfig,
    cache: ResponseCache,
    client: HttpChatClient | None = None,
    template: str | None = None,
) -> _ListingOutcome:
    """Three independent per-field requests, then the shared cascade.

    A transport failure or an offline cache miss on any field marks the
    whole listing failed; empty fields skip their call and act unknown.
    """
    allowed = tuple(gazetteer.canonicals)
    outcome = _ListingOutcome(None, [], 0, 0, 0)
    parsed: dict[str, ParsedLabel] = {}
    for field_name, text in _field_texts(listing):
        if not text:
            outcome.skipped_empty += 1
            parsed[field_name] = ParsedLabel(UNKNOWN, PARSE_CLEAN)
            continue
        request = PromptRequest(
            field=field_name,
            text=text,
            allowed=allowed,
            model_id=config.model_id,
            temperature=config.temperature,
        )
        key = fingerprint(request)
        raw = cache.get(key)
        if raw is not None:
            outcome.cache_hits += 1
        else:
            if client is None:
                outcome.failures.append(
                    AnnotationFailure(listing.id, field_name, f"cache miss offline ({key})")
                )
                return outcome
            try:
                started = time.monotonic()
                raw = client.complete(build_prompt(request, template))
                outcome.call_seconds.append(time.monotonic() - started)
            except AnnotationError as exc:
                outcome.failures.append(AnnotationFailure(listing.id, field_name, str(exc)))
                return outcome
            cache.append(key, raw)
            outcome.network_calls += 1
        parsed[field_name] = parse_response(raw, table, gazetteer)

    def as_matches(field_name: str) -> list[FieldMatch]:
        label = parsed[field_name]
        if label.label == UNKNOWN:
            return []
        return [FieldMatch(canonical=label.label, offset=0, length=0, field=field_name)]

    outcome.label = resolve_claim(
        listing.id,
        as_matches(FIELD_TITLE),
        as_matches(FIELD_BODY),
        as_matches(FIELD_NEIGHBORHOOD),
        method="llm",
    )
    return outcome


def annotate_corpus(
    listings: Iterable[CleanListing],
    gazetteer: Gazetteer,
    table: NormalizationTable,
    config: LlmConfig,
) -> AnnotationRun:
    """Label a corpus with bounded fan-out and an append-only cache.

    Results keep listing order. A rerun against a warm cache makes no
    network calls and reproduces the labels exactly.
    """
    listings = list(listings)
    cache = ResponseCache(config.cache_path)
    client = None if config.offline else HttpChatClient(config)
    template = load_prompt_template(config.template_path)
    started = time.monotonic()
    try:
        workers = max(1, config.max_workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    lambda l: annotate_listing(l, gazetteer, table, config, cache, client, template),
                    listings,
                )
            )
    finally:
        if client is not None:
            client.close()
    elapsed = time.monotonic() - started

    labels = [o.label for o in outcomes if o.label is not None]
    failures = [f for o in outcomes for f in o.failures]
    call_seconds = [s for o in outcomes for s in o.call_seconds]
    report = AnnotationReport(
        listings=len(listings),
        labeled=len(labels),
        network_calls=sum(o.network_calls for o in outcomes),
        cache_hits=sum(o.cache_hits for o in outcomes),
        skipped_empty_fields=sum(o.skipped_empty for o in outcomes),
        failed_listings=len(listings) - len(labels),
        elapsed_seconds=elapsed,
        mean_call_seconds=sum(call_seconds) / len(call_seconds) if call_seconds else None,
    )
    if failures:
        log.warning("%d fields failed across %d listings", len(failures), report.failed_listings)
    return AnnotationRun(labels=labels, failures=failures, report=report)
