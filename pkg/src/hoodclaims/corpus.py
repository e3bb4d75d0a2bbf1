"""Listing ingestion, text cleaning, and duplicate collapsing.

Input is scraped rental listings in JSONL or CSV (one record per listing,
see FORMATS.md for the column contract). Ingestion validates each row,
reports schema violations with line numbers, and keeps going. Cleaning
repairs mojibake, strips boilerplate phrases, and collapses whitespace.
Reposts are collapsed on identical cleaned title and body, keeping the
most recent version.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

LISTING_COLUMNS = (
    "id",
    "title",
    "body",
    "neighborhood",
    "latitude",
    "longitude",
    "rent",
    "bedrooms",
    "bathrooms",
    "sqft",
    "posted_at",
)


@dataclass
class RawListing:
    """One listing as ingested, before cleaning."""

    id: str
    title: str = ""
    body: str = ""
    neighborhood_field: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    rent: float | None = None
    bedrooms: float | None = None
    bathrooms: float | None = None
    square_footage: float | None = None
    posted_at: datetime | None = None

    def has_coordinates(self) -> bool:
        return self.latitude is not None and self.longitude is not None


@dataclass
class CleanListing(RawListing):
    """A listing with cleaned text attached; set by :func:`clean_listing`."""

    cleaned_title: str = ""
    cleaned_body: str = ""
    duplicate_of: str | None = None


@dataclass(frozen=True)
class RowIssue:
    """A per-row problem found during ingestion."""

    line: int
    listing_id: str | None
    message: str


@dataclass
class IngestResult:
    listings: list[RawListing]
    errors: list[RowIssue]
    warnings: list[RowIssue]


@dataclass
class CorpusStats:
    raw_count: int
    kept_count: int
    dropped_duplicates: int


def _parse_float(value, name: str) -> float | None:
    if value is None or value == "":
        return None
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} is not a number: {value!r}")
    if number != number:
        raise ValueError(f"{name} is NaN")
    return number


def _parse_timestamp(value) -> datetime | None:
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise ValueError(f"posted_at is not an ISO 8601 string: {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"posted_at is not ISO 8601: {value!r}")
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(timezone.utc).replace(tzinfo=None)
    return stamp


def _listing_from_record(record: dict, line: int, issues: list[RowIssue]) -> RawListing:
    raw_id = record.get("id")
    if raw_id is None or str(raw_id).strip() == "":
        raise ValueError("missing id")
    listing_id = str(raw_id).strip()

    latitude = _parse_float(record.get("latitude"), "latitude")
    longitude = _parse_float(record.get("longitude"), "longitude")
    if latitude is not None and not -90.0 <= latitude <= 90.0:
        raise ValueError(f"latitude out of range: {latitude}")
    if longitude is not None and not -180.0 <= longitude <= 180.0:
        raise ValueError(f"longitude out of range: {longitude}")
    if (latitude is None) != (longitude is None):
        # Half a coordinate is no coordinate.
        issues.append(RowIssue(line, listing_id, "partial coordinates dropped"))
        latitude = longitude = None
    elif latitude is None:
        issues.append(RowIssue(line, listing_id, "missing coordinates"))

    rent = _parse_float(record.get("rent"), "rent")
    if rent is not None and rent < 0:
        raise ValueError(f"rent out of range: {rent}")
    bedrooms = _parse_float(record.get("bedrooms"), "bedrooms")
    bathrooms = _parse_float(record.get("bathrooms"), "bathrooms")
    sqft = _parse_float(record.get("sqft"), "sqft")
    for name, number in (("bedrooms", bedrooms), ("bathrooms", bathrooms), ("sqft", sqft)):
        if number is not None and number < 0:
            raise ValueError(f"{name} out of range: {number}")

    posted_at = _parse_timestamp(record.get("posted_at"))
    if posted_at is None:
        issues.append(RowIssue(line, listing_id, "missing posted_at"))

    neighborhood = record.get("neighborhood")
    if neighborhood is not None:
        neighborhood = str(neighborhood)
        if neighborhood.strip() == "":
            neighborhood = None

    return RawListing(
        id=listing_id,
        title=str(record.get("title") or ""),
        body=str(record.get("body") or ""),
        neighborhood_field=neighborhood,
        latitude=latitude,
        longitude=longitude,
        rent=rent,
        bedrooms=bedrooms,
        bathrooms=bathrooms,
        square_footage=sqft,
        posted_at=posted_at,
    )


def _iter_records(path: Path, fmt: str):
    """Yield (line_number, record_dict_or_error) pairs."""
    if fmt == "jsonl":
        with path.open(encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield line_no, ValueError(f"invalid JSON: {exc.msg}")
                    continue
                if not isinstance(record, dict):
                    yield line_no, ValueError("record is not an object")
                    continue
                yield line_no, record
    elif fmt == "csv":
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            missing = [c for c in LISTING_COLUMNS if c not in header]
            if missing:
                raise ValueError(
                    f"{path}: CSV header missing columns: {', '.join(missing)}"
                )
            for record in reader:
                yield reader.line_num, {k: record.get(k) for k in LISTING_COLUMNS}
    else:
        raise ValueError(f"unknown corpus format: {fmt!r} (expected jsonl or csv)")


def ingest(path: str | Path, fmt: str = "jsonl") -> IngestResult:
    """Read and validate a listing file.

    Rows that violate the schema are excluded and reported in ``errors``
    with their line numbers; recoverable gaps (missing coordinates or
    timestamps) produce ``warnings`` and keep the row.
    """
    path = Path(path)
    listings: list[RawListing] = []
    errors: list[RowIssue] = []
    warnings: list[RowIssue] = []
    seen_ids: set[str] = set()
    for line_no, record in _iter_records(path, fmt):
        if isinstance(record, Exception):
            errors.append(RowIssue(line_no, None, str(record)))
            continue
        row_warnings: list[RowIssue] = []
        try:
            listing = _listing_from_record(record, line_no, row_warnings)
        except ValueError as exc:
            errors.append(RowIssue(line_no, record.get("id"), str(exc)))
            continue
        if listing.id in seen_ids:
            errors.append(RowIssue(line_no, listing.id, "duplicate id"))
            continue
        seen_ids.add(listing.id)
        warnings.extend(row_warnings)
        listings.append(listing)
    log.info(
        "ingested %d listings from %s (%d errors, %d warnings)",
        len(listings), path, len(errors), len(warnings),
    )
    return IngestResult(listings=listings, errors=errors, warnings=warnings)


class CleaningRules:
    """Compiled mojibake replacements and boilerplate phrase patterns."""

    def __init__(self, boilerplate: Iterable[str] = (), mojibake: dict[str, str] | None = None):
        self.boilerplate = [p for p in (p.strip() for p in boilerplate) if p]
        self.mojibake = dict(mojibake or {})
        # Longer keys first so compound sequences win over their prefixes.
        self._mojibake_order = sorted(self.mojibake, key=lambda k: (-len(k), k))
        self._boilerplate_patterns = [
            re.compile(r"\s+".join(re.escape(w) for w in phrase.split()), re.IGNORECASE)
            for phrase in self.boilerplate
        ]


def load_cleaning_rules(
    boilerplate_path: str | Path | None = None,
    mojibake_path: str | Path | None = None,
) -> CleaningRules:
    """Load cleaning rules, falling back to the packaged defaults."""
    if boilerplate_path is None:
        boilerplate_text = (
            resources.files("hoodclaims.data").joinpath("boilerplate.txt").read_text("utf-8")
        )
    else:
        boilerplate_text = Path(boilerplate_path).read_text(encoding="utf-8")
    phrases = [
        line.strip()
        for line in boilerplate_text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if mojibake_path is None:
        mojibake_text = (
            resources.files("hoodclaims.data").joinpath("mojibake.json").read_text("utf-8")
        )
    else:
        mojibake_text = Path(mojibake_path).read_text(encoding="utf-8")
    mojibake = json.loads(mojibake_text)
    if not isinstance(mojibake, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in mojibake.items()
    ):
        raise ValueError("mojibake map must be a JSON object of string pairs")
    return CleaningRules(boilerplate=phrases, mojibake=mojibake)


def clean_text(text: str, rules: CleaningRules) -> str:
    """Repair mojibake, drop boilerplate, collapse whitespace.

    The three passes repeat until the text stops changing, so the function
    is idempotent even when one pass exposes new work for another.
    """
    current = text
    for _ in range(8):
        previous = current
        for key in rules._mojibake_order:
            current = current.replace(key, rules.mojibake[key])
        for pattern in rules._boilerplate_patterns:
            current = pattern.sub(" ", current)
        current = re.sub(r"\s+", " ", current).strip()
        if current == previous:
            break
    return current


def clean_listing(listing: RawListing, rules: CleaningRules) -> CleanListing:
    values = {f.name: getattr(listing, f.name) for f in fields(RawListing)}
    return CleanListing(
        **values,
        cleaned_title=clean_text(listing.title, rules),
        cleaned_body=clean_text(listing.body, rules),
    )


def clean_corpus(listings: Iterable[RawListing], rules: CleaningRules) -> list[CleanListing]:
    return [clean_listing(listing, rules) for listing in listings]


_EPOCH = datetime(1970, 1, 1)


def deduplicate(listings: list[CleanListing]) -> tuple[list[CleanListing], CorpusStats]:
    """Collapse reposts sharing cleaned title and body.

    The survivor is the most recently posted copy (missing timestamps sort
    oldest; exact ties break to the smallest id). Dropped copies get their
    ``duplicate_of`` field set to the survivor's id. Survivors come back in
    input order.
    """
    groups: dict[tuple[str, str], list[CleanListing]] = {}
    for listing in listings:
        groups.setdefault((listing.cleaned_title, listing.cleaned_body), []).append(listing)
    survivor_ids: set[str] = set()
    for group in groups.values():
        newest = max(l.posted_at or _EPOCH for l in group)
        best = min(
            (l for l in group if (l.posted_at or _EPOCH) == newest), key=lambda l: l.id
        )
        survivor_ids.add(best.id)
        for listing in group:
            listing.duplicate_of = None if listing.id == best.id else best.id
    survivors = [l for l in listings if l.id in survivor_ids]
    stats = CorpusStats(
        raw_count=len(listings),
        kept_count=len(survivors),
        dropped_duplicates=len(listings) - len(survivors),
    )
    log.info(
        "deduplicated %d listings to %d (%d reposts)",
        stats.raw_count, stats.kept_count, stats.dropped_duplicates,
    )
    return survivors, stats


def _listing_to_record(listing: CleanListing) -> dict:
    return {
        "id": listing.id,
        "title": listing.title,
        "body": listing.body,
        "neighborhood": listing.neighborhood_field,
        "latitude": listing.latitude,
        "longitude": listing.longitude,
        "rent": listing.rent,
        "bedrooms": listing.bedrooms,
        "bathrooms": listing.bathrooms,
        "sqft": listing.square_footage,
        "posted_at": listing.posted_at.isoformat() if listing.posted_at else None,
        "cleaned_title": listing.cleaned_title,
        "cleaned_body": listing.cleaned_body,
        "duplicate_of": listing.duplicate_of,
    }


def write_corpus(path: str | Path, listings: Iterable[CleanListing]) -> None:
    """Write cleaned listings as JSONL with a stable field order."""
    lines = [
        json.dumps(_listing_to_record(l), ensure_ascii=False) for l in listings
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_corpus(path: str | Path) -> list[CleanListing]:
    """Read listings previously written by :func:`write_corpus`."""
    listings = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            posted = record.get("posted_at")
            listings.append(
                CleanListing(
                    id=record["id"],
                    title=record.get("title") or "",
                    body=record.get("body") or "",
                    neighborhood_field=record.get("neighborhood"),
                    latitude=record.get("latitude"),
                    longitude=record.get("longitude"),
                    rent=record.get("rent"),
                    bedrooms=record.get("bedrooms"),
                    bathrooms=record.get("bathrooms"),
                    square_footage=record.get("sqft"),
                    posted_at=datetime.fromisoformat(posted) if posted else None,
                    cleaned_title=record.get("cleaned_title", ""),
                    cleaned_body=record.get("cleaned_body", ""),
                    duplicate_of=record.get("duplicate_of"),
                )
            )
    return listings
