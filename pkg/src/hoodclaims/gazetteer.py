"""Neighborhood registry: canonical names, alias patterns, and spelling fixes.

The gazetteer is loaded from a plain-text file (see FORMATS.md) and compiled
once into case-insensitive, word-anchored regex matchers. A literal space in
an alias pattern matches any run of whitespace, including none, so a single
pattern covers "lake view", "lakeview" and "lake  view".
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

log = logging.getLogger(__name__)

UNKNOWN = "unknown"

_FLEXIBLE_SPACE = r"\s*"


def compile_alias(pattern: str) -> re.Pattern[str]:
    """Compile an alias pattern: word-anchored, case-insensitive, flexible spaces."""
    escaped_space = pattern.replace("\\ ", " ")
    flexible = escaped_space.replace(" ", _FLEXIBLE_SPACE)
    try:
        return re.compile(rf"\b(?:{flexible})\b", re.IGNORECASE)
    except re.error as exc:
        raise ValueError(f"invalid alias pattern {pattern!r}: {exc}") from exc


def _default_pattern(canonical: str) -> str:
    # Escape regex metacharacters but keep spaces as the flexible-space marker.
    return re.escape(canonical).replace("\\ ", " ")


@dataclass(frozen=True)
class GazetteerEntry:
    """One neighborhood: canonical lowercase name plus alias patterns."""

    canonical: str
    aliases: tuple[str, ...] = ()
    notes: str = ""


class Gazetteer:
    """Compiled, immutable registry of neighborhood entries.

    Safe for concurrent read access once constructed.
    """

    def __init__(self, entries: list[GazetteerEntry]):
        seen: set[str] = set()
        for entry in entries:
            if entry.canonical in seen:
                raise ValueError(f"duplicate canonical name: {entry.canonical!r}")
            seen.add(entry.canonical)
        self.entries = list(entries)
        self._canonical_set = seen
        self._patterns: list[tuple[str, re.Pattern[str]]] = []
        for entry in entries:
            patterns = entry.aliases or (_default_pattern(entry.canonical),)
            for raw in patterns:
                compiled = compile_alias(raw)
                if not compiled.search(entry.canonical):
                    raise ValueError(
                        f"alias pattern {raw!r} does not match its canonical "
                        f"name {entry.canonical!r}"
                    )
                self._patterns.append((entry.canonical, compiled))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self._canonical_set

    @property
    def canonicals(self) -> list[str]:
        """Canonical names, sorted, for prompts and validation."""
        return sorted(self._canonical_set)

    def iter_patterns(self):
        """Yield (canonical, compiled pattern) pairs in entry order."""
        return iter(self._patterns)


def parse_gazetteer(text: str, origin: str = "<string>") -> Gazetteer:
    """Parse gazetteer records from tab-separated text. See FORMATS.md."""
    entries: list[GazetteerEntry] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        canonical = parts[0].strip().lower()
        if not canonical:
            raise ValueError(f"{origin}:{lineno}: empty canonical name")
        aliases = tuple(p for p in parts[1:] if p)
        entries.append(GazetteerEntry(canonical=canonical, aliases=aliases))
    try:
        gazetteer = Gazetteer(entries)
    except ValueError as exc:
        raise ValueError(f"{origin}: {exc}") from exc
    if not entries:
        log.warning("%s: gazetteer file contains no entries", origin)
    else:
        log.info("loaded %d gazetteer entries from %s", len(entries), origin)
    return gazetteer


def load_gazetteer(path: str | Path) -> Gazetteer:
    path = Path(path)
    return parse_gazetteer(path.read_text(encoding="utf-8"), origin=str(path))


@dataclass
class NormalizationTable:
    """Maps variant spellings to canonical names ("wrigglyville" -> "wrigleyville")."""

    mapping: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.mapping)

    def get(self, variant: str) -> str | None:
        return self.mapping.get(variant)


def parse_normalization_table(
    text: str, gazetteer: Gazetteer, origin: str = "<string>"
) -> NormalizationTable:
    """Parse a two-column variant/canonical mapping; targets must be canonical."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip().lower() for p in line.split("\t")]
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"{origin}:{lineno}: expected two tab-separated columns")
        variant, target = parts
        if target not in gazetteer:
            raise ValueError(
                f"{origin}:{lineno}: target {target!r} is not a canonical name"
            )
        if variant in mapping and mapping[variant] != target:
            raise ValueError(f"{origin}:{lineno}: conflicting entries for {variant!r}")
        mapping[variant] = target
    return NormalizationTable(mapping)


def load_normalization_table(path: str | Path, gazetteer: Gazetteer) -> NormalizationTable:
    path = Path(path)
    return parse_normalization_table(
        path.read_text(encoding="utf-8"), gazetteer, origin=str(path)
    )


def normalize_label(raw: str, table: NormalizationTable, gazetteer: Gazetteer) -> str:
    """Resolve a raw label to a canonical name, or ``unknown``.

    Case and surrounding whitespace are folded away first. Exact canonical
    names pass through; known variants map via the table; anything else is
    unknown.
    """
    raw = raw.strip().lower()
    if raw in gazetteer:
        return raw
    mapped = table.get(raw)
    if mapped is not None:
        return mapped
    return UNKNOWN


def load_default_gazetteer() -> Gazetteer:
    """The Chicago registry shipped with the package."""
    text = resources.files("hoodclaims.data").joinpath("chicago_gazetteer.tsv").read_text("utf-8")
    return parse_gazetteer(text, origin="chicago_gazetteer.tsv")


def load_default_normalization(gazetteer: Gazetteer | None = None) -> NormalizationTable:
    """The spelling-normalization table shipped with the package."""
    gazetteer = gazetteer if gazetteer is not None else load_default_gazetteer()
    text = resources.files("hoodclaims.data").joinpath("chicago_normalization.tsv").read_text("utf-8")
    return parse_normalization_table(text, gazetteer, origin="chicago_normalization.tsv")
