"""Claimed-neighborhood extraction from listing text.

A claim is resolved per listing by scanning three fields in priority order:
title, then body, then the structured neighborhood field. The first field
with any gazetteer match supplies the claim; within a field the earliest
match wins, with longer matches breaking offset ties and alphabetical order
breaking exact ties. Listings with no match anywhere are labeled unknown.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import CleanListing
from .gazetteer import UNKNOWN, Gazetteer

FIELD_TITLE = "title"
FIELD_BODY = "body"
FIELD_NEIGHBORHOOD = "neighborhood_field"
FIELD_NONE = "none"

CASCADE_FIELDS = (FIELD_TITLE, FIELD_BODY, FIELD_NEIGHBORHOOD)


@dataclass(frozen=True)
class FieldMatch:
    """One gazetteer hit inside one text field."""

    canonical: str
    offset: int
    length: int
    field: str


@dataclass(frozen=True)
class ClaimLabel:
    """Resolved claim for one listing."""

    listing_id: str
    claim: str
    source_field: str
    method: str


def match_field(text: str, gazetteer: Gazetteer, field: str) -> list[FieldMatch]:
    """All gazetteer matches in ``text``, best-first.

    Ordering is by offset, then by decreasing length, then alphabetically by
    canonical name, so ``matches[0]`` is the field winner. Overlapping hits
    from different entries are all reported.
    """
    hits: dict[tuple[str, int], int] = {}
    for canonical, pattern in gazetteer.iter_patterns():
        for found in pattern.finditer(text):
            key = (canonical, found.start())
            length = found.end() - found.start()
            if length > hits.get(key, -1):
                hits[key] = length
    ordered = sorted(
        ((canonical, offset, length) for (canonical, offset), length in hits.items()),
        key=lambda h: (h[1], -h[2], h[0]),
    )
    return [
        FieldMatch(canonical=c, offset=o, length=n, field=field)
        for c, o, n in ordered
    ]


def resolve_claim(
    listing_id: str,
    title_matches: Sequence[FieldMatch],
    body_matches: Sequence[FieldMatch],
    neighborhood_matches: Sequence[FieldMatch],
    method: str = "string-match",
) -> ClaimLabel:
    """Apply the title > body > neighborhood-field cascade."""
    for matches in (title_matches, body_matches, neighborhood_matches):
        if matches:
            best = matches[0]
            return ClaimLabel(
                listing_id=listing_id,
                claim=best.canonical,
                source_field=best.field,
                method=method,
            )
    return ClaimLabel(
        listing_id=listing_id, claim=UNKNOWN, source_field=FIELD_NONE, method=method
    )


def label_listing(listing: CleanListing, gazetteer: Gazetteer) -> ClaimLabel:
    """String-match claim for one cleaned listing."""
    title = match_field(listing.cleaned_title, gazetteer, FIELD_TITLE)
    body = match_field(listing.cleaned_body, gazetteer, FIELD_BODY)
    hood = match_field(
        (listing.neighborhood_field or "").strip(), gazetteer, FIELD_NEIGHBORHOOD
    )
    return resolve_claim(listing.id, title, body, hood)


def label_corpus_string(
    listings: Iterable[CleanListing], gazetteer: Gazetteer
) -> list[ClaimLabel]:
    """String-match claims for a whole corpus, in input order."""
    return [label_listing(listing, gazetteer) for listing in listings]
