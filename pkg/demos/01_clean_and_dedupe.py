"""Walk through corpus ingestion: schema validation, text cleaning, and
duplicate collapsing on the bundled 53-row synthetic city scrape.

The raw file deliberately contains one broken row (latitude 950), rows
with missing optional fields, mojibake, scraper boilerplate, and two
reposts of existing listings, so every cleaning step has something to do.
"""

from pathlib import Path

from hoodclaims import clean_text, deduplicate, ingest, load_cleaning_rules
from hoodclaims.corpus import clean_corpus

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthcity"


def main():
    result = ingest(DATA / "listings.jsonl")
    print(f"ingested {len(result.listings)} listings")
    for issue in result.errors:
        print(f"  rejected line {issue.line} ({issue.listing_id}): {issue.message}")
    for issue in result.warnings:
        print(f"  warning  line {issue.line} ({issue.listing_id}): {issue.message}")

    rules = load_cleaning_rules()
    sample = "Stop by the cafÃ© corner open house!  QR Code Link to This Post"
    print(f"\nbefore cleaning: {sample!r}")
    print(f"after cleaning:  {clean_text(sample, rules)!r}")

    cleaned = clean_corpus(result.listings, rules)
    kept, stats = deduplicate(cleaned)
    print(f"\n{stats.raw_count} cleaned listings -> {stats.kept_count} kept "
          f"({stats.dropped_duplicates} reposts)")
    for listing in cleaned:
        if listing.duplicate_of:
            print(f"  {listing.id} is a repost of {listing.duplicate_of}")


if __name__ == "__main__":
    main()
