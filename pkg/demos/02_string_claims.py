"""Extract claimed neighborhoods by gazetteer matching.

A claim is the single neighborhood a listing asserts it is in, resolved
by a fixed priority: title first, then body, then the structured
neighborhood field. Within a field the earliest match wins, longer
matches beating shorter ones at the same position.
"""

from collections import Counter
from pathlib import Path

from hoodclaims import label_corpus_string, load_gazetteer, match_field
from hoodclaims.corpus import clean_corpus, deduplicate, ingest, load_cleaning_rules

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthcity"


def load_corpus():
    result = ingest(DATA / "listings.jsonl")
    cleaned = clean_corpus(result.listings, load_cleaning_rules())
    kept, _ = deduplicate(cleaned)
    return kept


def main():
    gazetteer = load_gazetteer(DATA / "gazetteer.tsv")
    print(f"gazetteer: {len(gazetteer.canonicals)} canonical names")

    # Aliases match across flexible whitespace and casing.
    text = "Steps from GOLD  CREST and the Mill Brook greenway"
    for match in match_field(text, gazetteer, "body"):
        print(f"  {match.canonical!r} at offset {match.offset} (length {match.length})")

    listings = load_corpus()
    labels = label_corpus_string(listings, gazetteer)
    by_source = Counter(label.source_field for label in labels)
    by_claim = Counter(label.claim for label in labels)
    print(f"\nlabeled {len(labels)} listings; source fields: {dict(by_source)}")
    print("claims:")
    for claim, count in by_claim.most_common():
        print(f"  {claim:<12} {count}")

    # A listing naming two neighborhoods keeps only the earliest.
    dual = next(l for l in listings if "between" in l.cleaned_body.lower())
    label = next(lab for lab in labels if lab.listing_id == dual.id)
    print(f"\n{dual.id}: {dual.cleaned_body[:60]!r}...")
    print(f"  resolves to {label.claim!r} from the {label.source_field}")


if __name__ == "__main__":
    main()
