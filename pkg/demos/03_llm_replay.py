"""Label claims with a chat model, replayed entirely from a recorded
response cache.

Every request the annotator would make is fingerprinted; the bundled
cache maps those fingerprints to raw model responses captured earlier.
Offline mode replays them with zero network calls, and the parser shows
how messy response shapes still resolve to canonical names.
"""

from pathlib import Path

from hoodclaims.corpus import clean_corpus, deduplicate, ingest, load_cleaning_rules
from hoodclaims.gazetteer import load_gazetteer, load_normalization_table
from hoodclaims.llm import LlmConfig, annotate_corpus, parse_response

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthcity"


def load_corpus():
    result = ingest(DATA / "listings.jsonl")
    cleaned = clean_corpus(result.listings, load_cleaning_rules())
    kept, _ = deduplicate(cleaned)
    return kept


def main():
    gazetteer = load_gazetteer(DATA / "gazetteer.tsv")
    table = load_normalization_table(DATA / "normalization.tsv", gazetteer)

    print("response parsing, from tidy to messy:")
    for raw in (
        "label: [goldcrest]",
        "label: [gold crest]",
        "label: [brickyard, foundry]",
        "Sure! The neighborhood is dockside.",
        "label: [fernvail]",
    ):
        parsed = parse_response(raw, table, gazetteer)
        print(f"  {raw!r:45} -> {parsed.label} ({parsed.parse_status})")

    config = LlmConfig(offline=True, cache_path=DATA / "llm_cache.jsonl")
    run = annotate_corpus(load_corpus(), gazetteer, table, config)
    report = run.report
    print(f"\nannotated {report.labeled}/{report.listings} listings")
    print(f"  cache hits {report.cache_hits}, network calls {report.network_calls}, "
          f"empty fields skipped {report.skipped_empty_fields}")
    disagreeing = [l for l in run.labels if l.claim == "unknown"]
    print(f"  {len(disagreeing)} listings stayed unknown: "
          f"{', '.join(l.listing_id for l in disagreeing)}")


if __name__ == "__main__":
    main()
