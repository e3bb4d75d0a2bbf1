"""Map where claims sit in space: social centers, distances, peripheral
listings, and claims-versus-containment ratios.

A neighborhood's social center is the mean coordinate of everything
claiming it, which can drift far from the polygon when outsiders borrow
the name. Comparing claim counts to polygon containment makes that
borrowing visible: the synthetic city plants a cluster of millbrook
listings that all advertise goldcrest.
"""

from pathlib import Path

from hoodclaims import (
    compute_distances,
    flag_peripheral,
    load_boundaries,
    representation,
    social_centers,
)
from hoodclaims.corpus import clean_corpus, deduplicate, ingest, load_cleaning_rules
from hoodclaims.gazetteer import load_gazetteer, load_normalization_table
from hoodclaims.geo import coordinates_of
from hoodclaims.llm import LlmConfig, annotate_corpus

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthcity"


def main():
    gazetteer = load_gazetteer(DATA / "gazetteer.tsv")
    table = load_normalization_table(DATA / "normalization.tsv", gazetteer)
    result = ingest(DATA / "listings.jsonl")
    listings, _ = deduplicate(clean_corpus(result.listings, load_cleaning_rules()))
    labels = annotate_corpus(
        listings, gazetteer, table,
        LlmConfig(offline=True, cache_path=DATA / "llm_cache.jsonl"),
    ).labels
    coordinates = coordinates_of(listings)

    centers = social_centers(labels, coordinates)
    print("social centers (mean claim-point position):")
    for center in centers:
        print(f"  {center.neighborhood:<12} ({center.latitude:.4f}, "
              f"{center.longitude:.4f})  n={center.claim_count}")

    records = flag_peripheral(compute_distances(labels, coordinates, centers))
    peripheral = [r for r in records if r.peripheral]
    print(f"\n{len(peripheral)} of {len(records)} claims are peripheral "
          f"(farthest fifth of their neighborhood):")
    for record in sorted(peripheral, key=lambda r: -r.raw)[:5]:
        print(f"  {record.listing_id} claims {record.neighborhood:<12} "
              f"{record.raw:5.1f} km out (z={record.z_score:+.2f})")

    boundaries = load_boundaries(DATA / "boundaries.geojson", "city")
    print("\nclaims vs polygon containment:")
    for row in representation(labels, coordinates, boundaries):
        ratio = "-" if row.ratio is None else f"{row.ratio:.2f}"
        note = "  <- over-claimed" if row.ratio and row.ratio > 1.5 else ""
        print(f"  {row.neighborhood:<12} claims={row.claims:<3} "
              f"contained={row.contained!s:<4} ratio={ratio}{note}")


if __name__ == "__main__":
    main()
