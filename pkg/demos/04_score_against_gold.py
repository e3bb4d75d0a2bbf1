"""Score both claim extractors against hand-labeled gold claims.

The gold file maps every listing to its true claimed neighborhood (or
"unknown"). Both labelers are evaluated with per-class precision, recall,
and F1; a class the labeler never predicts gets a dash for precision and
contributes zero to the averages.
"""

from pathlib import Path

from hoodclaims import evaluate, label_corpus_string, load_gold
from hoodclaims.corpus import clean_corpus, deduplicate, ingest, load_cleaning_rules
from hoodclaims.evaluation import format_report
from hoodclaims.gazetteer import load_gazetteer, load_normalization_table
from hoodclaims.llm import LlmConfig, annotate_corpus

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthcity"


def main():
    gazetteer = load_gazetteer(DATA / "gazetteer.tsv")
    table = load_normalization_table(DATA / "normalization.tsv", gazetteer)
    result = ingest(DATA / "listings.jsonl")
    listings, _ = deduplicate(clean_corpus(result.listings, load_cleaning_rules()))
    gold = load_gold(DATA / "gold.csv", table, gazetteer)

    string_labels = label_corpus_string(listings, gazetteer)
    string_report = evaluate(string_labels, gold)
    print("string matcher:")
    print(format_report(string_report))

    config = LlmConfig(offline=True, cache_path=DATA / "llm_cache.jsonl")
    llm_labels = annotate_corpus(listings, gazetteer, table, config).labels
    llm_report = evaluate(llm_labels, gold)
    print("\nchat-model annotator (cache replay):")
    print(format_report(llm_report))

    print(f"\naccuracy: string {string_report.accuracy:.2f} "
          f"vs llm {llm_report.accuracy:.2f}")


if __name__ == "__main__":
    main()
