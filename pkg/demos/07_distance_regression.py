"""Relate how far a listing sits from its claimed neighborhood's social
center to how it talks.

The design matrix joins three stages: listing covariates (bedrooms,
bathrooms, rent, square footage), the relative distance to the claimed
center, and per-listing topic shares. A positive coefficient on the
promotional topic means distant claimers lean harder on generic sales
language.
"""

from pathlib import Path

from hoodclaims import build_design, compute_distances, fit_ols, social_centers
from hoodclaims.corpus import clean_corpus, deduplicate, ingest, load_cleaning_rules
from hoodclaims.gazetteer import load_gazetteer, load_normalization_table
from hoodclaims.geo import coordinates_of
from hoodclaims.llm import LlmConfig, annotate_corpus
from hoodclaims.regression import format_fit
from hoodclaims.topics import fit_lda, load_lemmas, load_stopwords, preprocess

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
    records = compute_distances(labels, coordinates, centers)

    texts = [(l.id, (l.cleaned_title + " " + l.cleaned_body).strip()) for l in listings]
    vocabulary, docs = preprocess(texts, load_stopwords(), load_lemmas())
    model = fit_lda(docs, vocabulary, k=3, alpha=0.1, eta=0.01, iterations=100, seed=7)
    theta = {doc_id: model.theta[i] for i, doc_id in enumerate(model.doc_ids)}

    design = build_design(
        listings, records, theta, baseline_topic=1, rent_per_thousand=True
    )
    print(f"design: {design.X.shape[0]} listings x {design.X.shape[1]} terms "
          f"({design.n_dropped} dropped for missing covariates)")
    print(f"outcome: relative distance to the claimed social center\n")
    print(format_fit(fit_ols(design.X, design.y, design.columns)))


if __name__ == "__main__":
    main()
