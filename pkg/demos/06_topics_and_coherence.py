"""Fit the topic model over listing text and judge topic quality.

The sampler is a from-scratch collapsed Gibbs implementation, so the
same seed reproduces the same topics bit for bit. Coherence scores each
topic's top words by how often they actually co-occur in documents
(normalized pointwise mutual information; 1 is perfect, 0 chance, -1
never together).
"""

from pathlib import Path

from hoodclaims.corpus import clean_corpus, deduplicate, ingest, load_cleaning_rules
from hoodclaims.topics import (
    coherence,
    corpus_shares,
    fit_lda,
    load_lemmas,
    load_stopwords,
    preprocess,
    top_words,
)

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthcity"


def main():
    result = ingest(DATA / "listings.jsonl")
    listings, _ = deduplicate(clean_corpus(result.listings, load_cleaning_rules()))
    texts = [(l.id, (l.cleaned_title + " " + l.cleaned_body).strip()) for l in listings]
    vocabulary, docs = preprocess(texts, load_stopwords(), load_lemmas())
    print(f"{len(docs)} documents, {len(vocabulary)} vocabulary words")

    model = fit_lda(docs, vocabulary, k=3, alpha=0.1, eta=0.01, iterations=100, seed=7)
    shares = corpus_shares(model)
    report = coherence(model, docs, top_n=8)
    print(f"log likelihood {model.log_likelihoods[0]:.0f} -> "
          f"{model.log_likelihoods[-1]:.0f} over {model.iterations} iterations\n")
    for topic in range(model.k):
        words = ", ".join(top_words(model, topic, 8))
        print(f"topic {topic + 1} (share {shares[topic]:.2f}, "
              f"npmi {report.per_topic[topic]:+.2f}): {words}")

    print("\nreading: one topic is place language, one is scraped open-house "
          "cruft, one is promotional filler")


if __name__ == "__main__":
    main()
