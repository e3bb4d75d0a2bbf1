import math

import numpy as np
import pytest

from hoodclaims.topics import (
    LdaModel,
    TokenizedDoc,
    Vocabulary,
    coherence,
    corpus_shares,
    fit_lda,
    load_lemmas,
    load_model,
    load_stopwords,
    preprocess,
    save_model,
    tokenize,
    top_words,
)

STOP = frozenset({"the", "a", "in", "is"})


def test_tokenize_lowercases_and_filters():
    text = "The GRANITE counters, 2 baths & hardwood!"
    tokens = tokenize(text, STOP, {})
    assert tokens == ["granite", "counters", "baths", "hardwood"]


def test_tokenize_drops_digits_and_short_tokens():
    assert tokenize("a1b c2 x yz 42", STOP, {}) == ["yz"]


def test_tokenize_applies_lemmas_then_stopwords():
    lemmas = {"apartments": "apartment", "thes": "the"}
    tokens = tokenize("apartments thes", STOP, lemmas)
    # "thes" lemmatizes into a stopword and disappears.
    assert tokens == ["apartment"]


def test_default_word_lists_load():
    stop = load_stopwords()
    assert "the" in stop and "sqft" in stop and "craigslist" in stop
    lemmas = load_lemmas()
    assert lemmas.get("appliances") == "appliance"


def test_preprocess_builds_sorted_vocab_and_keeps_empty_docs():
    texts = [("d1", "granite hardwood granite"), ("d2", "the the the"), ("d3", "balcony")]
    vocab, docs = preprocess(texts, STOP, {})
    assert vocab.words == ["balcony", "granite", "hardwood"]
    assert [d.listing_id for d in docs] == ["d1", "d2", "d3"]
    assert docs[0].tokens == [vocab.index["granite"], vocab.index["hardwood"], vocab.index["granite"]]
    assert docs[1].tokens == []


def make_corpus(seed=3, n_docs=40, vocab_size=12, doc_len=25):
    rng = np.random.default_rng(seed)
    vocab = Vocabulary(words=[f"w{i:02d}" for i in range(vocab_size)])
    docs = [
        TokenizedDoc(f"d{j:03d}", list(rng.integers(0, vocab_size, doc_len)))
        for j in range(n_docs)
    ]
    return vocab, docs


@pytest.mark.parametrize(
    "kwargs,fragment",
    [
        (dict(k=1), "k"),
        (dict(k=50), "vocabulary"),
        (dict(alpha=0.0), "alpha"),
        (dict(eta=-1.0), "eta"),
        (dict(iterations=0), "iterations"),
    ],
)
def test_fit_lda_validates_arguments(kwargs, fragment):
    vocab, docs = make_corpus()
    merged = dict(k=3, alpha=0.1, eta=0.01, iterations=5, seed=0)
    merged.update(kwargs)
    with pytest.raises(ValueError, match=fragment):
        fit_lda(docs, vocab, **merged)


def test_fit_lda_rejects_all_empty_corpus():
    vocab = Vocabulary(words=["alpha", "beta"])
    docs = [TokenizedDoc("d1", []), TokenizedDoc("d2", [])]
    with pytest.raises(ValueError, match="empty"):
        fit_lda(docs, vocab, k=2, alpha=0.1, eta=0.01, iterations=2)


def test_fit_lda_distributions_are_normalized():
    vocab, docs = make_corpus()
    model = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=20, seed=1)
    assert model.phi.shape == (3, len(vocab))
    assert model.theta.shape == (len(docs), 3)
    assert np.allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)
    assert np.allclose(model.theta.sum(axis=1), 1.0, atol=1e-9)
    assert len(model.log_likelihoods) == 20
    assert all(math.isfinite(v) for v in model.log_likelihoods)


def test_fit_lda_phi_theta_recomputable_from_assignments():
    vocab, docs = make_corpus(seed=9)
    k, alpha, eta = 4, 0.3, 0.05
    model = fit_lda(docs, vocab, k=k, alpha=alpha, eta=eta, iterations=10, seed=2)
    v = len(vocab)
    topic_word = np.zeros((k, v))
    doc_topic = np.zeros((len(docs), k))
    for d, (tokens, topics) in enumerate(zip(model.doc_tokens, model.assignments)):
        for word, topic in zip(tokens, topics):
            topic_word[topic, word] += 1
            doc_topic[d, topic] += 1
    expected_phi = (topic_word + eta) / (topic_word.sum(axis=1, keepdims=True) + v * eta)
    lengths = doc_topic.sum(axis=1, keepdims=True)
    expected_theta = (doc_topic + alpha) / (lengths + k * alpha)
    assert np.allclose(model.phi, expected_phi, atol=1e-12)
    assert np.allclose(model.theta, expected_theta, atol=1e-12)


def test_fit_lda_bit_identical_reruns():
    vocab, docs = make_corpus(seed=5)
    a = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=15, seed=7)
    b = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=15, seed=7)
    assert a.assignments == b.assignments
    assert np.array_equal(a.phi, b.phi)
    assert np.array_equal(a.theta, b.theta)
    assert a.log_likelihoods == b.log_likelihoods


def test_fit_lda_seed_changes_outcome():
    vocab, docs = make_corpus(seed=5)
    a = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=15, seed=7)
    c = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=15, seed=8)
    assert a.assignments != c.assignments


def test_fit_lda_shorter_run_is_prefix_of_longer():
    vocab, docs = make_corpus(seed=6)
    short = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=4, seed=3)
    long = fit_lda(docs, vocab, k=3, alpha=0.1, eta=0.01, iterations=12, seed=3)
    assert long.log_likelihoods[:4] == short.log_likelihoods


def make_manual_model(phi_rows, vocab_words, k):
    phi = np.array(phi_rows, dtype=float)
    return LdaModel(
        k=k, alpha=0.1, eta=0.01, iterations=0, seed=0,
        vocab=list(vocab_words), doc_ids=[], doc_tokens=[], assignments=[],
        phi=phi, theta=np.zeros((0, k)), log_likelihoods=[],
    )


def test_top_words_breaks_ties_alphabetically():
    phi = [[0.4, 0.4, 0.1, 0.1]]
    model = make_manual_model(phi, ["zebra", "apple", "mango", "berry"], k=1)
    assert top_words(model, 0, 3) == ["apple", "zebra", "berry"]


def test_corpus_shares_means_theta():
    model = make_manual_model([[1.0, 0.0], [0.0, 1.0]], ["x", "y"], k=2)
    model.theta = np.array([[0.8, 0.2], [0.4, 0.6]])
    assert np.allclose(corpus_shares(model), [0.6, 0.4])


def test_coherence_hand_computed():
    # Vocabulary: a b c d e f. Three topics pick their top-2 pairs.
    vocab = ["a", "b", "c", "d", "e", "f"]
    phi = [
        [0.5, 0.4, 0.025, 0.025, 0.025, 0.025],  # a, b
        [0.025, 0.025, 0.5, 0.4, 0.025, 0.025],  # c, d
        [0.025, 0.025, 0.025, 0.025, 0.5, 0.4],  # e, f
    ]
    model = make_manual_model(phi, vocab, k=3)
    # Docs as word-id sets: a=0 ... f=5.
    docs = [
        TokenizedDoc("d1", [0, 2, 3, 4]),
        TokenizedDoc("d2", [0, 1, 2, 3, 5]),
        TokenizedDoc("d3", [1, 2, 3]),
        TokenizedDoc("d4", [2, 3]),
    ]
    report = coherence(model, docs, top_n=2)
    # a and b: p_a=1/2, p_b=1/2, joint=1/4: NPMI = ln(1)/(-ln(1/4)) = 0.
    assert math.isclose(report.per_topic[0], 0.0, abs_tol=1e-12)
    # c and d appear together in every document.
    assert report.per_topic[1] == 1.0
    # e and f never co-occur.
    assert report.per_topic[2] == -1.0
    assert math.isclose(report.mean, 0.0, abs_tol=1e-12)
    assert report.metric == "npmi"


def test_coherence_requires_documents():
    model = make_manual_model([[1.0]], ["only"], k=1)
    with pytest.raises(ValueError, match="no non-empty"):
        coherence(model, [TokenizedDoc("d", [])], top_n=1)


def test_save_load_round_trip(tmp_path):
    vocab, docs = make_corpus(seed=12, n_docs=15)
    model = fit_lda(docs, vocab, k=3, alpha=0.2, eta=0.05, iterations=8, seed=4)
    path = tmp_path / "model.txt"
    save_model(model, path)
    back = load_model(path)
    assert back.k == model.k and back.seed == model.seed
    assert back.alpha == model.alpha and back.eta == model.eta
    assert back.vocab == model.vocab
    assert back.doc_ids == model.doc_ids
    assert back.doc_tokens == model.doc_tokens
    assert back.assignments == model.assignments
    assert np.array_equal(back.phi, model.phi)
    assert np.array_equal(back.theta, model.theta)
    assert back.log_likelihoods == model.log_likelihoods


def test_load_model_rejects_foreign_header(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text("some-other-format 9\n", encoding="utf-8")
    with pytest.raises(ValueError, match="not a hoodclaims-lda file"):
        load_model(path)
