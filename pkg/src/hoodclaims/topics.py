"""Topic modeling of listing text with collapsed Gibbs sampling.

Documents are the cleaned title and body of each listing. Preprocessing
lowercases, keeps letter runs, drops stopwords and real-estate cruft,
and folds plurals through a small lemma table. The sampler is seeded and
fully deterministic: the same inputs and seed reproduce the topic-word
and document-topic matrices bit for bit.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.special import gammaln

log = logging.getLogger(__name__)

MODEL_FORMAT = "hoodclaims-lda"
MODEL_VERSION = 1

_TOKEN_RE = re.compile(r"[^\W\d_]+")


@dataclass
class Vocabulary:
    words: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)


@dataclass
class TokenizedDoc:
    listing_id: str
    tokens: list[int]


@dataclass
class LdaModel:
    k: int
    alpha: float
    eta: float
    iterations: int
    seed: int
    vocab: list[str]
    doc_ids: list[str]
    doc_tokens: list[list[int]]
    assignments: list[list[int]]
    phi: np.ndarray
    theta: np.ndarray
    log_likelihoods: list[float]


@dataclass
class CoherenceReport:
    per_topic: list[float]
    mean: float
    top_n: int
    metric: str = "npmi"


def _read_word_list(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        stripped = line.strip().lower()
        if stripped and not stripped.startswith("#"):
            words.add(stripped)
    return frozenset(words)


def load_stopwords(*paths: str | Path) -> frozenset[str]:
    """Union of stopword files; with no arguments, the packaged defaults."""
    if not paths:
        data = resources.files("hoodclaims.data")
        return frozenset(
            _read_word_list(data.joinpath("stopwords_en.txt").read_text("utf-8"))
            | _read_word_list(data.joinpath("stopwords_realestate.txt").read_text("utf-8"))
        )
    merged: set[str] = set()
    for path in paths:
        merged |= _read_word_list(Path(path).read_text(encoding="utf-8"))
    return frozenset(merged)


def load_lemmas(path: str | Path | None = None) -> dict[str, str]:
    """Two-column token-to-lemma table; defaults to the packaged one."""
    if path is None:
        text = resources.files("hoodclaims.data").joinpath("lemmas.tsv").read_text("utf-8")
        origin = "lemmas.tsv"
    else:
        text = Path(path).read_text(encoding="utf-8")
        origin = str(path)
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip().lower() for p in line.split("\t")]
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"{origin}:{lineno}: expected two tab-separated columns")
        mapping[parts[0]] = parts[1]
    return mapping


def tokenize(text: str, stopwords: frozenset[str], lemmas: Mapping[str, str]) -> list[str]:
    """Lowercased letter runs, stopword-filtered, lemma-folded."""
    out: list[str] = []
    for token in _TOKEN_RE.findall(text.lower()):
        if token in stopwords:
            continue
        token = lemmas.get(token, token)
        if len(token) < 2 or token in stopwords:
            continue
        out.append(token)
    return out


def preprocess(
    texts: Iterable[tuple[str, str]],
    stopwords: frozenset[str],
    lemmas: Mapping[str, str],
) -> tuple[Vocabulary, list[TokenizedDoc]]:
    """Tokenize (id, text) pairs and build a shared vocabulary.

    Documents that end up empty stay in the output with no tokens; the
    sampler skips them but callers can still see they existed.
    """
    token_lists: list[tuple[str, list[str]]] = []
    words: set[str] = set()
    for listing_id, text in texts:
        tokens = tokenize(text, stopwords, lemmas)
        token_lists.append((listing_id, tokens))
        words.update(tokens)
    vocab = Vocabulary(words=sorted(words))
    docs = [
        TokenizedDoc(listing_id, [vocab.index[t] for t in tokens])
        for listing_id, tokens in token_lists
    ]
    empty = sum(1 for d in docs if not d.tokens)
    if empty:
        log.info("%d of %d documents empty after preprocessing", empty, len(docs))
    return vocab, docs


def fit_lda(
    docs: Iterable[TokenizedDoc],
    vocabulary: Vocabulary,
    k: int,
    alpha: float,
    eta: float,
    iterations: int = 100,
    seed: int = 0,
) -> LdaModel:
    """Collapsed Gibbs sampling; point estimates from the final state.

    phi[t, w] and theta[d, t] are the smoothed count ratios at the last
    iteration; the per-iteration complete-data log likelihood is recorded
    so convergence can be inspected.
    """
    docs = [d for d in docs if d.tokens]
    n_docs = len(docs)
    n_words = len(vocabulary)
    if n_docs == 0:
        raise ValueError("no non-empty documents to fit")
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n_words:
        raise ValueError(f"k={k} exceeds vocabulary size {n_words}")
    if alpha <= 0 or eta <= 0:
        raise ValueError("alpha and eta must be positive")
    if iterations < 1:
        raise ValueError("iterations must be at least 1")

    doc_tokens = [list(d.tokens) for d in docs]
    flat_docs: list[int] = []
    flat_words: list[int] = []
    for d, tokens in enumerate(doc_tokens):
        flat_docs.extend([d] * len(tokens))
        flat_words.extend(tokens)
    n_tokens = len(flat_words)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, size=n_tokens).tolist()

    topic_word = [[0] * n_words for _ in range(k)]
    topic_total = [0] * k
    doc_topic = [[0] * k for _ in range(n_docs)]
    for i in range(n_tokens):
        t = z[i]
        topic_word[t][flat_words[i]] += 1
        topic_total[t] += 1
        doc_topic[flat_docs[i]][t] += 1

    eta_total = eta * n_words
    doc_lengths = [len(tokens) for tokens in doc_tokens]
    log_likelihoods: list[float] = []
    topics = range(k)

    for _ in range(iterations):
        u = rng.random(n_tokens)
        for i in range(n_tokens):
            w = flat_words[i]
            d = flat_docs[i]
            t_old = z[i]
            topic_word[t_old][w] -= 1
            topic_total[t_old] -= 1
            row = doc_topic[d]
            row[t_old] -= 1

            total = 0.0
            cumulative = []
            for t in topics:
                total += (
                    (row[t] + alpha)
                    * (topic_word[t][w] + eta)
                    / (topic_total[t] + eta_total)
                )
                cumulative.append(total)
            draw = u[i] * total
            t_new = 0
            while cumulative[t_new] <= draw:
                t_new += 1

            z[i] = t_new
            topic_word[t_new][w] += 1
            topic_total[t_new] += 1
            row[t_new] += 1

        log_likelihoods.append(
            _joint_log_likelihood(
                topic_word, topic_total, doc_topic, doc_lengths, k, n_words, alpha, eta
            )
        )

    tw = np.asarray(topic_word, dtype=float)
    dt = np.asarray(doc_topic, dtype=float)
    phi = (tw + eta) / (np.asarray(topic_total, dtype=float)[:, None] + eta_total)
    theta = (dt + alpha) / (np.asarray(doc_lengths, dtype=float)[:, None] + alpha * k)

    assignments: list[list[int]] = []
    cursor = 0
    for length in doc_lengths:
        assignments.append(z[cursor : cursor + length])
        cursor += length

    return LdaModel(
        k=k,
        alpha=alpha,
        eta=eta,
        iterations=iterations,
        seed=seed,
        vocab=list(vocabulary.words),
        doc_ids=[d.listing_id for d in docs],
        doc_tokens=doc_tokens,
        assignments=assignments,
        phi=phi,
        theta=theta,
        log_likelihoods=log_likelihoods,
    )


def _joint_log_likelihood(topic_word, topic_total, doc_topic, doc_lengths, k, n_words, alpha, eta):
    tw = np.asarray(topic_word, dtype=float)
    dt = np.asarray(doc_topic, dtype=float)
    tt = np.asarray(topic_total, dtype=float)
    dl = np.asarray(doc_lengths, dtype=float)
    ll = k * (gammaln(n_words * eta) - n_words * gammaln(eta))
    ll += float(np.sum(gammaln(tw + eta)) - np.sum(gammaln(tt + n_words * eta)))
    ll += len(doc_lengths) * (gammaln(k * alpha) - k * gammaln(alpha))
    ll += float(np.sum(gammaln(dt + alpha)) - np.sum(gammaln(dl + k * alpha)))
    return float(ll)


def top_words(model: LdaModel, topic: int, n: int = 10) -> list[str]:
    """Highest-probability words for a topic; ties break alphabetically."""
    if not 0 <= topic < model.k:
        raise ValueError(f"topic {topic} out of range for k={model.k}")
    order = sorted(
        range(len(model.vocab)),
        key=lambda w: (-model.phi[topic, w], model.vocab[w]),
    )
    return [model.vocab[w] for w in order[:n]]


def corpus_shares(model: LdaModel) -> np.ndarray:
    """Mean topic proportion across documents."""
    return model.theta.mean(axis=0)


def coherence(model: LdaModel, docs: Iterable[TokenizedDoc], top_n: int = 10) -> CoherenceReport:
    """Topic coherence as mean pairwise NPMI over each topic's top words.

    Co-occurrence is boolean at the document level over the supplied docs.
    A pair that never co-occurs scores -1; a pair present in every
    document scores +1.
    """
    doc_sets = [set(d.tokens) for d in docs if d.tokens]
    n_docs = len(doc_sets)
    if n_docs == 0:
        raise ValueError("no non-empty documents for coherence")
    containing: dict[int, int] = {}

    def doc_count(word: int) -> int:
        if word not in containing:
            containing[word] = sum(1 for s in doc_sets if word in s)
        return containing[word]

    per_topic: list[float] = []
    for topic in range(model.k):
        words = top_words(model, topic, top_n)
        ids = [model.vocab.index(w) for w in words]
        scores: list[float] = []
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                joint = sum(1 for s in doc_sets if ids[a] in s and ids[b] in s)
                if joint == 0:
                    scores.append(-1.0)
                    continue
                p_joint = joint / n_docs
                if joint == n_docs:
                    scores.append(1.0)
                    continue
                p_a = doc_count(ids[a]) / n_docs
                p_b = doc_count(ids[b]) / n_docs
                scores.append(math.log(p_joint / (p_a * p_b)) / -math.log(p_joint))
        per_topic.append(sum(scores) / len(scores))
    return CoherenceReport(
        per_topic=per_topic, mean=sum(per_topic) / len(per_topic), top_n=top_n
    )


def save_model(model: LdaModel, path: str | Path) -> None:
    """Write the fitted state as versioned text; exact round trip."""
    lines = [f"{MODEL_FORMAT} {MODEL_VERSION}"]
    lines.append(f"k {model.k}")
    lines.append(f"alpha {model.alpha!r}")
    lines.append(f"eta {model.eta!r}")
    lines.append(f"iterations {model.iterations}")
    lines.append(f"seed {model.seed}")
    lines.append(f"vocab {len(model.vocab)}")
    lines.extend(model.vocab)
    lines.append(f"docs {len(model.doc_ids)}")
    for doc_id, tokens, assignment in zip(model.doc_ids, model.doc_tokens, model.assignments):
        lines.append(doc_id)
        lines.append(" ".join(map(str, tokens)))
        lines.append(" ".join(map(str, assignment)))
    lines.append(f"loglik {len(model.log_likelihoods)}")
    lines.extend(repr(v) for v in model.log_likelihoods)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LdaModel:
    """Rebuild a model saved by :func:`save_model`.

    phi and theta are recomputed from the stored integer state, which
    reproduces the saved model's matrices exactly.
    """
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split()
    if len(header) != 2 or header[0] != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if int(header[1]) != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported version {header[1]}")

    cursor = 1

    def take(key: str) -> str:
        nonlocal cursor
        name, _, value = text[cursor].partition(" ")
        if name != key:
            raise ValueError(f"{path}: expected {key!r} at line {cursor + 1}")
        cursor += 1
        return value

    k = int(take("k"))
    alpha = float(take("alpha"))
    eta = float(take("eta"))
    iterations = int(take("iterations"))
    seed = int(take("seed"))
    n_vocab = int(take("vocab"))
    vocab = text[cursor : cursor + n_vocab]
    cursor += n_vocab
    n_docs = int(take("docs"))
    doc_ids: list[str] = []
    doc_tokens: list[list[int]] = []
    assignments: list[list[int]] = []
    for _ in range(n_docs):
        doc_ids.append(text[cursor])
        doc_tokens.append([int(x) for x in text[cursor + 1].split()])
        assignments.append([int(x) for x in text[cursor + 2].split()])
        cursor += 3
    n_ll = int(take("loglik"))
    log_likelihoods = [float(x) for x in text[cursor : cursor + n_ll]]

    n_words = len(vocab)
    topic_word = np.zeros((k, n_words), dtype=float)
    topic_total = np.zeros(k, dtype=float)
    doc_topic = np.zeros((n_docs, k), dtype=float)
    doc_lengths = np.zeros(n_docs, dtype=float)
    for d, (tokens, assignment) in enumerate(zip(doc_tokens, assignments)):
        if len(tokens) != len(assignment):
            raise ValueError(f"{path}: token/assignment length mismatch in doc {d}")
        doc_lengths[d] = len(tokens)
        for w, t in zip(tokens, assignment):
            topic_word[t, w] += 1
            topic_total[t] += 1
            doc_topic[d, t] += 1
    phi = (topic_word + eta) / (topic_total[:, None] + eta * n_words)
    theta = (doc_topic + alpha) / (doc_lengths[:, None] + alpha * k)

    return LdaModel(
        k=k,
        alpha=alpha,
        eta=eta,
        iterations=iterations,
        seed=seed,
        vocab=vocab,
        doc_ids=doc_ids,
        doc_tokens=doc_tokens,
        assignments=assignments,
        phi=phi,
        theta=theta,
        log_likelihoods=log_likelihoods,
    )
