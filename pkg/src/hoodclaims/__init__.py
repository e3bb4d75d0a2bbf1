"""Neighborhood-claim extraction and analysis for rental-listing corpora.

The package turns scraped rental listings into: resolved neighborhood
claims (string matching or LLM annotation), accuracy metrics against a
gold set, spatial statistics relative to claim-derived social centers and
official boundary polygons, LDA topics over listing text, and regressions
relating the two.
"""

__version__ = "0.1.0"

from .claims import ClaimLabel, label_corpus_string, match_field, resolve_claim
from .corpus import (
    CleanListing,
    RawListing,
    clean_text,
    deduplicate,
    ingest,
    load_cleaning_rules,
)
from .evaluation import EvalReport, evaluate, load_gold
from .gazetteer import (
    UNKNOWN,
    Gazetteer,
    NormalizationTable,
    load_default_gazetteer,
    load_default_normalization,
    load_gazetteer,
    load_normalization_table,
    normalize_label,
)
from .geo import (
    BoundarySet,
    DistanceRecord,
    SocialCenter,
    assign_boundary,
    compute_distances,
    flag_peripheral,
    haversine_km,
    load_boundaries,
    representation,
    social_centers,
)
from .regression import OlsFit, build_design, fit_ols
from .topics import (
    CoherenceReport,
    LdaModel,
    coherence,
    corpus_shares,
    fit_lda,
    load_lemmas,
    load_stopwords,
    preprocess,
    top_words,
)

__all__ = [
    "__version__",
    "UNKNOWN",
    "BoundarySet",
    "ClaimLabel",
    "CleanListing",
    "CoherenceReport",
    "DistanceRecord",
    "EvalReport",
    "Gazetteer",
    "LdaModel",
    "NormalizationTable",
    "OlsFit",
    "RawListing",
    "SocialCenter",
    "assign_boundary",
    "build_design",
    "clean_text",
    "coherence",
    "compute_distances",
    "corpus_shares",
    "deduplicate",
    "evaluate",
    "fit_lda",
    "fit_ols",
    "flag_peripheral",
    "haversine_km",
    "ingest",
    "label_corpus_string",
    "load_boundaries",
    "load_cleaning_rules",
    "load_default_gazetteer",
    "load_default_normalization",
    "load_gazetteer",
    "load_gold",
    "load_lemmas",
    "load_normalization_table",
    "load_stopwords",
    "match_field",
    "normalize_label",
    "preprocess",
    "representation",
    "resolve_claim",
    "social_centers",
    "top_words",
]
