"""Staged analysis pipeline driven by a flat key = value config file.

Each stage reads the previous stage's files from the output directory,
writes its own atomically (temp file + rename), and records row counts,
timings, and output digests in a run manifest. Stage files, not shared
memory, are the contract between stages, so any stage can be rerun alone
once its prerequisites exist.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import re
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import __version__
from . import claims as claims_mod
from . import corpus as corpus_mod
from . import evaluation as eval_mod
from . import geo as geo_mod
from . import llm as llm_mod
from . import regression as regress_mod
from . import topics as topics_mod
from .claims import ClaimLabel
from .gazetteer import (
    Gazetteer,
    NormalizationTable,
    load_default_gazetteer,
    load_default_normalization,
    load_gazetteer,
    load_normalization_table,
)

log = logging.getLogger(__name__)

CONFIG_VERSION = "1"
N_DECILES = 10


class ConfigError(Exception):
    """Bad config file or bad invocation; exit code 1."""


class DataError(Exception):
    """Bad input data or missing artifacts; exit code 2."""


class PrerequisiteError(DataError):
    """An upstream stage's output is missing."""


@dataclass
class PipelineConfig:
    config_dir: Path
    corpus: Path
    corpus_format: str = "jsonl"
    gazetteer: Path | None = None
    normalization: Path | None = None
    boilerplate: Path | None = None
    mojibake: Path | None = None
    boundaries: dict[str, Path] = field(default_factory=dict)
    representation_source: str | None = None
    stopwords: Path | None = None
    lemmas: Path | None = None
    gold: Path | None = None
    labels_for_geo: str = "string"
    distance_mode: str = geo_mod.GREAT_CIRCLE
    peripheral_fraction: float = 0.2
    min_posts: int = 5
    lda_k: int = 5
    lda_alpha: float = 0.1
    lda_eta: float = 0.01
    lda_iterations: int = 100
    lda_seed: int = 0
    coherence_top_n: int = 10
    baseline_topic: int = 1
    rent_per_thousand: bool = False
    llm_model: str = "gpt-4.1-mini"
    llm_temperature: float = 0.0
    llm_max_rpm: int = 60
    llm_cache: Path | None = None
    llm_offline: bool = False
    llm_max_workers: int = 4
    llm_base_url: str = "https://api.openai.com/v1"
    llm_api_key_env: str = "OPENAI_API_KEY"
    llm_template: Path | None = None
    raw: dict[str, str] = field(default_factory=dict)

    def load_gazetteer(self) -> Gazetteer:
        if self.gazetteer is None:
            return load_default_gazetteer()
        return load_gazetteer(self.gazetteer)

    def load_normalization(self, gazetteer: Gazetteer) -> NormalizationTable:
        if self.normalization is None:
            return load_default_normalization(gazetteer)
        return load_normalization_table(self.normalization, gazetteer)

    def config_hash(self) -> str:
        canonical = "\n".join(f"{k} = {v}" for k, v in sorted(self.raw.items()))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_PATH_KEYS = {
    "corpus",
    "gazetteer",
    "normalization",
    "boilerplate",
    "mojibake",
    "stopwords",
    "lemmas",
    "gold",
    "llm_template",
}
_SCALAR_KEYS = {
    "config_version",
    "corpus_format",
    "representation_source",
    "labels_for_geo",
    "distance_mode",
    "peripheral_fraction",
    "min_posts",
    "lda_k",
    "lda_alpha",
    "lda_eta",
    "lda_iterations",
    "lda_seed",
    "coherence_top_n",
    "baseline_topic",
    "rent_per_thousand",
    "llm_model",
    "llm_temperature",
    "llm_max_rpm",
    "llm_cache",
    "llm_offline",
    "llm_max_workers",
    "llm_base_url",
    "llm_api_key_env",
}


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true or false, got {value!r}")


def _parse_number(value: str, key: str, cast: Callable, low=None, high=None):
    try:
        number = cast(value)
    except ValueError:
        raise ConfigError(f"{key}: not a valid {cast.__name__}: {value!r}")
    if low is not None and number < low:
        raise ConfigError(f"{key}: must be >= {low}, got {number}")
    if high is not None and number > high:
        raise ConfigError(f"{key}: must be <= {high}, got {number}")
    return number


def parse_config(path: str | Path) -> PipelineConfig:
    """Parse and validate the flat ``key = value`` config format.

    Unknown keys are errors so typos fail loudly. Relative paths resolve
    against the config file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        if (
            key not in _PATH_KEYS
            and key not in _SCALAR_KEYS
            and not key.startswith("boundary.")
        ):
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value

    version = raw.get("config_version")
    if version is None:
        raise ConfigError(f"{path}: missing config_version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"{path}: unsupported config_version {version!r}")
    if "corpus" not in raw:
        raise ConfigError(f"{path}: missing corpus path")

    base = path.parent

    def resolve(key: str, must_exist: bool = True) -> Path | None:
        if key not in raw or not raw[key]:
            return None
        candidate = (base / raw[key]).resolve() if not Path(raw[key]).is_absolute() else Path(raw[key])
        if must_exist and not candidate.is_file():
            raise ConfigError(f"{path}: {key} does not exist: {candidate}")
        return candidate

    config = PipelineConfig(config_dir=base, corpus=resolve("corpus"), raw=dict(raw))
    config.corpus_format = raw.get("corpus_format", "jsonl")
    if config.corpus_format not in ("jsonl", "csv"):
        raise ConfigError(f"corpus_format must be jsonl or csv, got {config.corpus_format!r}")
    config.gazetteer = resolve("gazetteer")
    config.normalization = resolve("normalization")
    config.boilerplate = resolve("boilerplate")
    config.mojibake = resolve("mojibake")
    config.stopwords = resolve("stopwords")
    config.lemmas = resolve("lemmas")
    config.gold = resolve("gold")
    config.llm_template = resolve("llm_template")

    for key, value in raw.items():
        if key.startswith("boundary."):
            source = key[len("boundary."):]
            if not source:
                raise ConfigError(f"{path}: boundary key with empty source name")
            boundary_path = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
            if not boundary_path.is_file():
                raise ConfigError(f"{path}: {key} does not exist: {boundary_path}")
            config.boundaries[source] = boundary_path

    config.representation_source = raw.get("representation_source") or None
    if config.representation_source is None and len(config.boundaries) == 1:
        config.representation_source = next(iter(config.boundaries))
    if config.representation_source is not None and config.representation_source not in config.boundaries:
        raise ConfigError(
            f"representation_source {config.representation_source!r} has no boundary.<source> entry"
        )

    config.labels_for_geo = raw.get("labels_for_geo", "string")
    if config.labels_for_geo not in ("string", "llm"):
        raise ConfigError(f"labels_for_geo must be string or llm, got {config.labels_for_geo!r}")
    config.distance_mode = raw.get("distance_mode", geo_mod.GREAT_CIRCLE)
    if config.distance_mode not in geo_mod.DISTANCE_MODES:
        raise ConfigError(f"distance_mode must be one of {geo_mod.DISTANCE_MODES}")

    if "peripheral_fraction" in raw:
        config.peripheral_fraction = _parse_number(raw["peripheral_fraction"], "peripheral_fraction", float)
        if not 0 < config.peripheral_fraction < 1:
            raise ConfigError(f"peripheral_fraction must be in (0,1), got {config.peripheral_fraction}")
    if "min_posts" in raw:
        config.min_posts = _parse_number(raw["min_posts"], "min_posts", int, low=1)
    if "lda_k" in raw:
        config.lda_k = _parse_number(raw["lda_k"], "lda_k", int, low=2)
    if "lda_alpha" in raw:
        config.lda_alpha = _parse_number(raw["lda_alpha"], "lda_alpha", float)
        if config.lda_alpha <= 0:
            raise ConfigError("lda_alpha must be positive")
    if "lda_eta" in raw:
        config.lda_eta = _parse_number(raw["lda_eta"], "lda_eta", float)
        if config.lda_eta <= 0:
            raise ConfigError("lda_eta must be positive")
    if "lda_iterations" in raw:
        config.lda_iterations = _parse_number(raw["lda_iterations"], "lda_iterations", int, low=1)
    if "lda_seed" in raw:
        config.lda_seed = _parse_number(raw["lda_seed"], "lda_seed", int)
    if "coherence_top_n" in raw:
        config.coherence_top_n = _parse_number(raw["coherence_top_n"], "coherence_top_n", int, low=2)
    if "baseline_topic" in raw:
        config.baseline_topic = _parse_number(raw["baseline_topic"], "baseline_topic", int, low=1)
    if "rent_per_thousand" in raw:
        config.rent_per_thousand = _parse_bool(raw["rent_per_thousand"], "rent_per_thousand")

    config.llm_model = raw.get("llm_model", config.llm_model)
    if "llm_temperature" in raw:
        config.llm_temperature = _parse_number(raw["llm_temperature"], "llm_temperature", float, low=0.0)
    if "llm_max_rpm" in raw:
        config.llm_max_rpm = _parse_number(raw["llm_max_rpm"], "llm_max_rpm", int, low=1)
    if "llm_cache" in raw and raw["llm_cache"]:
        cache = Path(raw["llm_cache"])
        config.llm_cache = (base / cache).resolve() if not cache.is_absolute() else cache
    if "llm_offline" in raw:
        config.llm_offline = _parse_bool(raw["llm_offline"], "llm_offline")
    if "llm_max_workers" in raw:
        config.llm_max_workers = _parse_number(raw["llm_max_workers"], "llm_max_workers", int, low=1)
    config.llm_base_url = raw.get("llm_base_url", config.llm_base_url)
    config.llm_api_key_env = raw.get("llm_api_key_env", config.llm_api_key_env)
    return config


def _fmt(value: float) -> str:
    return format(value, ".12g")


def write_text_atomic(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", dir=path.parent, prefix=f".{path.name}.", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        os.unlink(handle.name)
        raise


def write_csv_atomic(path: Path, rows: Iterable[Iterable[str]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow(list(row))
    write_text_atomic(path, buffer.getvalue())


def write_json_atomic(path: Path, payload: dict) -> None:
    write_text_atomic(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def update_manifest(
    out_dir: Path,
    config: PipelineConfig,
    stage: str,
    rows: dict[str, int],
    seconds: float,
    outputs: list[Path],
) -> None:
    manifest_path = out_dir / "manifest.json"
    config_hash = config.config_hash()
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("config_hash") != config_hash:
            log.warning("config changed since last run; resetting manifest")
            manifest = {}
    if not manifest:
        inputs = {}
        candidates = [config.corpus, config.gazetteer, config.normalization,
                      config.boilerplate, config.mojibake, config.stopwords,
                      config.lemmas, config.gold, config.llm_template,
                      *config.boundaries.values()]
        for candidate in candidates:
            if candidate is not None and candidate.is_file():
                inputs[str(candidate)] = _digest(candidate)
        manifest = {
            "tool_version": __version__,
            "config_hash": config_hash,
            "inputs": inputs,
            "stages": {},
        }
    manifest["stages"][stage] = {
        "rows": rows,
        "seconds": round(seconds, 3),
        "outputs": {p.name if p.parent == out_dir else str(p.relative_to(out_dir)): _digest(p) for p in outputs},
    }
    write_json_atomic(manifest_path, manifest)


def _require(path: Path, producer: str) -> Path:
    if not path.is_file():
        raise PrerequisiteError(f"missing {path.name}; run the {producer} subcommand first")
    return path


def _write_labels(path: Path, labels: Iterable[ClaimLabel]) -> None:
    rows = [["listing_id", "claim", "source_field", "method"]]
    rows.extend([l.listing_id, l.claim, l.source_field, l.method] for l in labels)
    write_csv_atomic(path, rows)


def _read_labels(path: Path) -> list[ClaimLabel]:
    labels = []
    with path.open(encoding="utf-8", newline="") as handle:
        for record in csv.DictReader(handle):
            labels.append(
                ClaimLabel(
                    listing_id=record["listing_id"],
                    claim=record["claim"],
                    source_field=record["source_field"],
                    method=record["method"],
                )
            )
    return labels


def cmd_ingest(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Ingest, clean, and deduplicate into corpus.jsonl."""
    started = time.monotonic()
    try:
        result = corpus_mod.ingest(config.corpus, config.corpus_format)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    rules = corpus_mod.load_cleaning_rules(config.boilerplate, config.mojibake)
    cleaned = corpus_mod.clean_corpus(result.listings, rules)
    survivors, stats = corpus_mod.deduplicate(cleaned)
    survivors = sorted(survivors, key=lambda l: l.id)

    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = out_dir / "corpus.jsonl"
    buffer = io.StringIO()
    for listing in survivors:
        buffer.write(json.dumps(corpus_mod._listing_to_record(listing), ensure_ascii=False) + "\n")
    write_text_atomic(corpus_path, buffer.getvalue())

    duplicates = sorted(
        (l.id, l.duplicate_of) for l in cleaned if l.duplicate_of is not None
    )
    dup_rows = [["listing_id", "duplicate_of"]]
    dup_rows.extend([a, b] for a, b in duplicates)
    dup_path = out_dir / "duplicates.csv"
    write_csv_atomic(dup_path, dup_rows)

    issue_lines = []
    for issue in result.errors:
        issue_lines.append(json.dumps(
            {"severity": "error", "line": issue.line, "listing_id": issue.listing_id,
             "message": issue.message}, ensure_ascii=False))
    for issue in result.warnings:
        issue_lines.append(json.dumps(
            {"severity": "warning", "line": issue.line, "listing_id": issue.listing_id,
             "message": issue.message}, ensure_ascii=False))
    issues_path = out_dir / "ingest_issues.jsonl"
    write_text_atomic(issues_path, "\n".join(issue_lines) + ("\n" if issue_lines else ""))

    rows = {
        "ingested": len(result.listings),
        "errors": len(result.errors),
        "warnings": len(result.warnings),
        "kept": stats.kept_count,
        "dropped_duplicates": stats.dropped_duplicates,
    }
    update_manifest(out_dir, config, "ingest", rows, time.monotonic() - started,
                    [corpus_path, dup_path, issues_path])
    return rows


def cmd_label_string(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """String-match claims for every listing in the corpus."""
    started = time.monotonic()
    listings = corpus_mod.read_corpus(_require(out_dir / "corpus.jsonl", "ingest"))
    try:
        gazetteer = config.load_gazetteer()
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    labels = claims_mod.label_corpus_string(listings, gazetteer)
    path = out_dir / "labels_string.csv"
    _write_labels(path, labels)
    known = sum(1 for l in labels if l.claim != claims_mod.UNKNOWN)
    rows = {"labeled": len(labels), "known": known, "unknown": len(labels) - known}
    update_manifest(out_dir, config, "label-string", rows, time.monotonic() - started, [path])
    return rows


def cmd_label_llm(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Chat-completion claims; offline mode replays the response cache."""
    started = time.monotonic()
    listings = corpus_mod.read_corpus(_require(out_dir / "corpus.jsonl", "ingest"))
    try:
        gazetteer = config.load_gazetteer()
        table = config.load_normalization(gazetteer)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if config.llm_cache is None:
        raise ConfigError("label-llm needs llm_cache set (or --cache)")
    llm_config = llm_mod.LlmConfig(
        model_id=config.llm_model,
        temperature=config.llm_temperature,
        max_rpm=config.llm_max_rpm,
        cache_path=config.llm_cache,
        offline=config.llm_offline,
        base_url=config.llm_base_url,
        api_key_env=config.llm_api_key_env,
        max_workers=config.llm_max_workers,
        template_path=config.llm_template,
    )
    try:
        run = llm_mod.annotate_corpus(listings, gazetteer, table, llm_config)
    except (llm_mod.AnnotationError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    path = out_dir / "labels_llm.csv"
    _write_labels(path, run.labels)
    report_path = out_dir / "llm_report.json"
    write_json_atomic(report_path, {
        "listings": run.report.listings,
        "labeled": run.report.labeled,
        "network_calls": run.report.network_calls,
        "cache_hits": run.report.cache_hits,
        "skipped_empty_fields": run.report.skipped_empty_fields,
        "failed_listings": run.report.failed_listings,
        "elapsed_seconds": round(run.report.elapsed_seconds, 3),
        "mean_call_seconds": (
            round(run.report.mean_call_seconds, 3) if run.report.mean_call_seconds else None
        ),
        "failures": [
            {"listing_id": f.listing_id, "field": f.field, "message": f.message}
            for f in run.failures
        ],
    })
    rows = {
        "labeled": run.report.labeled,
        "failed": run.report.failed_listings,
        "network_calls": run.report.network_calls,
        "cache_hits": run.report.cache_hits,
    }
    update_manifest(out_dir, config, "label-llm", rows, time.monotonic() - started, [path])
    return rows


def cmd_evaluate(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Score whichever label files exist against the gold set."""
    started = time.monotonic()
    if config.gold is None:
        raise ConfigError("evaluate needs a gold path in the config")
    try:
        gazetteer = config.load_gazetteer()
        table = config.load_normalization(gazetteer)
        gold = eval_mod.load_gold(config.gold, table, gazetteer)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    candidates = [("string", out_dir / "labels_string.csv"), ("llm", out_dir / "labels_llm.csv")]
    available = [(name, path) for name, path in candidates if path.is_file()]
    if not available:
        raise PrerequisiteError(
            "no label files found; run the label-string or label-llm subcommand first"
        )
    rows: dict[str, int] = {"gold": len(gold)}
    outputs: list[Path] = []
    for name, path in available:
        labels = _read_labels(path)
        try:
            report = eval_mod.evaluate(labels, gold)
        except ValueError as exc:
            raise DataError(f"{name}: {exc}") from exc
        csv_path = out_dir / f"eval_{name}.csv"
        write_csv_atomic(csv_path, eval_mod.report_to_csv_rows(report))
        txt_path = out_dir / f"eval_{name}.txt"
        write_text_atomic(txt_path, eval_mod.format_report(report))
        outputs.extend([csv_path, txt_path])
        rows[f"{name}_classes"] = len(report.per_class)
    update_manifest(out_dir, config, "evaluate", rows, time.monotonic() - started, outputs)
    return rows


def _geo_inputs(config: PipelineConfig, out_dir: Path):
    listings = corpus_mod.read_corpus(_require(out_dir / "corpus.jsonl", "ingest"))
    label_file = f"labels_{config.labels_for_geo}.csv"
    producer = "label-string" if config.labels_for_geo == "string" else "label-llm"
    labels = _read_labels(_require(out_dir / label_file, producer))
    coordinates = geo_mod.coordinates_of(listings)
    return listings, labels, coordinates


def _load_boundary_sets(config: PipelineConfig) -> dict[str, geo_mod.BoundarySet]:
    if not config.boundaries:
        raise ConfigError("no boundary.<source> entries in the config")
    gazetteer = config.load_gazetteer()
    table = config.load_normalization(gazetteer)
    sets = {}
    for source, path in sorted(config.boundaries.items()):
        try:
            sets[source] = geo_mod.load_boundaries(path, source, table, gazetteer)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    return sets

def cmd_geo(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Social centers, distances, peripheral flags, and claim-point GeoJSON."""
    started = time.monotonic()
    _, labels, coordinates = _geo_inputs(config, out_dir)
    boundary_sets = _load_boundary_sets(config)
    primary = boundary_sets[config.representation_source] if config.representation_source else None

    centers = geo_mod.social_centers(labels, coordinates)
    if not centers:
        raise DataError("no labeled listings with coordinates; nothing to analyze")
    try:
        records = geo_mod.compute_distances(labels, coordinates, centers, config.distance_mode)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    records = geo_mod.flag_peripheral(records, config.peripheral_fraction, config.min_posts)

    distance_rows = [["listing_id", "neighborhood", "raw", "relative", "z_score", "peripheral"]]
    distance_rows.extend(
        [r.listing_id, r.neighborhood, _fmt(r.raw), _fmt(r.relative), _fmt(r.z_score),
         "true" if r.peripheral else "false"]
        for r in records
    )
    distances_path = out_dir / "distances.csv"
    write_csv_atomic(distances_path, distance_rows)

    centers_path = out_dir / "social_centers.geojson"
    write_json_atomic(centers_path, geo_mod.centers_to_geojson(centers))
    points_path = out_dir / "claim_points.geojson"
    write_json_atomic(
        points_path,
        geo_mod.claim_points_to_geojson(labels, coordinates, primary, records),
    )
    outputs = [distances_path, centers_path, points_path]
    rows = {
        "centers": len(centers),
        "distance_records": len(records),
        "peripheral": sum(1 for r in records if r.peripheral),
    }
    update_manifest(out_dir, config, "geo", rows, time.monotonic() - started, outputs)
    return rows


def cmd_topics(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Fit the topic model and write shares, top words, theta, coherence."""
    started = time.monotonic()
    listings = corpus_mod.read_corpus(_require(out_dir / "corpus.jsonl", "ingest"))
    if config.stopwords is not None:
        stopwords = topics_mod.load_stopwords(config.stopwords)
    else:
        stopwords = topics_mod.load_stopwords()
    lemmas = topics_mod.load_lemmas(config.lemmas)
    texts = [
        (l.id, (l.cleaned_title + " " + l.cleaned_body).strip()) for l in listings
    ]
    vocabulary, docs = topics_mod.preprocess(texts, stopwords, lemmas)
    try:
        model = topics_mod.fit_lda(
            docs,
            vocabulary,
            k=config.lda_k,
            alpha=config.lda_alpha,
            eta=config.lda_eta,
            iterations=config.lda_iterations,
            seed=config.lda_seed,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    top_n = min(config.coherence_top_n, len(vocabulary))
    word_rows = [["topic", "rank", "word", "probability"]]
    for topic in range(model.k):
        for rank, word in enumerate(topics_mod.top_words(model, topic, top_n), start=1):
            word_rows.append(
                [str(topic + 1), str(rank), word, _fmt(model.phi[topic, model.vocab.index(word)])]
            )
    words_path = out_dir / "topic_words.csv"
    write_csv_atomic(words_path, word_rows)

    shares = topics_mod.corpus_shares(model)
    shares_path = out_dir / "topic_shares.csv"
    write_csv_atomic(
        shares_path,
        [["topic", "share"]] + [[str(t + 1), _fmt(shares[t])] for t in range(model.k)],
    )

    theta_path = out_dir / "theta.csv"
    theta_rows = [["listing_id"] + [f"topic_{t + 1}" for t in range(model.k)]]
    theta_rows.extend(
        [doc_id] + [_fmt(model.theta[i, t]) for t in range(model.k)]
        for i, doc_id in enumerate(model.doc_ids)
    )
    write_csv_atomic(theta_path, theta_rows)

    report = topics_mod.coherence(model, docs, top_n)
    coherence_path = out_dir / "coherence.csv"
    coherence_rows = [["topic", "npmi"]]
    coherence_rows.extend([str(t + 1), _fmt(report.per_topic[t])] for t in range(model.k))
    coherence_rows.append(["mean", _fmt(report.mean)])
    write_csv_atomic(coherence_path, coherence_rows)

    model_path = out_dir / "lda_model.txt"
    buffer_path = out_dir / f".{model_path.name}.stage"
    topics_mod.save_model(model, buffer_path)
    os.replace(buffer_path, model_path)

    outputs = [words_path, shares_path, theta_path, coherence_path, model_path]
    rows = {
        "documents": len(model.doc_ids),
        "vocabulary": len(vocabulary),
        "topics": model.k,
    }
    update_manifest(out_dir, config, "topics", rows, time.monotonic() - started, outputs)
    return rows


def _read_theta(path: Path) -> dict[str, np.ndarray]:
    theta: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        k = len(header) - 1
        for row in reader:
            theta[row[0]] = np.asarray([float(v) for v in row[1 : k + 1]], dtype=float)
    return theta


def _read_distances(path: Path) -> list[geo_mod.DistanceRecord]:
    records = []
    with path.open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            records.append(
                geo_mod.DistanceRecord(
                    listing_id=row["listing_id"],
                    neighborhood=row["neighborhood"],
                    raw=float(row["raw"]),
                    relative=float(row["relative"]),
                    z_score=float(row["z_score"]),
                    peripheral=row["peripheral"] == "true",
                )
            )
    return records


def cmd_regress(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Regress relative distance on unit covariates and topic shares."""
    started = time.monotonic()
    listings = corpus_mod.read_corpus(_require(out_dir / "corpus.jsonl", "ingest"))
    records = _read_distances(_require(out_dir / "distances.csv", "geo"))
    theta = _read_theta(_require(out_dir / "theta.csv", "topics"))
    try:
        design = regress_mod.build_design(
            listings,
            records,
            theta,
            baseline_topic=config.baseline_topic,
            rent_per_thousand=config.rent_per_thousand,
        )
        fit = regress_mod.fit_ols(design.X, design.y, design.columns)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    csv_rows = [["term", "coefficient", "std_error", "t_value", "p_value"]]
    csv_rows.extend(
        [fit.columns[i], _fmt(fit.coefficients[i]), _fmt(fit.standard_errors[i]),
         _fmt(fit.t_values[i]), _fmt(fit.p_values[i])]
        for i in range(len(fit.columns))
    )
    csv_path = out_dir / "regression.csv"
    write_csv_atomic(csv_path, csv_rows)
    txt_path = out_dir / "regression.txt"
    summary = regress_mod.format_fit(fit)
    summary += f"rows dropped for missing covariates: {design.n_dropped}\n"
    write_text_atomic(txt_path, summary)

    rows = {"rows": fit.n, "dropped": design.n_dropped, "terms": len(fit.columns)}
    update_manifest(out_dir, config, "regress", rows, time.monotonic() - started, [csv_path, txt_path])
    return rows


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def cmd_report(config: PipelineConfig, out_dir: Path) -> dict[str, int]:
    """Plot-ready tables and per-neighborhood GeoJSON overlays."""
    started = time.monotonic()
    _, labels, coordinates = _geo_inputs(config, out_dir)
    records = _read_distances(_require(out_dir / "distances.csv", "geo"))
    theta = _read_theta(_require(out_dir / "theta.csv", "topics"))
    boundary_sets = _load_boundary_sets(config)
    primary = boundary_sets[config.representation_source] if config.representation_source else None
    if primary is None:
        raise ConfigError("report needs representation_source when several boundary sources are set")

    rep_rows = geo_mod.representation(labels, coordinates, primary)
    rep_csv = [["neighborhood", "claims", "contained", "ratio", "flagged"]]
    for row in rep_rows:
        rep_csv.append([
            row.neighborhood,
            str(row.claims),
            "" if row.contained is None else str(row.contained),
            "" if row.ratio is None else _fmt(row.ratio),
            "true" if row.flagged else "false",
        ])
    rep_path = out_dir / "representation.csv"
    write_csv_atomic(rep_path, rep_csv)

    k = len(next(iter(theta.values()))) if theta else 0
    record_by_id = {r.listing_id: r for r in records}
    shared = sorted(set(record_by_id) & set(theta))

    pair_rows = [["listing_id", "neighborhood", "relative"] + [f"topic_{t+1}" for t in range(k)]]
    for listing_id in shared:
        record = record_by_id[listing_id]
        pair_rows.append(
            [listing_id, record.neighborhood, _fmt(record.relative)]
            + [_fmt(theta[listing_id][t]) for t in range(k)]
        )
    pairs_path = out_dir / "listing_topic_distance.csv"
    write_csv_atomic(pairs_path, pair_rows)

    bins: list[list[str]] = []
    header = ["decile", "lo", "hi", "n"] + [f"topic_{t+1}" for t in range(k)]
    for decile in range(1, N_DECILES + 1):
        lo = (decile - 1) / N_DECILES
        hi = decile / N_DECILES
        members = [
            listing_id
            for listing_id in shared
            if (record_by_id[listing_id].relative > lo or decile == 1)
            and record_by_id[listing_id].relative <= hi
        ]
        means = []
        if members:
            stacked = np.vstack([theta[m] for m in members])
            means = [_fmt(v) for v in stacked.mean(axis=0)]
        else:
            means = ["" for _ in range(k)]
        bins.append([str(decile), _fmt(lo), _fmt(hi), str(len(members))] + means)
    decile_path = out_dir / "decile_topic_shares.csv"
    decile_text = io.StringIO()
    decile_text.write("# deciles of relative distance, right-closed bins; decile 1 includes 0\n")
    writer = csv.writer(decile_text, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(bins)
    write_text_atomic(decile_path, decile_text.getvalue())

    hood_dir = out_dir / "neighborhoods"
    centers = geo_mod.social_centers(labels, coordinates)
    center_by_name = {c.neighborhood: c for c in centers}
    overlay_paths = []
    for center in centers:
        hood_labels = [l for l in labels if l.claim == center.neighborhood]
        collection = geo_mod.claim_points_to_geojson(hood_labels, coordinates, primary, records)
        collection["features"].extend(
            geo_mod.centers_to_geojson([center_by_name[center.neighborhood]])["features"]
        )
        overlay_path = hood_dir / f"{_slug(center.neighborhood)}.geojson"
        write_json_atomic(overlay_path, collection)
        overlay_paths.append(overlay_path)

    outputs = [rep_path, pairs_path, decile_path, *overlay_paths]
    rows = {
        "representation_rows": len(rep_rows),
        "decile_rows": N_DECILES,
        "overlays": len(overlay_paths),
    }
    update_manifest(out_dir, config, "report", rows, time.monotonic() - started, outputs)
    return rows


STAGES: dict[str, Callable[[PipelineConfig, Path], dict[str, int]]] = {
    "ingest": cmd_ingest,
    "label-string": cmd_label_string,
    "label-llm": cmd_label_llm,
    "evaluate": cmd_evaluate,
    "geo": cmd_geo,
    "topics": cmd_topics,
    "regress": cmd_regress,
    "report": cmd_report,
}
