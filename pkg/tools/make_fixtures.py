"""Generate the committed synthetic-city fixtures under tests/data/synthcity.

Everything is seeded, so rerunning the script reproduces the same bytes.
The city has 8 fictional neighborhoods on a grid (one square with a hole,
one L-shape, one multipolygon with a small exclave overlapping a neighbor).
The 50-listing corpus plants: reposts, a malformed row, missing fields,
mojibake, boilerplate, a reputation-laundering cluster claiming goldcrest
from millbrook, and body text whose generic-hype share rises with distance
from the claim cluster so topic shares trend with peripherality.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np
from shapely.geometry import Point, shape

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from hoodclaims import corpus as corpus_mod  # noqa: E402
from hoodclaims import llm as llm_mod  # noqa: E402

OUT = REPO / "tests" / "data" / "synthcity"

HOODS = [
    "arbor glen",
    "brickyard",
    "cedar flats",
    "dockside",
    "elm commons",
    "foundry",
    "goldcrest",
    "millbrook",
]
FILLER = [
    "ashwood",
    "bell harbor",
    "coppergate",
    "driftwood",
    "fernvale",
    "grouse point",
    "harrow end",
    "ivy ridge",
    "juniper row",
    "kestrel park",
    "larchmont",
    "quarry banks",
]

ALIASES = {
    "brickyard": ["brick yard"],
    "dockside": ["dock side"],
    "goldcrest": ["gold crest"],
    "millbrook": ["mill brook"],
}

NORMALIZATION = [
    ("brick yard", "brickyard"),
    ("dock side", "dockside"),
    ("gold crest", "goldcrest"),
    ("mill brook", "millbrook"),
    ("arborglen", "arbor glen"),
    ("elmcommons", "elm commons"),
    ("cedarflats", "cedar flats"),
    ("the foundry", "foundry"),
]


def box(lon0, lat0, lon1, lat1):
    return [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]


BOUNDARIES = {
    "arbor glen": {"type": "Polygon", "coordinates": [box(-87.40, 41.24, -87.28, 41.36)]},
    "brickyard": {"type": "Polygon", "coordinates": [box(-87.28, 41.24, -87.16, 41.36)]},
    "cedar flats": {
        "type": "MultiPolygon",
        "coordinates": [
            [box(-87.16, 41.24, -87.04, 41.36)],
            [box(-87.08, 41.14, -87.05, 41.17)],
        ],
    },
    "dockside": {
        "type": "Polygon",
        "coordinates": [
            [
                [-87.28, 41.00],
                [-87.04, 41.00],
                [-87.04, 41.06],
                [-87.16, 41.06],
                [-87.16, 41.12],
                [-87.28, 41.12],
                [-87.28, 41.00],
            ]
        ],
    },
    "elm commons": {"type": "Polygon", "coordinates": [box(-87.40, 41.12, -87.28, 41.24)]},
    "foundry": {
        "type": "Polygon",
        "coordinates": [
            box(-87.28, 41.12, -87.16, 41.24),
            list(reversed(box(-87.24, 41.16, -87.20, 41.20))),
        ],
    },
    "goldcrest": {"type": "Polygon", "coordinates": [box(-87.16, 41.12, -87.04, 41.24)]},
    "millbrook": {"type": "Polygon", "coordinates": [box(-87.40, 41.00, -87.28, 41.12)]},
}

ANCHORS = {
    "arbor glen": (41.30, -87.34),
    "brickyard": (41.30, -87.22),
    "cedar flats": (41.30, -87.10),
    "dockside": (41.03, -87.20),
    "elm commons": (41.18, -87.34),
    "foundry": (41.145, -87.185),
    "goldcrest": (41.18, -87.10),
    "millbrook": (41.06, -87.34),
}

PLACE_WORDS = [
    "riverwalk", "cafe", "gallery", "boutique", "plaza", "historic",
    "district", "vibrant", "nightlife", "restaurant", "bakery", "local",
    "landmark", "farmers", "market", "brewery", "theater", "greenway",
]
AMENITY_WORDS = [
    "granite", "stainless", "dishwasher", "laundry", "hardwood", "balcony",
    "parking", "gym", "elevator", "renovated", "spacious", "sunny", "heat",
    "included", "closet", "storage", "updated", "bright",
]
GENERIC_WORDS = [
    "luxury", "amazing", "stunning", "incredible", "deal", "special", "offer",
    "dream", "perfect", "best", "price", "unbeatable", "limited", "hurry",
    "exclusive", "premium", "spectacular", "bargain",
]

BASE_RENT = {
    "arbor glen": 1500, "brickyard": 1400, "cedar flats": 1450,
    "dockside": 1300, "elm commons": 1350, "foundry": 1250,
    "goldcrest": 2100, "millbrook": 950,
}

TITLE_STYLES = [
    "{Hood} gem: {bed}BR with charm",
    "{bed}BR in {Hood}",
    "Beautiful {bed}BR {Hood} apartment",
    "{Hood} living at its finest",
]
NO_HOOD_TITLES = [
    "Bright {bed}BR ready now",
    "Renovated {bed}BR apartment",
    "Charming {bed}BR with character",
    "Spacious {bed}BR available",
]


def hood_geom(name):
    return shape(BOUNDARIES[name])


def sample_point(rng, name, margin=0.008):
    """Uniform point inside the neighborhood polygon, away from the edges."""
    geom = hood_geom(name)
    lon0, lat0, lon1, lat1 = geom.bounds
    while True:
        lon = rng.uniform(lon0 + margin, lon1 - margin)
        lat = rng.uniform(lat0 + margin, lat1 - margin)
        point = Point(lon, lat)
        if geom.covers(point) and geom.boundary.distance(point) > margin / 2:
            return lat, lon


def ring_point(rng, name, f, spread=0.045):
    """Point inside the polygon roughly f of the way out from the anchor."""
    geom = hood_geom(name)
    anchor = ANCHORS[name]
    radius = 0.004 + f * spread
    for _ in range(500):
        angle = rng.uniform(0, 2 * math.pi)
        lat = anchor[0] + radius * math.sin(angle)
        lon = anchor[1] + radius * math.cos(angle)
        point = Point(lon, lat)
        if geom.covers(point) and geom.boundary.distance(point) > 0.003:
            return lat, lon
        radius *= 0.97
    raise RuntimeError(f"could not place point in {name}")


def write_gazetteer():
    lines = ["# Synthetic-city gazetteer used by the test fixtures."]
    for name in sorted(HOODS + FILLER):
        parts = [name] + ALIASES.get(name, [])
        lines.append("\t".join(parts))
    (OUT / "gazetteer.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_normalization():
    lines = ["# variant -> canonical for the synthetic city"]
    for variant, target in NORMALIZATION:
        lines.append(f"{variant}\t{target}")
    (OUT / "normalization.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_boundaries():
    features = []
    for name in HOODS:
        features.append(
            {"type": "Feature", "properties": {"name": name}, "geometry": BOUNDARIES[name]}
        )
    payload = {"type": "FeatureCollection", "features": features}
    (OUT / "boundaries.geojson").write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def write_points300(rng):
    counts = {
        "arbor glen": 55,
        "brickyard": 50,
        "cedar flats": 45,
        "dockside": 40,
        "elm commons": 36,
        "foundry": 35,
        "goldcrest": 35,
        "millbrook": 4,
    }
    assert sum(counts.values()) == 300
    rows = ["listing_id,claim,latitude,longitude"]
    index = 0
    for name in HOODS:
        for _ in range(counts[name]):
            lat, lon = sample_point(rng, name)
            rows.append(f"pt-{index:03d},{name},{lat:.10f},{lon:.10f}")
            index += 1
    (OUT / "points300.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")


def listing_plan():
    """Role-tagged plan for the 50 unique listings, before shuffling.

    String-match claim counts come out as: arbor glen 6, brickyard 8
    (6 core + no_coords + dual), cedar flats 5, dockside 5, elm commons 5,
    foundry 5, goldcrest 9 (4 local + 5 laundered), millbrook 4, unknown 3.
    """
    plan = []

    def cores(located, count, special_at=()):
        for i in range(count):
            role = "core"
            for tag, index in special_at:
                if i == index:
                    role = tag
            plan.append({
                "role": role,
                "located": located,
                "claim": located,
                "f": i / max(count - 1, 1),
            })

    cores("arbor glen", 6, special_at=[("no_posted", 2)])
    cores("brickyard", 6)
    cores("cedar flats", 5, special_at=[("no_sqft", 1)])
    cores("dockside", 5)
    cores("elm commons", 5, special_at=[("no_sqft", 3)])
    cores("foundry", 5)
    cores("goldcrest", 4)
    cores("millbrook", 4)
    for i in range(5):
        plan.append({
            "role": "launder",
            "located": "millbrook",
            "claim": "goldcrest",
            "f": i / 4,
        })
    plan.append({"role": "no_coords", "located": "brickyard", "claim": "brickyard", "f": 0.5})
    plan.append({"role": "vague", "located": "foundry", "claim": None, "f": 0.6})
    plan.append({"role": "dual", "located": "brickyard", "claim": "brickyard", "f": 1.0})
    plan.append({"role": "noclaim", "located": "dockside", "claim": None, "f": 0.4})
    plan.append({"role": "noclaim", "located": "millbrook", "claim": None, "f": 0.7})
    assert len(plan) == 50
    return plan


def body_words(rng, f, n=36):
    n_generic = int(round(n * (0.12 + 0.62 * f)))
    n_place = int(round(n * (0.58 - 0.47 * f)))
    n_amenity = max(n - n_generic - n_place, 4)
    words = (
        list(rng.choice(PLACE_WORDS, size=n_place))
        + list(rng.choice(AMENITY_WORDS, size=n_amenity))
        + list(rng.choice(GENERIC_WORDS, size=n_generic))
    )
    rng.shuffle(words)
    return " ".join(words)


def cap(name):
    return " ".join(w.capitalize() for w in name.split())


def build_listing(rng, listing_id, item):
    role = item["role"]
    located = item["located"]
    claim = item["claim"]
    bed = int(rng.integers(1, 4))
    bath = float(rng.choice([1.0, 1.0, 1.5, 2.0]))
    sqft = int(rng.integers(450, 1400))
    rent = float(BASE_RENT[located] + bed * 150 + int(rng.integers(-60, 61)))
    posted = (
        f"2025-03-{int(rng.integers(1, 28)):02d}"
        f"T{int(rng.integers(6, 22)):02d}:{int(rng.integers(0, 60)):02d}:00"
    )

    if role == "launder":
        lat, lon = ring_point(rng, "millbrook", item["f"], spread=0.03)
        f_topic = 0.85 + 0.15 * item["f"]  # far from goldcrest's center: pure hype
    elif role == "dual":
        lat, lon = 41.245 + rng.uniform(0, 0.004), -87.222 + rng.uniform(0, 0.004)
        f_topic = item["f"]
    else:
        lat, lon = ring_point(rng, located, item["f"])
        f_topic = item["f"]

    title_claim = body_claim = field_claim = None
    if claim is not None and role != "dual":
        style = int(rng.integers(0, 100))
        if role == "launder" or style < 55:
            title_claim = claim
        elif style < 80:
            body_claim = claim
        else:
            field_claim = claim

    if title_claim:
        template = TITLE_STYLES[int(rng.integers(0, len(TITLE_STYLES)))]
        title = template.format(Hood=cap(title_claim), bed=bed)
    else:
        title = NO_HOOD_TITLES[int(rng.integers(0, len(NO_HOOD_TITLES)))].format(bed=bed)

    sentences = [f"This {bed} bedroom home offers {body_words(rng, f_topic)}."]
    if body_claim:
        lead = [
            f"Located in the heart of {cap(body_claim)}.",
            f"Welcome to {cap(body_claim)}!",
            f"Just steps from everything {cap(body_claim)} offers.",
        ][int(rng.integers(0, 3))]
        sentences.insert(0, lead)
    if rng.random() < 0.3:
        sentences.insert(0, "QR Code Link to This Post")
    if rng.random() < 0.15:
        sentences.append("Stop by our cafÃ© corner open house this weekend.")
    body_text = " ".join(sentences)

    if field_claim:
        variants = {"goldcrest": "gold crest", "brickyard": "brick yard"}
        neighborhood = variants.get(field_claim, field_claim)
    elif rng.random() < 0.2:
        neighborhood = "great area"
    else:
        neighborhood = None

    listing = {
        "id": listing_id,
        "title": title,
        "body": body_text,
        "neighborhood": neighborhood,
        "latitude": round(lat, 10),
        "longitude": round(lon, 10),
        "rent": rent,
        "bedrooms": bed,
        "bathrooms": bath,
        "sqft": sqft,
        "posted_at": posted,
        "_role": role,
        "_claim": claim,
        "_gold": claim or "unknown",
        "_title_claim": title_claim,
        "_body_claim": body_claim,
        "_field_claim": field_claim,
    }

    if role == "no_coords":
        listing["latitude"] = None
        listing["longitude"] = None
    elif role == "no_posted":
        listing["posted_at"] = None
    elif role == "no_sqft":
        listing["sqft"] = None
    elif role == "vague":
        listing.update(
            title="Quiet 2BR on a leafy street",
            body=(
                "Fernvail Terrace charmer. This 2 bedroom home offers cafe gallery "
                "riverwalk hardwood laundry parking deal price special amazing "
                "luxury hurry."
            ),
            neighborhood=None,
            _gold="fernvale",
            _title_claim=None,
            _body_claim=None,
            _field_claim=None,
        )
    elif role == "dual":
        listing.update(
            title="Sunny 1BR between two great areas",
            body=(
                "Sits between Brickyard and Foundry with easy access to both. "
                "This 1 bedroom home offers plaza market brewery granite balcony "
                "storage stunning offer dream best."
            ),
            neighborhood=None,
            _gold="foundry",
            _title_claim=None,
            _body_claim="brickyard",
            _field_claim=None,
        )
    return listing


def add_raw_extras(listings):
    """Reposts (older copies of two survivors) plus one malformed row."""
    extras = []
    for src_id, new_id in (("sc-010", "sc-051"), ("sc-020", "sc-052")):
        src = next(l for l in listings if l["id"] == src_id)
        copy = {k: v for k, v in src.items() if not k.startswith("_")}
        copy["id"] = new_id
        copy["posted_at"] = "2025-02-01T09:00:00"
        extras.append(copy)
    extras.append({
        "id": "sc-bad",
        "title": "Too good to be true",
        "body": "This listing claims a latitude from another planet.",
        "neighborhood": None,
        "latitude": 950.0,
        "longitude": -87.2,
        "rent": 1000.0,
        "bedrooms": 1,
        "bathrooms": 1.0,
        "sqft": 500,
        "posted_at": "2025-03-05T12:00:00",
    })
    return extras


def write_listings(listings, extras):
    keys = ("id", "title", "body", "neighborhood", "latitude", "longitude",
            "rent", "bedrooms", "bathrooms", "sqft", "posted_at")
    lines = []
    for listing in listings + extras:
        record = {k: listing.get(k) for k in keys}
        lines.append(json.dumps(record, ensure_ascii=False))
    (OUT / "listings.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_gold(listings):
    rows = ["listing_id,gold"]
    for listing in sorted(listings, key=lambda l: l["id"]):
        rows.append(f"{listing['id']},{listing['_gold']}")
    (OUT / "gold.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")


RESPONSE_STYLES = ("plain", "bracket", "variant", "separator", "freetext", "bare")


def fabricate_response(rng, label, names):
    """Raw response text whose intended parse result is ``label``."""
    if label is None:
        return "label: [unknown]"
    style = RESPONSE_STYLES[int(rng.integers(0, len(RESPONSE_STYLES)))]
    variants = {"goldcrest": "gold crest", "brickyard": "brick yard",
                "millbrook": "mill brook", "dockside": "dock side"}
    if style == "plain":
        return f"label: {label}"
    if style == "variant" and label in variants:
        return f"label: [{variants[label]}]"
    if style == "separator":
        other = names[int(rng.integers(0, len(names)))]
        return f"label: [{label}, {other}]"
    if style == "freetext":
        return f"Sure! The neighborhood is {label}."
    if style == "bare":
        return label
    return f"label: [{label}]"


def write_llm_fixtures(listings, rng):
    """Recorded-response cache plus hand-expected parse and claim files."""
    rules = corpus_mod.load_cleaning_rules()
    names = sorted(HOODS + FILLER)
    cache_lines = []
    parse_rows = ["listing_id,field,expected_label"]
    claim_rows = ["listing_id,claim,source_field"]
    for listing in sorted(listings, key=lambda l: l["id"]):
        raw = corpus_mod.RawListing(
            id=listing["id"],
            title=listing["title"],
            body=listing["body"],
            neighborhood_field=listing["neighborhood"],
        )
        clean = corpus_mod.clean_listing(raw, rules)
        fields = [
            ("title", clean.cleaned_title.strip(), listing["_title_claim"]),
            ("body", clean.cleaned_body.strip(), listing["_body_claim"]),
            ("neighborhood_field", (listing["neighborhood"] or "").strip(),
             listing["_field_claim"]),
        ]
        parsed = {}
        for field_name, text, intent in fields:
            if not text:
                parsed[field_name] = None
                continue
            if listing["_role"] == "vague" and field_name == "body":
                raw_response, expected = "label: [fernvail]", None
            elif listing["_role"] == "dual" and field_name == "body":
                raw_response, expected = "label: [brickyard, foundry]", "brickyard"
            else:
                raw_response = fabricate_response(rng, intent, names)
                expected = intent
            request = llm_mod.PromptRequest(
                field=field_name,
                text=text,
                allowed=tuple(names),
                model_id="gpt-4.1-mini",
                temperature=0.0,
            )
            cache_lines.append(json.dumps({
                "fingerprint": llm_mod.fingerprint(request),
                "raw_text": raw_response,
                "received_at": "2025-04-01T00:00:00+00:00",
            }, ensure_ascii=False))
            parsed[field_name] = expected
            parse_rows.append(f"{listing['id']},{field_name},{expected or 'unknown'}")
        for field_name in ("title", "body", "neighborhood_field"):
            if parsed.get(field_name):
                claim_rows.append(f"{listing['id']},{parsed[field_name]},{field_name}")
                break
        else:
            claim_rows.append(f"{listing['id']},unknown,none")
    (OUT / "llm_cache.jsonl").write_text("\n".join(cache_lines) + "\n", encoding="utf-8")
    (OUT / "llm_parse_expected.csv").write_text("\n".join(parse_rows) + "\n", encoding="utf-8")
    (OUT / "llm_claim_expected.csv").write_text("\n".join(claim_rows) + "\n", encoding="utf-8")


def write_config():
    text = """\
# Synthetic-city pipeline configuration used by the test suite and demos.
config_version = 1
corpus = listings.jsonl
corpus_format = jsonl
gazetteer = gazetteer.tsv
normalization = normalization.tsv
boundary.city = boundaries.geojson
gold = gold.csv
labels_for_geo = llm
distance_mode = great-circle
peripheral_fraction = 0.2
min_posts = 5
lda_k = 3
lda_alpha = 0.1
lda_eta = 0.01
lda_iterations = 100
lda_seed = 7
coherence_top_n = 8
baseline_topic = 1
rent_per_thousand = true
llm_model = gpt-4.1-mini
llm_temperature = 0.0
llm_cache = llm_cache.jsonl
llm_offline = true
"""
    (OUT / "config.cfg").write_text(text, encoding="utf-8")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_gazetteer()
    write_normalization()
    write_boundaries()
    write_points300(np.random.default_rng(20240301))

    rng = np.random.default_rng(20240302)
    plan = listing_plan()
    rng.shuffle(plan)
    listings = [build_listing(rng, f"sc-{i + 1:03d}", item) for i, item in enumerate(plan)]
    extras = add_raw_extras(listings)
    write_listings(listings, extras)
    write_gold(listings)
    write_llm_fixtures(listings, np.random.default_rng(20240303))
    write_config()
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
