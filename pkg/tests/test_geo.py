import json
import math

import numpy as np
import pytest

import oracles
from hoodclaims.claims import ClaimLabel
from hoodclaims.corpus import RawListing
from hoodclaims.gazetteer import parse_gazetteer, parse_normalization_table
from hoodclaims.geo import (
    DEGREE_EUCLIDEAN,
    EARTH_RADIUS_KM,
    SocialCenter,
    assign_boundary,
    centers_to_geojson,
    claim_points_to_geojson,
    compute_distances,
    coordinates_of,
    degree_distance,
    flag_peripheral,
    haversine_km,
    load_boundaries,
    representation,
    social_centers,
)


@pytest.fixture(scope="module")
def city_boundaries(data_dir):
    return load_boundaries(data_dir / "boundaries.geojson", "city")


@pytest.fixture(scope="module")
def city_features(data_dir):
    payload = json.loads((data_dir / "boundaries.geojson").read_text(encoding="utf-8"))
    return payload["features"]


def feature_collection(features):
    return {"type": "FeatureCollection", "features": features}


def square_feature(name, lon0=0.0, lat0=0.0, size=1.0, close=True):
    ring = [
        [lon0, lat0], [lon0 + size, lat0],
        [lon0 + size, lat0 + size], [lon0, lat0 + size],
    ]
    if close:
        ring.append([lon0, lat0])
    return {
        "type": "Feature",
        "properties": {"name": name},
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


def write_geojson(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_load_boundaries_fixture(city_boundaries):
    assert sorted(city_boundaries.polygons) == [
        "arbor glen", "brickyard", "cedar flats", "dockside",
        "elm commons", "foundry", "goldcrest", "millbrook",
    ]
    assert city_boundaries.source == "city"
    assert all(area > 0 for area in city_boundaries.areas.values())


def test_load_boundaries_rejects_unclosed_ring(tmp_path):
    path = write_geojson(
        tmp_path / "b.geojson", feature_collection([square_feature("open", close=False)])
    )
    with pytest.raises(ValueError, match="closed"):
        load_boundaries(path, "test")


def test_load_boundaries_rejects_self_intersection(tmp_path):
    bowtie = {
        "type": "Feature",
        "properties": {"name": "bowtie"},
        "geometry": {
            "type": "Polygon",
            "coordinates": [[[0, 0], [1, 1], [1, 0], [0, 1], [0, 0]]],
        },
    }
    path = write_geojson(tmp_path / "b.geojson", feature_collection([bowtie]))
    with pytest.raises(ValueError, match="invalid"):
        load_boundaries(path, "test")


def test_load_boundaries_rejects_duplicate_names(tmp_path):
    features = [square_feature("same"), square_feature("Same", lon0=5.0)]
    path = write_geojson(tmp_path / "b.geojson", feature_collection(features))
    with pytest.raises(ValueError, match="duplicate"):
        load_boundaries(path, "test")


def test_load_boundaries_rejects_empty_collection(tmp_path):
    path = write_geojson(tmp_path / "b.geojson", feature_collection([]))
    with pytest.raises(ValueError, match="no .*features|empty"):
        load_boundaries(path, "test")


def test_load_boundaries_normalizes_names(tmp_path):
    gazetteer = parse_gazetteer("goldcrest\n")
    table = parse_normalization_table("gold crest\tgoldcrest\n", gazetteer)
    path = write_geojson(
        tmp_path / "b.geojson", feature_collection([square_feature("Gold Crest")])
    )
    boundaries = load_boundaries(path, "test", table=table, gazetteer=gazetteer)
    assert list(boundaries.polygons) == ["goldcrest"]


def test_load_boundaries_custom_name_property(tmp_path):
    feature = square_feature("ignored")
    feature["properties"] = {"pri_neigh": "Pilsen"}
    path = write_geojson(tmp_path / "b.geojson", feature_collection([feature]))
    boundaries = load_boundaries(path, "test", name_property="pri_neigh")
    assert list(boundaries.polygons) == ["pilsen"]


def test_assign_boundary_agrees_with_ray_casting(city_boundaries, city_features):
    rng = np.random.default_rng(7)
    lons = rng.uniform(-87.45, -86.95, 400)
    lats = rng.uniform(40.95, 41.40, 400)
    disagreements = []
    for lon, lat in zip(lons, lats):
        got = assign_boundary(lat, lon, city_boundaries)
        want = oracles.assign_by_ray_casting(lat, lon, city_features)
        if got != want:
            disagreements.append((lat, lon, got, want))
    assert not disagreements


def test_assign_boundary_edge_point_included(city_boundaries):
    # Shared edge of two equal-area squares: the alphabetical name wins.
    assert assign_boundary(41.30, -87.28, city_boundaries) == "arbor glen"


def test_assign_boundary_overlap_prefers_smaller_area(city_boundaries):
    # The cedar flats exclave sits inside goldcrest's square. Cedar flats'
    # total area (main square plus exclave) is the larger of the two, so
    # the overlap resolves to goldcrest.
    assert city_boundaries.areas["cedar flats"] > city_boundaries.areas["goldcrest"]
    assert assign_boundary(41.155, -87.065, city_boundaries) == "goldcrest"


def test_assign_boundary_hole_is_outside(city_boundaries):
    assert assign_boundary(41.18, -87.22, city_boundaries) is None


def test_haversine_known_values():
    assert haversine_km(10.0, 20.0, 10.0, 20.0) == 0.0
    one_degree = math.radians(1.0) * EARTH_RADIUS_KM
    assert math.isclose(haversine_km(0.0, 0.0, 1.0, 0.0), one_degree, rel_tol=1e-9)
    assert math.isclose(haversine_km(0.0, 0.0, 0.0, 1.0), one_degree, rel_tol=1e-9)
    going = haversine_km(41.0, -87.0, 41.3, -87.4)
    coming = haversine_km(41.3, -87.4, 41.0, -87.0)
    assert math.isclose(going, coming, rel_tol=1e-12)


def test_haversine_agrees_with_law_of_cosines():
    rng = np.random.default_rng(11)
    for _ in range(200):
        lat1, lat2 = rng.uniform(-80, 80, 2)
        lon1, lon2 = rng.uniform(-179, 179, 2)
        expected = oracles.law_of_cosines_km(lat1, lon1, lat2, lon2)
        assert math.isclose(haversine_km(lat1, lon1, lat2, lon2), expected, abs_tol=1e-6)


def test_degree_distance():
    assert degree_distance(1.0, 2.0, 4.0, 6.0) == 5.0


def claim(listing_id, name):
    return ClaimLabel(listing_id, name, "title", "string-match")


def test_social_centers_hand_means():
    labels = [claim("a", "x"), claim("b", "x"), claim("c", "y"),
              claim("d", "unknown"), claim("e", "x")]
    coords = {"a": (41.0, -87.0), "b": (41.2, -87.2), "c": (40.0, -86.0)}
    centers = social_centers(labels, coords)
    # "e" has no coordinates and "d" is unknown: both dropped.
    assert [c.neighborhood for c in centers] == ["x", "y"]
    x = centers[0]
    assert math.isclose(x.latitude, 41.1) and math.isclose(x.longitude, -87.1)
    assert x.claim_count == 2
    assert centers[1].claim_count == 1


def test_compute_distances_relative_and_z():
    labels = [claim("a", "x"), claim("b", "x"), claim("c", "x")]
    coords = {"a": (41.0, -87.0), "b": (41.1, -87.0), "c": (41.3, -87.0)}
    centers = [SocialCenter("x", 41.0, -87.0, 3)]
    records = compute_distances(labels, coords, centers, mode=DEGREE_EUCLIDEAN)
    assert [r.listing_id for r in records] == ["a", "b", "c"]
    raws = [r.raw for r in records]
    assert math.isclose(raws[0], 0.0, abs_tol=1e-15)
    assert math.isclose(raws[1], 0.1) and math.isclose(raws[2], 0.3)
    assert records[0].relative == 0.0 and records[2].relative == 1.0
    assert math.isclose(records[1].relative, 1 / 3)
    mean = sum(raws) / 3
    std = math.sqrt(sum((v - mean) ** 2 for v in raws) / 3)
    for record, raw in zip(records, raws):
        assert math.isclose(record.z_score, (raw - mean) / std, abs_tol=1e-12)


def test_compute_distances_degenerate_group():
    labels = [claim("only", "x")]
    coords = {"only": (41.05, -87.0)}
    centers = [SocialCenter("x", 41.05, -87.0, 1)]
    records = compute_distances(labels, coords, centers)
    assert records[0].relative == 0.0
    assert records[0].z_score == 0.0


def test_compute_distances_missing_center_fails():
    labels = [claim("a", "nowhere")]
    with pytest.raises(ValueError, match="nowhere"):
        compute_distances(labels, {"a": (41.0, -87.0)}, [])


def test_flag_peripheral_counts_and_ties():
    records = compute_distances(
        [claim(f"p{i}", "x") for i in range(5)],
        {f"p{i}": (41.0 + 0.01 * i, -87.0) for i in range(5)},
        [SocialCenter("x", 41.0, -87.0, 5)],
    )
    flagged = flag_peripheral(records, fraction=0.2, min_posts=5)
    assert sum(r.peripheral for r in flagged) == 1
    assert next(r for r in flagged if r.peripheral).listing_id == "p4"

    # Below min_posts nothing is flagged.
    flagged = flag_peripheral(records[:4], fraction=0.2, min_posts=5)
    assert sum(r.peripheral for r in flagged) == 0


def test_flag_peripheral_tie_prefers_smaller_id():
    base = compute_distances(
        [claim("b", "x"), claim("a", "x"), claim("c", "x"), claim("d", "x"), claim("e", "x")],
        {"a": (41.1, -87.0), "b": (41.1, -87.0), "c": (41.0, -87.0),
         "d": (41.0, -87.0), "e": (41.0, -87.0)},
        [SocialCenter("x", 41.0, -87.0, 5)],
    )
    flagged = flag_peripheral(base, fraction=0.2, min_posts=5)
    winners = [r.listing_id for r in flagged if r.peripheral]
    assert winners == ["a"]


def test_flag_peripheral_fraction_validated():
    with pytest.raises(ValueError, match="fraction"):
        flag_peripheral([], fraction=0.0)


def test_flag_peripheral_ceil_counts():
    # 6 records at fraction 0.2 flags ceil(1.2) = 2.
    records = compute_distances(
        [claim(f"q{i}", "x") for i in range(6)],
        {f"q{i}": (41.0 + 0.01 * i, -87.0) for i in range(6)},
        [SocialCenter("x", 41.0, -87.0, 6)],
    )
    flagged = flag_peripheral(records, fraction=0.2, min_posts=5)
    assert sum(r.peripheral for r in flagged) == 2


def test_representation_hand_case(city_boundaries):
    labels = [
        claim("a", "goldcrest"), claim("b", "goldcrest"), claim("c", "millbrook"),
        claim("d", "atlantis"),
    ]
    coords = {
        "a": (41.18, -87.10),   # inside goldcrest
        "b": (41.06, -87.34),   # inside millbrook
        "c": (41.07, -87.33),   # inside millbrook
        "d": (41.18, -87.10),   # inside goldcrest
    }
    rows = representation(labels, coords, city_boundaries)
    by_name = {r.neighborhood: r for r in rows}
    gold = by_name["goldcrest"]
    assert (gold.claims, gold.contained) == (2, 2)
    assert math.isclose(gold.ratio, 1.0)
    mill = by_name["millbrook"]
    assert (mill.claims, mill.contained) == (1, 2)
    assert math.isclose(mill.ratio, 0.5)
    atlantis = by_name["atlantis"]
    assert atlantis.contained is None and atlantis.ratio is None and atlantis.flagged
    # Undefined ratios sort to the end.
    assert rows[-1].neighborhood == "atlantis"


def test_representation_zero_contained_has_no_ratio(city_boundaries):
    labels = [claim("a", "foundry")]
    coords = {"a": (41.06, -87.34)}  # millbrook, not foundry
    rows = representation(labels, coords, city_boundaries)
    foundry = next(r for r in rows if r.neighborhood == "foundry")
    assert foundry.claims == 1 and foundry.contained == 0
    assert foundry.ratio is None and not foundry.flagged


def test_geojson_exports(city_boundaries):
    labels = [claim("a", "goldcrest")]
    coords = {"a": (41.18, -87.10)}
    centers = social_centers(labels, coords)
    fc = centers_to_geojson(centers)
    assert fc["type"] == "FeatureCollection"
    feature = fc["features"][0]
    assert feature["geometry"]["coordinates"] == [-87.10, 41.18]
    assert feature["properties"]["neighborhood"] == "goldcrest"

    records = compute_distances(labels, coords, centers)
    points = claim_points_to_geojson(labels, coords, city_boundaries, records)
    props = points["features"][0]["properties"]
    assert props["listing_id"] == "a"
    assert props["claimed"] == "goldcrest"
    assert props["located_in"] == "goldcrest"
    assert props["claims_elsewhere"] is False


def test_coordinates_of_skips_missing():
    listings = [
        RawListing(id="a", title="", body="", latitude=41.0, longitude=-87.0),
        RawListing(id="b", title="", body=""),
    ]
    assert coordinates_of(listings) == {"a": (41.0, -87.0)}
