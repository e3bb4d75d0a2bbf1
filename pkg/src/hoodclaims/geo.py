"""Spatial analysis of claimed neighborhoods.

Boundary polygons come from a GeoJSON FeatureCollection keyed by a name
property. Claim points are compared against them to find where a listing
actually sits, how far it is from the social center of the neighborhood it
claims, and which neighborhoods are claimed more often than their polygons
contain listings.

Latitude and longitude appear in that order in every function signature
here; GeoJSON files use the opposite (x, y) order and the loaders and
writers translate.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

from shapely.geometry import Point, shape
from shapely.validation import explain_validity

from .claims import ClaimLabel
from .gazetteer import UNKNOWN, Gazetteer, NormalizationTable, normalize_label

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088

GREAT_CIRCLE = "great-circle"
DEGREE_EUCLIDEAN = "degree-euclidean"
DISTANCE_MODES = (GREAT_CIRCLE, DEGREE_EUCLIDEAN)


@dataclass
class BoundarySet:
    """Named polygons from one source, with cached areas."""

    source: str
    polygons: dict[str, object]
    areas: dict[str, float]

    def __contains__(self, name: str) -> bool:
        return name in self.polygons

    def __len__(self) -> int:
        return len(self.polygons)


@dataclass(frozen=True)
class SocialCenter:
    neighborhood: str
    latitude: float
    longitude: float
    claim_count: int


@dataclass(frozen=True)
class DistanceRecord:
    listing_id: str
    neighborhood: str
    raw: float
    relative: float
    z_score: float
    peripheral: bool = False


@dataclass(frozen=True)
class RepresentationRow:
    neighborhood: str
    claims: int
    contained: int | None
    ratio: float | None
    flagged: bool = False


def _check_rings_closed(geometry: dict, name: str) -> None:
    kind = geometry.get("type")
    if kind == "Polygon":
        polygons = [geometry["coordinates"]]
    elif kind == "MultiPolygon":
        polygons = geometry["coordinates"]
    else:
        raise ValueError(f"feature {name!r}: unsupported geometry type {kind!r}")
    for rings in polygons:
        for ring in rings:
            if len(ring) < 4:
                raise ValueError(f"feature {name!r}: ring with fewer than 4 positions")
            if ring[0] != ring[-1]:
                raise ValueError(f"feature {name!r}: ring is not closed")


def load_boundaries(
    path: str | Path,
    source: str,
    table: NormalizationTable | None = None,
    gazetteer: Gazetteer | None = None,
    name_property: str = "name",
) -> BoundarySet:
    """Load a GeoJSON FeatureCollection of neighborhood polygons.

    Feature names are lowercased and, when a gazetteer is supplied, run
    through label normalization so boundary names line up with claim
    labels. Invalid or unclosed geometry is fatal.
    """
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a FeatureCollection")
    polygons: dict[str, object] = {}
    areas: dict[str, float] = {}
    for feature in data.get("features", []):
        properties = feature.get("properties") or {}
        if name_property not in properties:
            raise ValueError(f"{path}: feature missing {name_property!r} property")
        name = str(properties[name_property]).strip().lower()
        if not name:
            raise ValueError(f"{path}: feature with empty name")
        if table is not None and gazetteer is not None:
            resolved = normalize_label(name, table, gazetteer)
            if resolved != UNKNOWN:
                name = resolved
        geometry = feature.get("geometry") or {}
        _check_rings_closed(geometry, name)
        geom = shape(geometry)
        if not geom.is_valid:
            raise ValueError(
                f"{path}: feature {name!r} has invalid geometry: {explain_validity(geom)}"
            )
        if name in polygons:
            raise ValueError(f"{path}: duplicate boundary name {name!r}")
        polygons[name] = geom
        areas[name] = geom.area
    if not polygons:
        raise ValueError(f"{path}: no boundary features")
    log.info("loaded %d boundaries from %s (source %s)", len(polygons), path, source)
    return BoundarySet(source=source, polygons=polygons, areas=areas)


def assign_boundary(latitude: float, longitude: float, boundaries: BoundarySet) -> str | None:
    """The boundary containing a point, or None.

    Containment includes the edges. When boundaries overlap, the smallest
    polygon by area wins, with name order breaking exact ties.
    """
    point = Point(longitude, latitude)
    candidates = [
        name for name, geom in boundaries.polygons.items() if geom.covers(point)
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda name: (boundaries.areas[name], name))


def social_centers(
    labels: Iterable[ClaimLabel],
    coordinates: Mapping[str, tuple[float, float]],
) -> list[SocialCenter]:
    """Mean claim-point position per claimed neighborhood.

    Listings with unknown claims or no coordinates are left out. Results
    are sorted by neighborhood name.
    """
    sums: dict[str, list[float]] = {}
    for label in labels:
        if label.claim == UNKNOWN or label.listing_id not in coordinates:
            continue
        latitude, longitude = coordinates[label.listing_id]
        entry = sums.setdefault(label.claim, [0.0, 0.0, 0])
        entry[0] += latitude
        entry[1] += longitude
        entry[2] += 1
    return [
        SocialCenter(
            neighborhood=name,
            latitude=entry[0] / entry[2],
            longitude=entry[1] / entry[2],
            claim_count=entry[2],
        )
        for name, entry in sorted(sums.items())
    ]


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in kilometers."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def degree_distance(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Plain euclidean distance in degree space, no latitude correction."""
    return math.hypot(lat2 - lat1, lon2 - lon1)


def compute_distances(
    labels: Iterable[ClaimLabel],
    coordinates: Mapping[str, tuple[float, float]],
    centers: Iterable[SocialCenter],
    mode: str = GREAT_CIRCLE,
) -> list[DistanceRecord]:
    """Distance from each claim point to its claimed neighborhood's center.

    Raw distances are kilometers in ``great-circle`` mode or degrees in
    ``degree-euclidean`` mode. Relative distance is min-max scaled within
    the neighborhood (0 for a degenerate group); the z-score uses the
    population standard deviation (0 when all distances tie). Records come
    back sorted by listing id.
    """
    if mode not in DISTANCE_MODES:
        raise ValueError(f"unknown distance mode {mode!r} (expected one of {DISTANCE_MODES})")
    center_by_name = {c.neighborhood: c for c in centers}
    metric = haversine_km if mode == GREAT_CIRCLE else degree_distance

    raw_by_group: dict[str, list[tuple[str, float]]] = {}
    for label in labels:
        if label.claim == UNKNOWN or label.listing_id not in coordinates:
            continue
        center = center_by_name.get(label.claim)
        if center is None:
            raise ValueError(f"no social center for claimed neighborhood {label.claim!r}")
        latitude, longitude = coordinates[label.listing_id]
        raw = metric(latitude, longitude, center.latitude, center.longitude)
        raw_by_group.setdefault(label.claim, []).append((label.listing_id, raw))

    records: list[DistanceRecord] = []
    for name, members in raw_by_group.items():
        values = [raw for _, raw in members]
        lo, hi = min(values), max(values)
        span = hi - lo
        mean = sum(values) / len(values)
        variance = sum((v - mean) ** 2 for v in values) / len(values)
        std = math.sqrt(variance)
        for listing_id, raw in members:
            relative = (raw - lo) / span if span > 0 else 0.0
            z_score = (raw - mean) / std if std > 0 else 0.0
            records.append(
                DistanceRecord(
                    listing_id=listing_id,
                    neighborhood=name,
                    raw=raw,
                    relative=relative,
                    z_score=z_score,
                )
            )
    records.sort(key=lambda r: r.listing_id)
    return records


def flag_peripheral(
    records: Iterable[DistanceRecord],
    fraction: float = 0.2,
    min_posts: int = 5,
) -> list[DistanceRecord]:
    """Mark the farthest ``fraction`` of claims in each neighborhood.

    Only neighborhoods with at least ``min_posts`` claims get flags; the
    count per group is ceil(fraction * n). Farther raw distance wins, with
    listing-id order breaking ties. Record order is preserved.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    records = list(records)
    by_group: dict[str, list[DistanceRecord]] = {}
    for record in records:
        by_group.setdefault(record.neighborhood, []).append(record)
    flagged_ids: set[str] = set()
    for members in by_group.values():
        if len(members) < min_posts:
            continue
        # The epsilon keeps float noise in fraction * n from bumping the ceiling.
        count = math.ceil(fraction * len(members) - 1e-9)
        ranked = sorted(members, key=lambda r: (-r.raw, r.listing_id))
        flagged_ids.update(r.listing_id for r in ranked[:count])
    return [replace(r, peripheral=r.listing_id in flagged_ids) for r in records]


def representation(
    labels: Iterable[ClaimLabel],
    coordinates: Mapping[str, tuple[float, float]],
    boundaries: BoundarySet,
) -> list[RepresentationRow]:
    """Claims versus geometric containment, per neighborhood.

    ``claims`` counts listings claiming the neighborhood; ``contained``
    counts listings whose coordinates fall inside its polygon (each point
    assigned to exactly one boundary). Names claimed but absent from the
    boundary source get an undefined count and are flagged. Rows are
    sorted by descending ratio, undefined last, then by name.
    """
    claim_counts: dict[str, int] = {}
    for label in labels:
        if label.claim == UNKNOWN:
            continue
        claim_counts[label.claim] = claim_counts.get(label.claim, 0) + 1

    contained_counts: dict[str, int] = {}
    for listing_id in sorted(coordinates):
        latitude, longitude = coordinates[listing_id]
        assigned = assign_boundary(latitude, longitude, boundaries)
        if assigned is not None:
            contained_counts[assigned] = contained_counts.get(assigned, 0) + 1

    names = sorted(set(claim_counts) | set(contained_counts))
    rows: list[RepresentationRow] = []
    for name in names:
        claims = claim_counts.get(name, 0)
        if name in boundaries:
            contained: int | None = contained_counts.get(name, 0)
            ratio = claims / contained if contained else None
            flagged = False
        else:
            contained = None
            ratio = None
            flagged = True
        rows.append(RepresentationRow(name, claims, contained, ratio, flagged))
    rows.sort(key=lambda r: (r.ratio is None, -(r.ratio or 0.0), r.neighborhood))
    return rows


def centers_to_geojson(centers: Iterable[SocialCenter]) -> dict:
    """Social centers as a GeoJSON FeatureCollection of points."""
    features = [
        {
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [c.longitude, c.latitude],
            },
            "properties": {
                "neighborhood": c.neighborhood,
                "claim_count": c.claim_count,
                "role": "social-center",
            },
        }
        for c in centers
    ]
    return {"type": "FeatureCollection", "features": features}


def claim_points_to_geojson(
    labels: Iterable[ClaimLabel],
    coordinates: Mapping[str, tuple[float, float]],
    boundaries: BoundarySet | None = None,
    distance_records: Iterable[DistanceRecord] | None = None,
) -> dict:
    """Claim points as GeoJSON, annotated with containment and flags."""
    by_id = {r.listing_id: r for r in distance_records} if distance_records else {}
    features = []
    for label in labels:
        if label.claim == UNKNOWN or label.listing_id not in coordinates:
            continue
        latitude, longitude = coordinates[label.listing_id]
        properties: dict[str, object] = {
            "listing_id": label.listing_id,
            "claimed": label.claim,
            "source_field": label.source_field,
        }
        if boundaries is not None:
            located = assign_boundary(latitude, longitude, boundaries)
            properties["located_in"] = located
            properties["claims_elsewhere"] = located != label.claim
        record = by_id.get(label.listing_id)
        if record is not None:
            properties["relative_distance"] = record.relative
            properties["peripheral"] = record.peripheral
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [longitude, latitude]},
                "properties": properties,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def coordinates_of(listings) -> dict[str, tuple[float, float]]:
    """Map listing id to (latitude, longitude) for listings that have both."""
    return {
        l.id: (l.latitude, l.longitude) for l in listings if l.has_coordinates()
    }
