"""Independent reference implementations used to check the library.

Everything here is written from the definitions, on purpose with different
algorithms than the package: character scanning instead of regexes,
even-odd ray casting instead of shapely, explicit confusion counting,
normal equations instead of QR, and numeric integration of the t density
instead of the incomplete-beta shortcut.
"""

from __future__ import annotations

import math

from scipy.integrate import quad


# ---------------------------------------------------------------- matching

def _is_word(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def brute_find(text: str, alias: str) -> list[tuple[int, int]]:
    """All (offset, length) where the literal alias matches.

    A space in the alias stands for any run of whitespace, including none.
    Matches must start and end at word boundaries, case-insensitively.
    """
    low = text.lower()
    pattern = alias.lower()
    hits = []
    for start in range(len(low)):
        if start > 0 and _is_word(low[start - 1]):
            continue
        i, j = start, 0
        ok = True
        while j < len(pattern):
            if pattern[j] == " ":
                while j < len(pattern) and pattern[j] == " ":
                    j += 1
                while i < len(low) and low[i].isspace():
                    i += 1
                continue
            if i < len(low) and low[i] == pattern[j]:
                i += 1
                j += 1
            else:
                ok = False
                break
        if not ok or i == start:
            continue
        if i < len(low) and _is_word(low[i]):
            continue
        hits.append((start, i - start))
    return hits


def brute_match(text: str, pairs: list[tuple[str, str]]) -> list[tuple[str, int, int]]:
    """Reference matcher over (canonical, literal alias) pairs.

    Returns (canonical, offset, length) triples with the same dedup and
    ordering contract as the library: one hit per (canonical, offset)
    keeping the longest, sorted by offset, longer first, then name.
    """
    best: dict[tuple[str, int], int] = {}
    for canonical, alias in pairs:
        for offset, length in brute_find(text, alias):
            key = (canonical, offset)
            if length > best.get(key, -1):
                best[key] = length
    triples = [(c, off, length) for (c, off), length in best.items()]
    triples.sort(key=lambda t: (t[1], -t[2], t[0]))
    return triples


# ---------------------------------------------------------------- geometry

def _ray_cast(lon: float, lat: float, ring: list[list[float]]) -> bool:
    inside = False
    for k in range(len(ring) - 1):
        x1, y1 = ring[k]
        x2, y2 = ring[k + 1]
        if (y1 > lat) != (y2 > lat):
            x_cross = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
            if x_cross > lon:
                inside = not inside
    return inside


def point_in_geometry(lat: float, lon: float, geometry: dict) -> bool:
    """Even-odd point-in-polygon test over a GeoJSON geometry dict."""
    if geometry["type"] == "Polygon":
        polygons = [geometry["coordinates"]]
    elif geometry["type"] == "MultiPolygon":
        polygons = geometry["coordinates"]
    else:
        raise ValueError(geometry["type"])
    for rings in polygons:
        if _ray_cast(lon, lat, rings[0]) and not any(
            _ray_cast(lon, lat, hole) for hole in rings[1:]
        ):
            return True
    return False


def _ring_area(ring: list[list[float]]) -> float:
    total = 0.0
    for k in range(len(ring) - 1):
        x1, y1 = ring[k]
        x2, y2 = ring[k + 1]
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def geometry_area(geometry: dict) -> float:
    """Planar shoelace area in squared degrees, holes subtracted."""
    if geometry["type"] == "Polygon":
        polygons = [geometry["coordinates"]]
    else:
        polygons = geometry["coordinates"]
    area = 0.0
    for rings in polygons:
        area += _ring_area(rings[0]) - sum(_ring_area(h) for h in rings[1:])
    return area


def assign_by_ray_casting(lat: float, lon: float, features: list[dict]) -> str | None:
    """Reference boundary assignment: containing feature of smallest area,
    name as the tiebreak."""
    candidates = []
    for feature in features:
        if point_in_geometry(lat, lon, feature["geometry"]):
            name = feature["properties"]["name"].lower()
            candidates.append((geometry_area(feature["geometry"]), name))
    if not candidates:
        return None
    return min(candidates)[1]


def law_of_cosines_km(lat1, lon1, lat2, lon2, radius=6371.0088):
    """Great-circle distance by the spherical law of cosines."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlon = math.radians(lon2 - lon1)
    cos_angle = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dlon)
    return radius * math.acos(max(-1.0, min(1.0, cos_angle)))


# ---------------------------------------------------------------- metrics

def confusion_metrics(pairs: list[tuple[str, str]]) -> dict:
    """Per-class and averaged metrics computed by direct counting.

    Classes come from the gold side. Precision is None when the class was
    never predicted; None counts as zero inside averages and F1.
    """
    classes = sorted({gold for gold, _ in pairs})
    per_class = {}
    for name in classes:
        tp = sum(1 for g, p in pairs if g == name and p == name)
        fp = sum(1 for g, p in pairs if g != name and p == name)
        fn = sum(1 for g, p in pairs if g == name and p != name)
        support = tp + fn
        precision = tp / (tp + fp) if (tp + fp) > 0 else None
        recall = tp / support if support > 0 else 0.0
        p_num = precision if precision is not None else 0.0
        f1 = 0.0 if p_num + recall == 0 else 2 * p_num * recall / (p_num + recall)
        per_class[name] = {
            "tp": tp, "fp": fp, "fn": fn, "support": support,
            "precision": precision, "recall": recall, "f1": f1,
        }
    n = len(pairs)
    accuracy = sum(1 for g, p in pairs if g == p) / n
    as_zero = lambda v: 0.0 if v is None else v  # noqa: E731
    macro = {
        key: sum(as_zero(per_class[c][key]) for c in classes) / len(classes)
        for key in ("precision", "recall", "f1")
    }
    total_support = sum(per_class[c]["support"] for c in classes)
    weighted = {
        key: sum(as_zero(per_class[c][key]) * per_class[c]["support"] for c in classes)
        / total_support
        for key in ("precision", "recall", "f1")
    }
    return {
        "classes": classes,
        "per_class": per_class,
        "accuracy": accuracy,
        "macro": macro,
        "weighted": weighted,
    }


# ------------------------------------------------------------- regression

def t_two_sided_p(t_value: float, df: int) -> float:
    """Two-sided t-distribution p-value by integrating the density."""
    if math.isinf(t_value):
        return 0.0
    constant = math.exp(
        math.lgamma((df + 1) / 2) - math.lgamma(df / 2)
    ) / math.sqrt(df * math.pi)

    def density(x):
        return constant * (1 + x * x / df) ** (-(df + 1) / 2)

    tail, _ = quad(density, abs(t_value), math.inf)
    return 2.0 * tail
