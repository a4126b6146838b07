"""GeoJSON (RFC 7946) exchange for annotations and building footprints.

Annotation features carry `class` and `confidence` properties; footprint
features carry `id`, `area_m2` and optionally `quality`. Ring orientation is
normalized on ingest and on write: exteriors counter-clockwise, interiors
clockwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .geometry import (close_ring, ensure_orientation, polygon_net_area,
                       ring_self_intersects)
from .projection import tm_to_wgs84, wgs84_to_tm

CATEGORIES = ("building", "road", "background")
CONFIDENCES = ("low", "medium", "high")
QUALITIES = ("regular", "low_quality")


class AnnotationParseError(ValueError):
    """Malformed annotation document; message names the offending feature."""


@dataclass
class Annotation:
    exterior: list  # closed ring of (x, y)
    category: str
    confidence: str = "medium"
    id: str = ""
    interiors: list = field(default_factory=list)

    def validate(self, index: int = -1) -> None:
        where = f"feature {index}" if index >= 0 else f"annotation {self.id!r}"
        if self.category not in CATEGORIES:
            raise AnnotationParseError(f"{where}: unknown class {self.category!r}")
        if self.confidence not in CONFIDENCES:
            raise AnnotationParseError(f"{where}: unknown confidence {self.confidence!r}")
        for ring in [self.exterior] + self.interiors:
            if len(ring) < 4 or ring[0] != ring[-1]:
                raise AnnotationParseError(f"{where}: ring not closed with >= 4 vertices")
        if ring_self_intersects(self.exterior):
            raise AnnotationParseError(f"{where}: self-intersecting exterior ring")


@dataclass
class Footprint:
    id: str
    exterior: list
    interiors: list = field(default_factory=list)
    area_m2: float = 0.0
    quality: str | None = None

    def net_area(self) -> float:
        return polygon_net_area(self.exterior, self.interiors)


@dataclass
class FootprintSet:
    footprints: list  # of Footprint
    crs_tag: str = "local"

    def __post_init__(self):
        ids = [f.id for f in self.footprints]
        if len(set(ids)) != len(ids):
            raise ValueError("footprint ids must be unique within a set")

    def __len__(self):
        return len(self.footprints)

    def __iter__(self):
        return iter(self.footprints)


def _normalize_rings(exterior, interiors):
    exterior = ensure_orientation(close_ring([tuple(p) for p in exterior]), True)
    interiors = [ensure_orientation(close_ring([tuple(p) for p in r]), False)
                 for r in interiors]
    return exterior, interiors


def _polygon_coords(obj, index: int):
    if obj.get("type") != "Polygon":
        raise AnnotationParseError(
            f"feature {index}: geometry type {obj.get('type')!r}, expected Polygon")
    rings = obj.get("coordinates") or []
    if not rings:
        raise AnnotationParseError(f"feature {index}: empty Polygon coordinates")
    return rings[0], rings[1:]


def parse_annotations(document: str):
    """Parse a FeatureCollection into (annotations, warnings).

    Features with a category outside the schema are skipped and reported in
    the warnings list rather than silently dropped.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise AnnotationParseError(f"malformed JSON: {exc}") from exc
    if doc.get("type") != "FeatureCollection":
        raise AnnotationParseError("document is not a FeatureCollection")
    annotations, warnings = [], []
    for i, feature in enumerate(doc.get("features", [])):
        geom = feature.get("geometry") or {}
        exterior, interiors = _polygon_coords(geom, i)
        props = feature.get("properties") or {}
        if "class" not in props:
            raise AnnotationParseError(f"feature {i}: missing `class` property")
        category = props["class"]
        if category not in CATEGORIES:
            warnings.append(f"feature {i}: skipped, unknown class {category!r}")
            continue
        confidence = props.get("confidence", "medium")
        if confidence not in CONFIDENCES:
            warnings.append(
                f"feature {i}: confidence {confidence!r} replaced with 'medium'")
            confidence = "medium"
        exterior, interiors = _normalize_rings(exterior, interiors)
        ann = Annotation(exterior=exterior, category=category,
                         confidence=confidence,
                         id=str(props.get("id", f"f{i}")), interiors=interiors)
        ann.validate(i)
        annotations.append(ann)
    return annotations, warnings


def write_annotations(annotations) -> str:
    features = []
    for ann in annotations:
        exterior, interiors = _normalize_rings(ann.exterior, ann.interiors)
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon",
                         "coordinates": [[list(p) for p in exterior]]
                                        + [[list(p) for p in r] for r in interiors]},
            "properties": {"class": ann.category, "confidence": ann.confidence,
                           "id": ann.id},
        })
    return json.dumps({"type": "FeatureCollection", "features": features})


def write_footprints(footprint_set: FootprintSet) -> str:
    features = []
    for fp in footprint_set:
        exterior, interiors = _normalize_rings(fp.exterior, fp.interiors)
        props = {"id": fp.id, "area_m2": fp.area_m2}
        if fp.quality is not None:
            props["quality"] = fp.quality
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon",
                         "coordinates": [[list(p) for p in exterior]]
                                        + [[list(p) for p in r] for r in interiors]},
            "properties": props,
        })
    return json.dumps({"type": "FeatureCollection", "features": features})


def parse_footprints(document: str, crs_tag: str = "local") -> FootprintSet:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise AnnotationParseError(f"malformed JSON: {exc}") from exc
    if doc.get("type") != "FeatureCollection":
        raise AnnotationParseError("document is not a FeatureCollection")
    footprints = []
    for i, feature in enumerate(doc.get("features", [])):
        exterior, interiors = _polygon_coords(feature.get("geometry") or {}, i)
        exterior, interiors = _normalize_rings(exterior, interiors)
        props = feature.get("properties") or {}
        quality = props.get("quality")
        if quality is not None and quality not in QUALITIES:
            raise AnnotationParseError(f"feature {i}: unknown quality {quality!r}")
        fp = Footprint(id=str(props.get("id", f"fp{i}")), exterior=exterior,
                       interiors=interiors, quality=quality)
        fp.area_m2 = float(props.get("area_m2", fp.net_area()))
        footprints.append(fp)
    return FootprintSet(footprints, crs_tag=crs_tag)


def annotations_wgs84_to_tm(annotations, central_meridian: float):
    """Project labeler output (lon/lat) into scene meters."""
    out = []
    for ann in annotations:
        def project(ring):
            return [wgs84_to_tm(lat, lon, central_meridian) for lon, lat in ring]
        out.append(Annotation(exterior=project(ann.exterior), category=ann.category,
                              confidence=ann.confidence, id=ann.id,
                              interiors=[project(r) for r in ann.interiors]))
    return out


def annotations_tm_to_wgs84(annotations, central_meridian: float):
    out = []
    for ann in annotations:
        def unproject(ring):
            return [(lon, lat) for lat, lon in
                    (tm_to_wgs84(x, y, central_meridian) for x, y in ring)]
        out.append(Annotation(exterior=unproject(ann.exterior), category=ann.category,
                              confidence=ann.confidence, id=ann.id,
                              interiors=[unproject(r) for r in ann.interiors]))
    return out
