/**
 * GeoJSON exchange, matching the toolkit's annotation schema exactly:
 * Polygon features with `class`, `confidence` and `id` properties, WGS84
 * [lon, lat] coordinates, exterior rings counter-clockwise.
 */

import { ensureCounterClockwise, ringSelfIntersects } from './geometry.js';
import { isConfidence, isLabelClass } from './types.js';
import type { Feature, LonLat } from './types.js';

export function exportAnnotations(features: Feature[]): string {
  const doc = {
    type: 'FeatureCollection',
    features: features.map((f) => ({
      type: 'Feature',
      geometry: {
        type: 'Polygon',
        coordinates: [ensureCounterClockwise(f.ring).map((p) => [p[0], p[1]])],
      },
      properties: { class: f.labelClass, confidence: f.confidence, id: f.id },
    })),
  };
  return JSON.stringify(doc);
}

export interface ImportResult {
  ok: boolean;
  /** parse-level failure message when ok is false */
  error?: string;
  features: Feature[];
  /** per-feature problems for features that were skipped */
  report: string[];
}

export function importAnnotations(document: string): ImportResult {
  let parsed: unknown;
  try {
    parsed = JSON.parse(document);
  } catch (exc) {
    return { ok: false, error: `not valid JSON: ${exc}`, features: [], report: [] };
  }
  const doc = parsed as { type?: unknown; features?: unknown };
  if (doc.type !== 'FeatureCollection' || !Array.isArray(doc.features)) {
    return { ok: false, error: 'document is not a FeatureCollection', features: [], report: [] };
  }
  const features: Feature[] = [];
  const report: string[] = [];
  doc.features.forEach((raw: any, index: number) => {
    const where = `feature ${index}`;
    const geometry = raw?.geometry;
    if (!geometry || geometry.type !== 'Polygon' || !Array.isArray(geometry.coordinates)) {
      report.push(`${where}: geometry is not a Polygon`);
      return;
    }
    const rings = geometry.coordinates;
    if (rings.length === 0 || !Array.isArray(rings[0])) {
      report.push(`${where}: empty Polygon`);
      return;
    }
    const ring: LonLat[] = [];
    for (const entry of rings[0]) {
      if (!Array.isArray(entry) || entry.length < 2 ||
          typeof entry[0] !== 'number' || typeof entry[1] !== 'number' ||
          !isFinite(entry[0]) || !isFinite(entry[1])) {
        report.push(`${where}: malformed coordinate`);
        return;
      }
      ring.push([entry[0], entry[1]]);
    }
    if (ring.length < 4 ||
        ring[0][0] !== ring[ring.length - 1][0] ||
        ring[0][1] !== ring[ring.length - 1][1]) {
      report.push(`${where}: ring must be closed with at least 4 vertices`);
      return;
    }
    if (ringSelfIntersects(ring)) {
      report.push(`${where}: self-intersecting ring`);
      return;
    }
    const props = raw?.properties ?? {};
    if (!isLabelClass(props.class)) {
      report.push(`${where}: unknown class ${JSON.stringify(props.class)}`);
      return;
    }
    const confidence = isConfidence(props.confidence) ? props.confidence : 'medium';
    if (!isConfidence(props.confidence)) {
      report.push(`${where}: missing confidence, defaulted to medium`);
    }
    features.push({
      id: typeof props.id === 'string' ? props.id : `imported-${index}`,
      ring: ensureCounterClockwise(ring),
      labelClass: props.class,
      confidence,
    });
  });
  return { ok: true, features, report };
}
