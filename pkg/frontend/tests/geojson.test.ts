import { describe, expect, it } from 'vitest';

import { exportAnnotations, importAnnotations } from '../src/geojson.js';
import { ringArea } from '../src/geometry.js';
import { CLASSES, CONFIDENCES } from '../src/types.js';
import type { Feature, LonLat } from '../src/types.js';

function square(x0: number, y0: number, side: number): LonLat[] {
  return [[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side],
          [x0, y0]];
}

function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

function randomFeatures(count: number, seed: number): Feature[] {
  const rand = lcg(seed);
  const features: Feature[] = [];
  for (let i = 0; i < count; i++) {
    const x = Math.round(rand() * 350000) / 10000 - 17.5;
    const y = Math.round(rand() * 150000) / 10000 - 7.5;
    const side = 0.0001 + rand() * 0.001;
    features.push({
      id: `f${i + 1}`,
      ring: square(x, y, side),
      labelClass: CLASSES[Math.floor(rand() * 3)],
      confidence: CONFIDENCES[Math.floor(rand() * 3)],
    });
  }
  return features;
}

describe('export', () => {
  it('empty session exports an empty FeatureCollection', () => {
    const doc = JSON.parse(exportAnnotations([]));
    expect(doc).toEqual({ type: 'FeatureCollection', features: [] });
  });

  it('one building polygon carries class and confidence properties', () => {
    const doc = JSON.parse(exportAnnotations([{
      id: 'f1', ring: square(35.9, 31.9, 0.001),
      labelClass: 'building', confidence: 'low',
    }]));
    expect(doc.features).toHaveLength(1);
    expect(doc.features[0].properties).toEqual(
      { class: 'building', confidence: 'low', id: 'f1' });
    expect(doc.features[0].geometry.type).toBe('Polygon');
  });

  it('every exported ring is closed and counter-clockwise', () => {
    const features = randomFeatures(100, 5);
    // flip half the rings to clockwise; export must normalize
    for (let i = 0; i < features.length; i += 2) {
      features[i].ring = [...features[i].ring].reverse();
    }
    const doc = JSON.parse(exportAnnotations(features));
    for (const feature of doc.features) {
      const ring = feature.geometry.coordinates[0] as LonLat[];
      expect(ring[0]).toEqual(ring[ring.length - 1]);
      expect(ring.length).toBeGreaterThanOrEqual(4);
      expect(ringArea(ring)).toBeGreaterThan(0);
      expect(CLASSES).toContain(feature.properties.class);
      expect(CONFIDENCES).toContain(feature.properties.confidence);
    }
  });
});

describe('import', () => {
  it('round trips 300 random features exactly', () => {
    const features = randomFeatures(300, 9);
    const result = importAnnotations(exportAnnotations(features));
    expect(result.ok).toBe(true);
    expect(result.report).toEqual([]);
    expect(result.features).toEqual(features);
  });

  it('export -> import -> export is byte-stable', () => {
    const first = exportAnnotations(randomFeatures(120, 11));
    const imported = importAnnotations(first);
    const second = exportAnnotations(imported.features);
    expect(second).toBe(first);
  });

  it('keeps good features and reports bad ones', () => {
    const good = {
      type: 'Feature',
      geometry: { type: 'Polygon',
                  coordinates: [[[0, 0], [1, 0], [1, 1], [0, 0]]] },
      properties: { class: 'building', confidence: 'high', id: 'ok' },
    };
    const bad = {
      type: 'Feature',
      geometry: { type: 'Point', coordinates: [0, 0] },
      properties: { class: 'building' },
    };
    const result = importAnnotations(JSON.stringify(
      { type: 'FeatureCollection', features: [bad, good] }));
    expect(result.ok).toBe(true);
    expect(result.features).toHaveLength(1);
    expect(result.features[0].id).toBe('ok');
    expect(result.report).toHaveLength(1);
    expect(result.report[0]).toMatch(/feature 0/);
  });

  it('rejects unparseable documents without touching the session', () => {
    expect(importAnnotations('{oops').ok).toBe(false);
    expect(importAnnotations('42').ok).toBe(false);
    expect(importAnnotations('{"type": "Feature"}').ok).toBe(false);
  });

  it('survives fuzzed near-valid documents', () => {
    const rand = lcg(23);
    const base = JSON.parse(exportAnnotations(randomFeatures(5, 31)));
    for (let trial = 0; trial < 300; trial++) {
      const doc = JSON.parse(JSON.stringify(base));
      const feature = doc.features[Math.floor(rand() * doc.features.length)];
      const mutation = Math.floor(rand() * 6);
      if (mutation === 0) delete feature.geometry;
      if (mutation === 1) feature.geometry.coordinates = [];
      if (mutation === 2) feature.geometry.coordinates[0].pop();
      if (mutation === 3) feature.properties.class = 'volcano';
      if (mutation === 4) delete feature.properties;
      if (mutation === 5) {
        feature.geometry.coordinates[0][1] = ['NaN', null];
      }
      const result = importAnnotations(JSON.stringify(doc));
      expect(result.ok).toBe(true);
      expect(result.features.length + result.report.length)
        .toBeGreaterThanOrEqual(doc.features.length - 1);
    }
  });

  it('defaults a missing confidence to medium with a report entry', () => {
    const doc = {
      type: 'FeatureCollection',
      features: [{
        type: 'Feature',
        geometry: { type: 'Polygon',
                    coordinates: [[[0, 0], [1, 0], [1, 1], [0, 0]]] },
        properties: { class: 'road', id: 'r' },
      }],
    };
    const result = importAnnotations(JSON.stringify(doc));
    expect(result.features[0].confidence).toBe('medium');
    expect(result.report).toHaveLength(1);
  });
});
