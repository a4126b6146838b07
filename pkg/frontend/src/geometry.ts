/** Ring validation used when a drawn polygon is closed. */

import type { LonLat } from './types.js';

function orient(a: LonLat, b: LonLat, c: LonLat): number {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

function onSegment(a: LonLat, b: LonLat, p: LonLat): boolean {
  return (
    Math.min(a[0], b[0]) <= p[0] && p[0] <= Math.max(a[0], b[0]) &&
    Math.min(a[1], b[1]) <= p[1] && p[1] <= Math.max(a[1], b[1])
  );
}

export function segmentsIntersect(a: LonLat, b: LonLat, c: LonLat, d: LonLat): boolean {
  const d1 = orient(c, d, a);
  const d2 = orient(c, d, b);
  const d3 = orient(a, b, c);
  const d4 = orient(a, b, d);
  if (((d1 > 0) !== (d2 > 0)) && ((d1 < 0) !== (d2 < 0)) &&
      ((d3 > 0) !== (d4 > 0)) && ((d3 < 0) !== (d4 < 0))) {
    return true;
  }
  if (d1 === 0 && onSegment(c, d, a)) return true;
  if (d2 === 0 && onSegment(c, d, b)) return true;
  if (d3 === 0 && onSegment(a, b, c)) return true;
  if (d4 === 0 && onSegment(a, b, d)) return true;
  return false;
}

/** Self-intersection of a closed ring: any two non-adjacent edges touching. */
export function ringSelfIntersects(ring: LonLat[]): boolean {
  const n = ring.length - 1; // edges
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      if (j === i + 1 || (i === 0 && j === n - 1)) continue;
      if (segmentsIntersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) {
        return true;
      }
    }
  }
  return false;
}

export function distinctVertexCount(points: LonLat[]): number {
  const seen = new Set(points.map((p) => `${p[0]},${p[1]}`));
  return seen.size;
}

export function ringArea(ring: LonLat[]): number {
  let total = 0;
  for (let i = 0; i < ring.length - 1; i++) {
    total += ring[i][0] * ring[i + 1][1] - ring[i + 1][0] * ring[i][1];
  }
  return total / 2;
}

/** Counter-clockwise exterior rings, per RFC 7946. */
export function ensureCounterClockwise(ring: LonLat[]): LonLat[] {
  return ringArea(ring) < 0 ? [...ring].reverse() : ring;
}
