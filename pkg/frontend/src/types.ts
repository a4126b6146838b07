/** Shared annotation types; coordinates are WGS84 [lon, lat]. */

export type LonLat = [number, number];

export const CLASSES = ['building', 'road', 'background'] as const;
export type LabelClass = (typeof CLASSES)[number];

export const CONFIDENCES = ['low', 'medium', 'high'] as const;
export type Confidence = (typeof CONFIDENCES)[number];

export interface Feature {
  id: string;
  /** closed exterior ring: first point repeated last, >= 4 entries */
  ring: LonLat[];
  labelClass: LabelClass;
  confidence: Confidence;
}

export function isLabelClass(value: unknown): value is LabelClass {
  return typeof value === 'string' && (CLASSES as readonly string[]).includes(value);
}

export function isConfidence(value: unknown): value is Confidence {
  return typeof value === 'string' && (CONFIDENCES as readonly string[]).includes(value);
}
