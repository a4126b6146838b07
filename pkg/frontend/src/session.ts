/**
 * Labeling session state machine.
 *
 * All edits flow through applyGesture so the behavior is replayable and undo
 * can restore any previous state exactly. No I/O here: the map layer renders
 * the state, the storage layer persists it.
 */

import { distinctVertexCount, ringSelfIntersects } from './geometry.js';
import type { Confidence, Feature, LabelClass, LonLat } from './types.js';

export interface SessionState {
  features: Feature[];
  /** vertices of the ring being drawn, in click order (not closed) */
  pending: LonLat[];
  activeClass: LabelClass;
  activeConfidence: Confidence;
  dirty: boolean;
  nextId: number;
}

export type Gesture =
  | { kind: 'add-vertex'; point: LonLat }
  | { kind: 'close-ring' }
  | { kind: 'cancel-ring' }
  | { kind: 'move-vertex'; featureId: string; vertexIndex: number; point: LonLat }
  | { kind: 'delete-feature'; featureId: string }
  | { kind: 'set-class'; value: LabelClass }
  | { kind: 'set-confidence'; value: Confidence };

export interface GestureResult {
  ok: boolean;
  message?: string;
}

export function freshState(): SessionState {
  return {
    features: [],
    pending: [],
    activeClass: 'building',
    activeConfidence: 'medium',
    dirty: false,
    nextId: 1,
  };
}

function cloneState(state: SessionState): SessionState {
  return {
    features: state.features.map((f) => ({
      ...f,
      ring: f.ring.map((p) => [p[0], p[1]] as LonLat),
    })),
    pending: state.pending.map((p) => [p[0], p[1]] as LonLat),
    activeClass: state.activeClass,
    activeConfidence: state.activeConfidence,
    dirty: state.dirty,
    nextId: state.nextId,
  };
}

export class LabelSession {
  state: SessionState;
  private undoStack: SessionState[] = [];

  constructor(state?: SessionState) {
    this.state = state ?? freshState();
  }

  apply(gesture: Gesture): GestureResult {
    const before = cloneState(this.state);
    const result = this.mutate(gesture);
    if (result.ok) {
      this.undoStack.push(before);
    }
    return result;
  }

  undo(): boolean {
    const previous = this.undoStack.pop();
    if (!previous) return false;
    this.state = previous;
    return true;
  }

  private mutate(gesture: Gesture): GestureResult {
    const s = this.state;
    switch (gesture.kind) {
      case 'add-vertex': {
        s.pending.push([gesture.point[0], gesture.point[1]]);
        return { ok: true };
      }
      case 'close-ring': {
        if (distinctVertexCount(s.pending) < 3) {
          return { ok: false, message: 'need at least 3 distinct vertices to close' };
        }
        const ring: LonLat[] = [...s.pending.map((p) => [p[0], p[1]] as LonLat)];
        ring.push([ring[0][0], ring[0][1]]);
        if (ringSelfIntersects(ring)) {
          return { ok: false, message: 'ring would self-intersect; fix the outline first' };
        }
        s.features.push({
          id: `f${s.nextId}`,
          ring,
          labelClass: s.activeClass,
          confidence: s.activeConfidence,
        });
        s.nextId += 1;
        s.pending = [];
        s.dirty = true;
        return { ok: true };
      }
      case 'cancel-ring': {
        s.pending = [];
        return { ok: true };
      }
      case 'move-vertex': {
        const feature = s.features.find((f) => f.id === gesture.featureId);
        if (!feature) return { ok: false, message: `no feature ${gesture.featureId}` };
        const n = feature.ring.length - 1;
        const index = gesture.vertexIndex;
        if (index < 0 || index >= n) {
          return { ok: false, message: `vertex ${index} out of range` };
        }
        const candidate = feature.ring.map((p) => [p[0], p[1]] as LonLat);
        candidate[index] = [gesture.point[0], gesture.point[1]];
        if (index === 0) candidate[n] = [gesture.point[0], gesture.point[1]];
        if (distinctVertexCount(candidate.slice(0, n)) < 3) {
          return { ok: false, message: 'move would collapse the ring' };
        }
        if (ringSelfIntersects(candidate)) {
          return { ok: false, message: 'move would self-intersect' };
        }
        feature.ring = candidate;
        s.dirty = true;
        return { ok: true };
      }
      case 'delete-feature': {
        const at = s.features.findIndex((f) => f.id === gesture.featureId);
        if (at < 0) return { ok: false, message: `no feature ${gesture.featureId}` };
        s.features.splice(at, 1);
        s.dirty = true;
        return { ok: true };
      }
      case 'set-class': {
        s.activeClass = gesture.value;
        return { ok: true };
      }
      case 'set-confidence': {
        s.activeConfidence = gesture.value;
        return { ok: true };
      }
    }
  }
}
