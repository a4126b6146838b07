/**
 * Autosave to browser local storage. Sessions are keyed by the basemap
 * template so different scenes do not clobber each other; annotators work
 * in long sessions and the canonical export stays an explicit download.
 */

import type { SessionState } from './session.js';

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = 'footprinter-labeler:';

export function storageKey(basemap: string): string {
  return PREFIX + basemap;
}

export function saveSession(store: KeyValueStore, basemap: string,
                            state: SessionState): void {
  store.setItem(storageKey(basemap), JSON.stringify(state));
}

export function loadSession(store: KeyValueStore, basemap: string): SessionState | null {
  const raw = store.getItem(storageKey(basemap));
  if (raw === null) return null;
  try {
    const state = JSON.parse(raw) as SessionState;
    if (!Array.isArray(state.features) || !Array.isArray(state.pending)) {
      return null;
    }
    return state;
  } catch {
    return null;
  }
}

export function clearSession(store: KeyValueStore, basemap: string): void {
  store.removeItem(storageKey(basemap));
}
