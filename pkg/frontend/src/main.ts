/**
 * App wiring: URL query parameters choose the basemap and starting viewport,
 * the session autosaves to local storage on every edit, export is an
 * explicit GeoJSON download. Runs entirely in the browser.
 */

import { exportAnnotations, importAnnotations } from './geojson.js';
import { TileMap } from './map.js';
import { LabelSession } from './session.js';
import { loadSession, saveSession } from './storage.js';
import { CLASSES, CONFIDENCES } from './types.js';
import type { Confidence, LabelClass } from './types.js';

function query(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const basemap = query('basemap', 'https://tile.openstreetmap.org/{z}/{x}/{y}.png');
const viewport = {
  lon: parseFloat(query('lon', '35.93')),
  lat: parseFloat(query('lat', '31.95')),
  zoom: parseInt(query('zoom', '15'), 10),
};
const minZoom = parseInt(query('minzoom', '1'), 10);
const maxZoom = parseInt(query('maxzoom', '19'), 10);

const restored = loadSession(window.localStorage, basemap);
const session = new LabelSession(restored ?? undefined);

const canvas = document.getElementById('map') as HTMLCanvasElement;
const statusLine = document.getElementById('status') as HTMLElement;
const counts = document.getElementById('counts') as HTMLElement;

function flash(message: string): void {
  statusLine.textContent = message;
  statusLine.classList.add('visible');
  window.setTimeout(() => statusLine.classList.remove('visible'), 2600);
}

function refreshCounts(): void {
  const byClass = new Map<string, number>();
  for (const f of session.state.features) {
    byClass.set(f.labelClass, (byClass.get(f.labelClass) ?? 0) + 1);
  }
  counts.textContent = CLASSES
    .map((c) => `${c}: ${byClass.get(c) ?? 0}`)
    .join('   ');
}

function autosave(): void {
  saveSession(window.localStorage, basemap, session.state);
  refreshCounts();
}

const map = new TileMap(canvas, basemap, viewport, session, autosave,
                        minZoom, maxZoom);

function resize(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  map.render();
}
window.addEventListener('resize', resize);
resize();

const classSelect = document.getElementById('class') as HTMLSelectElement;
CLASSES.forEach((c) => classSelect.add(new Option(c, c)));
classSelect.value = session.state.activeClass;
classSelect.addEventListener('change', () => {
  session.apply({ kind: 'set-class', value: classSelect.value as LabelClass });
  autosave();
});

const confidenceSelect = document.getElementById('confidence') as HTMLSelectElement;
CONFIDENCES.forEach((c) => confidenceSelect.add(new Option(c, c)));
confidenceSelect.value = session.state.activeConfidence;
confidenceSelect.addEventListener('change', () => {
  session.apply({ kind: 'set-confidence',
                  value: confidenceSelect.value as Confidence });
  autosave();
});

function closeRing(): void {
  const result = session.apply({ kind: 'close-ring' });
  if (!result.ok) {
    flash(result.message ?? 'cannot close ring');
  } else {
    autosave();
  }
  map.render();
}

canvas.addEventListener('dblclick', closeRing);
window.addEventListener('keydown', (event) => {
  if (event.key === 'Enter') closeRing();
  if (event.key === 'Escape') {
    session.apply({ kind: 'cancel-ring' });
    map.render();
  }
  if ((event.ctrlKey || event.metaKey) && event.key.toLowerCase() === 'z') {
    event.preventDefault();
    if (session.undo()) {
      autosave();
      map.render();
    }
  }
});

canvas.addEventListener('contextmenu', (event) => {
  event.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const id = map.featureAt(event.clientX - rect.left, event.clientY - rect.top);
  if (id && window.confirm(`Delete feature ${id}?`)) {
    session.apply({ kind: 'delete-feature', featureId: id });
    autosave();
    map.render();
  }
});

(document.getElementById('undo') as HTMLButtonElement).addEventListener('click', () => {
  if (session.undo()) {
    autosave();
    map.render();
  }
});

(document.getElementById('export') as HTMLButtonElement).addEventListener('click', () => {
  const text = exportAnnotations(session.state.features);
  const blob = new Blob([text], { type: 'application/geo+json' });
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = 'annotations.geojson';
  link.click();
  URL.revokeObjectURL(link.href);
  session.state.dirty = false;
});

const importInput = document.getElementById('import') as HTMLInputElement;
importInput.addEventListener('change', async () => {
  const file = importInput.files?.[0];
  if (!file) return;
  const result = importAnnotations(await file.text());
  if (!result.ok) {
    flash(result.error ?? 'import failed');
    return;
  }
  for (const feature of result.features) {
    feature.id = `f${session.state.nextId}`;
    session.state.nextId += 1;
    session.state.features.push(feature);
  }
  session.state.dirty = true;
  autosave();
  map.render();
  flash(`imported ${result.features.length} features` +
        (result.report.length ? `; ${result.report.length} skipped` : ''));
  importInput.value = '';
});

refreshCounts();
