/**
 * Minimal slippy map on a canvas: XYZ raster tiles, pan/zoom, and the
 * polygon overlay. The only network traffic this app generates is these
 * tile fetches.
 */

import type { LabelSession } from './session.js';
import type { LonLat } from './types.js';

const TILE = 256;

export interface Viewport {
  lon: number;
  lat: number;
  zoom: number;
}

export function lonLatToWorld(lon: number, lat: number, zoom: number): [number, number] {
  const scale = TILE * Math.pow(2, zoom);
  const x = ((lon + 180) / 360) * scale;
  const rad = (lat * Math.PI) / 180;
  const y = ((1 - Math.log(Math.tan(rad) + 1 / Math.cos(rad)) / Math.PI) / 2) * scale;
  return [x, y];
}

export function worldToLonLat(x: number, y: number, zoom: number): LonLat {
  const scale = TILE * Math.pow(2, zoom);
  const lon = (x / scale) * 360 - 180;
  const n = Math.PI - (2 * Math.PI * y) / scale;
  const lat = (180 / Math.PI) * Math.atan(0.5 * (Math.exp(n) - Math.exp(-n)));
  return [lon, lat];
}

const CLASS_COLORS: Record<string, string> = {
  building: '#e4572e',
  road: '#4f8fc0',
  background: '#6da34d',
};

export class TileMap {
  private cache = new Map<string, HTMLImageElement>();
  private vertexHit: { featureId: string; vertexIndex: number } | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private template: string,
    public viewport: Viewport,
    private session: LabelSession,
    private onEdit: () => void,
    private minZoom = 1,
    private maxZoom = 19,
  ) {
    this.bind();
    this.render();
  }

  private tileUrl(z: number, x: number, y: number): string {
    return this.template
      .replace('{z}', String(z))
      .replace('{x}', String(x))
      .replace('{y}', String(y));
  }

  private screenToLonLat(px: number, py: number): LonLat {
    const [cx, cy] = lonLatToWorld(this.viewport.lon, this.viewport.lat, this.viewport.zoom);
    return worldToLonLat(cx + px - this.canvas.width / 2,
                         cy + py - this.canvas.height / 2, this.viewport.zoom);
  }

  private lonLatToScreen(p: LonLat): [number, number] {
    const [cx, cy] = lonLatToWorld(this.viewport.lon, this.viewport.lat, this.viewport.zoom);
    const [x, y] = lonLatToWorld(p[0], p[1], this.viewport.zoom);
    return [x - cx + this.canvas.width / 2, y - cy + this.canvas.height / 2];
  }

  private bind(): void {
    let dragging = false;
    let moved = false;
    let last: [number, number] = [0, 0];
    this.canvas.addEventListener('mousedown', (event) => {
      const hit = this.hitVertex(event.offsetX, event.offsetY);
      if (hit) {
        this.vertexHit = hit;
      } else {
        dragging = true;
      }
      moved = false;
      last = [event.offsetX, event.offsetY];
    });
    this.canvas.addEventListener('mousemove', (event) => {
      if (this.vertexHit) {
        const point = this.screenToLonLat(event.offsetX, event.offsetY);
        this.session.apply({ kind: 'move-vertex', featureId: this.vertexHit.featureId,
                             vertexIndex: this.vertexHit.vertexIndex, point });
        moved = true;
        this.onEdit();
        this.render();
        return;
      }
      if (!dragging) return;
      const dx = event.offsetX - last[0];
      const dy = event.offsetY - last[1];
      if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
      last = [event.offsetX, event.offsetY];
      const [cx, cy] = lonLatToWorld(this.viewport.lon, this.viewport.lat, this.viewport.zoom);
      const next = worldToLonLat(cx - dx, cy - dy, this.viewport.zoom);
      this.viewport.lon = next[0];
      this.viewport.lat = next[1];
      this.render();
    });
    window.addEventListener('mouseup', (event) => {
      if (this.vertexHit) {
        this.vertexHit = null;
        return;
      }
      if (dragging && !moved && event.target === this.canvas) {
        const point = this.screenToLonLat(
          event.clientX - this.canvas.getBoundingClientRect().left,
          event.clientY - this.canvas.getBoundingClientRect().top);
        this.session.apply({ kind: 'add-vertex', point });
        this.onEdit();
        this.render();
      }
      dragging = false;
    });
    this.canvas.addEventListener('dblclick', (event) => {
      event.preventDefault();
    });
    this.canvas.addEventListener('wheel', (event) => {
      event.preventDefault();
      const dz = event.deltaY < 0 ? 1 : -1;
      const z = Math.max(this.minZoom, Math.min(this.maxZoom, this.viewport.zoom + dz));
      if (z !== this.viewport.zoom) {
        this.viewport.zoom = z;
        this.render();
      }
    });
  }

  private hitVertex(px: number, py: number): { featureId: string; vertexIndex: number } | null {
    for (const feature of this.session.state.features) {
      for (let i = 0; i < feature.ring.length - 1; i++) {
        const [sx, sy] = this.lonLatToScreen(feature.ring[i]);
        if (Math.hypot(sx - px, sy - py) < 6) {
          return { featureId: feature.id, vertexIndex: i };
        }
      }
    }
    return null;
  }

  featureAt(px: number, py: number): string | null {
    // point-in-polygon on screen coordinates, topmost feature first
    for (let k = this.session.state.features.length - 1; k >= 0; k--) {
      const feature = this.session.state.features[k];
      const pts = feature.ring.map((p) => this.lonLatToScreen(p));
      let inside = false;
      for (let i = 0; i < pts.length - 1; i++) {
        const [x0, y0] = pts[i];
        const [x1, y1] = pts[i + 1];
        if ((y0 > py) !== (y1 > py) && px < ((x1 - x0) * (py - y0)) / (y1 - y0) + x0) {
          inside = !inside;
        }
      }
      if (inside) return feature.id;
    }
    return null;
  }

  render(): void {
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    ctx.fillStyle = '#d8d4cc';
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    const z = Math.round(this.viewport.zoom);
    const [cx, cy] = lonLatToWorld(this.viewport.lon, this.viewport.lat, z);
    const x0 = cx - this.canvas.width / 2;
    const y0 = cy - this.canvas.height / 2;
    const tiles = Math.pow(2, z);
    for (let tx = Math.floor(x0 / TILE); tx * TILE < x0 + this.canvas.width; tx++) {
      for (let ty = Math.floor(y0 / TILE); ty * TILE < y0 + this.canvas.height; ty++) {
        if (ty < 0 || ty >= tiles) continue;
        const wrapped = ((tx % tiles) + tiles) % tiles;
        const key = `${z}/${wrapped}/${ty}`;
        let img = this.cache.get(key);
        if (!img) {
          img = new Image();
          img.crossOrigin = 'anonymous';
          img.src = this.tileUrl(z, wrapped, ty);
          img.onload = () => this.render();
          this.cache.set(key, img);
        }
        if (img.complete && img.naturalWidth > 0) {
          ctx.drawImage(img, tx * TILE - x0, ty * TILE - y0);
        }
      }
    }
    this.drawOverlay(ctx);
  }

  private drawOverlay(ctx: CanvasRenderingContext2D): void {
    for (const feature of this.session.state.features) {
      const pts = feature.ring.map((p) => this.lonLatToScreen(p));
      ctx.beginPath();
      pts.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      const color = CLASS_COLORS[feature.labelClass] ?? '#888';
      ctx.fillStyle = color + '55';
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.fill('evenodd');
      ctx.stroke();
      for (const [x, y] of pts.slice(0, -1)) {
        ctx.beginPath();
        ctx.arc(x, y, 3.5, 0, 2 * Math.PI);
        ctx.fillStyle = '#fff';
        ctx.fill();
        ctx.strokeStyle = color;
        ctx.stroke();
      }
    }
    const pending = this.session.state.pending.map((p) => this.lonLatToScreen(p));
    if (pending.length > 0) {
      ctx.beginPath();
      pending.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.strokeStyle = '#222';
      ctx.setLineDash([5, 4]);
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.setLineDash([]);
      for (const [x, y] of pending) {
        ctx.beginPath();
        ctx.arc(x, y, 3, 0, 2 * Math.PI);
        ctx.fillStyle = '#222';
        ctx.fill();
      }
    }
  }
}
