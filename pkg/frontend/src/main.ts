/** DOM wiring: one annotator session per tab. */

import { ApiClient } from './api.js';
import { drawMarkers, hoveredMarker, lensSourceRect, MARKER_COLORS } from './markers.js';
import { AnnotationSession } from './session.js';
import type { PairPayload, ProgressReport } from './types.js';

const LENS_RADIUS = 48; // source pixels magnified under the lens
const LENS_ZOOM = 4;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function annotatorId(): string {
  const fromUrl = new URLSearchParams(window.location.search).get('annotator');
  if (fromUrl) return fromUrl;
  const stored = window.localStorage.getItem('annotator');
  if (stored) return stored;
  const entered = window.prompt('annotator id:') ?? 'anonymous';
  window.localStorage.setItem('annotator', entered);
  return entered;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>('view');
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('canvas 2d context unavailable');
  const banner = el<HTMLDivElement>('banner');
  const roleBadge = el<HTMLSpanElement>('role');
  const scenarioLabel = el<HTMLSpanElement>('scenario');
  const progressBox = el<HTMLDivElement>('progress');
  const hint = el<HTMLDivElement>('hint');

  const api = new ApiClient('');
  const annotator = annotatorId();
  el<HTMLSpanElement>('who').textContent = annotator;

  let image: HTMLImageElement | null = null;
  let pair: PairPayload | null = null;
  let scale = 1;
  let cursor: { x: number; y: number } | null = null;

  function toView(p: [number, number]): { x: number; y: number } {
    return { x: p[0] * scale, y: p[1] * scale };
  }

  function redraw(): void {
    ctx!.clearRect(0, 0, canvas.width, canvas.height);
    if (!image || !pair) return;
    ctx!.drawImage(image, 0, 0, image.width * scale, image.height * scale);
    const v1 = toView(pair.p1);
    const v2 = toView(pair.p2);
    drawMarkers(ctx!, v1, v2);
    if (cursor) {
      const which = hoveredMarker(cursor, v1, v2);
      if (which) {
        const p = which === 'p1' ? pair.p1 : pair.p2;
        const src = lensSourceRect({ x: p[0], y: p[1] }, LENS_RADIUS, image.width, image.height);
        const size = LENS_RADIUS * 2 * LENS_ZOOM * scale;
        const lx = Math.min(canvas.width - size - 8, Math.max(8, cursor.x + 24));
        const ly = Math.min(canvas.height - size - 8, Math.max(8, cursor.y - size - 24));
        ctx!.drawImage(image, src.x, src.y, src.w, src.h, lx, ly, size, size);
        ctx!.strokeStyle = MARKER_COLORS[which];
        ctx!.lineWidth = 2;
        ctx!.strokeRect(lx, ly, size, size);
      }
    }
  }

  function showBanner(message: string): void {
    banner.textContent = message;
    banner.classList.add('visible');
    window.setTimeout(() => banner.classList.remove('visible'), 3000);
  }

  function renderProgress(report: ProgressReport): void {
    const s = report.by_status;
    progressBox.textContent =
      `queued ${s.queued ?? 0} · claimed ${s.claimed ?? 0} · ` +
      `verifying ${s.awaiting_verification ?? 0} · ` +
      `finalized ${s.finalized ?? 0} · discarded ${s.discarded ?? 0}`;
  }

  const session = new AnnotationSession(api, annotator, {
    onPair(next) {
      pair = next;
      image = null;
      if (!next) {
        ctx!.clearRect(0, 0, canvas.width, canvas.height);
        hint.textContent = 'queue empty — nothing left to annotate';
        roleBadge.textContent = '';
        scenarioLabel.textContent = '';
        return;
      }
      roleBadge.textContent = next.role;
      roleBadge.className = `badge ${next.role}`;
      scenarioLabel.textContent = next.scenario;
      hint.textContent = 'loading image…';
      const img = new Image();
      img.onload = () => {
        image = img;
        scale = Math.min(canvas.width / img.width, canvas.height / img.height, 1);
        redraw();
        session.markRendered(next.pair_id);
        hint.textContent =
          'press 1 if the green point is closer, 2 if the red point is closer, S to skip';
      };
      img.onerror = () => showBanner(`failed to load image for ${next.pair_id}`);
      img.src = api.imageUrl(next.pair_id);
    },
    onBanner: showBanner,
    onProgress: renderProgress,
  });

  canvas.addEventListener('mousemove', (e) => {
    const rect = canvas.getBoundingClientRect();
    cursor = { x: e.clientX - rect.left, y: e.clientY - rect.top };
    redraw();
  });
  canvas.addEventListener('mouseleave', () => {
    cursor = null;
    redraw();
  });

  window.addEventListener('keydown', (e) => {
    if (e.target instanceof HTMLInputElement || e.target instanceof HTMLTextAreaElement) {
      return;
    }
    void session.handleKey(e.key).then((result) => {
      if (result !== 'ignored') void session.refreshProgress();
    });
  });

  void session.fetchNext();
  void session.refreshProgress();
  window.setInterval(() => void session.refreshProgress(), 5000);
}

main();
