import { describe, expect, it } from 'vitest';

import {
  MARKER_COLORS,
  drawMarkers,
  hoveredMarker,
  lensSourceRect,
  type Ctx2D,
} from '../src/markers.js';

class RecordingCtx implements Ctx2D {
  fillStyle = '';
  strokeStyle = '';
  lineWidth = 0;
  ops: Array<{ op: string; color?: string; x?: number; y?: number }> = [];

  beginPath() {
    this.ops.push({ op: 'beginPath' });
  }
  arc(x: number, y: number) {
    this.ops.push({ op: 'arc', x, y });
  }
  fill() {
    this.ops.push({ op: 'fill', color: this.fillStyle });
  }
  stroke() {
    this.ops.push({ op: 'stroke', color: this.strokeStyle });
  }
}

describe('marker colors', () => {
  it('point 1 is green and point 2 is red (green = closer when keying 1)', () => {
    expect(MARKER_COLORS.p1).toBe('#22c55e');
    expect(MARKER_COLORS.p2).toBe('#ef4444');
  });

  it('drawMarkers paints p1 with the green fill and p2 with the red fill', () => {
    const ctx = new RecordingCtx();
    drawMarkers(ctx, { x: 1, y: 2 }, { x: 3, y: 4 });
    const fills = ctx.ops.filter((o) => o.op === 'fill');
    expect(fills).toHaveLength(2);
    expect(fills[0]?.color).toBe(MARKER_COLORS.p1);
    expect(fills[1]?.color).toBe(MARKER_COLORS.p2);
    const arcs = ctx.ops.filter((o) => o.op === 'arc');
    expect(arcs[0]).toMatchObject({ x: 1, y: 2 });
    expect(arcs[2]).toMatchObject({ x: 3, y: 4 });
  });
});

describe('zoom lens geometry', () => {
  it('centers on the point when there is room', () => {
    expect(lensSourceRect({ x: 100, y: 80 }, 20, 400, 300)).toEqual({
      x: 80,
      y: 60,
      w: 40,
      h: 40,
    });
  });

  it('clamps at the image borders', () => {
    expect(lensSourceRect({ x: 2, y: 2 }, 20, 400, 300)).toEqual({ x: 0, y: 0, w: 40, h: 40 });
    expect(lensSourceRect({ x: 399, y: 299 }, 20, 400, 300)).toEqual({
      x: 360,
      y: 260,
      w: 40,
      h: 40,
    });
  });

  it('degrades gracefully on tiny images', () => {
    expect(lensSourceRect({ x: 5, y: 5 }, 20, 16, 16)).toEqual({ x: 0, y: 0, w: 16, h: 16 });
  });
});

describe('hover detection', () => {
  const p1 = { x: 10, y: 10 };
  const p2 = { x: 200, y: 200 };

  it('returns the nearer marker inside the hit radius', () => {
    expect(hoveredMarker({ x: 12, y: 9 }, p1, p2)).toBe('p1');
    expect(hoveredMarker({ x: 195, y: 210 }, p1, p2)).toBe('p2');
  });

  it('returns null far from both', () => {
    expect(hoveredMarker({ x: 100, y: 100 }, p1, p2)).toBeNull();
  });
});
