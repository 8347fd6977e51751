/** Marker drawing and zoom-lens geometry for the pair view.
 *
 * Color convention: point 1 is green, point 2 is red; in published
 * benchmark renderings the green point is the closer one, and keying "1"
 * declares the green point closer.
 */

export const MARKER_COLORS = {
  p1: '#22c55e', // green
  p2: '#ef4444', // red
} as const;

/** Minimal structural slice of CanvasRenderingContext2D used here, so the
 * logic is testable without a DOM. */
export interface Ctx2D {
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export interface Point {
  x: number;
  y: number;
}

function drawOne(ctx: Ctx2D, p: Point, color: string, radius: number): void {
  ctx.beginPath();
  ctx.arc(p.x, p.y, radius, 0, 2 * Math.PI);
  ctx.fillStyle = color;
  ctx.fill();
  ctx.beginPath();
  ctx.arc(p.x, p.y, radius * 2.2, 0, 2 * Math.PI);
  ctx.strokeStyle = color;
  ctx.lineWidth = Math.max(1.5, radius / 2);
  ctx.stroke();
}

/** Draw both markers in view coordinates (dot plus halo ring each). */
export function drawMarkers(ctx: Ctx2D, p1: Point, p2: Point, radius = 5): void {
  drawOne(ctx, p1, MARKER_COLORS.p1, radius);
  drawOne(ctx, p2, MARKER_COLORS.p2, radius);
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** Source rectangle (image coordinates) for a zoom lens centered on a
 * point, clamped to stay inside the image. */
export function lensSourceRect(
  point: Point,
  radius: number,
  imageW: number,
  imageH: number,
): Rect {
  const size = 2 * radius;
  const x = Math.min(Math.max(point.x - radius, 0), Math.max(imageW - size, 0));
  const y = Math.min(Math.max(point.y - radius, 0), Math.max(imageH - size, 0));
  return { x, y, w: Math.min(size, imageW), h: Math.min(size, imageH) };
}

/** Pick which marker (if any) the cursor is hovering near. */
export function hoveredMarker(
  cursor: Point,
  p1: Point,
  p2: Point,
  hitRadius = 40,
): 'p1' | 'p2' | null {
  const d1 = Math.hypot(cursor.x - p1.x, cursor.y - p1.y);
  const d2 = Math.hypot(cursor.x - p2.x, cursor.y - p2.y);
  if (Math.min(d1, d2) > hitRadius) return null;
  return d1 <= d2 ? 'p1' : 'p2';
}
