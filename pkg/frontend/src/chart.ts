/** SVG chart of the TP/FP sweep with a draggable theta cursor.
 *
 * Rendering is plain string-built SVG regenerated on each draw; with 101
 * sweep points that is far cheaper than worth optimizing.
 */
import type { SweepPoint } from "./api.js";

const W = 640;
const H = 240;
const PAD = 36;

export interface ChartCallbacks {
  onThetaDrag(theta: number): void;
  onThetaCommit(theta: number): void;
}

function xScale(theta: number, lo: number, hi: number): number {
  if (hi === lo) {
    return PAD;
  }
  return PAD + ((theta - lo) / (hi - lo)) * (W - 2 * PAD);
}

function polyline(
  points: SweepPoint[],
  pick: (p: SweepPoint) => number,
  lo: number,
  hi: number,
  maxY: number,
): string {
  const coords = points
    .map((p) => {
      const x = xScale(p.theta, lo, hi);
      const y = H - PAD - (pick(p) / maxY) * (H - 2 * PAD);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return coords;
}

export class SweepChart {
  private points: SweepPoint[] = [];
  private theta = 0.97;
  private dragging = false;

  constructor(
    private readonly host: HTMLElement,
    private readonly callbacks: ChartCallbacks,
  ) {
    host.addEventListener("pointerdown", (ev) => this.onPointer(ev, true));
    host.addEventListener("pointermove", (ev) => this.onPointer(ev, false));
    window.addEventListener("pointerup", () => {
      if (this.dragging) {
        this.dragging = false;
        this.callbacks.onThetaCommit(this.theta);
      }
    });
  }

  update(points: SweepPoint[], theta: number): void {
    this.points = points;
    this.theta = theta;
    this.render();
  }

  private domain(): [number, number] {
    if (this.points.length === 0) {
      return [0.9, 1.0];
    }
    return [this.points[0].theta, this.points[this.points.length - 1].theta];
  }

  private onPointer(ev: PointerEvent, start: boolean): void {
    if (start) {
      this.dragging = true;
    }
    if (!this.dragging) {
      return;
    }
    const rect = this.host.getBoundingClientRect();
    const frac = (ev.clientX - rect.left) / rect.width;
    const [lo, hi] = this.domain();
    const theta = Math.min(hi, Math.max(lo, lo + frac * (hi - lo)));
    this.theta = theta;
    this.render();
    this.callbacks.onThetaDrag(theta);
  }

  private render(): void {
    const [lo, hi] = this.domain();
    const cursorX = xScale(this.theta, lo, hi);
    let body = "";
    if (this.points.length > 0) {
      const maxY = Math.max(
        1,
        ...this.points.map((p) => Math.max(p.tp, p.fp)),
      );
      body += `<polyline class="tp" fill="none" points="${polyline(this.points, (p) => p.tp, lo, hi, maxY)}"/>`;
      body += `<polyline class="fp" fill="none" points="${polyline(this.points, (p) => p.fp, lo, hi, maxY)}"/>`;
    } else {
      body += `<text x="${W / 2}" y="${H / 2}" text-anchor="middle" class="empty">no timestamps: sweep unavailable</text>`;
    }
    body += `<line class="cursor" x1="${cursorX}" y1="${PAD / 2}" x2="${cursorX}" y2="${H - PAD}"/>`;
    body += `<text x="${cursorX}" y="${PAD / 2 - 4}" text-anchor="middle" class="cursor-label">θ=${this.theta.toFixed(3)}</text>`;
    body += `<text x="${PAD}" y="${H - 8}" class="axis">${lo.toFixed(2)}</text>`;
    body += `<text x="${W - PAD}" y="${H - 8}" text-anchor="end" class="axis">${hi.toFixed(2)}</text>`;
    this.host.innerHTML = `<svg viewBox="0 0 ${W} ${H}" width="100%">${body}</svg>`;
  }
}
