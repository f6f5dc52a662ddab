// Canvas chart for the certified-discoveries curve: x = k (take the k
// smallest p-values), y = sbar(top-k) as returned by the service. The
// geometry mapping is a pure function so it can be unit-tested without a
// canvas context.

export interface ChartGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = {
  width: 460,
  height: 260,
  padLeft: 44,
  padRight: 12,
  padTop: 10,
  padBottom: 30,
};

export interface Point {
  x: number;
  y: number;
}

// curve[i] = sbar for k = i + 1; y axis runs 0..yMax (yMax at least 1 so a
// flat-zero curve still has a drawable frame)
export function curvePoints(curve: number[], geo: ChartGeometry): Point[] {
  const n = curve.length;
  if (n === 0) return [];
  const innerW = geo.width - geo.padLeft - geo.padRight;
  const innerH = geo.height - geo.padTop - geo.padBottom;
  const yMax = Math.max(1, ...curve);
  const xFor = (k: number) =>
    geo.padLeft + (n === 1 ? innerW / 2 : ((k - 1) / (n - 1)) * innerW);
  return curve.map((sbar, i) => ({
    x: xFor(i + 1),
    y: geo.padTop + innerH * (1 - sbar / yMax),
  }));
}

export function yAxisTicks(curve: number[], maxTicks = 5): number[] {
  const yMax = Math.max(1, ...curve);
  const step = Math.max(1, Math.ceil(yMax / maxTicks));
  const ticks: number[] = [];
  for (let v = 0; v <= yMax; v += step) ticks.push(v);
  return ticks;
}

export class CurveChart {
  private geo: ChartGeometry;

  constructor(private canvas: HTMLCanvasElement, geo: ChartGeometry = DEFAULT_GEOMETRY) {
    this.geo = geo;
    canvas.width = geo.width;
    canvas.height = geo.height;
  }

  // highlightK: 1-based k to mark (the current selection size), if any
  draw(curve: number[], highlightK: number | null = null): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return; // jsdom etc: geometry functions stay testable
    const { width, height, padLeft, padBottom } = this.geo;
    ctx.clearRect(0, 0, width, height);

    // frame
    ctx.strokeStyle = "#889";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(padLeft, this.geo.padTop);
    ctx.lineTo(padLeft, height - padBottom);
    ctx.lineTo(width - this.geo.padRight, height - padBottom);
    ctx.stroke();

    if (curve.length === 0) {
      ctx.fillStyle = "#667";
      ctx.fillText("no curve yet", padLeft + 16, height / 2);
      return;
    }

    const pts = curvePoints(curve, this.geo);

    // y ticks
    ctx.fillStyle = "#667";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "right";
    const yMax = Math.max(1, ...curve);
    const innerH = height - this.geo.padTop - padBottom;
    for (const v of yAxisTicks(curve)) {
      const y = this.geo.padTop + innerH * (1 - v / yMax);
      ctx.fillText(String(v), padLeft - 6, y + 4);
      ctx.strokeStyle = "#dde";
      ctx.beginPath();
      ctx.moveTo(padLeft, y);
      ctx.lineTo(width - this.geo.padRight, y);
      ctx.stroke();
    }

    // x labels: 1, middle, n
    ctx.textAlign = "center";
    const n = curve.length;
    const labelKs = n === 1 ? [1] : [1, Math.round(n / 2), n];
    for (const k of labelKs) {
      const pt = pts[k - 1]!;
      ctx.fillText(String(k), pt.x, height - padBottom + 16);
    }
    ctx.fillText("k smallest p-values", (padLeft + width - this.geo.padRight) / 2,
                 height - 6);

    // the curve itself (step-ish polyline)
    ctx.strokeStyle = "#2a6";
    ctx.lineWidth = 2;
    ctx.beginPath();
    pts.forEach((pt, i) => (i === 0 ? ctx.moveTo(pt.x, pt.y) : ctx.lineTo(pt.x, pt.y)));
    ctx.stroke();

    if (highlightK !== null && highlightK >= 1 && highlightK <= n) {
      const pt = pts[highlightK - 1]!;
      ctx.fillStyle = "#d33";
      ctx.beginPath();
      ctx.arc(pt.x, pt.y, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
