// Small canvas line charts; no chart library, no data transformation
// beyond pixel mapping.

export interface Series {
  label: string;
  color: string;
  values: number[];
}

const MARGIN = { top: 10, right: 10, bottom: 22, left: 52 };

export function drawLineChart(
  canvas: HTMLCanvasElement,
  series: Series[],
  opts: { xLabel?: string; maxPoints?: number } = {},
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const width = canvas.width;
  const height = canvas.height;
  ctx.clearRect(0, 0, width, height);
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const longest = Math.max(1, ...series.map((s) => s.values.length));
  const stride = opts.maxPoints ? Math.max(1, Math.floor(longest / opts.maxPoints)) : 1;
  let yMax = 0;
  for (const s of series) {
    for (let i = 0; i < s.values.length; i += stride) {
      if (s.values[i] > yMax) yMax = s.values[i];
    }
  }
  if (yMax <= 0) yMax = 1;

  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(MARGIN.left, MARGIN.top, plotW, plotH);
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "right";
  for (const frac of [0, 0.5, 1]) {
    const y = MARGIN.top + plotH * (1 - frac);
    ctx.fillText((yMax * frac).toPrecision(3), MARGIN.left - 4, y + 4);
  }
  ctx.textAlign = "center";
  if (opts.xLabel) ctx.fillText(opts.xLabel, MARGIN.left + plotW / 2, height - 6);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.2;
    ctx.beginPath();
    const n = s.values.length;
    for (let i = 0; i < n; i += stride) {
      const x = MARGIN.left + (plotW * i) / Math.max(1, longest - 1);
      const y = MARGIN.top + plotH * (1 - s.values[i] / yMax);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }
}

export function legend(container: HTMLElement, series: Series[]): void {
  container.innerHTML = "";
  for (const s of series) {
    const item = document.createElement("span");
    item.className = "legend-item";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.background = s.color;
    item.append(swatch, document.createTextNode(s.label));
    container.append(item);
  }
}

export const PALETTE = ["#2867b2", "#d97a27", "#2b8a3e", "#b02a2a", "#6a4fb3", "#737373"];

/** Blue->red ramp for the hour-of-week heatmap, scaled to the data max. */
export function heatColor(value: number, max: number): string {
  if (max <= 0) return "#f0f0f0";
  const t = Math.min(value / max, 1);
  const r = Math.round(235 * t + 18 * (1 - t));
  const g = Math.round(80 * t + 90 * (1 - t));
  const b = Math.round(60 * t + 178 * (1 - t));
  return `rgb(${r},${g},${b})`;
}
