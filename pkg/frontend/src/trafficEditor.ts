// Traffic-model editor: R, growth, 12 monthly factors and the 168-cell
// hour-of-week grid, edited as a heatmap with click-drag fill. The 8760-h
// preview is always fetched from the API; the studio never evaluates the
// projection formula itself.

import { ApiClient, ApiError } from "./api.js";
import { PALETTE, drawLineChart, heatColor } from "./charts.js";
import { parseNumeric } from "./format.js";
import type { TrafficModelBody } from "./models.js";

export const DOW_NAMES = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
export const MONTH_NAMES = ["Jan", "Feb", "Mar", "Apr", "May", "Jun",
  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

export class TrafficEditorState {
  rRps = 3.5;
  growth = 0.0;
  monthly: number[] = Array(12).fill(1.0);
  hourly: number[] = Array(168).fill(1.0);
  errors = new Map<string, string>();

  setScalar(field: "rRps" | "growth", raw: string): void {
    const min = field === "rRps" ? 0 : -1;
    const label = field === "rRps" ? "start rate" : "growth";
    const parsed = parseNumeric(raw, { min, label });
    if (parsed.error) {
      this.errors.set(field, parsed.error);
      return;
    }
    this.errors.delete(field);
    this[field] = parsed.value!;
  }

  setMonthly(month: number, raw: string): void {
    const key = `monthly-${month}`;
    const parsed = parseNumeric(raw, { min: 0, label: MONTH_NAMES[month] });
    if (parsed.error) {
      this.errors.set(key, parsed.error);
      return;
    }
    this.errors.delete(key);
    this.monthly[month] = parsed.value!;
  }

  cellIndex(dow: number, hour: number): number {
    return dow * 24 + hour;
  }

  setCell(dow: number, hour: number, value: number): void {
    if (Number.isFinite(value) && value >= 0) {
      this.hourly[this.cellIndex(dow, hour)] = value;
    }
  }

  valid(): boolean {
    return this.errors.size === 0;
  }

  body(): TrafficModelBody {
    return {
      r_rps: this.rRps,
      growth: this.growth,
      monthly: [...this.monthly],
      hourly: [...this.hourly],
    };
  }

  loadBody(body: TrafficModelBody): void {
    this.rRps = body.r_rps;
    this.growth = body.growth;
    this.monthly = [...body.monthly];
    this.hourly = [...body.hourly];
    this.errors.clear();
  }
}

export class TrafficEditorView {
  readonly state = new TrafficEditorState();
  private brush = 1.0;
  private painting = false;
  private status!: HTMLElement;
  private grid!: HTMLElement;
  private canvas!: HTMLCanvasElement;
  private nameInput!: HTMLInputElement;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  render(): void {
    this.root.innerHTML = `
      <div class="editor-controls">
        <label>model name <input id="tr-name" value="my-traffic"></label>
        <label>start rate R (rec/s) <input id="tr-r" value="3.5"></label>
        <label>annual growth G (0 = flat, 0.5 = +50%) <input id="tr-g" value="0"></label>
        <label>brush value <input id="tr-brush" value="1.0"></label>
        <button id="tr-preview">preview</button>
        <button id="tr-save">save</button>
        <span id="tr-status" class="status"></span>
      </div>
      <div class="editor-monthly" id="tr-monthly"></div>
      <p class="hint">hour-of-week grid: click or drag to paint cells with the brush value</p>
      <div class="heatmap" id="tr-grid"></div>
      <canvas id="tr-canvas" width="920" height="240"></canvas>
      <div id="tr-legend" class="legend"></div>
    `;
    this.status = this.root.querySelector("#tr-status")!;
    this.grid = this.root.querySelector("#tr-grid")!;
    this.canvas = this.root.querySelector("#tr-canvas") as HTMLCanvasElement;
    this.nameInput = this.root.querySelector("#tr-name") as HTMLInputElement;

    this.bindScalar("#tr-r", "rRps");
    this.bindScalar("#tr-g", "growth");
    const brushInput = this.root.querySelector("#tr-brush") as HTMLInputElement;
    brushInput.addEventListener("input", () => {
      const parsed = parseNumeric(brushInput.value, { min: 0, label: "brush" });
      if (parsed.value !== undefined) this.brush = parsed.value;
      brushInput.classList.toggle("invalid", parsed.error !== undefined);
    });
    this.root.querySelector("#tr-preview")!.addEventListener("click", () => this.preview());
    this.root.querySelector("#tr-save")!.addEventListener("click", () => this.save());
    document.addEventListener("mouseup", () => (this.painting = false));

    this.renderMonthly();
    this.renderGrid();
  }

  private bindScalar(selector: string, field: "rRps" | "growth"): void {
    const input = this.root.querySelector(selector) as HTMLInputElement;
    input.addEventListener("input", () => {
      this.state.setScalar(field, input.value);
      input.classList.toggle("invalid", this.state.errors.has(field));
      this.showErrors();
    });
  }

  private renderMonthly(): void {
    const container = this.root.querySelector("#tr-monthly")!;
    container.innerHTML = "";
    this.state.monthly.forEach((value, month) => {
      const label = document.createElement("label");
      label.textContent = MONTH_NAMES[month] + " ";
      const input = document.createElement("input");
      input.value = String(value);
      input.addEventListener("input", () => {
        this.state.setMonthly(month, input.value);
        input.classList.toggle("invalid", this.state.errors.has(`monthly-${month}`));
        this.showErrors();
      });
      label.append(input);
      container.append(label);
    });
  }

  private renderGrid(): void {
    this.grid.innerHTML = "";
    const max = Math.max(...this.state.hourly, 0.001);
    const corner = document.createElement("div");
    corner.className = "heat-label";
    this.grid.append(corner);
    for (let hour = 0; hour < 24; hour++) {
      const head = document.createElement("div");
      head.className = "heat-label";
      head.textContent = hour % 3 === 0 ? String(hour) : "";
      this.grid.append(head);
    }
    for (let dow = 0; dow < 7; dow++) {
      const rowLabel = document.createElement("div");
      rowLabel.className = "heat-label";
      rowLabel.textContent = DOW_NAMES[dow];
      this.grid.append(rowLabel);
      for (let hour = 0; hour < 24; hour++) {
        const cell = document.createElement("div");
        cell.className = "heat-cell";
        const value = this.state.hourly[this.state.cellIndex(dow, hour)];
        cell.style.background = heatColor(value, max);
        cell.title = `${DOW_NAMES[dow]} ${hour}:00 = ${value}`;
        const paint = () => {
          this.state.setCell(dow, hour, this.brush);
          this.renderGrid();
        };
        cell.addEventListener("mousedown", (ev) => {
          ev.preventDefault();
          this.painting = true;
          paint();
        });
        cell.addEventListener("mouseover", () => {
          if (this.painting) paint();
        });
        this.grid.append(cell);
      }
    }
  }

  private async preview(): Promise<void> {
    if (!this.state.valid()) {
      this.status.textContent = "fix invalid fields first";
      return;
    }
    this.status.textContent = "projecting…";
    try {
      const { loads } = await this.api.previewTraffic(this.state.body());
      drawLineChart(this.canvas, [{ label: "load (rec/s)", color: PALETTE[0], values: loads }],
        { xLabel: "hour of year", maxPoints: 2000 });
      this.status.textContent = `8760 hourly values (from API)`;
    } catch (err) {
      this.status.textContent = err instanceof ApiError ? err.message : String(err);
    }
  }

  private async save(): Promise<void> {
    if (!this.state.valid()) {
      this.status.textContent = "fix invalid fields first";
      return;
    }
    try {
      const { ref } = await this.api.putEntity("traffic", this.nameInput.value, this.state.body());
      this.status.textContent = `saved ${ref.name} v${ref.version}`;
    } catch (err) {
      this.status.textContent = err instanceof ApiError ? err.message : String(err);
    }
  }

  private showErrors(): void {
    const first = this.state.errors.values().next();
    this.status.textContent = first.done ? "" : first.value;
  }
}
