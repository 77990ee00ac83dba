// Simulation workbench: pick twins x traffic models, set SLO and storage
// knobs, run the cross product, and compare the runs side by side. Every
// cell in the comparison table is copied verbatim from the API's summary
// endpoint for that run.

import { ApiClient, ApiError } from "./api.js";
import { PALETTE, drawLineChart, legend } from "./charts.js";
import { fixed, money, parseNumeric, seconds, sloBadge } from "./format.js";
import type { SimulationConfigBody, SimulationSummary } from "./models.js";

export interface RunPlan {
  simName: string;
  twin: string;
  traffic: string;
}

export interface ComparisonRow {
  run: string;
  summary: SimulationSummary;
}

export class WorkbenchState {
  twins: string[] = [];
  traffics: string[] = [];
  selectedTwins = new Set<string>();
  selectedTraffics = new Set<string>();
  sloLimitS = 14400;
  sloMaxViolation = 0.05;
  storageAware = false;
  recordSizeMb = 0.00068;
  netCostPerMb = 0.02;
  storageCostPerGbDay = 1.0;
  retentionDays = 90;

  planRuns(): RunPlan[] {
    const plans: RunPlan[] = [];
    for (const twin of this.twins.filter((t) => this.selectedTwins.has(t))) {
      for (const traffic of this.traffics.filter((t) => this.selectedTraffics.has(t))) {
        plans.push({ simName: `wb-${twin}-${traffic}`, twin, traffic });
      }
    }
    return plans;
  }

  config(plan: RunPlan): SimulationConfigBody {
    const config: SimulationConfigBody = {
      twin: { kind: "twin", name: plan.twin },
      traffic: { kind: "traffic", name: plan.traffic },
      slos: [{
        metric: "latency",
        limit_s: this.sloLimitS,
        max_violation_fraction: this.sloMaxViolation,
      }],
      storage_aware: this.storageAware,
    };
    if (this.storageAware) {
      config.record_size_mb = this.recordSizeMb;
      config.net_cost_minor_per_mb = this.netCostPerMb;
      config.storage_cost_minor_per_gb_day = this.storageCostPerGbDay;
      config.retention_days = this.retentionDays;
    }
    return config;
  }
}

export const COMPARISON_COLUMNS = [
  "run", "cost", "latency median", "latency mean", "backlog",
  "thruput mean (rec/h)", "thruput max (rec/h)", "% latency met", "SLO",
] as const;

/** Formatted cells for one run; values come straight from the summary. */
export function comparisonCells(row: ComparisonRow): string[] {
  const s = row.summary;
  return [
    row.run,
    money(s.total_cost_minor),
    seconds(s.median_latency_s),
    seconds(s.mean_latency_s),
    seconds(s.backlog_latency_s),
    fixed(s.mean_thruput_rec_h),
    fixed(s.max_thruput_rec_h),
    fixed(s.pct_latency_met),
    s.slo_met ? "True" : "False",
  ];
}

export class WorkbenchView {
  readonly state = new WorkbenchState();
  private status!: HTMLElement;
  private table!: HTMLElement;
  private canvas!: HTMLCanvasElement;
  private legendBox!: HTMLElement;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  async render(): Promise<void> {
    this.root.innerHTML = `
      <div class="workbench-pickers">
        <fieldset><legend>twins</legend><div id="wb-twins"></div></fieldset>
        <fieldset><legend>traffic models</legend><div id="wb-traffics"></div></fieldset>
        <fieldset><legend>SLO &amp; storage</legend>
          <label>latency limit (s) <input id="wb-slo-limit" value="14400"></label>
          <label>max violation fraction <input id="wb-slo-frac" value="0.05"></label>
          <label><input type="checkbox" id="wb-storage"> storage-aware</label>
          <label>record size (MB) <input id="wb-size" value="0.00068"></label>
          <label>net cost /MB (minor) <input id="wb-net" value="0.02"></label>
          <label>storage /GB/day (minor) <input id="wb-st" value="1.0"></label>
          <label>retention (days) <input id="wb-ret" value="90"></label>
        </fieldset>
      </div>
      <button id="wb-run">run selected</button>
      <span id="wb-status" class="status"></span>
      <div id="wb-table"></div>
      <canvas id="wb-canvas" width="920" height="260"></canvas>
      <div id="wb-legend" class="legend"></div>
    `;
    this.status = this.root.querySelector("#wb-status")!;
    this.table = this.root.querySelector("#wb-table")!;
    this.canvas = this.root.querySelector("#wb-canvas") as HTMLCanvasElement;
    this.legendBox = this.root.querySelector("#wb-legend")!;
    this.root.querySelector("#wb-run")!.addEventListener("click", () => this.run());
    this.bindSettings();
    await this.reloadChoices();
  }

  private bindSettings(): void {
    const bind = (selector: string, apply: (v: number) => void, min = 0) => {
      const input = this.root.querySelector(selector) as HTMLInputElement;
      input.addEventListener("input", () => {
        const parsed = parseNumeric(input.value, { min, label: selector });
        input.classList.toggle("invalid", parsed.error !== undefined);
        if (parsed.value !== undefined) apply(parsed.value);
      });
    };
    bind("#wb-slo-limit", (v) => (this.state.sloLimitS = v));
    bind("#wb-slo-frac", (v) => (this.state.sloMaxViolation = v));
    bind("#wb-size", (v) => (this.state.recordSizeMb = v));
    bind("#wb-net", (v) => (this.state.netCostPerMb = v));
    bind("#wb-st", (v) => (this.state.storageCostPerGbDay = v));
    bind("#wb-ret", (v) => (this.state.retentionDays = Math.round(v)));
    const storage = this.root.querySelector("#wb-storage") as HTMLInputElement;
    storage.addEventListener("change", () => (this.state.storageAware = storage.checked));
  }

  async reloadChoices(): Promise<void> {
    const [twins, traffics] = await Promise.all([
      this.api.listEntities("twins"),
      this.api.listEntities("traffic"),
    ]);
    this.state.twins = twins.items.map((item) => String(item.name));
    this.state.traffics = traffics.items.map((item) => String(item.name));
    this.renderChecklist("#wb-twins", this.state.twins, this.state.selectedTwins);
    this.renderChecklist("#wb-traffics", this.state.traffics, this.state.selectedTraffics);
  }

  private renderChecklist(selector: string, names: string[], selected: Set<string>): void {
    const box = this.root.querySelector(selector)!;
    box.innerHTML = names.length ? "" : "<em>none yet</em>";
    for (const name of names) {
      const label = document.createElement("label");
      label.className = "check-item";
      const input = document.createElement("input");
      input.type = "checkbox";
      input.addEventListener("change", () => {
        if (input.checked) selected.add(name);
        else selected.delete(name);
      });
      label.append(input, document.createTextNode(name));
      box.append(label);
    }
  }

  async run(): Promise<ComparisonRow[]> {
    const plans = this.state.planRuns();
    if (!plans.length) {
      this.status.textContent = "select at least one twin and one traffic model";
      return [];
    }
    const rows: ComparisonRow[] = [];
    const failures: string[] = [];
    for (const plan of plans) {
      this.status.textContent = `simulating ${plan.simName}…`;
      try {
        await this.api.runSimulation(plan.simName, this.state.config(plan));
        const { summary } = await this.api.simulationSummary(plan.simName);
        rows.push({ run: plan.simName, summary });
      } catch (err) {
        failures.push(`${plan.simName}: ${err instanceof ApiError ? err.message : err}`);
      }
    }
    this.status.textContent = failures.length ? failures.join("; ") : `${rows.length} runs`;
    this.renderTable(rows);
    await this.renderOverlay(rows);
    return rows;
  }

  private renderTable(rows: ComparisonRow[]): void {
    const table = document.createElement("table");
    const head = table.insertRow();
    for (const column of COMPARISON_COLUMNS) {
      const th = document.createElement("th");
      th.textContent = column;
      head.append(th);
    }
    for (const row of rows) {
      const tr = table.insertRow();
      const cells = comparisonCells(row);
      cells.forEach((cell, i) => {
        const td = tr.insertCell();
        if (i === cells.length - 1) {
          const badge = sloBadge(row.summary.slo_met);
          const span = document.createElement("span");
          span.className = badge.cls;
          span.textContent = badge.text;
          td.append(span);
        } else {
          td.textContent = cell;
        }
      });
    }
    this.table.innerHTML = "";
    this.table.append(table);
  }

  private async renderOverlay(rows: ComparisonRow[]): Promise<void> {
    const series = [];
    let colorIndex = 0;
    for (const row of rows.slice(0, 3)) {
      try {
        const { hourly } = await this.api.simulationHourly(row.run);
        series.push({
          label: `${row.run} load`,
          color: PALETTE[colorIndex % PALETTE.length],
          values: hourly.arrivals,
        });
        series.push({
          label: `${row.run} queue`,
          color: PALETTE[(colorIndex + 1) % PALETTE.length],
          values: hourly.queue_end,
        });
        colorIndex += 2;
      } catch {
        // overlay is best-effort; the table is the contract
      }
    }
    if (series.length) {
      drawLineChart(this.canvas, series, { xLabel: "hour of year", maxPoints: 2000 });
      legend(this.legendBox, series);
    }
  }
}
