// Experiment dashboard: the list of runs with live state badges, and a
// detail panel with per-stage throughput/latency charts, polling the API
// once a second while anything is active.

import { ApiClient } from "./api.js";
import { PALETTE, drawLineChart, legend } from "./charts.js";
import { fixed, money, seconds, stateBadgeClass } from "./format.js";
import type { ExperimentStatus, StageSeries } from "./models.js";

const POLL_MS = 1000;

export class DashboardView {
  private listBox!: HTMLElement;
  private detailBox!: HTMLElement;
  private banner!: HTMLElement;
  private selected: string | null = null;
  private timer: number | null = null;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  render(): void {
    this.root.innerHTML = `
      <div id="db-banner" class="banner hidden">
        API unreachable <button id="db-retry">retry</button>
      </div>
      <div id="db-list"></div>
      <div id="db-detail"></div>
    `;
    this.listBox = this.root.querySelector("#db-list")!;
    this.detailBox = this.root.querySelector("#db-detail")!;
    this.banner = this.root.querySelector("#db-banner")!;
    this.root.querySelector("#db-retry")!.addEventListener("click", () => this.tick());
    this.start();
  }

  start(): void {
    this.stop();
    this.tick();
    this.timer = window.setInterval(() => this.tick(), POLL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async tick(): Promise<void> {
    try {
      const { items } = await this.api.listExperiments();
      this.banner.classList.add("hidden");
      this.renderList(items);
      if (this.selected) await this.renderDetail(this.selected);
    } catch {
      this.banner.classList.remove("hidden");
    }
  }

  private renderList(items: { name: string; state: string }[]): void {
    const table = document.createElement("table");
    const head = table.insertRow();
    for (const column of ["experiment", "state", ""]) {
      const th = document.createElement("th");
      th.textContent = column;
      head.append(th);
    }
    for (const item of items) {
      const row = table.insertRow();
      row.insertCell().textContent = item.name;
      const badge = document.createElement("span");
      badge.className = stateBadgeClass(item.state);
      badge.textContent = item.state;
      row.insertCell().append(badge);
      const link = document.createElement("a");
      link.href = "#";
      link.textContent = "charts";
      link.addEventListener("click", (ev) => {
        ev.preventDefault();
        this.selected = item.name;
        this.renderDetail(item.name);
      });
      row.insertCell().append(link);
    }
    this.listBox.innerHTML = items.length ? "" : "<em>no experiments yet</em>";
    if (items.length) this.listBox.append(table);
  }

  private async renderDetail(name: string): Promise<void> {
    const status = await this.api.experimentStatus(name);
    let detail = this.detailBox.querySelector("#db-detail-inner");
    if (!detail || this.detailBox.dataset.name !== name) {
      this.detailBox.dataset.name = name;
      this.detailBox.innerHTML = `
        <div id="db-detail-inner">
          <h3></h3>
          <p id="db-progress"></p>
          <p id="db-summary"></p>
          <h4>load fed into the pipeline (records/s at ingest)</h4>
          <canvas id="db-load" width="920" height="160"></canvas>
          <h4>per-stage throughput (items/s)</h4>
          <canvas id="db-thru" width="920" height="200"></canvas>
          <h4>per-stage latency (mean s)</h4>
          <canvas id="db-lat" width="920" height="200"></canvas>
          <div id="db-legend" class="legend"></div>
        </div>`;
      detail = this.detailBox.querySelector("#db-detail-inner")!;
    }
    this.detailBox.querySelector("h3")!.textContent = name;
    this.detailBox.querySelector("#db-progress")!.textContent = this.progressLine(status);
    this.detailBox.querySelector("#db-summary")!.textContent = this.summaryLine(status);

    const { series } = await this.api.experimentSeries(name);
    const stages = Object.keys(series);
    const thruSeries = stages.map((stage, i) => ({
      label: stage,
      color: PALETTE[i % PALETTE.length],
      values: series[stage].buckets.map((b) => b.rate_rps),
    }));
    const latSeries = stages.map((stage, i) => ({
      label: stage,
      color: PALETTE[i % PALETTE.length],
      values: series[stage].buckets.map((b) => b.latency_mean_s),
    }));
    if (stages.length) {
      // the first stage's span rate is the load actually arriving at ingest
      drawLineChart(this.detailBox.querySelector("#db-load") as HTMLCanvasElement,
        [{ ...thruSeries[0], label: "ingest load" }], { xLabel: "seconds (5 s buckets)" });
    }
    drawLineChart(this.detailBox.querySelector("#db-thru") as HTMLCanvasElement,
      thruSeries, { xLabel: "seconds (5 s buckets)" });
    drawLineChart(this.detailBox.querySelector("#db-lat") as HTMLCanvasElement,
      latSeries, { xLabel: "seconds (5 s buckets)" });
    legend(this.detailBox.querySelector("#db-legend")!, thruSeries);
  }

  private progressLine(status: ExperimentStatus): string {
    if (status.state === "Running" && status.planned) {
      return `sending: ${status.sent ?? 0} / ${status.planned} records`;
    }
    if (status.state === "Draining") return "sending finished; pipeline draining";
    if (status.state === "Failed") return `failed: ${status.error}`;
    return status.state;
  }

  private summaryLine(status: ExperimentStatus): string {
    const result = status.result;
    if (!result) return "";
    return `sent ${result.records_sent} in ${seconds(result.duration_s)} — ` +
      `throughput ${fixed(result.mean_throughput_rps)} rec/s, ` +
      `latency mean ${seconds(result.mean_latency_s)} / ` +
      `median ${seconds(result.median_latency_s)}, ` +
      `cost ${money(result.total_cost_minor)} (${money(result.cost_rate_minor_per_hr)}/h)`;
  }
}
