// Typed client for the windtunnel API. The studio performs no domain
// computation: everything it displays came through one of these calls.

import type {
  EntityRef,
  ExperimentStatus,
  MonthlyRow,
  SimulationConfigBody,
  SimulationHourly,
  SimulationSummary,
  StageSeries,
  TrafficModelBody,
} from "./models.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public field?: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "unreachable", `API unreachable: ${err}`);
    }
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const error = payload?.error ?? {};
      throw new ApiError(
        response.status,
        error.code ?? "error",
        error.message ?? `API error ${response.status}`,
        error.field,
      );
    }
    return payload as T;
  }

  // -- entities --------------------------------------------------------

  listEntities(kind: string): Promise<{ items: Record<string, unknown>[] }> {
    return this.request("GET", `/api/${kind}`);
  }

  getEntity<T = Record<string, unknown>>(
    kind: string,
    name: string,
  ): Promise<{ name: string; body: T }> {
    return this.request("GET", `/api/${kind}/${encodeURIComponent(name)}`);
  }

  putEntity(kind: string, name: string, body: unknown): Promise<{ ref: EntityRef }> {
    return this.request("PUT", `/api/${kind}/${encodeURIComponent(name)}`, body);
  }

  // -- experiments ------------------------------------------------------

  listExperiments(): Promise<{ items: { name: string; version: number; state: string }[] }> {
    return this.request("GET", "/api/experiments");
  }

  experimentStatus(name: string): Promise<ExperimentStatus> {
    return this.request("GET", `/api/experiments/${encodeURIComponent(name)}/status`);
  }

  experimentSeries(
    name: string,
    bucket = 5,
  ): Promise<{ name: string; series: Record<string, StageSeries> }> {
    return this.request(
      "GET",
      `/api/experiments/${encodeURIComponent(name)}/series?bucket=${bucket}`,
    );
  }

  startExperiment(name: string, queue = false): Promise<{ state: string }> {
    const suffix = queue ? "?queue=true" : "";
    return this.request("POST", `/api/experiments/${encodeURIComponent(name)}/start${suffix}`);
  }

  // -- traffic ------------------------------------------------------------

  previewTraffic(body: TrafficModelBody): Promise<{ loads: number[] }> {
    return this.request("POST", "/api/traffic/preview", body);
  }

  previewStoredTraffic(name: string): Promise<{ loads: number[] }> {
    return this.request("GET", `/api/traffic/${encodeURIComponent(name)}/preview`);
  }

  // -- simulations -----------------------------------------------------------

  runSimulation(
    name: string,
    config: SimulationConfigBody,
  ): Promise<{ name: string; summary: SimulationSummary; monthly: MonthlyRow[] }> {
    return this.request("POST", "/api/simulations", { name, config });
  }

  simulationSummary(name: string): Promise<{ name: string; summary: SimulationSummary }> {
    return this.request("GET", `/api/simulations/${encodeURIComponent(name)}/summary`);
  }

  simulationMonthly(name: string): Promise<{ name: string; monthly: MonthlyRow[] }> {
    return this.request("GET", `/api/simulations/${encodeURIComponent(name)}/monthly`);
  }

  simulationHourly(name: string): Promise<{ name: string; hourly: SimulationHourly }> {
    return this.request("GET", `/api/simulations/${encodeURIComponent(name)}/hourly`);
  }

  health(): Promise<{ ok: boolean }> {
    return this.request("GET", "/healthz");
  }
}
