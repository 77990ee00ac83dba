// Types mirroring the API's wire schemas (docs/api.md in the repo root).

export interface EntityRef {
  kind: string;
  name: string;
  version?: number;
}

export interface ExperimentListItem {
  name: string;
  version: number;
  state: string;
}

export interface ExperimentResult {
  records_sent: number;
  duration_s: number;
  mean_throughput_rps: number;
  mean_latency_s: number;
  median_latency_s: number;
  total_cost_minor: number;
  cost_rate_minor_per_hr: number;
  unjoined_records: number;
}

export interface ExperimentStatus {
  name: string;
  state: string;
  error: string | null;
  started_at: number | null;
  result: ExperimentResult | null;
  stages: string[];
  span_count: number;
  sent?: number;
  planned?: number;
}

export interface MetricBucket {
  t0: number;
  count: number;
  rate_rps: number;
  latency_mean_s: number;
  latency_p50_s: number;
  latency_p95_s: number;
}

export interface StageSeries {
  stage: string;
  bucket_width_s: number;
  buckets: MetricBucket[];
}

export interface TrafficModelBody {
  r_rps: number;
  growth: number;
  monthly: number[];
  hourly: number[];
}

export interface SloBody {
  metric: "latency" | "error-rate";
  limit_s: number;
  max_violation_fraction: number;
}

export interface SimulationConfigBody {
  twin: EntityRef;
  traffic: EntityRef;
  slos: SloBody[];
  record_size_mb?: number;
  net_cost_minor_per_mb?: number;
  storage_cost_minor_per_gb_day?: number;
  retention_days?: number;
  storage_aware?: boolean;
}

export interface SimulationSummary {
  total_cost_minor: number;
  cloud_cost_minor: number;
  net_cost_minor: number;
  storage_cost_minor: number;
  median_latency_s: number;
  mean_latency_s: number;
  backlog_latency_s: number;
  backlog_cost_minor: number;
  mean_thruput_rec_h: number;
  max_thruput_rec_h: number;
  pct_latency_met: number;
  slo_met: boolean;
  queue_end_of_year: number;
}

export interface MonthlyRow {
  month: number;
  cloud_minor: number;
  net_minor: number;
  storage_minor: number;
  total_minor: number;
}

export interface SimulationHourly {
  hour: number[];
  arrivals: number[];
  processed: number[];
  queue_end: number[];
  latency_s: number[];
  cost_minor: number[];
  net_cost_minor: number[];
}
