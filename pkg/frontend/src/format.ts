// Display-only formatting. Money arrives in minor units and is shown in
// major units with two decimals, matching the CLI tables.

export function money(minor: number): string {
  return (minor / 100).toFixed(2);
}

export function fixed(value: number, decimals = 2): string {
  return value.toFixed(decimals);
}

export function seconds(value: number): string {
  if (value >= 86400) return `${(value / 86400).toFixed(1)} d`;
  if (value >= 3600) return `${(value / 3600).toFixed(1)} h`;
  if (value >= 60) return `${(value / 60).toFixed(1)} min`;
  return `${value.toFixed(2)} s`;
}

export function stateBadgeClass(state: string): string {
  switch (state) {
    case "Running":
    case "Draining":
      return "badge badge-running";
    case "Completed":
      return "badge badge-ok";
    case "Failed":
      return "badge badge-fail";
    default:
      return "badge badge-pending";
  }
}

export function sloBadge(met: boolean): { text: string; cls: string } {
  return met
    ? { text: "SLO met", cls: "badge badge-ok" }
    : { text: "SLO violated", cls: "badge badge-fail" };
}

/** Parse a numeric form field; returns an error string instead of NaN. */
export function parseNumeric(
  raw: string,
  opts: { min?: number; label: string },
): { value?: number; error?: string } {
  const value = Number(raw.trim());
  if (raw.trim() === "" || !Number.isFinite(value)) {
    return { error: `${opts.label} must be a number` };
  }
  if (opts.min !== undefined && value < opts.min) {
    return { error: `${opts.label} must be >= ${opts.min}` };
  }
  return { value };
}
