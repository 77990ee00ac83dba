// @vitest-environment jsdom
//
// Studio acceptance against a real, seeded API (3 twins x 2 traffic
// models, spawned as a child process): the workbench renders a 6-row
// comparison whose every cell equals the API's summary endpoint values,
// and the traffic editor's G=0.5 preview ends the year at 1.5x the start.

import { type ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { sloBadge } from "../src/format.js";
import { TrafficEditorState } from "../src/trafficEditor.js";
import { WorkbenchView, comparisonCells } from "../src/workbench.js";

let server: ChildProcess;
let baseUrl: string;
let client: ApiClient;

beforeAll(async () => {
  // vitest runs rooted at frontend/ (where vitest.config.ts lives)
  server = spawn("python3", ["scripts/studio_test_server.py"], {
    cwd: process.cwd(),
    stdio: ["pipe", "pipe", "inherit"],
    env: { ...process.env, PYTHONUNBUFFERED: "1" },
  });
  baseUrl = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error("API did not start")), 30000);
    server.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const line = buffer.split("\n")[0];
      if (line.trim()) {
        clearTimeout(timer);
        resolve(JSON.parse(line).url as string);
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited: ${code}`)));
  });
  client = new ApiClient(baseUrl);
}, 40000);

afterAll(() => {
  server.stdin?.end();
  server.kill();
});

describe("simulation workbench", () => {
  it("renders a 6-row comparison equal to the summary endpoints", async () => {
    document.body.innerHTML = '<div id="root"></div>';
    const root = document.getElementById("root")!;
    const view = new WorkbenchView(client, root);
    await view.render();

    expect(view.state.twins.sort()).toEqual(["block", "cpu-lim", "non-block"]);
    expect(view.state.traffics.sort()).toEqual(["high", "nominal"]);
    root.querySelectorAll<HTMLInputElement>("#wb-twins input, #wb-traffics input")
      .forEach((box) => box.click());

    const rows = await view.run();
    expect(rows).toHaveLength(6);

    const table = root.querySelector("#wb-table table")!;
    const bodyRows = Array.from(table.querySelectorAll("tr")).slice(1);
    expect(bodyRows).toHaveLength(6);

    for (const [i, row] of rows.entries()) {
      // the raw summary the view holds is exactly the endpoint's value
      const { summary } = await client.simulationSummary(row.run);
      expect(row.summary).toEqual(summary);

      // and the rendered cells are formatted copies of those values
      const expectedCells = comparisonCells({ run: row.run, summary });
      const domCells = Array.from(bodyRows[i].querySelectorAll("td"))
        .map((td) => td.textContent);
      expect(domCells.slice(0, -1)).toEqual(expectedCells.slice(0, -1));
      expect(domCells[domCells.length - 1]).toBe(sloBadge(summary.slo_met).text);
    }

    // sanity on the seeded scenario: the quick non-block twin absorbs both
    // projections, the cpu-limited twin drowns
    const byName = new Map(rows.map((r) => [r.run, r.summary]));
    expect(byName.get("wb-non-block-nominal")!.slo_met).toBe(true);
    expect(byName.get("wb-cpu-lim-nominal")!.slo_met).toBe(false);
    expect(byName.get("wb-cpu-lim-nominal")!.backlog_latency_s).toBeGreaterThan(0);
  }, 120000);
});

describe("traffic editor preview", () => {
  it("G=0.5 preview ends the year at 1.5x the start within 1%", async () => {
    const state = new TrafficEditorState();
    state.setScalar("rRps", "2.0");
    state.setScalar("growth", "0.5");
    expect(state.valid()).toBe(true);
    const { loads } = await client.previewTraffic(state.body());
    expect(loads).toHaveLength(8760);
    const ratio = loads[loads.length - 1] / loads[0];
    expect(Math.abs(ratio - 1.5) / 1.5).toBeLessThan(0.01);
  }, 30000);

  it("preview values come from the API, not the client", async () => {
    // the studio sends the model and plots whatever comes back; a stored
    // model previews identically through the GET route
    const state = new TrafficEditorState();
    state.setScalar("growth", "0.25");
    await client.putEntity("traffic", "editor-check", state.body());
    const viaPost = await client.previewTraffic(state.body());
    const viaGet = await client.previewStoredTraffic("editor-check");
    expect(viaGet.loads).toEqual(viaPost.loads);
  }, 30000);
});
