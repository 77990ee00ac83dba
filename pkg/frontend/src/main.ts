// Studio entry point: three tabs over one API client. Served by the API
// process under /studio, so relative /api paths hit the same origin.
// Views are singletons; the dashboard's poll loop only runs while its
// tab is visible.

import { ApiClient } from "./api.js";
import { DashboardView } from "./dashboard.js";
import { TrafficEditorView } from "./trafficEditor.js";
import { WorkbenchView } from "./workbench.js";

const api = new ApiClient("");

interface Tab {
  title: string;
  root: HTMLElement;
  mounted: boolean;
  mount: (root: HTMLElement) => void;
  activate?: () => void;
  deactivate?: () => void;
}

const viewHost = document.getElementById("view")!;

function makeRoot(): HTMLElement {
  const el = document.createElement("div");
  el.classList.add("hidden");
  viewHost.append(el);
  return el;
}

const dashboardRoot = makeRoot();
const dashboard = new DashboardView(api, dashboardRoot);

const tabs: Record<string, Tab> = {
  dashboard: {
    title: "Experiments",
    root: dashboardRoot,
    mounted: false,
    mount: () => dashboard.render(),
    activate: () => dashboard.start(),
    deactivate: () => dashboard.stop(),
  },
  traffic: {
    title: "Traffic editor",
    root: makeRoot(),
    mounted: false,
    mount: (root) => new TrafficEditorView(api, root).render(),
  },
  workbench: {
    title: "Simulation workbench",
    root: makeRoot(),
    mounted: false,
    mount: (root) => void new WorkbenchView(api, root).render(),
  },
};

let current: string | null = null;

function switchTo(key: string): void {
  if (current === key) return;
  if (current) {
    const previous = tabs[current];
    previous.root.classList.add("hidden");
    previous.deactivate?.();
  }
  const tab = tabs[key];
  tab.root.classList.remove("hidden");
  if (!tab.mounted) {
    tab.mount(tab.root);
    tab.mounted = true;
  } else {
    tab.activate?.();
  }
  current = key;
  document.querySelectorAll(".tab").forEach((el) => {
    el.classList.toggle("active", el.getAttribute("data-tab") === key);
  });
}

const nav = document.getElementById("tabs")!;
for (const [key, tab] of Object.entries(tabs)) {
  const button = document.createElement("button");
  button.className = "tab";
  button.dataset.tab = key;
  button.textContent = tab.title;
  button.addEventListener("click", () => switchTo(key));
  nav.append(button);
}
switchTo("dashboard");
