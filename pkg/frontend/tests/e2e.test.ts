// Scripted workbench flow against the real service on the toy model fixture:
// search "physics", select five results, round-robin refit, verify every
// before/after delta is positive, undo, and confirm the original search
// rendering comes back byte-for-byte.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { App, mountApp } from "../src/app.js";

const here = dirname(fileURLToPath(import.meta.url));
const FIXTURE = join(here, "..", "fixtures", "toy_model.txt");
const PORT = 8400 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

const nodeFetch: typeof fetch = (input, init) => fetch(input, init);

let service: ChildProcess;

async function waitFor(
  condition: () => boolean,
  what: string,
  timeoutMs = 20_000,
): Promise<void> {
  const start = Date.now();
  while (!condition()) {
    if (Date.now() - start > timeoutMs) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

async function waitForService(): Promise<void> {
  const start = Date.now();
  for (;;) {
    try {
      const response = await nodeFetch(`${BASE}/v1/model/info`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() - start > 30_000) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
}

beforeAll(async () => {
  const workdir = mkdtempSync(join(tmpdir(), "refitlab-e2e-"));
  service = spawn(
    "python3",
    ["-m", "refitlab.cli", "--model", FIXTURE, "--format", "text", "--listen", `127.0.0.1:${PORT}`],
    { cwd: workdir, stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stderr?.on("data", () => {});
  await waitForService();
});

afterAll(() => {
  service?.kill("SIGTERM");
});

function mountFreshApp(): Promise<App> {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  return mountApp(root, new Client(BASE, nodeFetch));
}

function resultsHtml(): string {
  return (document.getElementById("results-body") as HTMLElement).innerHTML;
}

function searchFor(terms: string): void {
  const input = document.getElementById("search-terms") as HTMLInputElement;
  input.value = terms;
  input.dispatchEvent(new Event("input", { bubbles: true }));
  const form = document.getElementById("search-form") as HTMLFormElement;
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

describe("api client against the live service", () => {
  it("reads model info", async () => {
    const client = new Client(BASE, nodeFetch);
    const info = await client.info();
    expect(info.vocab_size).toBe(40);
    expect(info.dims).toBe(16);
  });

  it("surfaces typed errors", async () => {
    const client = new Client(BASE, nodeFetch);
    await expect(client.search("single", ["zzz_nope"], 5)).rejects.toMatchObject({
      code: "unknown_token",
      status: 404,
    });
  });
});

describe("workbench flow", () => {
  it("search, select five, round-robin refit, positive deltas, undo byte-for-byte", async () => {
    const app = await mountFreshApp();

    // search "physics"
    searchFor("physics");
    await waitFor(() => resultsHtml().includes("<tr>"), "search results");
    const originalRendering = resultsHtml();
    const rows = document.querySelectorAll("#results-body tr");
    expect(rows.length).toBe(10);
    expect(originalRendering).toContain("science");

    // select the top five results
    const boxes = [...document.querySelectorAll<HTMLInputElement>(".select-token")];
    for (const box of boxes.slice(0, 5)) box.click();
    expect(app.workspace.selection.size).toBe(5);

    // round-robin refit over selection + the query term (six terms, 15 pairs)
    const submit = document.getElementById("refit-submit") as HTMLButtonElement;
    expect(submit.disabled).toBe(false);
    submit.click();
    await waitFor(() => document.querySelector("#report-table") !== null, "refit report");
    await waitFor(
      () => (document.getElementById("refit-status") as HTMLElement).textContent!.includes("refit applied"),
      "refit status",
    );

    const reportRows = [...document.querySelectorAll("#report-table tr")].slice(1);
    expect(reportRows.length).toBe(15);
    for (const row of reportRows) {
      const cells = row.querySelectorAll("td");
      const before = Number(cells[1].textContent);
      const after = Number(cells[2].textContent);
      expect(after).toBeGreaterThan(before);
      expect(cells[3].className).toBe("delta-up");
    }

    // the automatic re-search shows the moved neighborhood
    await waitFor(() => resultsHtml() !== originalRendering, "post-refit re-search");

    // undo restores the original rendering byte-for-byte
    (document.getElementById("refit-undo") as HTMLButtonElement).click();
    await waitFor(() => resultsHtml() === originalRendering, "post-undo rendering");
    expect(resultsHtml()).toBe(originalRendering);

    // the stale banner is gone because the re-search caught up
    const banner = document.getElementById("stale-banner") as HTMLElement;
    expect(banner.classList.contains("hidden")).toBe(true);
  });

  it("refit panel gating: submit disabled for a one-term round-robin draft", async () => {
    const app = await mountFreshApp();
    searchFor("queen");
    await waitFor(() => resultsHtml().includes("<tr>"), "search results");

    const includeQuery = document.getElementById("include-query") as HTMLInputElement;
    includeQuery.click(); // group is now the bare selection
    const submit = document.getElementById("refit-submit") as HTMLButtonElement;
    expect(submit.disabled).toBe(true);

    const box = document.querySelector<HTMLInputElement>(".select-token");
    box!.click();
    expect(app.workspace.selection.size).toBe(1);
    expect(submit.disabled).toBe(true); // one term is still not a group

    const boxes = [...document.querySelectorAll<HTMLInputElement>(".select-token")];
    boxes[1].click();
    expect(submit.disabled).toBe(false);
  });

  it("unknown token renders an inline error against the term", async () => {
    await mountFreshApp();
    searchFor("zzz_nonword");
    const errorBox = document.getElementById("error-box") as HTMLElement;
    await waitFor(() => !errorBox.classList.contains("hidden"), "error box");
    expect(errorBox.textContent).toContain("unknown_token");
    expect(errorBox.textContent).toContain("zzz nonword");
  });

  it("empty input keeps the search button disabled", async () => {
    await mountFreshApp();
    const button = document.getElementById("search-button") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
  });

  it("k slider is bounded to 1..50", async () => {
    await mountFreshApp();
    const slider = document.getElementById("search-k") as HTMLInputElement;
    expect(slider.min).toBe("1");
    expect(slider.max).toBe("50");
  });

  it("viz views render from server data and feed the selection", async () => {
    const app = await mountFreshApp();
    searchFor("physics");
    await waitFor(() => resultsHtml().includes("<tr>"), "search results");
    await waitFor(() => document.querySelector("#viz-panel svg") !== null, "force graph");

    // force graph: star of query + 10 hits
    expect(document.querySelectorAll("#viz-panel svg g.graph-node").length).toBe(11);
    expect(document.querySelectorAll("#viz-panel svg line").length).toBe(10);

    // clicking a node adds the token to the refit selection
    const node = [...document.querySelectorAll<SVGGElement>("#viz-panel g.clickable")][0];
    node.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(app.workspace.selection.size).toBe(1);

    // heatmap: diagonal is the maximum intensity value 1.00
    const tabs = [...document.querySelectorAll<HTMLButtonElement>(".viz-tab")];
    tabs.find((t) => t.dataset.tab === "heatmap")!.click();
    await waitFor(() => document.querySelector(".viz-heatmap") !== null, "heatmap");
    const grid = [...document.querySelectorAll(".viz-heatmap tr")].slice(1);
    grid.forEach((row, i) => {
      const cells = row.querySelectorAll("td");
      expect(cells[i].textContent).toBe("1.00");
    });

    // scatter from the projection endpoint
    tabs.find((t) => t.dataset.tab === "scatter")!.click();
    await waitFor(() => document.querySelector(".viz-scatter") !== null, "scatter");
    expect(document.querySelectorAll(".viz-scatter circle").length).toBeGreaterThan(2);

    // sankey flows, one band per hit
    tabs.find((t) => t.dataset.tab === "sankey")!.click();
    await waitFor(() => document.querySelector(".viz-sankey") !== null, "sankey");
    expect(document.querySelectorAll(".viz-sankey path").length).toBe(10);
  });
});
