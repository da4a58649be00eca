import { ApiError, Client } from "./api.js";
import type { QueryMode, RefitMode, RefitReport, SearchResponse } from "./types.js";
import { clampK, K_MAX, K_MIN, parseTerms, Workspace } from "./workspace.js";
import { renderForceGraph, renderHeatmap, renderSankey, renderScatter } from "./viz.js";

type VizTab = "graph" | "sankey" | "heatmap" | "scatter";

const MODE_OPTIONS: { value: QueryMode; label: string }[] = [
  { value: "single", label: "single term" },
  { value: "additive", label: "additive (mean)" },
  { value: "subtractive", label: "subtractive (a - b)" },
  { value: "analogy", label: "analogy (a - b + c)" },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * The whole workbench: search form, ranked results with selection
 * checkboxes, the refit panel with its before/after table and undo, and the
 * four visualization views. One screen, one loop: search - navigate -
 * visualize - adjust.
 */
export class App {
  workspace = new Workspace();
  private vizTab: VizTab = "graph";
  private vizDepth: 1 | 2 = 1;

  private infoBar!: HTMLElement;
  private staleBanner!: HTMLElement;
  private errorBox!: HTMLElement;
  private termsInput!: HTMLInputElement;
  private modeSelect!: HTMLSelectElement;
  private kSlider!: HTMLInputElement;
  private kNumber!: HTMLInputElement;
  private excludeBox!: HTMLInputElement;
  private searchButton!: HTMLButtonElement;
  private resultsBody!: HTMLElement;
  private resultsMeta!: HTMLElement;
  private selectionChips!: HTMLElement;
  private refitModeSelect!: HTMLSelectElement;
  private targetSelect!: HTMLSelectElement;
  private targetRow!: HTMLElement;
  private includeQueryBox!: HTMLInputElement;
  private refitButton!: HTMLButtonElement;
  private undoButton!: HTMLButtonElement;
  private refitStatus!: HTMLElement;
  private reportBox!: HTMLElement;
  private vizPanel!: HTMLElement;

  constructor(
    private root: HTMLElement,
    private client: Client,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = "";
    this.root.appendChild(this.buildHeader());
    const main = el("main", { class: "columns" });
    main.appendChild(this.buildSearchColumn());
    main.appendChild(this.buildRefitColumn());
    this.root.appendChild(main);
    this.root.appendChild(this.buildVizSection());
    this.wireEvents();
    this.syncControls();
    try {
      const info = await this.client.info();
      this.workspace.noteRevision(info.revision);
      this.infoBar.textContent =
        `${info.vocab_size.toLocaleString()} words x ${info.dims} dims` +
        ` | revision ${info.revision} | ${info.refit_count} refits`;
    } catch (error) {
      this.showError(error);
    }
  }

  // -- layout -------------------------------------------------------------

  private buildHeader(): HTMLElement {
    const header = el("header");
    header.appendChild(el("h1", {}, "refitlab workbench"));
    this.infoBar = el("span", { id: "info-bar" }, "connecting...");
    header.appendChild(this.infoBar);
    this.staleBanner = el(
      "span",
      { id: "stale-banner", class: "banner hidden", role: "status" },
      "results are stale: the model has changed since this search",
    );
    header.appendChild(this.staleBanner);
    return header;
  }

  private buildSearchColumn(): HTMLElement {
    const section = el("section", { class: "panel", id: "search-panel" });
    section.appendChild(el("h2", {}, "search"));

    const form = el("form", { id: "search-form" });
    this.modeSelect = el("select", { id: "search-mode" });
    for (const option of MODE_OPTIONS) {
      this.modeSelect.appendChild(el("option", { value: option.value }, option.label));
    }
    form.appendChild(labeled("mode", this.modeSelect));

    this.termsInput = el("input", {
      id: "search-terms",
      type: "text",
      placeholder: "terms, comma separated",
      autocomplete: "off",
    });
    form.appendChild(labeled("terms", this.termsInput));

    this.kSlider = el("input", {
      id: "search-k",
      type: "range",
      min: String(K_MIN),
      max: String(K_MAX),
      value: "10",
    });
    this.kNumber = el("input", {
      id: "search-k-number",
      type: "number",
      min: String(K_MIN),
      max: String(K_MAX),
      value: "10",
    });
    const kWrap = el("span", { class: "k-wrap" });
    kWrap.appendChild(this.kSlider);
    kWrap.appendChild(this.kNumber);
    form.appendChild(labeled("results k", kWrap));

    this.excludeBox = el("input", { id: "search-exclude", type: "checkbox" });
    this.excludeBox.checked = true;
    form.appendChild(labeled("exclude query terms", this.excludeBox));

    this.searchButton = el("button", { id: "search-button", type: "submit" }, "search");
    form.appendChild(this.searchButton);
    section.appendChild(form);

    this.errorBox = el("div", { id: "error-box", class: "error hidden", role: "alert" });
    section.appendChild(this.errorBox);

    this.resultsMeta = el("div", { id: "results-meta", class: "meta" });
    section.appendChild(this.resultsMeta);
    const table = el("table", { id: "results-table" });
    const head = el("tr");
    for (const title of ["", "#", "term", "similarity"]) {
      head.appendChild(el("th", {}, title));
    }
    const thead = el("thead");
    thead.appendChild(head);
    table.appendChild(thead);
    this.resultsBody = el("tbody", { id: "results-body" });
    table.appendChild(this.resultsBody);
    section.appendChild(table);
    return section;
  }

  private buildRefitColumn(): HTMLElement {
    const section = el("section", { class: "panel", id: "refit-panel" });
    section.appendChild(el("h2", {}, "adjust"));

    this.selectionChips = el("div", { id: "selection-chips", class: "chips" });
    section.appendChild(labeled("selected terms", this.selectionChips));

    this.refitModeSelect = el("select", { id: "refit-mode" });
    this.refitModeSelect.appendChild(el("option", { value: "roundrobin" }, "round-robin (pull group together)"));
    this.refitModeSelect.appendChild(el("option", { value: "targeted" }, "targeted (move one term toward group)"));
    section.appendChild(labeled("refit mode", this.refitModeSelect));

    this.targetSelect = el("select", { id: "refit-target" });
    this.targetRow = labeled("target", this.targetSelect);
    section.appendChild(this.targetRow);

    this.includeQueryBox = el("input", { id: "include-query", type: "checkbox" });
    this.includeQueryBox.checked = true;
    section.appendChild(labeled("include query terms in group", this.includeQueryBox));

    const buttons = el("div", { class: "button-row" });
    this.refitButton = el("button", { id: "refit-submit", type: "button" }, "refit");
    this.undoButton = el("button", { id: "refit-undo", type: "button" }, "undo last");
    buttons.appendChild(this.refitButton);
    buttons.appendChild(this.undoButton);
    section.appendChild(buttons);

    this.refitStatus = el("div", { id: "refit-status", class: "meta" });
    section.appendChild(this.refitStatus);
    this.reportBox = el("div", { id: "report-box" });
    section.appendChild(this.reportBox);
    return section;
  }

  private buildVizSection(): HTMLElement {
    const section = el("section", { class: "panel", id: "viz-section" });
    const bar = el("div", { id: "viz-tabs", class: "button-row" });
    const tabs: { id: VizTab; label: string }[] = [
      { id: "graph", label: "force graph" },
      { id: "sankey", label: "sankey" },
      { id: "heatmap", label: "heatmap" },
      { id: "scatter", label: "2-D projection" },
    ];
    for (const tab of tabs) {
      const button = el(
        "button",
        { type: "button", "data-tab": tab.id, class: "viz-tab" },
        tab.label,
      );
      button.addEventListener("click", () => {
        this.vizTab = tab.id;
        void this.refreshViz();
      });
      bar.appendChild(button);
    }
    const depthSelect = el("select", { id: "viz-depth" });
    depthSelect.appendChild(el("option", { value: "1" }, "depth 1"));
    depthSelect.appendChild(el("option", { value: "2" }, "depth 2"));
    depthSelect.addEventListener("change", () => {
      this.vizDepth = depthSelect.value === "2" ? 2 : 1;
      void this.refreshViz();
    });
    bar.appendChild(depthSelect);
    section.appendChild(bar);
    this.vizPanel = el("div", { id: "viz-panel" });
    section.appendChild(this.vizPanel);
    return section;
  }

  // -- wiring ---------------------------------------------------------------

  private wireEvents(): void {
    const form = this.root.querySelector("#search-form") as HTMLFormElement;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.runSearch();
    });
    this.termsInput.addEventListener("input", () => this.syncControls());
    this.modeSelect.addEventListener("change", () => this.syncControls());
    this.kSlider.addEventListener("input", () => {
      this.kNumber.value = this.kSlider.value;
      this.syncControls();
    });
    this.kNumber.addEventListener("input", () => {
      this.kSlider.value = String(clampK(Number(this.kNumber.value)));
      this.syncControls();
    });
    this.refitModeSelect.addEventListener("change", () => {
      this.workspace.refitMode = this.refitModeSelect.value as RefitMode;
      this.syncControls();
    });
    this.targetSelect.addEventListener("change", () => {
      this.workspace.target = this.targetSelect.value || null;
      this.syncControls();
    });
    this.includeQueryBox.addEventListener("change", () => {
      this.workspace.includeQueryTerms = this.includeQueryBox.checked;
      this.syncControls();
    });
    this.refitButton.addEventListener("click", () => void this.runRefit());
    this.undoButton.addEventListener("click", () => void this.runUndo());
  }

  /** Push form state into the workspace and refresh control enablement. */
  private syncControls(): void {
    this.workspace.form = {
      mode: this.modeSelect.value as QueryMode,
      terms: parseTerms(this.termsInput.value),
      k: clampK(Number(this.kSlider.value)),
    };
    this.searchButton.disabled = !this.workspace.canSearch();
    this.refitButton.disabled = !this.workspace.canSubmitRefit();
    this.targetRow.classList.toggle("hidden", this.workspace.refitMode !== "targeted");
    this.staleBanner.classList.toggle("hidden", !this.workspace.resultsAreStale());
    this.renderSelection();
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError) {
      const token = error.detail?.token;
      this.errorBox.textContent = token
        ? `${error.code}: ${error.message} (term: ${token.replace(/_/g, " ")})`
        : `${error.code}: ${error.message}`;
    } else {
      this.errorBox.textContent = String(error);
    }
    this.errorBox.classList.remove("hidden");
  }

  private clearError(): void {
    this.errorBox.textContent = "";
    this.errorBox.classList.add("hidden");
  }

  // -- actions ------------------------------------------------------------

  async runSearch(): Promise<void> {
    if (!this.workspace.canSearch()) return;
    this.clearError();
    const { mode, terms, k } = this.workspace.form;
    try {
      const response = await this.client.search(mode, terms, k, this.excludeBox.checked);
      this.workspace.setSearchResults(response);
      this.renderResults(response);
      await this.refreshViz();
    } catch (error) {
      this.showError(error);
    }
    this.syncControls();
  }

  async runRefit(): Promise<void> {
    if (!this.workspace.canSubmitRefit()) return;
    this.clearError();
    this.workspace.refitInFlight = true;
    this.syncControls();
    this.refitButton.disabled = true;
    try {
      const body = {
        mode: this.workspace.refitMode,
        terms: this.workspace.draftGroup(),
        ...(this.workspace.refitMode === "targeted" && this.workspace.target !== null
          ? { target: this.workspace.target }
          : {}),
      };
      const report = await this.client.refit(body);
      this.workspace.lastReport = report;
      this.workspace.noteRevision(report.revision);
      this.renderReport(report);
      this.refitStatus.textContent =
        `refit applied: revision ${report.revisions.before} -> ${report.revisions.after}, ` +
        `moved ${report.moved.length} term(s)`;
      // one click covers the paper loop: re-run the search so the new
      // neighborhood is immediately visible
      if (this.workspace.lastSearch) await this.runSearch();
    } catch (error) {
      if (error instanceof ApiError && error.code === "conflict") {
        this.refitStatus.textContent = "another refit is in flight; retry in a moment";
      } else {
        this.showError(error);
      }
    } finally {
      this.workspace.refitInFlight = false;
      this.syncControls();
    }
  }

  async runUndo(): Promise<void> {
    this.clearError();
    try {
      const { revision } = await this.client.undo();
      this.workspace.noteRevision(revision);
      this.refitStatus.textContent = `undid last refit: revision ${revision}`;
      this.reportBox.innerHTML = "";
      if (this.workspace.lastSearch) await this.runSearch();
    } catch (error) {
      if (error instanceof ApiError && error.code === "conflict") {
        this.refitStatus.textContent = "nothing to undo";
      } else {
        this.showError(error);
      }
    }
    this.syncControls();
  }

  // -- rendering ------------------------------------------------------------

  private renderResults(response: SearchResponse): void {
    this.resultsMeta.textContent =
      `${response.hits.length} hits | revision ${response.revision}`;
    this.resultsBody.innerHTML = "";
    response.hits.forEach((hit, rank) => {
      const tr = el("tr");
      const checkboxCell = el("td");
      const checkbox = el("input", {
        type: "checkbox",
        class: "select-token",
        "data-token": hit.token,
        "aria-label": `select ${hit.label}`,
      });
      checkbox.checked = this.workspace.selection.has(hit.token);
      checkbox.addEventListener("change", () => {
        this.workspace.toggleSelection(hit.token);
        this.syncControls();
      });
      checkboxCell.appendChild(checkbox);
      tr.appendChild(checkboxCell);
      tr.appendChild(el("td", {}, String(rank + 1)));
      tr.appendChild(el("td", { class: "term" }, hit.label));
      tr.appendChild(el("td", { class: "score" }, hit.score_display));
      this.resultsBody.appendChild(tr);
    });
  }

  private renderSelection(): void {
    this.selectionChips.innerHTML = "";
    const previousTarget = this.workspace.target;
    this.targetSelect.innerHTML = "";
    this.targetSelect.appendChild(el("option", { value: "" }, "choose target"));
    for (const token of this.workspace.selection) {
      const chip = el("span", { class: "chip" }, token.replace(/_/g, " "));
      const remove = el("button", { type: "button", "aria-label": `remove ${token}` }, "x");
      remove.addEventListener("click", () => {
        this.workspace.toggleSelection(token);
        this.syncControls();
      });
      chip.appendChild(remove);
      this.selectionChips.appendChild(chip);
      const option = el("option", { value: token }, token.replace(/_/g, " "));
      this.targetSelect.appendChild(option);
    }
    if (previousTarget && this.workspace.selection.has(previousTarget)) {
      this.targetSelect.value = previousTarget;
    } else {
      this.workspace.target = this.targetSelect.value || null;
    }
  }

  private renderReport(report: RefitReport): void {
    this.reportBox.innerHTML = "";
    const table = el("table", { id: "report-table" });
    const head = el("tr");
    for (const title of ["pair", "before", "after", ""]) {
      head.appendChild(el("th", {}, title));
    }
    table.appendChild(head);
    for (const pair of report.pairs) {
      const tr = el("tr");
      tr.appendChild(el("td", {}, `${pair.label_a} ~ ${pair.label_b}`));
      tr.appendChild(el("td", { class: "score" }, pair.before_display));
      tr.appendChild(el("td", { class: "score" }, pair.after_display));
      const up = pair.after > pair.before;
      tr.appendChild(
        el("td", { class: up ? "delta-up" : "delta-down" }, up ? "▲" : "▼"),
      );
      table.appendChild(tr);
    }
    this.reportBox.appendChild(table);
  }

  private async refreshViz(): Promise<void> {
    const last = this.workspace.lastSearch;
    if (!last) return;
    const { mode, terms, k } = last.query;
    const onToken = (token: string) => {
      this.workspace.toggleSelection(token);
      this.syncControls();
    };
    try {
      this.vizPanel.innerHTML = "";
      if (this.vizTab === "graph" || this.vizTab === "sankey") {
        const graph = await this.client.graph(mode, terms, k, this.vizDepth);
        this.workspace.noteRevision(graph.revision);
        this.vizPanel.appendChild(
          this.vizTab === "graph"
            ? renderForceGraph(graph, 720, 430, onToken)
            : renderSankey(graph, 720, Math.max(240, 26 * graph.links.length), onToken),
        );
      } else {
        const tokens = [...terms, ...last.hits.map((h) => h.token)].slice(0, 12);
        if (this.vizTab === "heatmap") {
          const matrix = await this.client.matrix(tokens);
          this.workspace.noteRevision(matrix.revision);
          this.vizPanel.appendChild(renderHeatmap(matrix));
        } else {
          if (tokens.length < 2) return;
          const projection = await this.client.projection(tokens);
          this.workspace.noteRevision(projection.revision);
          this.vizPanel.appendChild(renderScatter(projection, 720, 430, onToken));
        }
      }
    } catch (error) {
      this.vizPanel.appendChild(el("div", { class: "error" }, String(error)));
    }
    this.syncControls();
  }
}

function labeled(text: string, control: HTMLElement): HTMLElement {
  const row = el("label", { class: "field" });
  row.appendChild(el("span", { class: "field-name" }, text));
  row.appendChild(control);
  return row;
}

export async function mountApp(root: HTMLElement, client: Client): Promise<App> {
  const app = new App(root, client);
  await app.mount();
  return app;
}
