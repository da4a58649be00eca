import type { QueryMode, RefitMode, RefitReport, SearchResponse } from "./types.js";

export interface SearchForm {
  mode: QueryMode;
  terms: string[];
  k: number;
}

export const TERM_COUNTS: Record<QueryMode, { min: number; max: number | null }> = {
  single: { min: 1, max: 1 },
  additive: { min: 2, max: null },
  subtractive: { min: 2, max: 2 },
  analogy: { min: 3, max: 3 },
};

export const K_MIN = 1;
export const K_MAX = 50;

/**
 * Client-side session state for the search -> navigate -> visualize -> adjust
 * loop. Holds the current query form, the checked result tokens, the pending
 * refit draft, the last report, and the revision watermark used to flag stale
 * result views. No vector math happens here.
 */
export class Workspace {
  form: SearchForm = { mode: "single", terms: [], k: 10 };
  selection = new Set<string>();
  refitMode: RefitMode = "roundrobin";
  target: string | null = null;
  includeQueryTerms = true;
  lastReport: RefitReport | null = null;
  lastSearch: SearchResponse | null = null;
  watermark = 0;
  refitInFlight = false;

  /** Record a server revision; returns true if the watermark advanced. */
  noteRevision(revision: number): boolean {
    if (revision > this.watermark) {
      this.watermark = revision;
      return true;
    }
    return false;
  }

  /** Displayed results are stale once any response carried a newer revision. */
  resultsAreStale(): boolean {
    return this.lastSearch !== null && this.lastSearch.revision < this.watermark;
  }

  setSearchResults(response: SearchResponse): void {
    this.lastSearch = response;
    this.noteRevision(response.revision);
  }

  canSearch(): boolean {
    const n = this.form.terms.length;
    if (n === 0) return false;
    const bounds = TERM_COUNTS[this.form.mode];
    return n >= bounds.min && (bounds.max === null || n <= bounds.max);
  }

  toggleSelection(token: string): void {
    if (this.selection.has(token)) {
      this.selection.delete(token);
      if (this.target === token) this.target = null;
    } else {
      this.selection.add(token);
    }
  }

  clearSelection(): void {
    this.selection.clear();
    this.target = null;
  }

  /** Group the next refit would use: the checked tokens, plus the current
   * query terms for round-robin when the include toggle is on (the search
   * term joins the group it pulled in). */
  draftGroup(): string[] {
    const group = new Set(this.selection);
    if (this.refitMode === "roundrobin" && this.includeQueryTerms) {
      for (const term of this.form.terms) group.add(term);
    }
    if (this.refitMode === "targeted" && this.target !== null) {
      group.delete(this.target);
    }
    return [...group];
  }

  /** Mirror of the server-side request invariants; the submit control is
   * enabled only when these hold. */
  canSubmitRefit(): boolean {
    if (this.refitInFlight) return false;
    const group = this.draftGroup();
    if (this.refitMode === "targeted") {
      return this.target !== null && group.length >= 1 && !group.includes(this.target);
    }
    return group.length >= 2;
  }
}

export function parseTerms(raw: string): string[] {
  return raw
    .split(",")
    .map((t) => t.trim())
    .filter((t) => t.length > 0);
}

export function clampK(value: number): number {
  if (Number.isNaN(value)) return 10;
  return Math.min(K_MAX, Math.max(K_MIN, Math.round(value)));
}
