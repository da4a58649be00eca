// Shapes of the /v1 JSON contract. The workbench never computes vector math;
// every number it renders arrives in one of these payloads.

export type QueryMode = "single" | "additive" | "subtractive" | "analogy";

export type RefitMode = "targeted" | "roundrobin";

export interface Hit {
  token: string;
  label: string;
  score: number;
  score_display: string;
}

export interface SearchResponse {
  revision: number;
  query: { mode: QueryMode; terms: string[]; k: number; exclude_inputs: boolean };
  hits: Hit[];
}

export interface ModelInfo {
  vocab_size: number;
  dims: number;
  revision: number;
  source: string | null;
  refit_count: number;
}

export interface RefitParams {
  alpha?: number;
  beta_scheme?: "inverse_degree" | "uniform";
  iterations?: number;
  convergence_epsilon?: number;
}

export interface RefitRequestBody {
  mode: RefitMode;
  terms: string[];
  target?: string;
  params?: RefitParams;
}

export interface RefitPair {
  a: string;
  b: string;
  label_a: string;
  label_b: string;
  before: number;
  after: number;
  before_display: string;
  after_display: string;
}

export interface RefitReport {
  revision: number;
  revisions: { before: number; after: number };
  pairs: RefitPair[];
  objective_trace: number[];
  moved: string[];
}

export interface GraphNode {
  id: string;
  label: string;
}

export interface GraphLink {
  source: string;
  target: string;
  weight: number;
}

export interface GraphData {
  revision: number;
  nodes: GraphNode[];
  links: GraphLink[];
}

export interface ProjectionPoint {
  token: string;
  label: string;
  x: number;
  y: number;
}

export interface ProjectionData {
  revision: number;
  points: ProjectionPoint[];
}

export interface MatrixData {
  revision: number;
  tokens: string[];
  labels: string[];
  matrix: number[][];
}

export interface HistoryData {
  revision: number;
  entries: unknown[];
}

export interface ErrorBody {
  revision?: number;
  error: { code: string; message: string; detail: { token?: string } | null };
}
