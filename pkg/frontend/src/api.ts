import type {
  GraphData,
  HistoryData,
  MatrixData,
  ModelInfo,
  ProjectionData,
  QueryMode,
  RefitReport,
  RefitRequestBody,
  SearchResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: { token?: string } | null = null,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client for the /v1 API. */
export class Client {
  constructor(
    private baseUrl = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      const error = body?.error ?? {};
      throw new ApiError(
        response.status,
        error.code ?? "io",
        error.message ?? response.statusText,
        error.detail ?? null,
      );
    }
    return body as T;
  }

  info(): Promise<ModelInfo> {
    return this.request("/v1/model/info");
  }

  search(mode: QueryMode, terms: string[], k: number, exclude = true): Promise<SearchResponse> {
    const params = new URLSearchParams({
      mode,
      terms: terms.join(","),
      k: String(k),
      exclude: String(exclude),
    });
    return this.request(`/v1/search?${params}`);
  }

  refit(body: RefitRequestBody): Promise<RefitReport> {
    return this.request("/v1/refit", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  undo(): Promise<{ revision: number }> {
    return this.request("/v1/history/undo", { method: "POST" });
  }

  history(): Promise<HistoryData> {
    return this.request("/v1/history");
  }

  graph(mode: QueryMode, terms: string[], k: number, depth: 1 | 2): Promise<GraphData> {
    const params = new URLSearchParams({
      mode,
      terms: terms.join(","),
      k: String(k),
      depth: String(depth),
    });
    return this.request(`/v1/viz/graph?${params}`);
  }

  projection(tokens: string[]): Promise<ProjectionData> {
    const params = new URLSearchParams({ tokens: tokens.join(",") });
    return this.request(`/v1/viz/projection?${params}`);
  }

  matrix(tokens: string[]): Promise<MatrixData> {
    const params = new URLSearchParams({ tokens: tokens.join(",") });
    return this.request(`/v1/viz/matrix?${params}`);
  }
}
