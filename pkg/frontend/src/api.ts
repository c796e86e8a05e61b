import type {
  DecisionAction,
  DecisionResponse,
  MetricsRow,
  RecordDetail,
  RecordPage,
  RefinementEvent,
  RefinementList,
  Versions,
} from "./types.js";

export interface QueueQuery {
  status?: string;
  category?: string;
  page: number;
  per: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
    public readonly versions?: Versions,
  ) {
    super(detail);
  }
}

/** status 0 means the service was unreachable (no HTTP response at all). */
export function isNetworkError(err: unknown): boolean {
  return err instanceof ApiError && err.status === 0;
}

export class Api {
  // versions from the most recent response, for the footer
  lastVersions: Versions | null = null;

  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.base + path, init);
    } catch {
      throw new ApiError(0, "service unreachable");
    }
    let body: unknown;
    try {
      body = await response.json();
    } catch {
      throw new ApiError(response.status, `bad response (${response.status})`);
    }
    const data = body as { detail?: string; versions?: Versions };
    if (data.versions) {
      this.lastVersions = data.versions;
    }
    if (!response.ok) {
      throw new ApiError(
        response.status,
        data.detail ?? `request failed (${response.status})`,
        data.versions,
      );
    }
    return body as T;
  }

  listRecords(query: QueueQuery): Promise<RecordPage> {
    const params = new URLSearchParams();
    if (query.status) params.set("status", query.status);
    if (query.category) params.set("category", query.category);
    params.set("page", String(query.page));
    params.set("per", String(query.per));
    return this.request<RecordPage>(`/records?${params}`);
  }

  recordDetail(id: string): Promise<RecordDetail> {
    return this.request<RecordDetail>(`/records/${encodeURIComponent(id)}`);
  }

  postDecision(
    id: string,
    action: DecisionAction,
    categories: string[],
    comment: string,
    reviewer?: string,
  ): Promise<DecisionResponse> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (reviewer) headers["x-reviewer-id"] = reviewer;
    const body: Record<string, unknown> = { action, comment };
    if (action === "OVERRIDE") body.categories = categories;
    return this.request<DecisionResponse>(
      `/records/${encodeURIComponent(id)}/decision`,
      { method: "POST", headers, body: JSON.stringify(body) },
    );
  }

  listRefinements(): Promise<RefinementList> {
    return this.request<RefinementList>("/refinements");
  }

  postRefinement(
    payload: { kind: "lexicon"; line: string } | { kind: "rule"; text: string },
    reviewer?: string,
  ): Promise<{ refinement: RefinementEvent; versions: Versions }> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (reviewer) headers["x-reviewer-id"] = reviewer;
    return this.request(`/refinements`, {
      method: "POST",
      headers,
      body: JSON.stringify(payload),
    });
  }

  metrics(standard: string): Promise<MetricsRow> {
    return this.request<MetricsRow>(`/metrics?standard=${encodeURIComponent(standard)}`);
  }

  exportDecisionsUrl(): string {
    return `${this.base}/export/decisions`;
  }

  exportRefinementsUrl(kind: "lexicon" | "rule"): string {
    return `${this.base}/export/refinements?kind=${kind}`;
  }
}
