/** Typed client for the annotation service HTTP API.
 *
 * Every request and response body passes through an optional traffic
 * listener so tests (and audits) can assert that no machine-predicted
 * label ever crosses the wire.
 */

export type Choice = "opioid-related" | "not-opioid-related" | "unsure" | "skip";

export interface NextItem {
  post_id: string;
  text: string;
  position: number;
  labeled: number;
  total: number;
}

export interface SubmitResult {
  labeled: number;
  total: number;
}

export interface AgreementReport {
  n_items: number;
  kappa_3class: number | null;
  kappa_binarized: number | null;
  spearman_rho: number | null;
  p_o: number;
  p_e: number;
}

export interface SessionSummary {
  session_id: string;
  n_items: number;
  annotators: Record<string, number>;
}

export interface TrafficRecord {
  method: string;
  url: string;
  requestBody: string | null;
  status: number;
  responseBody: string;
}

/** Server answered with a non-2xx status (the request itself succeeded). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** The request never reached the server (offline, refused, aborted). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private listeners: Array<(record: TrafficRecord) => void> = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  onTraffic(listener: (record: TrafficRecord) => void): void {
    this.listeners.push(listener);
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<{ status: number; text: string }> {
    const url = `${this.baseUrl}${path}`;
    const requestBody = body === undefined ? null : JSON.stringify(body);
    let response: Response;
    try {
      response = await this.fetchFn(url, {
        method,
        headers: requestBody === null ? undefined : { "content-type": "application/json" },
        body: requestBody ?? undefined,
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    const text = await response.text();
    for (const listener of this.listeners) {
      listener({ method, url, requestBody, status: response.status, responseBody: text });
    }
    return { status: response.status, text };
  }

  private static detail(text: string): string {
    try {
      const parsed = JSON.parse(text) as { detail?: unknown };
      if (typeof parsed.detail === "string") return parsed.detail;
    } catch {
      /* not JSON: fall through to the raw body */
    }
    return text;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const { status, text } = await this.request("GET", "/sessions");
    if (status !== 200) throw new ApiError(status, ApiClient.detail(text));
    return JSON.parse(text) as SessionSummary[];
  }

  /** Next unanswered item for this annotator, or null when the session is done. */
  async nextItem(sessionId: string, annotator: string): Promise<NextItem | null> {
    const { status, text } = await this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (status === 204) return null;
    if (status !== 200) throw new ApiError(status, ApiClient.detail(text));
    return JSON.parse(text) as NextItem;
  }

  async submitLabel(
    sessionId: string,
    postId: string,
    annotator: string,
    label: Choice,
  ): Promise<SubmitResult> {
    const { status, text } = await this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/labels`,
      { post_id: postId, annotator, label },
    );
    if (status !== 200) throw new ApiError(status, ApiClient.detail(text));
    const parsed = JSON.parse(text) as { labeled: number; total: number };
    return { labeled: parsed.labeled, total: parsed.total };
  }

  /** Gold CSV (post_id,label) of everything this annotator has labeled. */
  async exportGold(sessionId: string, annotator: string): Promise<string> {
    const { status, text } = await this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/export?annotator=${encodeURIComponent(annotator)}`,
    );
    if (status !== 200) throw new ApiError(status, ApiClient.detail(text));
    return text;
  }

  async agreement(sessionId: string, a: string, b: string): Promise<AgreementReport> {
    const { status, text } = await this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/agreement?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`,
    );
    if (status !== 200) throw new ApiError(status, ApiClient.detail(text));
    return JSON.parse(text) as AgreementReport;
  }
}
