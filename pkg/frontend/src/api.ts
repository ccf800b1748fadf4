/**
 * Thin typed client for the audit service wire API (/api/v1).
 *
 * The UI renders only what this client returns: all statistics stay on
 * the server, and numeric fields are kept as the exact strings the API
 * sent so nothing is ever re-rounded client-side.
 */

export interface ApiError {
  code: string;
  message: string;
  detail?: Record<string, unknown>;
}

export class ApiRequestError extends Error {
  constructor(public status: number, public api: ApiError) {
    super(`${api.code}: ${api.message}`);
  }
}

export interface Snapshot {
  session_id: string;
  state: string;
  round: number;
  head: string;
  plan: Record<string, unknown> | null;
  seed_committed: boolean;
  sampled: Record<string, number>;
  counted: string[];
  pending: string[];
  mismatches: string[];
  verdict: Verdict | null;
}

export interface Verdict {
  decision: string;
  statistic: string | null;
  statistic_float: number | null;
  narrative: string;
}

export interface SampleRow {
  batch_id: string;
  ballots: number;
  stratum: string;
  mode: string;
  times: number;
  u_p: string;
  needs_reveal: boolean;
  counted: boolean;
  pending: boolean;
  mismatch: boolean;
}

export interface AssessResult {
  state: string;
  verdict: Verdict | null;
  assessment: { categories?: number[] } & Record<string, unknown>;
}

export interface CountSubmission {
  batch_id: string;
  counted_ballots: number;
  tallies: Record<string, number>;
  entered_by: string;
  timestamp: string;
}

export interface ReportSampleRow {
  batch_id: string;
  u_p: string;
  taint?: string;
  mov?: string;
  times: number;
  [key: string]: unknown;
}

export class ApiClient {
  constructor(
    private base: string,
    private token: string,
    private fetcher: typeof fetch = fetch,
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const res = await this.fetcher(`${this.base}/api/v1${path}`, {
      method,
      headers: {
        "Content-Type": "application/json",
        "X-Audit-Token": this.token,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    const doc = text ? JSON.parse(text) : {};
    if (!res.ok) {
      const detail = (doc as { detail?: ApiError }).detail;
      throw new ApiRequestError(res.status, detail ?? { code: "HTTP_" + res.status, message: text });
    }
    return doc;
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return this.request("GET", "/sessions") as Promise<{ sessions: string[] }>;
  }

  createSession(sessionId: string, election: unknown): Promise<unknown> {
    return this.request("POST", "/sessions", { session_id: sessionId, election });
  }

  snapshot(sessionId: string): Promise<Snapshot> {
    return this.request("GET", `/sessions/${sessionId}`) as Promise<Snapshot>;
  }

  plan(sessionId: string, plan: Record<string, unknown>): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/plan`, { plan });
  }

  commitSeed(sessionId: string, digits: string): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/seed`, {
      seed: { digits, committed_after_results: true },
    });
  }

  draw(sessionId: string, body: Record<string, unknown> = {}): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/draw`, body);
  }

  sample(sessionId: string): Promise<{ rows: SampleRow[] }> {
    return this.request("GET", `/sessions/${sessionId}/sample`) as Promise<{ rows: SampleRow[] }>;
  }

  submitCount(sessionId: string, count: CountSubmission): Promise<{ payload: Record<string, unknown> }> {
    return this.request("POST", `/sessions/${sessionId}/counts`, { count }) as Promise<{
      payload: Record<string, unknown>;
    }>;
  }

  resolveCount(sessionId: string, count: CountSubmission): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/resolve`, { count });
  }

  reveal(sessionId: string, batchId: string, subtotals: Record<string, number>): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/reveals`, {
      batch_id: batchId,
      subtotals,
    });
  }

  assess(sessionId: string): Promise<AssessResult> {
    return this.request("POST", `/sessions/${sessionId}/assess`) as Promise<AssessResult>;
  }

  report(sessionId: string): Promise<{ sample: { rows: ReportSampleRow[] }; [key: string]: unknown }> {
    return this.request("GET", `/sessions/${sessionId}/report`) as Promise<{
      sample: { rows: ReportSampleRow[] };
      [key: string]: unknown;
    }>;
  }
}
