/** Typed client for the session HTTP API. */

export interface Scenario {
  index: number;
  text: string;
}

export interface VersionInfo {
  version: number;
  preview_url: string;
  download_url: string;
}

export interface Progress {
  op: string;
  elapsed_s: number;
  estimated_s: number;
}

export interface Usage {
  input_tokens: number;
  output_tokens: number;
  cost_usd: number;
}

export interface SessionView {
  id: string;
  state: string;
  requirement: string | null;
  scenarios: Scenario[];
  versions: VersionInfo[];
  usage: Usage;
  flags: string[];
  log_cursor: number;
  estimates: Record<string, number>;
  progress: Progress | null;
}

export interface LogEvent {
  seq: number;
  ts: number;
  message: string;
}

export type DecisionAction = "confirm" | "add" | "delete" | "modify";

export interface Decision {
  action: DecisionAction;
  index?: number;
  text?: string;
}

export type ModificationKind = "design" | "function";

/** Error envelope surfaced by the API: {"error": {"type", "message"}}. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly type: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let type = "HttpError";
      let message = `${response.status} on ${method} ${path}`;
      try {
        const payload = (await response.json()) as {
          error?: { type?: string; message?: string };
          detail?: unknown;
        };
        if (payload.error) {
          type = payload.error.type ?? type;
          message = payload.error.message ?? message;
        } else if (payload.detail !== undefined) {
          message = JSON.stringify(payload.detail);
        }
      } catch {
        // non-JSON error body: keep the generic message
      }
      throw new ApiError(response.status, type, message);
    }
    return (await response.json()) as T;
  }

  createSession(): Promise<{ id: string }> {
    return this.request("POST", "/api/sessions");
  }

  getView(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  submitRequirement(sessionId: string, text: string): Promise<{ scenarios: Scenario[] }> {
    return this.request("POST", `/api/sessions/${sessionId}/requirement`, { text });
  }

  decide(sessionId: string, decision: Decision): Promise<{ scenarios: Scenario[] }> {
    return this.request("PATCH", `/api/sessions/${sessionId}/scenarios`, decision);
  }

  generate(sessionId: string): Promise<{ version: number; preview_url: string }> {
    return this.request("POST", `/api/sessions/${sessionId}/generate`);
  }

  modify(
    sessionId: string,
    kind: ModificationKind,
    text: string,
  ): Promise<{ version: number; preview_url: string }> {
    return this.request("POST", `/api/sessions/${sessionId}/modify`, { kind, text });
  }

  accept(sessionId: string): Promise<{ version: number }> {
    return this.request("POST", `/api/sessions/${sessionId}/accept`);
  }

  log(sessionId: string, after: number): Promise<{ events: LogEvent[] }> {
    return this.request("GET", `/api/sessions/${sessionId}/log?after=${after}`);
  }
}
