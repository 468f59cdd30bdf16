/** Typed client for the engine's HTTP façade.
 *
 * Every mutation the console performs goes through here; the UI never
 * fabricates hypotheses, tiers, or matches on its own. Engine errors are
 * surfaced verbatim with their machine code.
 */

import type {
  EventFrame,
  GateVerdict,
  HypothesisDocument,
  MatchEntry,
  RunView,
  StageEvent,
  TransformRequest,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    /* non-JSON error body: keep defaults */
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      ...init,
      headers: { "Content-Type": "application/json", ...(init?.headers ?? {}) },
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  // -- runs ---------------------------------------------------------------

  startRun(config: Record<string, unknown>): Promise<{ run_id: string }> {
    return this.request("/runs", { method: "POST", body: JSON.stringify(config) });
  }

  getRun(runId: string): Promise<RunView> {
    return this.request(`/runs/${runId}`);
  }

  advance(runId: string): Promise<StageEvent> {
    return this.request(`/runs/${runId}/advance`, { method: "POST" });
  }

  submitGate(
    runId: string,
    verdict: GateVerdict,
    editedHypothesis?: Record<string, unknown>,
    actor = "console",
  ): Promise<StageEvent> {
    return this.request(`/runs/${runId}/gate`, {
      method: "POST",
      body: JSON.stringify({
        verdict,
        edited_hypothesis: editedHypothesis ?? null,
        actor,
      }),
    });
  }

  async report(runId: string): Promise<string> {
    const response = await this.fetchFn(`${this.base}/runs/${runId}/report`);
    if (!response.ok) throw await parseError(response);
    return response.text();
  }

  // -- hypotheses -------------------------------------------------------------

  async listHypotheses(): Promise<HypothesisDocument[]> {
    const body = await this.request<{ hypotheses: HypothesisDocument[] }>("/hypotheses");
    return body.hypotheses;
  }

  addHypothesis(doc: Record<string, unknown>): Promise<HypothesisDocument> {
    return this.request("/hypotheses", { method: "POST", body: JSON.stringify(doc) });
  }

  transform(hypothesisId: string, request: TransformRequest): Promise<HypothesisDocument> {
    return this.request(`/hypotheses/${hypothesisId}/transform`, {
      method: "POST",
      body: JSON.stringify(request),
    });
  }

  // -- data pool -----------------------------------------------------------------

  async match(hypothesisId: string, k: number): Promise<MatchEntry[]> {
    const body = await this.request<{ matches: MatchEntry[] }>("/datapool/match", {
      method: "POST",
      body: JSON.stringify({ hypothesis_id: hypothesisId, k }),
    });
    return body.matches;
  }

  // -- event stream ----------------------------------------------------------------

  /** Open the line-delimited frame stream, replaying from `after`. */
  async openEvents(runId: string, after: number): Promise<Response> {
    const response = await this.fetchFn(
      `${this.base}/runs/${runId}/events?after=${after}`,
    );
    if (!response.ok) throw await parseError(response);
    return response;
  }
}

export type { EventFrame };
