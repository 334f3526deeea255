/**
 * Thin client for the tutoring service. The server is authoritative for
 * every pedagogical decision; this module only moves JSON.
 */

import type {
  AttemptContext,
  DetectionReport,
  ExecutionPlan,
  ResponsePayload,
  SessionView,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function post<T>(url: string, body: unknown): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  const data = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, data.error ?? "error", data.detail ?? "");
  }
  return data as T;
}

export class TutorClient {
  constructor(private readonly baseUrl: string = "") {}

  check(document: string): Promise<DetectionReport> {
    return post(`${this.baseUrl}/check`, { document });
  }

  inquiry(context: AttemptContext): Promise<ExecutionPlan> {
    return post(`${this.baseUrl}/inquiry`, context);
  }

  createSession(planId: string): Promise<SessionView> {
    return post(`${this.baseUrl}/session`, { plan_id: planId });
  }

  step(sessionId: string, response: ResponsePayload): Promise<SessionView> {
    return post(`${this.baseUrl}/session/${sessionId}/step`, response);
  }
}
