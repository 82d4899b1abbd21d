/**
 * Thin fetch client for the listening-test service. All paths are
 * same-origin: the built UI is served statically by the service itself.
 */

import type { ClientConfig, MushraSubmission, QuestionnaireSubmission } from "./schema.js";
import { parseClientConfig } from "./schema.js";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // Non-JSON error body; fall through to the status line.
  }
  return `request failed with status ${response.status}`;
}

export async function fetchTestConfig(testId: string, judgerId: string): Promise<ClientConfig> {
  const response = await fetch(
    `/api/tests/${encodeURIComponent(testId)}?pid=${encodeURIComponent(judgerId)}`,
  );
  if (!response.ok) throw new ApiError(response.status, await errorDetail(response));
  return parseClientConfig(await response.json());
}

export function audioUrl(stimulusId: string): string {
  return `/api/audio/${encodeURIComponent(stimulusId)}`;
}

export interface SubmitResult {
  accepted: boolean;
  submission_id: string;
}

export async function postSubmission(
  payload: MushraSubmission | QuestionnaireSubmission,
): Promise<SubmitResult> {
  const response = await fetch("/api/submissions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
  if (!response.ok) throw new ApiError(response.status, await errorDetail(response));
  return (await response.json()) as SubmitResult;
}
