/**
 * Wire types for the listening-test service, plus client-side payload
 * validation that mirrors the server's field checks. Everything the
 * browser sees is role-free: stimuli are opaque ids, and hidden roles or
 * attention keys never appear in these shapes.
 */

import { z } from "zod";

export interface ClientStimulus {
  stimulus_id: string;
}

export interface ClientQuestion {
  question_id: string;
  text: string;
  /** "scale" renders a 1..5 choice; anything else is a count/labeled answer. */
  type: string;
  choices?: string[];
}

export interface ClientPage {
  page_id: string;
  stimuli: ClientStimulus[];
  reference?: ClientStimulus;
  questions?: ClientQuestion[];
}

export interface ClientConfig {
  test_id: string;
  kind: "mushra" | "questionnaire";
  require_justification: boolean;
  scale_stages: string[];
  instructions: string;
  session_seed: string;
  pages: ClientPage[];
}

export interface Answer {
  choice: number | string;
  justification: string;
}

export interface MushraSubmission {
  test_id: string;
  judger_id: string;
  page_id: string;
  ratings: Record<string, number>;
}

export interface QuestionnaireSubmission {
  test_id: string;
  judger_id: string;
  page_id: string;
  answers: Record<string, Answer>;
}

const configSchema = z.object({
  test_id: z.string().min(1),
  kind: z.enum(["mushra", "questionnaire"]),
  require_justification: z.boolean(),
  scale_stages: z.array(z.string()).length(5),
  instructions: z.string(),
  session_seed: z.string().min(1),
  pages: z
    .array(
      z.object({
        page_id: z.string().min(1),
        stimuli: z.array(z.object({ stimulus_id: z.string().min(1) })).min(1),
        reference: z.object({ stimulus_id: z.string().min(1) }).optional(),
        questions: z
          .array(
            z.object({
              question_id: z.string().min(1),
              text: z.string().min(1),
              type: z.string().min(1),
              choices: z.array(z.string()).optional(),
            }),
          )
          .optional(),
      }),
    )
    .min(1),
});

/** Parse and validate the config payload from GET /api/tests/{id}. */
export function parseClientConfig(raw: unknown): ClientConfig {
  const result = configSchema.safeParse(raw);
  if (!result.success) {
    const first = result.error.issues[0];
    const path = first ? first.path.join(".") : "";
    throw new Error(`test config invalid at ${path || "root"}: ${first?.message ?? "unknown"}`);
  }
  return result.data as ClientConfig;
}

const submissionBase = z.object({
  test_id: z.string().min(1),
  judger_id: z.string().min(1),
  page_id: z.string().min(1),
});

const ratingSchema = z.number().int().min(0).max(100);

/**
 * Validate a slider-page payload against the page it answers.
 * Returns server-style field-path messages; empty means valid.
 */
export function validateMushraPayload(payload: MushraSubmission, page: ClientPage): string[] {
  const errors: string[] = [];
  const base = submissionBase.safeParse(payload);
  if (!base.success) {
    for (const issue of base.error.issues) errors.push(`${issue.path.join(".")}: ${issue.message}`);
  }
  const expected = new Set(page.stimuli.map((s) => s.stimulus_id));
  for (const sid of expected) {
    if (!(sid in payload.ratings)) errors.push(`ratings.${sid}: stimulus not rated`);
  }
  for (const [sid, score] of Object.entries(payload.ratings)) {
    if (!expected.has(sid)) {
      errors.push(`ratings.${sid}: unknown stimulus`);
      continue;
    }
    const r = ratingSchema.safeParse(score);
    if (!r.success) errors.push(`ratings.${sid}: score must be an integer in [0, 100]`);
  }
  return errors;
}

/**
 * Validate a questionnaire payload against its page. Scale questions need
 * an integer 1..5; count questions a non-negative integer or a label;
 * justifications must be non-blank when the test requires them.
 */
export function validateQuestionnairePayload(
  payload: QuestionnaireSubmission,
  page: ClientPage,
  requireJustification: boolean,
): string[] {
  const errors: string[] = [];
  const base = submissionBase.safeParse(payload);
  if (!base.success) {
    for (const issue of base.error.issues) errors.push(`${issue.path.join(".")}: ${issue.message}`);
  }
  const questions = new Map((page.questions ?? []).map((q) => [q.question_id, q]));
  for (const [qid] of questions) {
    if (!(qid in payload.answers)) errors.push(`answers.${qid}: question not answered`);
  }
  for (const [qid, answer] of Object.entries(payload.answers)) {
    const question = questions.get(qid);
    if (!question) {
      errors.push(`answers.${qid}: unknown question`);
      continue;
    }
    if (question.type === "scale") {
      const r = z.number().int().min(1).max(5).safeParse(answer.choice);
      if (!r.success) errors.push(`answers.${qid}.choice: must be an integer 1..5`);
    } else if (typeof answer.choice === "number") {
      const r = z.number().int().min(0).safeParse(answer.choice);
      if (!r.success) errors.push(`answers.${qid}.choice: must be a whole number >= 0`);
    } else if (typeof answer.choice !== "string" || answer.choice === "") {
      errors.push(`answers.${qid}.choice: must be a count or label`);
    }
    if (typeof answer.justification !== "string") {
      errors.push(`answers.${qid}.justification: must be text`);
    } else if (requireJustification && answer.justification.trim() === "") {
      errors.push(`answers.${qid}.justification: required`);
    }
  }
  return errors;
}
