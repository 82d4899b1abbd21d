/**
 * Per-session page state: slider values, questionnaire answers, playback
 * flags, and the completion rules that gate submission. Persisted to
 * localStorage so a reload mid-test restores prior answers.
 */

import type { Answer, ClientPage } from "./schema.js";

export interface SessionState {
  pageIndex: number;
  /** stimulus_id -> integer 0..100; absent means unrated. */
  ratings: Record<string, Record<string, number>>;
  /** question_id -> answer, keyed by page_id. */
  answers: Record<string, Record<string, Answer>>;
  /** stimulus ids that have been played at least once. */
  played: string[];
}

export function emptyState(): SessionState {
  return { pageIndex: 0, ratings: {}, answers: {}, played: [] };
}

const clampInt = (value: number, lo: number, hi: number): number =>
  Math.min(hi, Math.max(lo, Math.round(value)));

/** Record a slider value; values snap to integers in [0, 100]. */
export function setRating(state: SessionState, pageId: string, stimulusId: string, value: number): void {
  const page = (state.ratings[pageId] ??= {});
  page[stimulusId] = clampInt(value, 0, 100);
}

export function setAnswer(state: SessionState, pageId: string, questionId: string, answer: Answer): void {
  const page = (state.answers[pageId] ??= {});
  page[questionId] = answer;
}

export function markPlayed(state: SessionState, stimulusId: string): void {
  if (!state.played.includes(stimulusId)) state.played.push(stimulusId);
}

export function hasPlayed(state: SessionState, stimulusId: string): boolean {
  return state.played.includes(stimulusId);
}

/** A slider page may submit once every stimulus has an integer rating. */
export function canSubmitMushra(state: SessionState, page: ClientPage): boolean {
  const ratings = state.ratings[page.page_id] ?? {};
  return page.stimuli.every((s) => {
    const value = ratings[s.stimulus_id];
    return typeof value === "number" && Number.isInteger(value) && value >= 0 && value <= 100;
  });
}

/** A questionnaire page may submit once every question has a choice. */
export function allQuestionsAnswered(state: SessionState, page: ClientPage): boolean {
  const answers = state.answers[page.page_id] ?? {};
  return (page.questions ?? []).every((q) => {
    const answer = answers[q.question_id];
    return answer !== undefined && answer.choice !== "";
  });
}

/** Question ids whose justification is blank but required. */
export function missingJustifications(state: SessionState, page: ClientPage): string[] {
  const answers = state.answers[page.page_id] ?? {};
  return (page.questions ?? [])
    .filter((q) => (answers[q.question_id]?.justification ?? "").trim() === "")
    .map((q) => q.question_id);
}

const storageKey = (testId: string, judgerId: string): string => `test-ui:${testId}:${judgerId}`;

export function saveState(testId: string, judgerId: string, state: SessionState): void {
  try {
    localStorage.setItem(storageKey(testId, judgerId), JSON.stringify(state));
  } catch {
    // Storage may be unavailable (private mode, quota); the test still works.
  }
}

export function loadState(testId: string, judgerId: string): SessionState {
  try {
    const raw = localStorage.getItem(storageKey(testId, judgerId));
    if (!raw) return emptyState();
    const parsed = JSON.parse(raw) as Partial<SessionState>;
    return {
      pageIndex: typeof parsed.pageIndex === "number" ? parsed.pageIndex : 0,
      ratings: parsed.ratings && typeof parsed.ratings === "object" ? parsed.ratings : {},
      answers: parsed.answers && typeof parsed.answers === "object" ? parsed.answers : {},
      played: Array.isArray(parsed.played) ? parsed.played.filter((p) => typeof p === "string") : [],
    };
  } catch {
    return emptyState();
  }
}

export function clearState(testId: string, judgerId: string): void {
  try {
    localStorage.removeItem(storageKey(testId, judgerId));
  } catch {
    // Ignore: nothing to clear if storage is unavailable.
  }
}
